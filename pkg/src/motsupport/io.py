"""JSON instance files with exact rational fields."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Mapping, Optional

from .measure import DiscreteMeasure, MeasureError
from .rational import RationalParseError, format_rational, parse_rational
from .support import CouplingError, MartingaleCoupling, Path, Support

KEYS = ("mu", "nu", "support", "weights")


class InstanceParseError(ValueError):
    pass


def _exact_number(text: str) -> Fraction:
    return Fraction(text)


def loads_exact(text: str) -> Any:
    """``json.loads`` that keeps JSON numbers as exact Fractions."""
    try:
        return json.loads(text, parse_float=_exact_number, parse_int=_exact_number)
    except (json.JSONDecodeError, ValueError, ZeroDivisionError) as exc:
        raise InstanceParseError(f"invalid JSON: {exc}") from None


def _rat(v) -> Fraction:
    try:
        return parse_rational(v)
    except RationalParseError as exc:
        raise InstanceParseError(str(exc)) from None


def _rows(doc, key, width):
    rows = doc.get(key)
    if rows is None:
        return None
    if not isinstance(rows, list):
        raise InstanceParseError(f"{key}: expected a list")
    out = []
    for row in rows:
        if not isinstance(row, list) or len(row) != width:
            raise InstanceParseError(f"{key}: every entry must have {width} fields")
        out.append(tuple(_rat(v) for v in row))
    return out


def dump_rows(rows) -> list:
    return [[format_rational(v) for v in row] for row in rows]


@dataclass(frozen=True)
class InstanceFile:
    mu: Optional[DiscreteMeasure] = None
    nu: Optional[DiscreteMeasure] = None
    support: Optional[Support] = None
    weights: Optional[Dict[Path, Fraction]] = None
    meta: Optional[Mapping] = None

    # --------------------------------------------------------- views

    def effective_support(self) -> Optional[Support]:
        if self.support is not None:
            return self.support
        if self.weights is not None:
            return Support(frozenset(self.weights))
        return None

    def coupling(self) -> Optional[MartingaleCoupling]:
        """The coupling named by ``weights``; missing marginals are induced."""
        if self.weights is None:
            return None
        mu, nu = self.mu, self.nu
        if mu is None:
            mu = _induced(self.weights, 0)
        if nu is None:
            nu = _induced(self.weights, 1)
        return MartingaleCoupling(dict(self.weights), mu, nu)

    @classmethod
    def from_coupling(cls, Q: MartingaleCoupling, meta=None) -> "InstanceFile":
        return cls(Q.mu, Q.nu, Q.support, dict(Q.weights), meta)

    # ------------------------------------------------------ (de)serialize

    @classmethod
    def from_dict(cls, doc) -> "InstanceFile":
        if not isinstance(doc, dict):
            raise InstanceParseError("instance must be a JSON object")
        unknown = set(doc) - set(KEYS) - {"meta"}
        if unknown:
            raise InstanceParseError(f"unknown keys: {sorted(unknown)}")
        try:
            mu = _measure(_rows(doc, "mu", 2))
            nu = _measure(_rows(doc, "nu", 2))
        except MeasureError as exc:
            raise InstanceParseError(str(exc)) from None
        sup_rows = _rows(doc, "support", 2)
        support = Support.from_pairs(sup_rows) if sup_rows is not None else None
        w_rows = _rows(doc, "weights", 3)
        weights = None
        if w_rows is not None:
            weights = {}
            for x, y, w in w_rows:
                if (x, y) in weights:
                    raise InstanceParseError(f"duplicate weight for path ({x}, {y})")
                if w <= 0:
                    raise InstanceParseError(f"non-positive weight on ({x}, {y})")
                weights[(x, y)] = w
            if support is not None and support.paths != frozenset(weights):
                raise InstanceParseError("support is inconsistent with the positive-weight paths")
        if all(v is None for v in (mu, nu, support, weights)):
            raise InstanceParseError("instance has no content")
        return cls(mu, nu, support, weights, _plain(doc.get("meta")))

    def to_dict(self) -> dict:
        doc: Dict[str, Any] = {}
        if self.mu is not None:
            doc["mu"] = dump_rows(self.mu.atoms)
        if self.nu is not None:
            doc["nu"] = dump_rows(self.nu.atoms)
        if self.support is not None:
            doc["support"] = dump_rows(self.support.sorted_paths)
        if self.weights is not None:
            doc["weights"] = dump_rows((x, y, w) for (x, y), w in sorted(self.weights.items()))
        if self.meta is not None:
            doc["meta"] = self.meta
        return doc

    def dumps(self) -> str:
        """Canonical text: one top-level key per line."""
        doc = self.to_dict()
        body = ",\n".join(f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in doc.items())
        return "{\n" + body + "\n}"

    def pretty(self) -> str:
        return pretty(self.to_dict())


def _flat(v) -> bool:
    return not isinstance(v, (list, dict)) or (isinstance(v, list) and all(not isinstance(u, (list, dict)) for u in v))


def pretty(doc, level: int = 0) -> str:
    """Indented JSON whose innermost rows stay on one line."""
    pad, inner = "  " * level, "  " * (level + 1)
    if isinstance(doc, dict):
        if not doc:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {pretty(v, level + 1)}" for k, v in doc.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(doc, list) and not _flat(doc):
        if all(_flat(u) for u in doc) and len(json.dumps(doc)) <= 100:
            return json.dumps(doc)
        return "[\n" + ",\n".join(inner + pretty(u, level + 1) for u in doc) + "\n" + pad + "]"
    return json.dumps(doc)


def _plain(v):
    """Meta values back to plain JSON: integral numbers as ints, others as strings."""
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else format_rational(v)
    if isinstance(v, list):
        return [_plain(u) for u in v]
    if isinstance(v, dict):
        return {k: _plain(u) for k, u in v.items()}
    return v


def _measure(rows) -> Optional[DiscreteMeasure]:
    return None if rows is None else DiscreteMeasure.from_pairs(rows)


def _induced(weights: Mapping[Path, Fraction], axis: int) -> DiscreteMeasure:
    acc: Dict[Fraction, Fraction] = {}
    for p, w in weights.items():
        acc[p[axis]] = acc.get(p[axis], Fraction(0)) + w
    return DiscreteMeasure.from_pairs(acc.items())


def parse_instance(text: str) -> InstanceFile:
    return InstanceFile.from_dict(loads_exact(text))


def read_instance(path) -> InstanceFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InstanceParseError(f"cannot read {path}: {exc}") from None
    return parse_instance(text)


def read_payoff(path) -> Dict[Path, Fraction]:
    """Payoff file: ``{"payoff": [[x, y, f], ...]}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = loads_exact(fh.read())
    except OSError as exc:
        raise InstanceParseError(f"cannot read {path}: {exc}") from None
    if not isinstance(doc, dict) or "payoff" not in doc:
        raise InstanceParseError("payoff file needs a 'payoff' list")
    out = {}
    for x, y, v in _rows(doc, "payoff", 3):
        out[(x, y)] = v
    return out


def payoff_to_dict(f: Mapping[Path, Fraction]) -> dict:
    return {"payoff": dump_rows((x, y, v) for (x, y), v in sorted(f.items()))}


__all__ = [
    "CouplingError",
    "InstanceFile",
    "InstanceParseError",
    "loads_exact",
    "parse_instance",
    "read_instance",
    "read_payoff",
    "payoff_to_dict",
]
