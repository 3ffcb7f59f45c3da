import json
from fractions import Fraction as F

import pytest
from hypothesis import given

from motsupport import analysis, cli
from motsupport.fixtures import NAMED, positive
from motsupport.generators import gen_random_instance
from motsupport.io import InstanceFile, InstanceParseError, parse_instance, payoff_to_dict, read_instance
from motsupport.measure import DiscreteMeasure, check_convex_order
from motsupport.support import validate_coupling

from conftest import DATA, kernel_supports

FILES = ["binomial.json", "shared-triple.json", "free-cycle.json", "binomial-mesh.json"]


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def results(text):
    return {k: v["result"] for k, v in json.loads(text)["verdicts"].items()}


# ------------------------------------------------------------------ io


@pytest.mark.parametrize("name", FILES)
def test_file_round_trip(name):
    inst = read_instance(DATA / name)
    again = parse_instance(inst.dumps())
    assert again == inst and again.dumps() == inst.dumps()


@pytest.mark.parametrize("name", sorted(NAMED))
def test_fixture_round_trip(name):
    inst = InstanceFile.from_coupling(positive(NAMED[name]()), meta={"name": name, "n": 3})
    again = parse_instance(inst.dumps())
    assert again == inst


@given(kernel_supports())
def test_round_trip_property(S):
    inst = InstanceFile.from_coupling(positive(S))
    assert parse_instance(inst.dumps()) == inst
    assert parse_instance(inst.pretty()) == inst


def test_decimals_are_exact():
    inst = parse_instance('{"mu": [[0.1, "1"]], "nu": [["0.05", 0.5], [0.15, "0.5"]]}')
    assert inst.mu.points == (F(1, 10),)
    assert inst.nu.atoms == ((F(1, 20), F(1, 2)), (F(3, 20), F(1, 2)))
    assert check_convex_order(inst.mu, inst.nu)


@pytest.mark.parametrize("text", [
    '{"mu": [["1/0", "1"]]}',
    '{"mu": [["1", "1"]], "extra": 1}',
    '{"weights": [["1", "1", "0"]]}',
    '{"weights": [["1", "1", "1/2"], ["1", "1", "1/2"]]}',
    '{"support": [["1", "2"]], "weights": [["1", "1", "1"]]}',
    '{}',
    '[1, 2]',
    '{"mu": [["1"]]}',
    'not json',
])
def test_parse_errors(text):
    with pytest.raises(InstanceParseError):
        parse_instance(text)


def test_coupling_induces_marginals():
    inst = parse_instance('{"weights": [["1", "1/2", "1/2"], ["1", "3/2", "1/2"]]}')
    Q = inst.coupling()
    assert Q.mu == DiscreteMeasure.dirac(1)
    assert validate_coupling(Q).ok


# ----------------------------------------------------------------- analyze


def test_analyze_binomial(capsys):
    code, out, _ = run(capsys, "analyze", DATA / "binomial.json")
    assert code == 0
    r = results(out)
    assert r["2link"] is r["erasability"] is r["wep"] is r["extremality"] is True
    assert r["validate"] is True and r["convex-order"] is True


def test_analyze_shared_triple(capsys):
    code, out, _ = run(capsys, "analyze", DATA / "shared-triple.json")
    assert code == 0
    doc = json.loads(out)["verdicts"]
    assert doc["wep"]["result"] is False and doc["wep"]["certificate"]["type"] == "cokernel"
    assert doc["extremality"]["result"] is False and doc["extremality"]["certificate"]["type"] == "kernel"
    # two independent cycles in the x / y-pair graph (see the decisions ledger)
    assert doc["mesh-cycles"]["result"] >= 1
    assert doc["intersection-screen"]["result"] is True


def test_analyze_free_cycle(capsys):
    code, out, _ = run(capsys, "analyze", DATA / "free-cycle.json")
    doc = json.loads(out)["verdicts"]
    assert doc["extremality"]["result"] is False
    assert doc["mesh-cycles"]["result"] == 0 and doc["mesh-cycles"]["certificate"] == analysis.NO_CERT
    assert doc["free-pool"]["result"] is True


def test_every_verdict_has_certificate(capsys):
    for name in FILES:
        _, out, _ = run(capsys, "analyze", DATA / name)
        for v in json.loads(out)["verdicts"].values():
            assert v["certificate"] == analysis.NO_CERT or isinstance(v["certificate"], dict)


def test_analyze_exit_codes(capsys, monkeypatch, tmp_path):
    assert run(capsys, "analyze", DATA / "bad_rational.json")[0] == 2
    assert run(capsys, "analyze", tmp_path / "missing.json")[0] == 2
    assert run(capsys, "analyze", "--checks", "nope", DATA / "binomial.json")[0] == 2

    def broken(v):
        raise analysis.InvariantViolation("forced")

    monkeypatch.setattr(analysis, "_cross_check", broken)
    code, _, err = run(capsys, "analyze", DATA / "binomial.json")
    assert code == 3 and "forced" in err


def test_analyze_deterministic(capsys, tmp_path):
    outs = set()
    for threads in ("1", "3"):
        code, out, _ = run(capsys, "--threads", threads, "analyze", *[DATA / n for n in FILES], "--seed", "5")
        assert code == 0
        outs.add(out)
    assert len(outs) == 1
    _, a, _ = run(capsys, "analyze", "--text", DATA / "binomial.json")
    _, b, _ = run(capsys, "analyze", "--text", "--threads", "2", DATA / "binomial.json")
    assert a == b and "wep" in a


def test_analyze_checks_subset(capsys):
    code, out, _ = run(capsys, "analyze", "--checks", "wep,2link", DATA / "free-cycle.json")
    doc = json.loads(out)
    assert doc["checks"] == ["2link", "wep"] and set(doc["verdicts"]) == {"2link", "wep"}


@pytest.mark.parametrize("name", FILES)
def test_verify_replays_report(capsys, tmp_path, name):
    rep = tmp_path / "rep.json"
    assert run(capsys, "analyze", DATA / name, "--out", rep)[0] == 0
    code, out, _ = run(capsys, "verify", DATA / name, rep)
    assert code == 0 and json.loads(out)["ok"] is True


def test_verify_rejects_tampering(capsys, tmp_path):
    rep = tmp_path / "rep.json"
    run(capsys, "analyze", DATA / "shared-triple.json", "--out", rep)
    doc = json.loads(rep.read_text())
    doc["verdicts"]["wep"]["result"] = True
    rep.write_text(json.dumps(doc))
    assert run(capsys, "verify", DATA / "shared-triple.json", rep)[0] == 1


# --------------------------------------------------------------- decompose


def write_payoff(tmp_path, f):
    p = tmp_path / "payoff.json"
    p.write_text(json.dumps(payoff_to_dict(f)))
    return p


def test_decompose_mesh(capsys, tmp_path):
    f = {(F(1), F(1, 2)): F(7), (F(1), F(3, 2)): F(-2, 3)}
    pay = write_payoff(tmp_path, f)
    code, out, _ = run(capsys, "decompose", DATA / "binomial-mesh.json", pay)
    doc = json.loads(out)
    assert code == 0 and doc["kind"] == "decomposition"
    assert all(v == "0" for _, v in doc["psi"])
    cert = tmp_path / "dec.json"
    cert.write_text(out)
    assert run(capsys, "verify", DATA / "binomial-mesh.json", cert, "--payoff", pay)[0] == 0


def test_decompose_zero_payoff(capsys, tmp_path):
    inst = read_instance(DATA / "binomial.json")
    pay = write_payoff(tmp_path, {p: F(0) for p in inst.effective_support().paths})
    code, out, _ = run(capsys, "decompose", DATA / "binomial.json", pay)
    doc = json.loads(out)
    assert code == 0
    assert all(v == "0" for key in ("phi", "h", "psi") for *_, v in doc[key])


def test_decompose_shared_triple_infeasible(capsys, tmp_path):
    inst = read_instance(DATA / "shared-triple.json")
    f = {p: F(0) for p in inst.effective_support().paths}
    f[(F(2), F(1))] = F(1)
    pay = write_payoff(tmp_path, f)
    code, out, _ = run(capsys, "decompose", DATA / "shared-triple.json", pay)
    doc = json.loads(out)
    assert code == 0 and doc["kind"] == "infeasibility" and doc["pairing"] != "0"
    cert = tmp_path / "cert.json"
    cert.write_text(out)
    assert run(capsys, "verify", DATA / "shared-triple.json", cert, "--payoff", pay)[0] == 0


def test_decompose_domain_mismatch(capsys, tmp_path):
    pay = write_payoff(tmp_path, {(F(1), F(1, 2)): F(1)})
    assert run(capsys, "decompose", DATA / "binomial-mesh.json", pay)[0] == 2


# ------------------------------------------------------------------ perturb


def test_perturb_shared_triple(capsys, tmp_path):
    code, out, _ = run(capsys, "perturb", DATA / "shared-triple.json", "--prefix", tmp_path / "pair")
    doc = json.loads(out)
    assert code == 0 and doc["kind"] == "perturbation" and doc["source"] == "mesh-cycle"
    Q = read_instance(DATA / "shared-triple.json").coupling()
    q1 = read_instance(tmp_path / "pair.q1.json").coupling()
    q2 = read_instance(tmp_path / "pair.q2.json").coupling()
    assert q1 != q2
    for q in (q1, q2):
        assert validate_coupling(q).ok and q.mu == Q.mu and q.nu == Q.nu
    for p in set(q1.weights) | set(q2.weights) | set(Q.weights):
        assert (q1.weights.get(p, 0) + q2.weights.get(p, 0)) / 2 == Q.weights.get(p, 0)
    cert = tmp_path / "pert.json"
    cert.write_text(out)
    assert run(capsys, "verify", DATA / "shared-triple.json", cert)[0] == 0


def test_perturb_free_cycle_and_extremal(capsys):
    code, out, _ = run(capsys, "perturb", DATA / "free-cycle.json")
    assert code == 0 and json.loads(out)["source"] == "free-pool"
    code, out, _ = run(capsys, "perturb", DATA / "binomial.json")
    assert code == 0 and json.loads(out)["kind"] == "no-pool"


def test_perturb_needs_weights(capsys, tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"mu": [["1", "1"]], "nu": [["1", "1"]]}')
    assert run(capsys, "perturb", p)[0] == 2


# ----------------------------------------------------------------- generate


def test_generate_binomial(capsys):
    code, out, _ = run(capsys, "generate", "binomial")
    inst = parse_instance(out)
    assert code == 0
    assert inst.weights == {(F(1), F(1, 2)): F(1, 2), (F(1), F(3, 2)): F(1, 2)}


def test_generate_lp_vertex_extremal(capsys, tmp_path):
    path = tmp_path / "lp.json"
    code, _, _ = run(capsys, "generate", "lp-vertex", "--params", '{"cost": "pow3", "sense": "min"}', "--seed", "3", "--out", path)
    assert code == 0
    _, out, _ = run(capsys, "analyze", path)
    r = results(out)
    assert r["extremality"] is True and r["validate"] is True


def test_generate_random_golden(capsys):
    gold = json.loads((DATA / "random-42-2-4.json").read_text())
    code, out, _ = run(capsys, "generate", "random", "--seed", "42")
    doc = json.loads(out)
    assert code == 0 and doc["mu"] == gold["mu"] and doc["nu"] == gold["nu"]
    assert out == run(capsys, "generate", "random", "--seed", "42")[1]
    mu, nu = gen_random_instance(42, 2, 4)
    assert parse_instance(out).mu == mu


def test_generate_hk_and_params_file(capsys, tmp_path):
    pf = tmp_path / "p.json"
    pf.write_text('{"a": "2", "b": "3", "inner": ["2", "3"], "p": [["2", "3/2"], ["3", "1"]], "q": [["2", "5"], ["3", "4"]], "outer": ["7"]}')
    code, out, _ = run(capsys, "generate", "hk", "--params", "@" + str(pf))
    assert code == 0
    inst = parse_instance(out)
    assert validate_coupling(inst.coupling()).ok
    bad = '{"p": [["2", "1"], ["3", "3/2"]]}'
    assert run(capsys, "generate", "hk", "--params", bad)[0] == 2
    assert run(capsys, "generate", "binomial", "--params", '{"spreads": [["1", "1", "2"]]}')[0] == 2


# --------------------------------------------------------------------- fuzz


def test_fuzz_budget_zero(capsys, tmp_path):
    log = tmp_path / "log.jsonl"
    code, out, _ = run(capsys, "fuzz", "--budget", "0", "--log", log)
    doc = json.loads(out)
    assert code == 0 and doc["examined"] == 0 and doc["violations"] == []
    assert log.read_text() == ""


def test_fuzz_small_budget_with_threads(capsys):
    code, out, _ = run(capsys, "fuzz", "--budget", "60", "--threads", "2")
    doc = json.loads(out)
    assert code == 0 and doc["examined"] == 60
    assert doc["fixtures"]["shared-triple"]["extremal"] is False
    assert doc["fixtures"]["free-cycle"]["extremal"] is False
    _, again, _ = run(capsys, "--threads", "1", "fuzz", "--budget", "60")
    assert again == out


def test_threads_must_be_positive(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--threads", "0", "fuzz", "--budget", "0"])
