import json
import os
from pathlib import Path

import pytest

import tsbdd

SOURCE = Path(os.environ.get("TSBDD_SOURCE_DIR", Path(__file__).resolve().parents[2]))
GOLDEN = json.loads((SOURCE / "tests/golden/example_oracle.json").read_text())


def test_example_file_matches_builtin():
    m = tsbdd.Model.load(str(SOURCE / "data/example.model"))
    assert m == tsbdd.Model.example()
    assert m.causes == ["C1", "C2"]
    assert m.validate() == []
    assert tsbdd.Model.parse(m.serialize()) == m


def test_compile_example():
    m = tsbdd.Model.example()
    k = tsbdd.compile(m)
    assert k.order == ["S", "S1", "S2", "S3", "S4", "C1", "C2"]
    assert k.card == 4
    assert k.nodes <= tsbdd.size_bound(m)
    assert tsbdd.compile(m, force_faulty=False).card == 5
    assert "digraph" in k.to_dot()


def test_counts_and_posteriors_match_golden():
    m = tsbdd.Model.example()
    k = tsbdd.compile(m)
    assert tsbdd.cause_counts(m, k) == {"C1": 2, "C2": 2}
    for case in GOLDEN["cases"]:
        r = tsbdd.posteriors(m, k, case["evidence"], "both")
        assert r["consistent"] == case["consistent"]
        for cause, p in case["posteriors"].items():
            assert r["posteriors"][cause] == pytest.approx(p, abs=1e-12)
        assert r["strategy_gap"] <= 1e-9


def test_oracle_agrees_on_generated_models():
    for seed in range(10):
        m = tsbdd.Model.generate(5, 3, 2, seed)
        k = tsbdd.compile(m, "exactly-m=2")
        ev = m.actions[0] + "=y"
        got = tsbdd.posteriors(m, k, ev)["posteriors"]
        want = tsbdd.oracle_posteriors(m, ev, "exactly-m=2")
        for cause in m.causes:
            assert got[cause] == pytest.approx(want[cause], abs=1e-9)


def test_count_formula():
    assert tsbdd.count_formula("one(A1, A2, A3)", ["A1", "A2", "A3"]) == 3
    assert tsbdd.count_formula("a | b", ["a", "b"], {"a": False}) == 1


def test_errors_are_typed():
    with pytest.raises(tsbdd.ParseError):
        tsbdd.count_formula("a &", ["a"])
    with pytest.raises(tsbdd.ParseError):
        tsbdd.Model.parse("problem S\nsystem S\nfrobnicate\n")
    m = tsbdd.Model.example()
    with pytest.raises(tsbdd.Error):
        tsbdd.posteriors(m, tsbdd.compile(m), "S9=faulty")


def test_bench_csv_is_deterministic():
    a = tsbdd.bench_csv(seed=3, min_total=21, max_total=40, points=2, per_point=2)
    assert a == tsbdd.bench_csv(seed=3, min_total=21, max_total=40, points=2, per_point=2)
    assert "model_id,n_system,n_cause,n_action,mode,nodes,size_bound,adds,muls,divs,wall_ns" in a
