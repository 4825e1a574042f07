import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from theons.peon import gallery, kqrO_1theon
from theons.quasitest import (TestReport, counterexample_suite, disc_test, exact_conditional_tables, exact_disc,
                              lex_index, low_coordinates, ucouple_test)

DISC = gallery("disc_3hypergraph")


def test_disc_examples():
    assert disc_test(DISC, 1, 3, seed=0).verdict == "consistent"
    assert disc_test(gallery("qr_graph"), 1, 2, seed=0).verdict == "consistent"
    rep = disc_test(DISC, 1, 4, seed=0)
    assert rep.verdict == "rejected"
    low, high = rep.witness["cells"]
    assert all(c["w"] == [0.25] for c in low.values())
    assert all(c["w"] == [0.75] for c in high.values())
    assert rep.witness["total_variation"] == pytest.approx(0.5, abs=0.05)


def test_ucouple_examples():
    assert ucouple_test(kqrO_1theon(2), 1, 3, seed=0).verdict == "consistent"
    assert ucouple_test(gallery("qr_graph"), 1, 3, seed=0).verdict == "consistent"
    rep = ucouple_test(DISC, 1, 4, seed=0)
    assert rep.verdict == "rejected"
    assert rep.witness["cells"] == [0, 15]  # every unary bin low against every unary bin high


def test_low_coordinates():
    w, o = low_coordinates(kqrO_1theon(2), 2, 3)
    assert len(w) == 6 and [a for a, _ in o] == [(1, 2), (1, 3), (2, 3)]
    assert lex_index((1, 2)) == 0 and lex_index((2, 1)) == 1 and lex_index((3, 2, 1)) == 5


def test_cell_cap():
    with pytest.raises(ValueError):
        disc_test(DISC, 2, 4, bins=4)


@given(st.floats(0, 1), st.floats(1e-6, 0.5))
def test_verdict_matches_p_value(p, sig):
    params = {"significance": sig}
    right = "rejected" if p < sig else "consistent"
    wrong = "consistent" if right == "rejected" else "rejected"
    assert TestReport("UCouple[1]", "x", params, 0.0, p, right).verdict == right
    with pytest.raises(ValueError):
        TestReport("UCouple[1]", "x", params, 0.0, p, wrong)


def test_report_json_and_ok():
    rep = ucouple_test(gallery("qr_graph"), 1, 3, trials=2000, seed=0, expected="consistent")
    data = json.loads(json.dumps(rep.to_json()))
    assert {"property", "params", "statistic", "p_value", "verdict", "witness"} <= set(data)
    assert data["note"] and rep.ok is True
    weak = TestReport("UCouple[1]", "x", {"significance": 0.01}, 0.0, 0.5, "consistent", low_power=True,
                      expected="rejected")
    assert weak.ok is None and "inconclusive" in weak.line()
    wrong = TestReport("UCouple[1]", "x", {"significance": 0.01}, 0.0, 0.5, "consistent", expected="rejected")
    assert wrong.ok is False


def test_false_positive_rate():
    qr = gallery("qr_graph")
    rejects = sum(ucouple_test(qr, 1, 3, trials=10**4, seed=s).verdict == "rejected" for s in range(200))
    assert rejects / 200 <= 3 * 0.01


def test_power_grows_with_trials():
    medians = []
    for trials in (10**3, 10**4, 10**5):
        rates = []
        for run in range(3):
            seeds = range(100 * run, 100 * run + 5)
            rates.append(np.mean([ucouple_test(DISC, 1, 4, trials=trials, seed=s).verdict == "rejected"
                                  for s in seeds]))
        medians.append(float(np.median(rates)))
    assert medians == sorted(medians)
    assert medians[-1] == 1.0


@pytest.mark.parametrize("name,n", [("disc_3hypergraph", 3), ("qr_graph", 2), ("qr_graph", 3),
                                    ("odd_3hypergraph", 3), ("bipartite_graph", 2), ("disc_3hypergraph", 4)])
def test_agrees_with_exact_conditionals(name, n):
    theon = gallery(name)
    equal = exact_disc(theon, 1, n)
    rep = disc_test(theon, 1, n, seed=11)
    if equal:
        assert rep.verdict == "consistent"
    else:
        # the exact tables differ by a wide margin here, so the sampled test must see it
        tables = exact_conditional_tables(theon, 1, n)
        assert any(t.probs != tables[0].probs for t in tables)
        assert rep.verdict == "rejected"


def test_suite_passes_and_is_deterministic():
    a = counterexample_suite(seed=3)
    assert a.passed and not a.inconclusive
    assert len(a.reports) == 7
    b = counterexample_suite(seed=3)
    assert [r.to_json() for r in a.reports] == [r.to_json() for r in b.reports]


def test_tiny_budget_is_flagged_not_failed():
    s = counterexample_suite(trials=10, trials_per_cell=10, samples=10)
    assert s.inconclusive
    assert all(r.low_power for r in s.inconclusive)
    assert all(r.ok is not False for r in s.reports)
