import json
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorrng import bounds
from mirrorrng.verify import bound_grid

deltas = st.floats(0.01, 1.0)
ns = st.integers(2, 6)


def test_azuma_examples():
    assert bounds.azuma_tail_bound(128, 0.5, 1) == pytest.approx(math.exp(-4))
    assert bounds.azuma_tail_bound(128, 0.5, 1) == pytest.approx(0.018316, abs=1e-6)
    assert bounds.azuma_tail_bound(1000, 0, 3) == 1


@given(st.integers(1, 10**6), deltas, st.floats(1, 100))
def test_azuma_doubling(N, delta, K):
    assert bounds.azuma_tail_bound(2 * N, delta, K) == pytest.approx(bounds.azuma_tail_bound(N, delta, K) ** 2, rel=1e-12, abs=1e-300)


def test_gk_bound_examples():
    assert bounds.gk_value_bound(2, 256) == 0.5
    assert bounds.gk_value_bound(2, 64) == 1.0
    vals = [bounds.gk_value_bound(2, 4**k) for k in range(1, 20)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_optimal_k_examples():
    assert bounds.optimal_k(2, 0.1) == pytest.approx(25600)
    assert bounds.optimal_k(2, 1) == 256


@given(ns, deltas)
def test_optimal_k_leaves_half_margin(n, delta):
    K = bounds.optimal_k(n, delta)
    assert delta - bounds.gk_value_bound(n, K) == pytest.approx(delta / 2, rel=1e-12)


def test_exponent_constant_rederived():
    # N (delta/2)^2 / (8 K^2) with K = (8n/delta)^2, in exact arithmetic
    for n in (2, 3, 5):
        for delta in (Fraction(1, 10), Fraction(1, 3), Fraction(1)):
            K = (8 * n / delta) ** 2
            per_round = (delta / 2) ** 2 / (8 * K**2)
            assert per_round == delta**6 / (131072 * n**4)
    assert bounds.GUESSING_EXPONENT_DENOM == 131072 == 2**17
    assert bounds.MAIN_EXPONENT_DENOM == 2**18


def test_guessing_bound_no_rounds():
    assert bounds.guessing_event_bound(0, 0.3, 2) == 1


@given(st.integers(0, 10**12), deltas, ns)
def test_guessing_bound_composition(N, delta, n):
    a = bounds.guessing_event_bound(N, delta, n)
    b = bounds.azuma_tail_bound(N, delta / 2, bounds.optimal_k(n, delta))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)
    assert a == pytest.approx(bounds.guessing_event_bound_composed(N, delta, n), rel=1e-12, abs=1e-300)


@given(st.integers(0, 10**12), deltas, ns, st.integers(0, 200))
def test_main_bound_squared(N, delta, n, J):
    m = bounds.main_theorem_bound(N, delta, n, J)
    assert m**2 == pytest.approx(2.0**J * bounds.guessing_event_bound(N, delta, n), rel=1e-12, abs=1e-300)


def test_main_bound_j_zero():
    assert bounds.main_theorem_bound(10**9, 0.5, 2, 0) == pytest.approx(math.exp(-(10**9) * 0.5**6 / (2**18 * 16)))


def test_main_bound_linear_rate_vanishes():
    delta, n = 0.5, 2
    c = 0.5 * (2 / math.log(2)) * delta**6 / (2**18 * n**4)
    vals = [bounds.main_theorem_bound(N, delta, n, int(c * N)) for N in (10**8, 10**9, 10**10, 10**11)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-10


@given(st.integers(1, 10**9), deltas, ns, st.integers(0, 100))
def test_monotonicity(N, delta, n, J):
    g = bounds.guessing_event_bound
    assert g(N + 10**6, delta, n) <= g(N, delta, n)
    assert g(N, delta, n + 1) >= g(N, delta, n)
    m = bounds.main_theorem_bound
    assert m(N, delta, n, J + 1) >= m(N, delta, n, J)
    assert m(N + 10**6, delta, n, J) <= m(N, delta, n, J)


def test_bound_domain_errors():
    with pytest.raises(ValueError):
        bounds.optimal_k(2, 0)
    with pytest.raises(ValueError):
        bounds.guessing_event_bound(10, 1.5, 2)
    with pytest.raises(ValueError):
        bounds.azuma_tail_bound(10, 0.1, 0)
    with pytest.raises(ValueError):
        bounds.gk_value_bound(2, -1)


def test_grid_identities():
    for N, delta, n, J in bound_grid():
        a = bounds.guessing_event_bound(N, delta, n)
        b = bounds.guessing_event_bound_composed(N, delta, n)
        assert abs(a - b) <= 1e-12 * b
        c = bounds.main_theorem_bound(N, delta, n, J) ** 2
        d = 2.0**J * a
        assert abs(c - d) <= 1e-12 * d


# --- reports --------------------------------------------------------------


def test_report_verdicts():
    r = bounds.compare("guess", 0.01, bounds.guessing_event_bound(50, 0.1, 2), {"N": 50})
    assert r.verdict == "holds"  # the bound is just below 1 here
    assert r.bound < 1
    assert bounds.compare("x", 0.2, 0.3).verdict == "holds"
    assert bounds.compare("x", 0.4, 0.3, sigma=0.05).verdict == "holds"
    assert bounds.compare("x", 0.5, 0.3, sigma=0.05).verdict == "violated"
    main = bounds.main_theorem_bound(2, 0.1, 2, 1)
    assert bounds.compare("trace", 0.5, main, trivial_max=bounds.trace_distance_max(1)).verdict == "vacuous"


def test_trace_distance_max():
    assert bounds.trace_distance_max(0) == 0
    assert bounds.trace_distance_max(1) == 1
    assert bounds.trace_distance_max(64) == pytest.approx(2)


def test_report_serialization():
    r = bounds.compare("x", 0.2, 0.3, {"N": 5, "delta": 0.1}, sigma=0.01, ci=(0.18, 0.22))
    obj = json.loads(r.to_json())
    assert obj["verdict"] == "holds" and obj["parameters"] == {"N": 5, "delta": 0.1}
    text = bounds.reports_to_csv([r, r])
    lines = text.strip().split("\n")
    assert lines[0].split(",") == list(bounds.BoundReport.CSV_FIELDS)
    assert len(lines) == 3 and lines[1].endswith("holds")


def test_report_rejects_bad_input():
    with pytest.raises(ValueError):
        bounds.compare("x", float("nan"), 0.3)
    with pytest.raises(ValueError):
        bounds.compare("x", 0.1, 0.3, sigma=-1)
