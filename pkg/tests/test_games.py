import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorrng.bounds import gk_value_bound
from mirrorrng.games import (
    BellGame,
    DeterministicStrategy,
    QuantumStrategy,
    classical_value,
    deterministic_value,
    expected_score,
    forced_classical_process,
    load_game,
    make_chsh_bell_game,
    make_guessing_game,
    seesaw,
    seesaw_lower_bound,
    strategy_from_json,
    strategy_to_json,
)
from mirrorrng.linalg import DensityOperator, Povm, random_projective_povm
from mirrorrng.presets import (
    TSIRELSON_VALUE,
    classical_best_strategy,
    maximally_mixed_copyable_strategy,
    tsirelson_strategy,
)
from mirrorrng.verify import random_gk_strategy

CHSH = make_chsh_bell_game()
seeds = st.integers(0, 2**32 - 1)


def brute_force_classical(L: np.ndarray) -> Fraction:
    """Independent oracle: every pair of deterministic tables, no pruning."""
    n = L.shape[0]
    best = None
    for a in itertools.product(range(n), repeat=n):
        for b in itertools.product(range(n), repeat=n):
            v = sum(L[x, y, a[x], b[y]] for x in range(n) for y in range(n)) / (n * n)
            best = v if best is None else max(best, v)
    return best


def zero_game(n=2):
    return BellGame.from_table(n, np.zeros((n,) * 4))


# --- CHSH -----------------------------------------------------------------


def test_chsh_table():
    assert CHSH.score(0, 0, 0, 0) == pytest.approx(1 / 3)
    assert CHSH.score(1, 1, 0, 0) == -1
    assert CHSH.exact_table()[0, 0, 0, 0] == Fraction(1, 3)
    for x, y, s, t in itertools.product(range(2), repeat=4):
        win = (s ^ t) == (x & y)
        assert CHSH.exact_table()[x, y, s, t] == (Fraction(1, 3) if win else -1)


def test_chsh_classical_value_exact():
    assert classical_value(CHSH) == 0
    assert brute_force_classical(CHSH.exact_table()) == 0
    assert isinstance(classical_value(CHSH), Fraction)


def test_zero_game_value():
    assert classical_value(zero_game()) == 0
    assert seesaw_lower_bound(zero_game(), (2, 2), iters=3) == pytest.approx(0, abs=1e-12)


def test_tsirelson_preset_score():
    closed_form = 4 / 3 * np.cos(np.pi / 8) ** 2 - 1
    assert closed_form == pytest.approx(TSIRELSON_VALUE, abs=1e-15)
    assert expected_score(CHSH, tsirelson_strategy()) == pytest.approx(TSIRELSON_VALUE, abs=1e-9)
    assert abs(expected_score(CHSH, tsirelson_strategy()) - 0.138071) <= 1e-6


def test_uniform_outputs_score():
    half = Povm((0, 1), np.stack([np.eye(1) / 2, np.eye(1) / 2]))
    fam = (half, half)
    strat = QuantumStrategy(DensityOperator(np.ones((1, 1))), (1, 1), (fam, fam))
    assert expected_score(CHSH, strat) == pytest.approx(-1 / 3)


def test_other_presets():
    assert expected_score(CHSH, classical_best_strategy()) == pytest.approx(0, abs=1e-15)
    # I/4 is a product state: independent uniform outputs win half the time
    assert expected_score(CHSH, maximally_mixed_copyable_strategy()) == pytest.approx(-1 / 3)


@given(st.lists(st.integers(0, 1), min_size=4, max_size=4))
def test_deterministic_embedding(tab):
    det = DeterministicStrategy((tuple(tab[:2]), tuple(tab[2:])))
    assert expected_score(CHSH, det.as_quantum((2, 2))) == pytest.approx(float(deterministic_value(CHSH, det)))


# --- game validation and files ---------------------------------------------


def test_bell_game_rejects_scores_out_of_range():
    t = CHSH.exact_table().copy()
    t[0, 0, 0, 0] = Fraction(3, 2)
    with pytest.raises(ValueError):
        BellGame.from_table(2, t)


def test_bell_game_rejects_positive_classical_value():
    with pytest.raises(ValueError):
        BellGame.from_table(2, np.full((2, 2, 2, 2), 0.5))


def test_game_json_round_trip():
    text = json.dumps(CHSH.to_json())
    assert BellGame.from_json(text) == CHSH
    g = make_guessing_game(CHSH, 16)
    assert load_game(json.dumps(g.to_json())) == g
    assert load_game(CHSH.to_json()) == CHSH


@given(st.integers(2, 3), seeds)
@settings(max_examples=20, deadline=None)
def test_random_normalized_games_have_value_zero(n, seed):
    # shift a random table so its classical value is 0, rescale into [-1, 1]
    rng = np.random.default_rng(seed)
    raw = rng.integers(-6, 7, size=(n,) * 4)
    table = np.vectorize(Fraction)(raw)
    v = brute_force_classical(table)
    shifted = (table - v) / 13
    g = BellGame.from_table(n, shifted)
    assert classical_value(g) == 0


# --- guessing game --------------------------------------------------------


def test_guessing_game_scores():
    g = make_guessing_game(CHSH, 5)
    for x, y, s, t in itertools.product(range(2), repeat=4):
        assert g.score(x, y, (x, y), s, t, s) == CHSH.score(x, y, s, t)
        assert g.score(x, y, (x, y), s, t, 1 - s) == -5
    assert g.input_probability(0, 1, (0, 1)) == pytest.approx(1 / 4)
    assert g.input_probability(0, 1, (1, 1)) == 0


def test_guessing_game_rejects_small_k():
    with pytest.raises(ValueError):
        make_guessing_game(CHSH, 0.5)
    with pytest.raises(ValueError):
        make_guessing_game(CHSH, -1)


def test_guessing_game_classical_value():
    v = classical_value(make_guessing_game(CHSH, 4))
    assert v == 0


# --- seesaw ---------------------------------------------------------------


def test_seesaw_chsh_reaches_tsirelson():
    res = seesaw(CHSH, (2, 2), iters=50, seed=0)
    assert res.value >= 0.1380
    assert res.value <= TSIRELSON_VALUE + 1e-6
    assert expected_score(CHSH, res.strategy) == pytest.approx(res.value, abs=1e-10)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_seesaw_monotone_and_deterministic(seed):
    a = seesaw(make_guessing_game(CHSH, 16), (2, 2, 2), iters=15, seed=seed, restarts=2)
    b = seesaw(make_guessing_game(CHSH, 16), (2, 2, 2), iters=15, seed=seed, restarts=2)
    assert a.history == b.history
    assert np.all(np.diff(a.history) >= -1e-12)


def test_seesaw_rejects_bad_arguments():
    with pytest.raises(ValueError):
        seesaw(CHSH, (2, 2, 2))
    with pytest.raises(ValueError):
        seesaw(CHSH, (2, 2), iters=0)


@pytest.mark.slow
def test_seesaw_guessing_game_below_bound():
    val = seesaw_lower_bound(make_guessing_game(CHSH, 64), (2, 2, 4), iters=50, seed=0)
    assert val <= gk_value_bound(2, 64) + 1e-6
    assert gk_value_bound(2, 64) == 1.0


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([1, 4, 16, 64]))
def test_gk_property_on_random_strategies(seed, K):
    strat = random_gk_strategy(np.random.default_rng(seed))
    val = expected_score(make_guessing_game(CHSH, K), strat)
    assert -K - 1e-9 <= val <= gk_value_bound(2, K) + 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_bell_scores_in_range(seed):
    rng = np.random.default_rng(seed)
    s = random_gk_strategy(rng)
    from mirrorrng.linalg import partial_trace

    rho = DensityOperator(partial_trace(s.state.matrix, s.dims, [0, 1]))
    v = expected_score(CHSH, QuantumStrategy(rho, s.dims[:2], s.measurements[:2]))
    assert -1 <= v <= TSIRELSON_VALUE + 1e-9


# --- forced-classical process ---------------------------------------------


def test_forced_classical_perfect_eve():
    # Alice measures Z on both inputs; Eve holds a classical copy of Alice's bit
    z = Povm.computational(2)
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = 1 / np.sqrt(2)
    alice = (z, z)
    bob = (z, z)
    eve = (z,) * 4
    strat = QuantumStrategy(DensityOperator.from_vector(ghz), (2, 2, 2), (alice, bob, eve))
    res = forced_classical_process(CHSH, strat, K=16)
    assert np.allclose(res.deltas, 0)
    assert res.process_score == pytest.approx(res.original_score)
    assert res.original_score <= 1e-12
    assert res.holds


def test_forced_classical_tsirelson_uniform_eve():
    ts = tsirelson_strategy()
    rho = np.kron(ts.state.matrix, np.eye(2) / 2)
    eve = (Povm.computational(2),) * 4
    strat = QuantumStrategy(DensityOperator(rho), (2, 2, 2), (*ts.measurements, eve))
    res = forced_classical_process(CHSH, strat, K=16)
    # Eve's bit is independent of Alice's: she fails half the time
    assert np.allclose(res.deltas, 0.5)
    assert res.original_score == pytest.approx(TSIRELSON_VALUE)
    assert res.bound == pytest.approx(2 * 4 * np.sqrt(0.5))
    assert res.holds
    # Eve independent of everything: half the CHSH score, plus -K half the time
    assert res.guessing_score == pytest.approx(TSIRELSON_VALUE / 2 - 16 / 2)


def test_forced_classical_process_oracle():
    # independent oracle: Alice's record r = (s_0, s_1) has probability
    # Tr[(P_{s_1}^1 P_{s_0}^0 rho P_{s_0}^0 P_{s_1}^1)] and Bob sees the post-state
    rng = np.random.default_rng(17)
    s = random_gk_strategy(rng)
    res = forced_classical_process(CHSH, s)
    from mirrorrng.linalg import partial_trace

    rho = partial_trace(s.state.matrix, s.dims, [0, 1])
    alice, bob, _ = s.measurements
    total = 0.0
    for r0, r1 in itertools.product(range(2), repeat=2):
        op = np.kron(alice[1].elements[r1] @ alice[0].elements[r0], np.eye(2))
        post = op @ rho @ op.conj().T
        bstate = partial_trace(post, (2, 2), [1])
        rec = (r0, r1)
        for x, y, t in itertools.product(range(2), repeat=3):
            total += CHSH.score(x, y, rec[x], t) * np.trace(bob[y].elements[t] @ bstate).real / 4
    assert res.process_score == pytest.approx(total, abs=1e-12)
    assert np.isnan(res.guessing_score)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_forced_classical_chain_random(seed):
    res = forced_classical_process(CHSH, random_gk_strategy(np.random.default_rng(seed)), K=16)
    assert res.holds


def test_forced_classical_rejects_bad_strategy():
    with pytest.raises(ValueError):
        forced_classical_process(CHSH, tsirelson_strategy())
    rng = np.random.default_rng(0)
    s = random_gk_strategy(rng)
    alice = tuple(Povm((0, 1), np.stack([np.eye(2) / 2] * 2)) for _ in range(2))
    bad = QuantumStrategy(s.state, s.dims, (alice, s.measurements[1], s.measurements[2]))
    with pytest.raises(ValueError):
        forced_classical_process(CHSH, bad)


# --- strategy files -------------------------------------------------------


def test_strategy_json_round_trip():
    s = random_gk_strategy(np.random.default_rng(5))
    back = strategy_from_json(json.dumps(strategy_to_json(s)))
    assert np.array_equal(back.state.matrix, s.state.matrix)
    g = make_guessing_game(CHSH, 4)
    assert expected_score(g, back) == expected_score(g, s)


def test_strategy_shape_checks():
    z = Povm.computational(2)
    with pytest.raises(ValueError):
        QuantumStrategy(DensityOperator.maximally_mixed(4), (2, 3), ((z,), (z,)))
    with pytest.raises(ValueError):
        QuantumStrategy(DensityOperator.maximally_mixed(4), (2, 2), ((z,),))
    three = random_projective_povm(2, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        expected_score(CHSH, QuantumStrategy(DensityOperator.maximally_mixed(4), (2, 2), ((three, three), (z, z))))
