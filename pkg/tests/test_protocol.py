import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorrng.extract import apply_hash, encode_outputs
from mirrorrng.games import make_chsh_bell_game
from mirrorrng.linalg import SUCC
from mirrorrng.presets import (
    TSIRELSON_VALUE,
    classical_best_strategy,
    maximally_mixed_copyable_strategy,
    tsirelson_strategy,
)
from mirrorrng.protocol import (
    DeviceModel,
    ProtocolConfig,
    conditional_means,
    empirical_tail,
    exact_final_state,
    exact_guessing_statistics,
    guessing_statistics,
    marginal_chi_square,
    mirror_distribution,
    round_distribution,
    run_mirrored_protocol,
    run_protocol,
    run_trials,
    wilson,
)

CHSH = make_chsh_bell_game()
TS = DeviceModel.iid(tsirelson_strategy())
CB = DeviceModel.iid(classical_best_strategy())
MM = DeviceModel.iid(maximally_mixed_copyable_strategy())


def cfg(N=10, delta=0.1, J=1, seed=0):
    return ProtocolConfig(CHSH, delta, N, J, seed)


# --- configuration --------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(delta=0)
    with pytest.raises(ValueError):
        cfg(delta=1.5)
    with pytest.raises(ValueError):
        cfg(N=0)
    with pytest.raises(ValueError):
        cfg(N=3, J=4)
    with pytest.raises(ValueError):
        cfg(seed=-1)
    assert cfg(N=3, J=3).hash_family.v == 3


def test_config_json_round_trip():
    c = cfg(N=7, J=3, seed=99)
    back = ProtocolConfig.from_json(json.loads(json.dumps(c.to_json())))
    assert (back.N, back.J, back.delta, back.seed) == (7, 3, 0.1, 99)
    assert back.game == CHSH


def test_device_model_validation():
    with pytest.raises(ValueError):
        DeviceModel(())
    with pytest.raises(ValueError):
        DeviceModel((tsirelson_strategy(), classical_best_strategy()))
    assert TS.kind == "iid"


# --- round distributions --------------------------------------------------


def test_round_distribution_normalized_and_scores():
    p = round_distribution(tsirelson_strategy())
    assert p.shape == (2, 2, 2, 2)
    assert np.allclose(p.sum(axis=(2, 3)), 1)
    assert conditional_means(CHSH, TS)[0] == pytest.approx(TSIRELSON_VALUE)


def test_mirror_distribution_marginal_matches_devices():
    for strat in (tsirelson_strategy(), maximally_mixed_copyable_strategy()):
        q = mirror_distribution(strat)
        assert np.allclose(q.sum(axis=(4, 5)), round_distribution(strat), atol=1e-12)


def test_mirror_copies_maximally_mixed_outcomes():
    q = mirror_distribution(maximally_mixed_copyable_strategy())
    for x in range(2):
        for y in range(2):
            for s in range(2):
                for t in range(2):
                    assert q[x, y, s, t, s, t] == pytest.approx(0.25)


def test_mirror_pure_state_independent():
    q = mirror_distribution(tsirelson_strategy())
    p = round_distribution(tsirelson_strategy())
    for x in range(2):
        for y in range(2):
            adv = q[x, y].sum(axis=(0, 1))
            assert np.allclose(q[x, y], np.einsum("st,uv->stuv", p[x, y], adv), atol=1e-12)


# --- protocol runs --------------------------------------------------------


def test_run_protocol_deterministic():
    a = run_protocol(cfg(N=500, J=8, seed=5), TS, 3)
    b = run_protocol(cfg(N=500, J=8, seed=5), TS, 3)
    assert a.to_json() == b.to_json()
    c = run_protocol(cfg(N=500, J=8, seed=5), TS, 4)
    assert a.to_json() != c.to_json()


def test_run_trials_thread_independent():
    c = cfg(N=100, J=4, seed=1)
    one = [t.to_json() for t in run_trials(lambda i: run_protocol(c, TS, i), 20, 1)]
    four = [t.to_json() for t in run_trials(lambda i: run_protocol(c, TS, i), 20, 4)]
    assert one == four


def test_single_round_deterministic_score():
    # classical-best always wins with score 1/3 unless x = y = 1
    c = cfg(N=1, J=1)
    seen = set()
    for i in range(40):
        tr = run_protocol(c, CB, i)
        win = not (tr.x[0] == 1 and tr.y[0] == 1)
        assert tr.W[0] == pytest.approx(1 / 3 if win else -1)
        assert tr.succ == win
        if tr.succ:
            assert tr.V == apply_hash(c.hash_family, tr.F_index, 0)
        else:
            assert tr.V is None and tr.F_index is None
        seen.add(win)
    assert seen == {True, False}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([0.05, 0.1, 0.3]))
def test_transcript_invariants(seed, delta):
    c = cfg(N=64, delta=delta, J=16, seed=seed)
    tr = run_protocol(c, TS, 0)
    assert np.all(np.abs(tr.W) <= 1)
    assert np.array_equal(tr.W, CHSH.scores[tr.x, tr.y, tr.s, tr.t])
    assert tr.succ == (tr.W.mean() > delta)
    if tr.succ:
        assert tr.V == apply_hash(c.hash_family, tr.F_index, encode_outputs(tr.s, 2))
        assert 0 <= tr.V < 2**16
    obj = json.loads(tr.to_json())
    assert obj["outcome"] == ("succ" if tr.succ else "abort")
    assert (obj["V"] is None) == (not tr.succ)


def test_success_rates_small():
    c = cfg(N=10**4, delta=0.1, J=64)
    assert sum(run_protocol(c, TS, i).succ for i in range(30)) == 30
    c = cfg(N=10**4, delta=0.05, J=64)
    assert sum(run_protocol(c, CB, i).succ for i in range(30)) == 0


# --- mirrored protocol ----------------------------------------------------


def test_mirrored_rejects_scripted():
    dev = DeviceModel.scripted([tsirelson_strategy()], lambda i, h: 0)
    with pytest.raises(ValueError):
        run_mirrored_protocol(cfg(), dev)


def test_mirrored_copyable_devices():
    c = cfg(N=20, J=4, delta=0.01)
    for i in range(50):
        m = run_mirrored_protocol(c, MM, i)
        assert np.array_equal(m.referee.s, m.s2) and np.array_equal(m.referee.t, m.t2)
        assert m.succ2 == m.referee.succ
        assert m.V2 == m.referee.V


def test_mirrored_deterministic():
    c = cfg(N=50, J=5)
    a, b = run_mirrored_protocol(c, TS, 7), run_mirrored_protocol(c, TS, 7)
    assert a.referee.to_json() == b.referee.to_json()
    assert np.array_equal(a.s2, b.s2) and a.V2 == b.V2


def test_marginal_chi_square():
    # 10^5 referee rounds from each protocol
    p = marginal_chi_square(cfg(N=100, J=1, seed=11), TS, 1000)
    assert p > 0.001


# --- guessing statistics --------------------------------------------------


def test_wilson_interval():
    e = wilson(30, 100)
    assert e.ci_lo < 0.3 < e.ci_hi
    assert e.ci_lo == pytest.approx(0.2189, abs=1e-4)
    assert e.ci_hi == pytest.approx(0.3958, abs=1e-4)


def test_guessing_copyable_equal():
    gs = guessing_statistics(cfg(N=10, J=3, delta=0.01), MM, 500)
    assert gs.p_vvs.count == gs.p_sss.count == gs.p_ss.count


def test_guessing_injective_hash():
    # J = N: the hash is a bijection whenever a != 0, so V = V' iff S = S'
    c = cfg(N=6, J=6, delta=0.01)
    for i in range(300):
        m = run_mirrored_protocol(c, TS, i)
        if m.referee.succ and m.succ2 and m.referee.F_index[0] != 0:
            assert (m.referee.V == m.V2) == np.array_equal(m.referee.s, m.s2)


def test_guessing_decomposition_tsirelson():
    gs = guessing_statistics(cfg(N=50, J=5), TS, 5000)
    assert gs.decomposition_holds
    assert gs.p_sss.estimate <= gs.p_vvs.estimate <= gs.p_ss.estimate


@pytest.mark.parametrize("dev", [TS, MM], ids=["tsirelson", "copyable"])
def test_exact_guessing_matches_monte_carlo(dev):
    c = cfg(N=1, J=1, delta=0.1)
    ex = exact_guessing_statistics(c, dev)
    mc = guessing_statistics(c, dev, 20000)
    for k in ("p_sss", "p_vvs", "p_ss"):
        e = getattr(mc, k)
        assert abs(e.estimate - getattr(ex, k)) <= 4 * max(e.sigma, 1e-3), k


def test_exact_guessing_copyable_values():
    ex = exact_guessing_statistics(cfg(N=1, J=1, delta=0.1), MM)
    # success iff the single round wins: probability 1/2
    assert ex.p_ss == pytest.approx(0.5)
    assert ex.p_sss == pytest.approx(0.5) and ex.p_vvs == pytest.approx(0.5)


# --- exact final state ----------------------------------------------------


def classical_v_distance(fs):
    total = 0.0
    for blocks in fs.groups.values():
        probs = np.zeros(fs.num_v)
        for (v, z), m in blocks.items():
            if z == SUCC:
                probs[v] += np.trace(m).real
        total += np.abs(probs - probs.sum() / fs.num_v).sum()
    return total


def test_exact_pure_state_reduces_to_classical():
    fs = exact_final_state(cfg(N=1, J=1), TS)
    ref = None
    for blocks in fs.groups.values():
        for m in blocks.values():
            tr = np.trace(m).real
            if tr > 1e-12:
                assert np.linalg.matrix_rank(m, tol=1e-10) == 1
                ref = m / tr if ref is None else ref
                assert np.allclose(m / tr, ref, atol=1e-10)
    assert fs.pgp_bound().lhs == pytest.approx(classical_v_distance(fs), abs=1e-10)


def test_exact_state_is_valid():
    fs = exact_final_state(cfg(N=1, J=1), TS)
    alpha = fs.to_cqstate()
    assert np.trace(alpha.quantum_marginal()).real == pytest.approx(1)
    dense = fs.pgp_bound()
    from mirrorrng.linalg import pgp_bound_check

    ref = pgp_bound_check(alpha, c_values=list(range(fs.num_v)))
    assert dense.lhs == pytest.approx(ref.lhs, abs=1e-9)
    assert dense.rhs == pytest.approx(ref.rhs, abs=1e-6)


def test_exact_success_probability_matches_rounds():
    fs = exact_final_state(cfg(N=1, J=1), TS)
    # one round succeeds iff it wins
    assert fs.success_probability() == pytest.approx((1 + TSIRELSON_VALUE) * 3 / 4)


def test_exact_copyable_adversary_knows_v():
    fs = exact_final_state(cfg(N=2, J=1), MM)
    r = fs.pgp_bound()
    p = fs.success_probability()
    assert r.f_prime == pytest.approx(p, abs=1e-10)
    assert r.lhs == pytest.approx(p, abs=1e-10)  # 2 P(succ) (1 - 1/|V|)
    assert r.lhs <= r.rhs + 1e-9


@pytest.mark.parametrize("N,J", [(1, 1), (2, 1), (2, 2)])
@pytest.mark.parametrize("dev", [TS, CB, MM], ids=["tsirelson", "classical", "copyable"])
def test_exact_pgp_inequality(N, J, dev):
    r = exact_final_state(cfg(N=N, J=J), dev).pgp_bound()
    assert r.lhs <= r.rhs + 1e-9


def test_exact_budget():
    with pytest.raises(ValueError):
        exact_final_state(cfg(N=6, J=1), TS)
    with pytest.raises(ValueError):
        exact_final_state(cfg(N=2, J=2), TS).to_cqstate()


# --- martingale tail ------------------------------------------------------


def history_controller(i, history):
    # switch to the classical device after any round Alice lost
    if not history:
        return 0
    x, y, s, t = history[-1]
    return 0 if (s ^ t) == (x & y) else 1


SCRIPTED = DeviceModel.scripted([tsirelson_strategy(), classical_best_strategy()], history_controller)


def test_scripted_device_uses_history():
    c = cfg(N=200, J=1)
    tr = run_protocol(c, SCRIPTED, 0)
    means = conditional_means(CHSH, SCRIPTED)
    assert means[0] == pytest.approx(TSIRELSON_VALUE) and means[1] == pytest.approx(0)
    assert tr.to_json() == run_protocol(c, SCRIPTED, 0).to_json()


@pytest.mark.parametrize("delta", [0.1, 0.2])
def test_azuma_tail_small(delta):
    res = empirical_tail(CHSH, SCRIPTED, TSIRELSON_VALUE, delta, 1000, 200, seed=1)
    assert res.holds
    assert res.bound == pytest.approx(np.exp(-1000 * delta**2 / 8))


def test_azuma_tail_nontrivial_regime():
    # a small margin where the tail is visibly nonzero
    res = empirical_tail(CHSH, TS, TSIRELSON_VALUE, 0.02, 200, 2000, seed=2)
    assert res.tail.estimate > 0
    assert res.holds
