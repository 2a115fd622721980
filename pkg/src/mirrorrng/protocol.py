"""The randomness protocol, its mirrored counterpart, and exact small-N states.

Random streams: trial ``i`` of a run seeded with ``seed`` draws from
``Philox(SeedSequence([seed, i]))``, so trials are reproducible in any order.
"""

from __future__ import annotations

import bisect
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from . import constants as tol
from .extract import AffineHashFamily, apply_hash, build_hash_family, collision_counts, encode_outputs
from .games import BellGame, QuantumStrategy, outcome_distribution
from .linalg import (
    ABORT,
    SUCC,
    CqState,
    PgpBound,
    _pgp_terms,
    canonical_purification,
    combine_pgp_terms,
    partial_trace,
)

History = Sequence[tuple[int, int, int, int]]
Controller = Callable[[int, History], int]


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


@dataclass(frozen=True, eq=False)
class ProtocolConfig:
    game: BellGame
    delta: float
    N: int
    J: int
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta!r}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.J < 1:
            raise ValueError("J must be >= 1")
        if (1 << self.J) > self.game.n**self.N:
            raise ValueError(f"J={self.J} exceeds the raw output length N*log2(n)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @cached_property
    def hash_family(self) -> AffineHashFamily:
        return build_hash_family(self.game.n**self.N, self.J)

    def to_json(self) -> dict:
        return {"game": self.game.to_json(), "delta": self.delta, "N": self.N, "J": self.J, "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "ProtocolConfig":
        return cls(BellGame.from_json(obj["game"]), float(obj["delta"]), int(obj["N"]), int(obj["J"]), int(obj.get("seed", 0)))


def round_distribution(strategy: QuantumStrategy) -> np.ndarray:
    """``p[x, y, s, t]`` for one round."""
    n_x, n_y = len(strategy.measurements[0]), len(strategy.measurements[1])
    return np.stack(
        [
            np.stack([outcome_distribution(strategy.state.matrix, strategy.dims, strategy.elements((x, y))) for y in range(n_y)])
            for x in range(n_x)
        ]
    )


def mirror_distribution(strategy: QuantumStrategy) -> np.ndarray:
    """``q[x, y, s, t, s', t']``: devices on AB, conjugated copies on the purifying A'B'."""
    d_a, d_b = strategy.dims
    psi = canonical_purification(strategy.state)
    rho = np.outer(psi.vector, psi.vector.conj())
    dims = (d_a, d_b, d_a, d_b)
    alice, bob = strategy.measurements
    out = []
    for x in range(len(alice)):
        row = []
        for y in range(len(bob)):
            els = [alice[x].elements, bob[y].elements, np.conj(alice[x].elements), np.conj(bob[y].elements)]
            row.append(outcome_distribution(rho, dims, els))
        out.append(np.stack(row))
    return np.clip(np.stack(out), 0.0, None)


def _cdf_rows(p: np.ndarray, lead: int) -> np.ndarray:
    flat = p.reshape(lead, -1)
    flat = flat / flat.sum(axis=1, keepdims=True)
    cdf = np.cumsum(flat, axis=1)
    cdf[:, -1] = 1.0
    return cdf


@dataclass(frozen=True, eq=False)
class DeviceModel:
    """Round strategies plus, for scripted memory, a controller choosing one per round.

    The controller sees the round index and the history ``(x, y, s, t)`` of all
    earlier rounds, and returns an index into ``strategies``.
    """

    strategies: tuple[QuantumStrategy, ...]
    controller: Controller | None = None

    def __post_init__(self):
        strats = tuple(self.strategies)
        if not strats:
            raise ValueError("need at least one round strategy")
        if self.controller is None and len(strats) != 1:
            raise ValueError("iid devices use exactly one round strategy")
        object.__setattr__(self, "strategies", strats)

    @classmethod
    def iid(cls, strategy: QuantumStrategy) -> "DeviceModel":
        return cls((strategy,))

    @classmethod
    def scripted(cls, strategies: Sequence[QuantumStrategy], controller: Controller) -> "DeviceModel":
        return cls(tuple(strategies), controller)

    @property
    def kind(self) -> str:
        return "iid" if self.controller is None else "scripted-memory"

    @cached_property
    def distributions(self) -> tuple[np.ndarray, ...]:
        out = tuple(round_distribution(s) for s in self.strategies)
        for d in out:
            d.setflags(write=False)
        return out

    @cached_property
    def _cdfs(self) -> tuple[np.ndarray, ...]:
        return tuple(_cdf_rows(d, d.shape[0] * d.shape[1]) for d in self.distributions)

    @cached_property
    def mirror(self) -> np.ndarray:
        if self.kind != "iid":
            raise ValueError("the mirrored protocol needs iid devices")
        q = mirror_distribution(self.strategies[0])
        q.setflags(write=False)
        return q

    @cached_property
    def _mirror_cdf(self) -> np.ndarray:
        q = self.mirror
        return _cdf_rows(q, q.shape[0] * q.shape[1])


@dataclass
class Transcript:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    t: np.ndarray
    W: np.ndarray
    avg_score: float
    succ: bool
    F_index: tuple[int, int] | None = None
    V: int | None = None
    trial: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "trial": self.trial,
                "x": self.x.tolist(),
                "y": self.y.tolist(),
                "s": self.s.tolist(),
                "t": self.t.tolist(),
                "avg_score": self.avg_score,
                "succ": self.succ,
                "F_index": None if self.F_index is None else [hex(self.F_index[0]), hex(self.F_index[1])],
                "V": None if self.V is None else hex(self.V),
                "outcome": "succ" if self.succ else "abort",
            }
        )


@dataclass
class MirrorTranscript:
    referee: Transcript
    s2: np.ndarray
    t2: np.ndarray
    succ2: bool
    V2: int | None = None


def _sample_rows(cdf: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    c = cdf[rows]
    idx = (c <= u[:, None]).sum(axis=1)
    return np.minimum(idx, cdf.shape[1] - 1)


def _scores(game: BellGame, x, y, s, t) -> np.ndarray:
    return game.scores[x, y, s, t]


def _sample_rounds(cfg: ProtocolConfig, dev: DeviceModel, rng: np.random.Generator):
    n = cfg.game.n
    x = rng.integers(0, n, cfg.N)
    y = rng.integers(0, n, cfg.N)
    u = rng.random(cfg.N)
    if dev.kind == "iid":
        idx = _sample_rows(dev._cdfs[0], x * n + y, u)
    else:
        idx = np.empty(cfg.N, dtype=np.int64)
        cdfs = [c.tolist() for c in dev._cdfs]
        history: list[tuple[int, int, int, int]] = []
        xs, ys, us = x.tolist(), y.tolist(), u.tolist()
        for i in range(cfg.N):
            row = cdfs[dev.controller(i, history)][xs[i] * n + ys[i]]
            k = min(bisect.bisect_right(row, us[i]), n * n - 1)
            idx[i] = k
            history.append((xs[i], ys[i], k // n, k % n))
    return x, y, idx // n, idx % n


def run_protocol(cfg: ProtocolConfig, dev: DeviceModel, trial: int = 0) -> Transcript:
    """One run of the protocol: N rounds, threshold test, hash on success."""
    rng = trial_rng(cfg.seed, trial)
    x, y, s, t = _sample_rounds(cfg, dev, rng)
    W = _scores(cfg.game, x, y, s, t)
    avg = float(W.mean())
    tr = Transcript(x, y, s, t, W, avg, avg > cfg.delta, trial=trial)
    if tr.succ:
        fam = cfg.hash_family
        tr.F_index = fam.sample_index(rng)
        tr.V = apply_hash(fam, tr.F_index, encode_outputs(s, cfg.game.n))
    return tr


def run_mirrored_protocol(cfg: ProtocolConfig, dev: DeviceModel, trial: int = 0) -> MirrorTranscript:
    """Devices and the conjugate-measuring adversary on the canonical purification."""
    if dev.kind != "iid":
        raise ValueError("the mirrored protocol needs iid devices")
    n = cfg.game.n
    rng = trial_rng(cfg.seed, trial)
    x = rng.integers(0, n, cfg.N)
    y = rng.integers(0, n, cfg.N)
    u = rng.random(cfg.N)
    idx = _sample_rows(dev._mirror_cdf, x * n + y, u)
    s, t, s2, t2 = idx // n**3, idx // n**2 % n, idx // n % n, idx % n
    W = _scores(cfg.game, x, y, s, t)
    W2 = _scores(cfg.game, x, y, s2, t2)
    avg, avg2 = float(W.mean()), float(W2.mean())
    fam = cfg.hash_family
    F = fam.sample_index(rng)
    ref = Transcript(x, y, s, t, W, avg, avg > cfg.delta, F_index=F, trial=trial)
    out = MirrorTranscript(ref, s2, t2, avg2 > cfg.delta)
    if ref.succ:
        ref.V = apply_hash(fam, F, encode_outputs(s, n))
    if out.succ2:
        out.V2 = apply_hash(fam, F, encode_outputs(s2, n))
    return out


def run_trials(fn: Callable[[int], object], trials: int, threads: int = 1) -> list:
    if threads <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


# ---------------------------------------------------------------------------
# statistics


class Estimate(NamedTuple):
    estimate: float
    ci_lo: float
    ci_hi: float
    trials: int
    count: int

    @property
    def sigma(self) -> float:
        p = self.estimate
        return float(np.sqrt(p * (1 - p) / self.trials)) if self.trials else 0.0


def wilson(count: int, trials: int, confidence: float = 0.95) -> Estimate:
    if trials == 0:
        return Estimate(float("nan"), 0.0, 1.0, 0, 0)
    ci = stats.binomtest(count, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return Estimate(count / trials, float(ci.low), float(ci.high), trials, count)


class GuessingStats(NamedTuple):
    p_sss: Estimate
    p_vvs: Estimate
    p_ss: Estimate
    J: int

    @property
    def decomposition_holds(self) -> bool:
        """P(V=V' & succ & succ') <= P(S=S' & succ & succ') + 2^-J P(succ & succ') + 3 sigma."""
        rhs = self.p_sss.estimate + 2.0 ** (-self.J) * self.p_ss.estimate
        return self.p_vvs.estimate <= rhs + 3 * self.p_vvs.sigma + tol.INEQUALITY_SLACK


def guessing_statistics(cfg: ProtocolConfig, dev: DeviceModel, trials: int, threads: int = 1) -> GuessingStats:
    """Monte-Carlo frequencies of the three guessing events in the mirrored protocol."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    res = run_trials(lambda i: run_mirrored_protocol(cfg, dev, i), trials, threads)
    sss = vvs = ss = 0
    for m in res:
        both = m.referee.succ and m.succ2
        if not both:
            continue
        ss += 1
        if np.array_equal(m.referee.s, m.s2):
            sss += 1
        if m.referee.V == m.V2:
            vvs += 1
    return GuessingStats(wilson(sss, trials), wilson(vvs, trials), wilson(ss, trials), cfg.J)


class ExactGuessing(NamedTuple):
    p_sss: float
    p_vvs: float
    p_ss: float


def exact_guessing_statistics(cfg: ProtocolConfig, dev: DeviceModel) -> ExactGuessing:
    """The three event probabilities by enumeration (tiny N only)."""
    n, N = cfg.game.n, cfg.N
    if n ** (6 * N) > tol.EXACT_BRANCH_BUDGET:
        raise ValueError("exact enumeration budget exceeded")
    q = dev.mirror / (n * n)  # joint with uniform inputs
    fam = cfg.hash_family
    coll = collision_counts(fam, n**N) / fam.size
    total_sss = total_vvs = total_ss = 0.0
    L = cfg.game.scores
    per_round = [(x, y, s, t, s2, t2) for x, y, s, t, s2, t2 in itertools.product(range(n), repeat=6)]
    for seq in itertools.product(per_round, repeat=N):
        p = 1.0
        w = w2 = 0.0
        for x, y, s, t, s2, t2 in seq:
            p *= q[x, y, s, t, s2, t2]
            w += L[x, y, s, t]
            w2 += L[x, y, s2, t2]
        if p == 0 or not (w / N > cfg.delta and w2 / N > cfg.delta):
            continue
        sv = [r[2] for r in seq]
        sv2 = [r[4] for r in seq]
        total_ss += p
        if sv == sv2:
            total_sss += p
            total_vvs += p
        else:
            total_vvs += p * coll[encode_outputs(sv, n), encode_outputs(sv2, n)]
    return ExactGuessing(total_sss, total_vvs, total_ss)


def marginal_chi_square(cfg: ProtocolConfig, dev: DeviceModel, trials: int) -> float:
    """p-value of a chi-square test that referee-side (x, y, s, t) counts agree
    between the plain and mirrored protocols."""
    n = cfg.game.n
    bins = n**4
    a = np.zeros(bins, dtype=np.int64)
    b = np.zeros(bins, dtype=np.int64)
    for i in range(trials):
        tr = run_protocol(cfg, dev, i)
        a += np.bincount(((tr.x * n + tr.y) * n + tr.s) * n + tr.t, minlength=bins)
        m = run_mirrored_protocol(cfg, dev, trials + i)
        r = m.referee
        b += np.bincount(((r.x * n + r.y) * n + r.s) * n + r.t, minlength=bins)
    keep = (a + b) > 0
    return float(stats.chi2_contingency(np.stack([a[keep], b[keep]]))[1])


# ---------------------------------------------------------------------------
# martingale tail


class TailResult(NamedTuple):
    tail: Estimate
    bound: float
    threshold: float

    @property
    def holds(self) -> bool:
        return self.tail.estimate <= self.bound + 3 * self.tail.sigma


def empirical_tail(
    game: BellGame, dev: DeviceModel, omega_hat: float, delta: float, N: int, trials: int, seed: int = 0, K: float = 1.0
) -> TailResult:
    """Frequency of total score exceeding (omega_hat + delta) N, against exp(-N delta^2 / 8K^2)."""
    from .bounds import azuma_tail_bound

    cfg = ProtocolConfig(game, 1.0, N, 1, seed)
    threshold = (omega_hat + delta) * N
    hits = 0
    for i in range(trials):
        tr = run_protocol_rounds(cfg, dev, i)
        if tr.W.sum() > threshold:
            hits += 1
    return TailResult(wilson(hits, trials), azuma_tail_bound(N, delta, K), threshold)


def run_protocol_rounds(cfg: ProtocolConfig, dev: DeviceModel, trial: int = 0) -> Transcript:
    """Rounds and scores only (no threshold test or hashing)."""
    x, y, s, t = _sample_rounds(cfg, dev, trial_rng(cfg.seed, trial))
    W = _scores(cfg.game, x, y, s, t)
    return Transcript(x, y, s, t, W, float(W.mean()), False, trial=trial)


def conditional_means(game: BellGame, dev: DeviceModel) -> np.ndarray:
    """Expected round score of each strategy a controller may select."""
    n = game.n
    return np.array([float(np.sum(d * game.scores)) / n**2 for d in dev.distributions])


# ---------------------------------------------------------------------------
# exact final state (tiny N)


@dataclass
class ExactFinalState:
    """Post-protocol state, block-diagonal in the classical registers.

    ``groups[(x_seq, y_seq, F)][(v, z)]`` is the subnormalized state of the
    adversary's register E (the purifying copies of every round).
    """

    groups: dict
    num_v: int
    e_dim: int
    J: int

    def pgp_bound(self) -> PgpBound:
        lhs = f = fp = 0.0
        c_values = list(range(self.num_v))
        for blocks in self.groups.values():
            labels = list(blocks)
            arr = np.stack([blocks[k] for k in labels])
            a, b, c = _pgp_terms(arr, [k[0] for k in labels], [k[1] == SUCC for k in labels], c_values)
            lhs += a
            f += b
            fp += c
        return combine_pgp_terms(lhs, f, fp, self.num_v)

    def success_probability(self) -> float:
        return float(sum(np.trace(m).real for blocks in self.groups.values() for (v, z), m in blocks.items() if z == SUCC))

    def to_cqstate(self) -> CqState:
        """Dense cq-state: C = V and Z classical; Q = (X, Y, F) classical (x) E."""
        keys = sorted(self.groups)
        g = len(keys)
        d = self.e_dim
        labels = [(v, z) for v in range(self.num_v) for z in (SUCC, ABORT)]
        if len(labels) * (g * d) ** 2 > tol.EXACT_ENTRY_BUDGET:
            raise ValueError("dense cq-state would exceed the memory budget; use pgp_bound()")
        blocks = np.zeros((len(labels), g * d, g * d), dtype=np.complex128)
        for gi, key in enumerate(keys):
            for (v, z), m in self.groups[key].items():
                li = labels.index((v, z))
                blocks[li, gi * d : (gi + 1) * d, gi * d : (gi + 1) * d] += m
        return CqState(tuple(labels), blocks)


def round_e_states(strategy: QuantumStrategy) -> np.ndarray:
    """``E[x, y, s, t]``: the purifying register's subnormalized state after one round."""
    d_a, d_b = strategy.dims
    psi = canonical_purification(strategy.state)
    rho = np.outer(psi.vector, psi.vector.conj())
    dims = (d_a, d_b, d_a, d_b)
    alice, bob = strategy.measurements
    n = len(alice)
    m = len(alice[0])
    de = d_a * d_b
    out = np.zeros((n, n, m, m, de, de), dtype=np.complex128)
    eye = np.eye(de)
    for x in range(n):
        for y in range(n):
            for s in range(m):
                for t in range(m):
                    op = np.kron(np.kron(alice[x].elements[s], bob[y].elements[t]), eye)
                    e = partial_trace(op @ rho, dims, [2, 3])
                    out[x, y, s, t] = (e + e.conj().T) / 2
    return out


def exact_final_state(cfg: ProtocolConfig, dev: DeviceModel) -> ExactFinalState:
    """Exact final cq-state of V, X, Y, F, succ and the adversary's register."""
    if dev.kind != "iid":
        raise ValueError("exact computation needs iid devices")
    n, N = cfg.game.n, cfg.N
    fam = cfg.hash_family
    strat = dev.strategies[0]
    d_e = strat.dims[0] * strat.dims[1]
    e_dim = d_e**N
    branches = (n**4) ** N * fam.size
    if branches > tol.EXACT_BRANCH_BUDGET:
        raise ValueError(f"{branches} branches exceed the exact-computation budget")
    if n ** (2 * N) * fam.size * 2 * (1 << cfg.J) * e_dim**2 > tol.EXACT_ENTRY_BUDGET:
        raise ValueError("exact final state would exceed the memory budget")
    E = round_e_states(strat)
    weight = 1.0 / (n ** (2 * N) * fam.size)
    L = cfg.game.scores
    indices = list(fam.indices())
    groups: dict = {}
    for xs in itertools.product(range(n), repeat=N):
        for ys in itertools.product(range(n), repeat=N):
            # per (s, t) sequence: E-state and success flag
            per_outcome = []
            for st in itertools.product(itertools.product(range(n), repeat=2), repeat=N):
                state = np.ones((1, 1), dtype=np.complex128)
                w = 0.0
                for i, (s, t) in enumerate(st):
                    state = np.kron(state, E[xs[i], ys[i], s, t])
                    w += L[xs[i], ys[i], s, t]
                z = SUCC if w / N > cfg.delta else ABORT
                p = encode_outputs([s for s, _ in st], n)
                per_outcome.append((p, z, state))
            for F in indices:
                blocks: dict = {}
                for p, z, state in per_outcome:
                    key = (apply_hash(fam, F, p), z)
                    if key in blocks:
                        blocks[key] = blocks[key] + state * weight
                    else:
                        blocks[key] = state * weight
                groups[(xs, ys, F)] = blocks
    return ExactFinalState(groups, 1 << cfg.J, e_dim, cfg.J)
