"""Bell games, guessing games G_K, strategies and their values."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, NamedTuple, Sequence

import numpy as np

from . import constants as tol
from .linalg import (
    DensityOperator,
    Povm,
    hermitian_eig,
    partial_trace,
    random_projective_povm,
    trace_norm,
)

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _to_fraction(x: Any) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True, eq=False)
class BellGame:
    """Two-player game on alphabet {0..n-1}, uniform inputs, scores in [-1, 1],
    classical value exactly 0. ``scores[x, y, s, t]``."""

    n: int
    scores: np.ndarray
    exact: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = int(self.n)
        table = np.array(self.scores, dtype=float)
        if table.shape != (n,) * 4:
            raise ValueError(f"score table must have shape {(n,) * 4}, got {table.shape}")
        if np.any(np.abs(table) > 1 + 1e-12):
            raise ValueError("scores must lie in [-1, 1]")
        table.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "scores", table)
        cv = classical_value(self)
        if abs(cv) > 1e-12:
            raise ValueError(f"classical value is {float(cv)!r}, not 0")

    @classmethod
    def from_table(cls, n: int, table: Any) -> "BellGame":
        """Build from a nested [x][y][s][t] table of numbers or "p/q" strings."""
        fr = np.empty((n,) * 4, dtype=object)
        arr = np.array(table, dtype=object)
        if arr.shape != (n,) * 4:
            raise ValueError(f"score table must have shape {(n,) * 4}, got {arr.shape}")
        for idx in itertools.product(range(n), repeat=4):
            fr[idx] = _to_fraction(arr[idx])
        return cls(n, fr.astype(float), exact=_nest(fr))

    def __eq__(self, other):
        if not isinstance(other, BellGame):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.scores, other.scores)

    def __hash__(self):
        return hash((self.n, self.scores.tobytes()))

    def score(self, x: int, y: int, s: int, t: int) -> float:
        return float(self.scores[x, y, s, t])

    def exact_table(self) -> np.ndarray:
        if self.exact is not None:
            return np.array(self.exact, dtype=object)
        out = np.empty(self.scores.shape, dtype=object)
        for idx in np.ndindex(*self.scores.shape):
            out[idx] = Fraction(float(self.scores[idx]))
        return out

    def to_json(self) -> dict:
        if self.exact is not None:
            tab = np.vectorize(str, otypes=[object])(np.array(self.exact, dtype=object)).tolist()
        else:
            tab = self.scores.tolist()
        return {"n": self.n, "scores": tab}

    @classmethod
    def from_json(cls, obj: dict | str) -> "BellGame":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls.from_table(int(obj["n"]), obj["scores"])


def _nest(arr: np.ndarray) -> tuple:
    if arr.ndim == 1:
        return tuple(arr.tolist())
    return tuple(_nest(a) for a in arr)


@dataclass(frozen=True)
class GuessingGame:
    """Three-player game: Eve gets (x, y) and must repeat Alice's output or score -K.

    Eve's input (x, y) is encoded as the integer ``x * n + y``.
    """

    base: BellGame
    K: float

    def __post_init__(self):
        if not self.K >= 1:
            raise ValueError(f"penalty K must be >= 1, got {self.K!r}")

    @property
    def n(self) -> int:
        return self.base.n

    def score(self, x: int, y: int, e: Any, s: int, t: int, s2: int) -> float:
        """Score of inputs (x, y, e) and outputs (s, t, s2); e may be a pair or its code."""
        if isinstance(e, tuple):
            e = e[0] * self.n + e[1]
        if e != x * self.n + y:
            raise ValueError("input triple has probability zero")
        return self.base.score(x, y, s, t) if s == s2 else -float(self.K)

    def input_probability(self, x: int, y: int, e: Any) -> float:
        if isinstance(e, tuple):
            e = e[0] * self.n + e[1]
        return 1.0 / self.n**2 if e == x * self.n + y else 0.0

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "K": self.K}

    @classmethod
    def from_json(cls, obj: dict | str) -> "GuessingGame":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(BellGame.from_json(obj["base"]), float(obj["K"]))


def make_chsh_bell_game() -> BellGame:
    """CHSH rescaled so that the classical optimum is 0: win 1/3, lose -1."""
    table = np.empty((2,) * 4, dtype=object)
    for x, y, s, t in itertools.product(range(2), repeat=4):
        table[x, y, s, t] = Fraction(1, 3) if (s ^ t) == (x & y) else Fraction(-1)
    return BellGame.from_table(2, table)


def make_guessing_game(g: BellGame, K: float) -> GuessingGame:
    return GuessingGame(g, K)


def load_game(obj: dict | str) -> BellGame | GuessingGame:
    if isinstance(obj, str):
        obj = json.loads(obj)
    return GuessingGame.from_json(obj) if "base" in obj else BellGame.from_json(obj)


# ---------------------------------------------------------------------------
# generic view: list of (inputs, probability, score tensor over outputs)


class _Term(NamedTuple):
    inputs: tuple
    prob: float
    scores: np.ndarray


def _layout(g: BellGame | GuessingGame) -> tuple[list[int], list[int], list[_Term]]:
    n = g.n
    if isinstance(g, BellGame):
        terms = [_Term((x, y), 1.0 / n**2, g.scores[x, y]) for x in range(n) for y in range(n)]
        return [n, n], [n, n], terms
    terms = []
    for x in range(n):
        for y in range(n):
            tab = np.full((n, n, n), -float(g.K))
            for s in range(n):
                tab[s, :, s] = g.base.scores[x, y, s, :]
            terms.append(_Term((x, y, x * n + y), 1.0 / n**2, tab))
    return [n, n, n * n], [n, n, n], terms


# ---------------------------------------------------------------------------
# classical value


def classical_value(g: BellGame | GuessingGame) -> Fraction:
    """Exact maximum over deterministic strategies (uniform inputs).

    Alice's strategies are enumerated; Bob (and Eve) play exact best responses,
    which separate across their inputs.
    """
    n = g.n
    if n**n > tol.CLASSICAL_ENUM_BUDGET:
        raise ValueError(f"{n}^{n} deterministic strategies exceed the enumeration budget")
    base = g if isinstance(g, BellGame) else g.base
    L = base.exact_table()
    K = None if isinstance(g, BellGame) else Fraction(g.K)
    best = None
    for a in itertools.product(range(n), repeat=n):
        total = Fraction(0)
        for y in range(n):
            best_t = None
            for t in range(n):
                acc = Fraction(0)
                for x in range(n):
                    val = L[x, y, a[x], t]
                    if K is not None:
                        # Eve repeats a[x] (score L) or misses (-K)
                        val = max(val, -K)
                    acc += val
                best_t = acc if best_t is None or acc > best_t else best_t
            total += best_t
        total /= n * n
        best = total if best is None or total > best else best
    return best


@dataclass(frozen=True)
class DeterministicStrategy:
    """One lookup table per player: ``tables[k][input] = output``."""

    tables: tuple[tuple[int, ...], ...]

    def as_quantum(self, outputs: Sequence[int]) -> "QuantumStrategy":
        """Embed as commuting (one-dimensional) projectors."""
        meas = []
        for tab, m in zip(self.tables, outputs):
            fam = []
            for out in tab:
                els = np.zeros((m, 1, 1))
                els[out, 0, 0] = 1.0
                fam.append(Povm(tuple(range(m)), els))
            meas.append(tuple(fam))
        k = len(self.tables)
        return QuantumStrategy(DensityOperator(np.ones((1, 1))), (1,) * k, tuple(meas))


def deterministic_value(g: BellGame | GuessingGame, strat: DeterministicStrategy) -> Fraction:
    _, _, terms = _layout(g)
    base = g if isinstance(g, BellGame) else g.base
    L = base.exact_table()
    total = Fraction(0)
    n = g.n
    for term in terms:
        outs = tuple(strat.tables[k][i] for k, i in enumerate(term.inputs))
        x, y = term.inputs[0], term.inputs[1]
        if isinstance(g, BellGame):
            val = L[x, y, outs[0], outs[1]]
        else:
            val = L[x, y, outs[0], outs[1]] if outs[0] == outs[2] else -Fraction(g.K)
        total += val
    return total / (n * n)


# ---------------------------------------------------------------------------
# quantum strategies


@dataclass(frozen=True)
class QuantumStrategy:
    """Shared state on (x)_k Q_k and, per player, one POVM per input."""

    state: DensityOperator
    dims: tuple[int, ...]
    measurements: tuple[tuple[Povm, ...], ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != self.state.dim:
            raise ValueError(f"factor dims {dims} do not match state dimension {self.state.dim}")
        if len(self.measurements) != len(dims):
            raise ValueError("need one measurement family per player")
        meas = tuple(tuple(fam) for fam in self.measurements)
        for k, fam in enumerate(meas):
            if not fam:
                raise ValueError(f"player {k} has no measurements")
            for m in fam:
                if m.dim != dims[k]:
                    raise ValueError(f"player {k} measurement has dimension {m.dim}, expected {dims[k]}")
                if len(m) != len(fam[0]):
                    raise ValueError(f"player {k} measurements disagree on outcome count")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "measurements", meas)

    @property
    def players(self) -> int:
        return len(self.dims)

    def elements(self, inputs: Sequence[int]) -> list[np.ndarray]:
        return [self.measurements[k][i].elements for k, i in enumerate(inputs)]


def outcome_distribution(rho: np.ndarray, dims: Sequence[int], elements: Sequence[np.ndarray]) -> np.ndarray:
    """Born-rule probabilities ``p[o_1, ..., o_r]`` for product measurements."""
    r = len(dims)
    t = np.asarray(rho).reshape(tuple(dims) * 2)
    outs = _LETTERS[:r]
    rows = _LETTERS[r : 2 * r]
    cols = _LETTERS[2 * r : 3 * r]
    subs = [outs[k] + cols[k] + rows[k] for k in range(r)]
    expr = ",".join(subs) + "," + rows + cols + "->" + outs
    p = np.einsum(expr, *elements, t, optimize=True).real
    return p


def _check_shapes(g: BellGame | GuessingGame, s: QuantumStrategy) -> tuple[list[int], list[int], list[_Term]]:
    ins, outs, terms = _layout(g)
    if s.players != len(ins):
        raise ValueError(f"game has {len(ins)} players, strategy has {s.players}")
    for k in range(s.players):
        if len(s.measurements[k]) != ins[k]:
            raise ValueError(f"player {k} needs {ins[k]} measurements, has {len(s.measurements[k])}")
        if len(s.measurements[k][0]) != outs[k]:
            raise ValueError(f"player {k} needs {outs[k]} outcomes, has {len(s.measurements[k][0])}")
    return ins, outs, terms


def expected_score(g: BellGame | GuessingGame, s: QuantumStrategy) -> float:
    """Expected score under uniform inputs and Born-rule outcomes."""
    _, _, terms = _check_shapes(g, s)
    total = 0.0
    for term in terms:
        p = outcome_distribution(s.state.matrix, s.dims, s.elements(term.inputs))
        total += term.prob * float(np.sum(p * term.scores))
    return total


# ---------------------------------------------------------------------------
# seesaw


def _effective_operators(
    rho: np.ndarray, dims: Sequence[int], elements: Sequence[np.ndarray], scores: np.ndarray, k: int
) -> np.ndarray:
    """``T[o_k]`` with Tr(M_k[o_k] T[o_k]) = sum of score * probability over the others."""
    r = len(dims)
    t = rho.reshape(tuple(dims) * 2)
    outs = _LETTERS[:r]
    rows = _LETTERS[r : 2 * r]
    cols = _LETTERS[2 * r : 3 * r]
    ops, subs = [], []
    for j in range(r):
        if j != k:
            ops.append(elements[j])
            subs.append(outs[j] + cols[j] + rows[j])
    expr = outs + "," + ",".join(subs) + ("," if subs else "") + rows + cols + "->" + outs[k] + rows[k] + cols[k]
    return np.einsum(expr, scores, *ops, t, optimize=True)


def _bell_operator(dims: Sequence[int], strat_meas, terms: list[_Term]) -> np.ndarray:
    r = len(dims)
    D = int(np.prod(dims))
    B = np.zeros((D, D), dtype=np.complex128)
    outs = _LETTERS[:r]
    rows = _LETTERS[r : 2 * r]
    cols = _LETTERS[2 * r : 3 * r]
    expr = outs + "," + ",".join(outs[k] + rows[k] + cols[k] for k in range(r)) + "->" + rows + cols
    for term in terms:
        els = [strat_meas[k][i] for k, i in enumerate(term.inputs)]
        B += term.prob * np.einsum(expr, term.scores, *els, optimize=True).reshape(D, D)
    return (B + B.conj().T) / 2


def _pair_update(elements: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Re-split each pair M_a + M_b optimally against the linear functional T."""
    els = elements.copy()
    m = els.shape[0]
    for a in range(m):
        for b in range(a + 1, m):
            S = els[a] + els[b]
            w, v = hermitian_eig(S)
            root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
            H = root @ (T[a] - T[b]) @ root
            hw, hv = hermitian_eig(H)
            pos = hv[:, hw > 0]
            proj = pos @ pos.conj().T
            Ma = root @ proj @ root
            Ma = (Ma + Ma.conj().T) / 2
            els[a] = Ma
            els[b] = S - Ma
    return els


class SeesawResult(NamedTuple):
    value: float
    strategy: QuantumStrategy
    history: list[float]


def _random_start(ins, outs, dims, rng) -> list[list[np.ndarray]]:
    meas = []
    for k in range(len(dims)):
        meas.append([random_projective_povm(dims[k], outs[k], rng).elements.copy() for _ in range(ins[k])])
    return meas


def seesaw(
    g: BellGame | GuessingGame,
    dims: Sequence[int],
    iters: int = 50,
    seed: int = 0,
    restarts: int = 8,
    stall_tol: float = 1e-13,
) -> SeesawResult:
    """Alternating maximization of the expected score.

    One sweep: replace the shared state by the top eigenvector of the Bell
    operator, then for each player and input re-optimize that POVM against
    the linear functional induced by everything else, one pair of outcomes at
    a time. Every step maximizes over its own block (exactly so for two
    outcomes), so sweep values never decrease.
    """
    ins, outs, terms = _layout(g)
    dims = [int(d) for d in dims]
    if len(dims) != len(ins):
        raise ValueError(f"need {len(ins)} dimensions, got {len(dims)}")
    if any(d < 1 for d in dims) or iters < 1:
        raise ValueError("dims must be positive and iters >= 1")
    by_input: list[dict[int, list[_Term]]] = []
    for k in range(len(dims)):
        groups: dict[int, list[_Term]] = {}
        for term in terms:
            groups.setdefault(term.inputs[k], []).append(term)
        by_input.append(groups)

    best: SeesawResult | None = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        meas = _random_start(ins, outs, dims, rng)
        rho = None
        history: list[float] = []
        for _ in range(iters):
            B = _bell_operator(dims, meas, terms)
            w, v = np.linalg.eigh(B)
            psi = v[:, -1]
            rho = np.outer(psi, psi.conj())
            for k in range(len(dims)):
                for i, group in by_input[k].items():
                    T = sum(
                        term.prob * _effective_operators(rho, dims, [meas[j][term.inputs[j]] for j in range(len(dims))], term.scores, k)
                        for term in group
                    )
                    T = (T + np.conj(np.transpose(T, (0, 2, 1)))) / 2
                    meas[k][i] = _pair_update(meas[k][i], T)
            value = _value(rho, dims, meas, terms)
            history.append(value)
            if len(history) > 1 and history[-1] - history[-2] < stall_tol:
                break
        strat = QuantumStrategy(
            DensityOperator(rho),
            tuple(dims),
            tuple(tuple(Povm(tuple(range(outs[k])), m) for m in meas[k]) for k in range(len(dims))),
        )
        res = SeesawResult(history[-1], strat, history)
        if best is None or res.value > best.value:
            best = res
    return best


def _value(rho, dims, meas, terms) -> float:
    total = 0.0
    for term in terms:
        p = outcome_distribution(rho, dims, [meas[k][i] for k, i in enumerate(term.inputs)])
        total += term.prob * float(np.sum(p * term.scores))
    return total


def seesaw_lower_bound(
    g: BellGame | GuessingGame, dims: Sequence[int], iters: int = 50, seed: int = 0, restarts: int = 8
) -> float:
    """Best expected score found by seesaw: a lower bound on the quantum value."""
    return seesaw(g, dims, iters=iters, seed=seed, restarts=restarts).value


# ---------------------------------------------------------------------------
# Alice forced to behave classically


class ForcedClassicalResult(NamedTuple):
    process_score: float
    bound: float
    original_score: float
    guessing_score: float
    deltas: np.ndarray  # per x, averaged over y
    delta_xy: np.ndarray
    single_disturbance: np.ndarray  # ||W_x(rho) - rho||_1
    chain_distance: np.ndarray  # ||W_x ... W_0(rho) - rho||_1

    @property
    def holds(self) -> bool:
        slack = tol.INEQUALITY_SLACK
        partial = np.cumsum(self.single_disturbance)
        partial_bound = np.cumsum(4 * np.sqrt(self.deltas))
        return bool(
            abs(self.original_score - self.process_score) <= self.bound + slack
            and self.process_score <= slack
            and np.all(self.chain_distance <= partial + slack)
            and np.all(self.single_disturbance <= 4 * np.sqrt(self.deltas) + slack)
            and np.all(partial <= partial_bound + slack)
            and not self.guessing_score > self.original_score + slack
        )


def _apply_channel(sigma: np.ndarray, projs: np.ndarray, d_a: int, d_rest: int) -> np.ndarray:
    out = np.zeros_like(sigma)
    eye = np.eye(d_rest)
    for P in projs:
        op = np.kron(P, eye)
        out += op @ sigma @ op
    return out


def forced_classical_process(g: BellGame, y: QuantumStrategy, K: float | None = None) -> ForcedClassicalResult:
    """Run the process in which Alice pre-measures every input, for a G_K strategy.

    ``y`` is a three-player strategy (Alice, Bob, Eve) with projective Alice
    measurements; Eve's input ``x * n + y`` must reproduce Alice's output.
    """
    n = g.n
    if y.players != 3:
        raise ValueError("need a three-player strategy for G_K")
    d_a, d_b, d_e = y.dims
    alice, bob, eve = y.measurements
    if len(alice) != n or len(bob) != n or len(eve) != n * n:
        raise ValueError("strategy shape does not match G_K")
    for m in alice:
        if not m.is_projective():
            raise ValueError("Alice's measurements must be projective")
    gamma = y.state.matrix
    rho = partial_trace(gamma, y.dims, [0, 1])

    delta_xy = np.zeros((n, n))
    for x in range(n):
        for yy in range(n):
            p = outcome_distribution(gamma, y.dims, [alice[x].elements, bob[yy].elements, eve[x * n + yy].elements])
            agree = sum(p[s, :, s].sum() for s in range(n))
            delta_xy[x, yy] = max(0.0, 1.0 - agree)
    deltas = delta_xy.mean(axis=1)

    single = np.array([trace_norm(_apply_channel(rho, alice[x].elements, d_a, d_b) - rho) for x in range(n)])
    chain = []
    sigma = rho
    for x in range(n):
        sigma = _apply_channel(sigma, alice[x].elements, d_a, d_b)
        chain.append(trace_norm(sigma - rho))
    chain = np.array(chain)

    # classical records r = (s_0, ..., s_{n-1}) and Bob's conditional states
    process = 0.0
    eye_b = np.eye(d_b)
    for record in itertools.product(range(n), repeat=n):
        ops = [np.kron(alice[x].elements[record[x]], eye_b) for x in range(n)]
        state = rho
        for op in ops:
            state = op @ state @ op
        bob_state = partial_trace(state, (d_a, d_b), [1])
        if np.trace(bob_state).real <= 0:
            continue
        for x in range(n):
            for yy in range(n):
                pt = np.einsum("tij,ji->t", bob[yy].elements, bob_state).real
                process += float(np.dot(g.scores[x, yy, record[x], :], pt)) / n**2

    original = expected_score(g, QuantumStrategy(DensityOperator(rho), (d_a, d_b), (alice, bob)))
    gk = expected_score(GuessingGame(g, K), y) if K is not None else float("nan")
    bound = float(np.sum(4 * np.sqrt(deltas)))
    return ForcedClassicalResult(process, bound, original, gk, deltas, delta_xy, single, chain)


# ---------------------------------------------------------------------------
# strategy file format


def strategy_to_json(s: QuantumStrategy) -> dict:
    from .linalg import dump_matrix

    return {
        "dims": list(s.dims),
        "state": dump_matrix(s.state.matrix),
        "measurements": [[[dump_matrix(e) for e in m.elements] for m in fam] for fam in s.measurements],
    }


def strategy_from_json(obj: dict | str) -> QuantumStrategy:
    from .linalg import load_matrix

    if isinstance(obj, str):
        obj = json.loads(obj)
    meas = []
    for fam in obj["measurements"]:
        povms = []
        for els in fam:
            stack = np.stack([load_matrix(e) for e in els])
            povms.append(Povm(tuple(range(len(els))), stack))
        meas.append(tuple(povms))
    return QuantumStrategy(DensityOperator(load_matrix(obj["state"])), tuple(obj["dims"]), tuple(meas))
