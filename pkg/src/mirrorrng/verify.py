"""Verification suites behind ``mirrorrng verify``."""

from __future__ import annotations

import json
import time
from importlib import resources
from typing import Callable, NamedTuple

import numpy as np

from . import bounds
from . import constants as tol
from .extract import (
    AffineHashFamily,
    BinaryField,
    apply_hash,
    pair_distribution,
    verify_two_universality,
)
from .games import (
    QuantumStrategy,
    classical_value,
    expected_score,
    forced_classical_process,
    make_chsh_bell_game,
    make_guessing_game,
    seesaw_lower_bound,
)
from .linalg import (
    ABORT,
    SUCC,
    CqState,
    Povm,
    gentle_measurement_disturbance,
    pgp_bound_check,
    random_cq_state,
    random_density,
    random_povm,
    random_projective_povm,
    verify_mirror_identity,
)
from .presets import TSIRELSON_VALUE, tsirelson_strategy


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str
    seconds: float


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# random instance families (shared with the test-suite)


def random_pgp_instance(rng: np.random.Generator) -> CqState:
    d = int(rng.integers(1, 5))
    nc = int(rng.integers(1, 5))
    labels = [(c, z) for c in range(nc) for z in (SUCC, ABORT)]
    alpha = random_cq_state(d, labels, rng)
    if rng.random() < 0.3:
        # rank-deficient variant: project every block onto a random subspace
        k = int(rng.integers(1, d + 1))
        q = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))[0][:, :k]
        P = q @ q.conj().T
        blocks = np.einsum("ij,cjk,kl->cil", P, alpha.blocks, P)
        blocks = blocks / np.trace(blocks.sum(axis=0)).real
        alpha = CqState(alpha.labels, blocks)
    return alpha


def random_gentle_instance(rng: np.random.Generator) -> tuple[CqState, Povm]:
    d = int(rng.integers(1, 5))
    nc = int(rng.integers(1, 4))
    m = random_projective_povm(d, nc, rng)
    probs = rng.dirichlet(np.ones(nc))
    noise = rng.random() ** 2
    blocks = []
    for c in range(nc):
        sigma = random_density(d, rng).matrix
        aligned = m.elements[c] @ sigma @ m.elements[c]
        tr = np.trace(aligned).real
        aligned = aligned / tr if tr > 1e-12 else sigma
        blocks.append(probs[c] * ((1 - noise) * aligned + noise * sigma))
    blocks = np.stack(blocks)
    blocks = blocks / np.trace(blocks.sum(axis=0)).real
    return CqState(tuple(range(nc)), blocks), m


def random_gk_strategy(rng: np.random.Generator, dims=(2, 2, 2), n: int = 2) -> QuantumStrategy:
    d_a, d_b, d_e = dims
    state = random_density(d_a * d_b * d_e, rng, rank=int(rng.integers(1, 3)))
    alice = tuple(random_projective_povm(d_a, n, rng) for _ in range(n))
    bob = tuple(random_povm(d_b, n, rng) for _ in range(n))
    eve = tuple(random_projective_povm(d_e, n, rng) for _ in range(n * n))
    return QuantumStrategy(state, dims, (alice, bob, eve))


# ---------------------------------------------------------------------------
# suites


def check_mirror(trials: int = 100, seed: int = 2) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 6))
        rho = random_density(d, rng)
        m = random_projective_povm(d, int(rng.integers(2, d + 1)), rng)
        worst = max(worst, verify_mirror_identity(rho, m))
    return worst <= tol.MIRROR_TOL, f"max deviation {worst:.2e} over {trials} states"


def check_pgp(trials: int = 1000, seed: int = 3) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(trials):
        r = pgp_bound_check(random_pgp_instance(rng))
        worst = max(worst, r.lhs - r.rhs)
    return worst <= tol.INEQUALITY_SLACK, f"max lhs - rhs {worst:.3e} over {trials} states"


def check_gentle(trials: int = 1000, seed: int = 5) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(trials):
        alpha, m = random_gentle_instance(rng)
        r = gentle_measurement_disturbance(alpha, m)
        worst = max(worst, r.disturbance - 4 * np.sqrt(r.delta))
    return worst <= tol.INEQUALITY_SLACK, f"max disturbance - 4 sqrt(delta) {worst:.3e} over {trials} states"


def check_chsh() -> tuple[bool, str]:
    g = make_chsh_bell_game()
    cv = classical_value(g)
    sw = seesaw_lower_bound(g, (2, 2), iters=50, seed=0)
    ts = expected_score(g, tsirelson_strategy())
    ok = cv == 0 and sw >= 0.1380 and sw <= TSIRELSON_VALUE + 1e-6 and abs(ts - 0.138071) <= 1e-6
    return ok, f"classical {cv}, seesaw {sw:.7f}, tsirelson preset {ts:.7f}"


def check_guessing_games(ks=(16, 64, 256), trials: int = 100, seed: int = 7) -> tuple[bool, str]:
    g = make_chsh_bell_game()
    worst = -np.inf
    for K in ks:
        val = seesaw_lower_bound(make_guessing_game(g, K), (2, 2, 4), iters=50, seed=seed)
        worst = max(worst, val - bounds.gk_value_bound(g.n, K))
    rng = np.random.default_rng(seed)
    chain_ok = True
    for _ in range(trials):
        res = forced_classical_process(g, random_gk_strategy(rng), K=16)
        chain_ok &= res.holds
    return worst <= 1e-6 and chain_ok, f"max seesaw - 4n/sqrt(K) {worst:.3f}; forced-classical chain {'ok' if chain_ok else 'BROKEN'}"


def load_golden() -> dict:
    text = resources.files("mirrorrng").joinpath("data/golden_hash.json").read_text()
    return json.loads(text)


def check_golden() -> tuple[bool, str]:
    gold = load_golden()
    bad = 0
    for case in gold["cases"]:
        field = BinaryField(case["v"], int(case["modulus"], 16))
        fam = AffineHashFamily(field, case["u"])
        out = apply_hash(fam, (int(case["a"], 16), int(case["b"], 16)), int(case["p"], 16))
        bad += out != int(case["out"], 16)
    return bad == 0, f"{len(gold['cases']) - bad}/{len(gold['cases'])} golden cases match"


def check_universality(max_v: int = 8) -> tuple[bool, str]:
    worst = 0.0
    for v in range(1, max_v + 1):
        field = BinaryField.of_degree(v)
        for u in range(1, v + 1):
            coll = verify_two_universality(AffineHashFamily(field, u), 1 << v)
            worst = max(worst, coll * 2**u)
    return worst <= 1.0, f"max collision probability * 2^u = {worst:.3f} (v <= {max_v})"


def check_pair_uniformity(max_v: int = 4) -> tuple[bool, str]:
    for v in range(1, max_v + 1):
        field = BinaryField.of_degree(v)
        for u in range(1, v + 1):
            fam = AffineHashFamily(field, u)
            expect = fam.size // (1 << (2 * u))
            for p in range(1 << v):
                for q in range(1 << v):
                    if p != q and not np.all(pair_distribution(fam, p, q) == expect):
                        return False, f"non-uniform pair ({p}, {q}) at v={v}, u={u}"
    return True, f"exactly uniform for every distinct pair, v <= {max_v}"


def bound_grid(points: int = 100, seed: int = 11):
    rng = np.random.default_rng(seed)
    for _ in range(points):
        yield (
            int(rng.integers(1, 10**7)),
            float(rng.uniform(0.01, 1.0)),
            int(rng.integers(2, 6)),
            int(rng.integers(0, 128)),
        )


def check_bound_algebra(points: int = 100) -> tuple[bool, str]:
    worst = 0.0
    for N, delta, n, J in bound_grid(points):
        a = bounds.guessing_event_bound(N, delta, n)
        b = bounds.guessing_event_bound_composed(N, delta, n)
        c = bounds.main_theorem_bound(N, delta, n, J) ** 2
        d = 2.0**J * a
        worst = max(worst, abs(a - b) / b if b else abs(a - b), abs(c - d) / d if d else abs(c - d))
    return worst <= 1e-12, f"max relative error {worst:.2e} over {points} points"


SUITES: dict[str, list[tuple[str, Callable[[], tuple[bool, str]]]]] = {
    "linalg": [("mirror identity", check_mirror), ("pgm guessing bound", check_pgp), ("gentle measurement", check_gentle)],
    "games": [("chsh normalization", check_chsh), ("guessing-game value", check_guessing_games)],
    "hash": [("two-universality", check_universality), ("pair uniformity", check_pair_uniformity), ("golden file", check_golden)],
    "bounds": [("bound algebra", check_bound_algebra)],
}


def run_suite(name: str) -> list[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for suite in names:
        if suite not in SUITES:
            raise KeyError(f"unknown suite {suite!r}")
        for label, fn in SUITES[suite]:
            out.append(_timed(f"{suite}: {label}", fn))
    return out
