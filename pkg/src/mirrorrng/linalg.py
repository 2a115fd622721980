"""Finite-dimensional quantum kernel.

Dense complex matrices throughout. Every matrix function (square root,
inverse square root on the support, absolute value) goes through one
Hermitian eigendecomposition, so results are deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import constants as tol

SUCC = "succ"
ABORT = "abort"


# ---------------------------------------------------------------------------
# primitives


def _as_matrix(a: Any) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermitian_deviation(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def hermitian_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of the Hermitian part of ``a``."""
    h = (a + a.conj().T) / 2
    return np.linalg.eigh(h)


def _from_eig(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (v * w) @ v.conj().T


def support_threshold(w: np.ndarray) -> float:
    top = float(np.max(np.abs(w))) if w.size else 0.0
    return tol.SUPPORT_RTOL * top


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    w, v = hermitian_eig(a)
    return _from_eig(np.sqrt(np.clip(w, 0.0, None)), v)


def inv_sqrt_on_support(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pseudo-inverse square root of a PSD matrix and the projector onto its support."""
    w, v = hermitian_eig(a)
    keep = w > support_threshold(w)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    proj = (v[:, keep]) @ v[:, keep].conj().T
    return _from_eig(inv, v), proj


def trace_norm(a: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))))


def trace_norm_distance(a: Any, b: Any) -> float:
    """Trace-norm distance ``||a - b||_1`` between two Hermitian matrices."""
    a = _as_matrix(getattr(a, "matrix", a))
    b = _as_matrix(getattr(b, "matrix", b))
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    for m in (a, b):
        if hermitian_deviation(m) > tol.HERMITIAN_TOL:
            raise ValueError("input is not Hermitian")
    return trace_norm(a - b)


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep`` (order preserved)."""
    dims = list(dims)
    r = len(dims)
    keep = sorted(keep)
    t = np.asarray(rho).reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * r > len(letters):
        raise ValueError("too many tensor factors")
    row = list(letters[:r])
    col = list(letters[r : 2 * r])
    for k in range(r):
        if k not in keep:
            col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return res.reshape(d, d)


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, m)
    return out


# ---------------------------------------------------------------------------
# domain types


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DensityOperator:
    """A state: Hermitian, PSD, unit trace."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        if hermitian_deviation(m) > tol.HERMITIAN_TOL:
            raise ValueError("density operator is not Hermitian")
        w = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if w.size and w.min() < -tol.PSD_TOL:
            raise ValueError(f"density operator has eigenvalue {w.min():.3e}")
        if abs(np.trace(m).real - 1.0) > tol.TRACE_TOL:
            raise ValueError(f"density operator has trace {np.trace(m).real!r}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, psi: Any) -> "DensityOperator":
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)


@dataclass(frozen=True)
class PureState:
    vector: np.ndarray
    factor_dims: tuple[int, ...]

    def __post_init__(self):
        v = np.array(self.vector, dtype=np.complex128).reshape(-1)
        dims = tuple(int(d) for d in self.factor_dims)
        if int(np.prod(dims)) != v.size:
            raise ValueError(f"factor dims {dims} do not multiply to {v.size}")
        if abs(np.linalg.norm(v) - 1.0) > tol.NORM_TOL:
            raise ValueError("state vector is not normalized")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "factor_dims", dims)

    @property
    def dim(self) -> int:
        return self.vector.size

    def density(self) -> DensityOperator:
        return DensityOperator(np.outer(self.vector, self.vector.conj()))

    def reduced(self, keep: Sequence[int]) -> np.ndarray:
        return partial_trace(np.outer(self.vector, self.vector.conj()), self.factor_dims, keep)


@dataclass(frozen=True)
class Povm:
    """Measurement with ordered outcome ``labels`` and stacked ``elements``."""

    labels: tuple
    elements: np.ndarray

    def __post_init__(self):
        els = np.array(self.elements, dtype=np.complex128)
        labels = tuple(self.labels)
        if els.ndim != 3 or els.shape[1] != els.shape[2]:
            raise ValueError(f"elements must have shape (k, d, d), got {els.shape}")
        if len(labels) != els.shape[0] or len(set(labels)) != len(labels):
            raise ValueError("labels must be distinct and match the element count")
        for e in els:
            if hermitian_deviation(e) > tol.HERMITIAN_TOL:
                raise ValueError("POVM element is not Hermitian")
            if np.linalg.eigvalsh((e + e.conj().T) / 2).min() < -tol.PSD_TOL:
                raise ValueError("POVM element is not PSD")
        total = els.sum(axis=0)
        if np.max(np.abs(total - np.eye(els.shape[1]))) > tol.POVM_SUM_TOL:
            raise ValueError("POVM elements do not sum to the identity")
        els.setflags(write=False)
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_mapping(cls, elements: Mapping[Hashable, Any]) -> "Povm":
        labels = tuple(elements)
        return cls(labels, np.stack([np.asarray(elements[c], dtype=np.complex128) for c in labels]))

    @classmethod
    def computational(cls, dim: int) -> "Povm":
        els = np.zeros((dim, dim, dim), dtype=np.complex128)
        for i in range(dim):
            els[i, i, i] = 1.0
        return cls(tuple(range(dim)), els)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, label: Hashable) -> np.ndarray:
        return self.elements[self.labels.index(label)]

    def is_projective(self, atol: float = tol.HERMITIAN_TOL) -> bool:
        return all(np.max(np.abs(e @ e - e)) <= atol for e in self.elements)


@dataclass(frozen=True)
class CqState:
    """Classical-quantum state ``sum_c |c><c| (x) blocks[c]``."""

    labels: tuple
    blocks: np.ndarray

    def __post_init__(self):
        b = np.array(self.blocks, dtype=np.complex128)
        labels = tuple(self.labels)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ValueError(f"blocks must have shape (k, d, d), got {b.shape}")
        if len(labels) != b.shape[0] or len(set(labels)) != len(labels):
            raise ValueError("labels must be distinct and match the block count")
        for blk in b:
            if hermitian_deviation(blk) > tol.HERMITIAN_TOL:
                raise ValueError("block is not Hermitian")
            if np.linalg.eigvalsh((blk + blk.conj().T) / 2).min() < -tol.PSD_TOL:
                raise ValueError("block is not PSD")
        if abs(np.trace(b.sum(axis=0)).real - 1.0) > tol.TRACE_TOL:
            raise ValueError("cq-state blocks do not have total trace 1")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_mapping(cls, blocks: Mapping[Hashable, Any]) -> "CqState":
        labels = tuple(blocks)
        return cls(labels, np.stack([np.asarray(blocks[c], dtype=np.complex128) for c in labels]))

    @property
    def quantum_dim(self) -> int:
        return self.blocks.shape[1]

    def __getitem__(self, label: Hashable) -> np.ndarray:
        return self.blocks[self.labels.index(label)]

    def quantum_marginal(self) -> np.ndarray:
        return self.blocks.sum(axis=0)

    def probabilities(self) -> dict:
        return {c: float(np.trace(b).real) for c, b in zip(self.labels, self.blocks)}

    def dense(self) -> np.ndarray:
        """The full matrix on C (x) Q, classical register first."""
        k, d = len(self.labels), self.quantum_dim
        out = np.zeros((k * d, k * d), dtype=np.complex128)
        for i, b in enumerate(self.blocks):
            out[i * d : (i + 1) * d, i * d : (i + 1) * d] = b
        return out


# ---------------------------------------------------------------------------
# operations


def canonical_purification(rho: DensityOperator) -> PureState:
    """``(sqrt(rho) (x) I) sum_e e (x) e`` on Q (x) Q'."""
    root = sqrtm_psd(rho.matrix)
    # entry (i, j) of the unnormalized vector is root[i, j]
    vec = root.reshape(-1)
    vec = vec / np.linalg.norm(vec)
    return PureState(vec, (rho.dim, rho.dim))


def _pgm_elements(blocks: np.ndarray) -> np.ndarray:
    total = blocks.sum(axis=0)
    inv, proj = inv_sqrt_on_support(total)
    k, d = blocks.shape[0], blocks.shape[1]
    off = (np.eye(d) - proj) / k
    els = np.einsum("ij,cjk,kl->cil", inv, blocks, inv) + off
    return (els + np.conj(np.transpose(els, (0, 2, 1)))) / 2


def pretty_good_measurement(alpha: CqState) -> Povm:
    """PGM induced by ``alpha`` on its quantum part.

    Off the support of the quantum marginal the identity is split evenly
    over the outcomes, so the result is always a complete measurement.
    """
    return Povm(alpha.labels, _pgm_elements(alpha.blocks))


def conjugate_povm(m: Povm) -> Povm:
    return Povm(m.labels, np.conj(m.elements))


def measure_second_factor(psi: PureState, m: Povm) -> CqState:
    """Measure the second tensor factor of a bipartite pure state; keep the first."""
    if len(psi.factor_dims) != 2 or psi.factor_dims[1] != m.dim:
        raise ValueError("measurement does not act on the second factor")
    rho = np.outer(psi.vector, psi.vector.conj())
    dq = psi.factor_dims[0]
    blocks = []
    for e in m.elements:
        op = np.kron(np.eye(dq), e)
        blocks.append(partial_trace(op @ rho, psi.factor_dims, [0]))
    blocks = np.stack(blocks)
    blocks = (blocks + np.conj(np.transpose(blocks, (0, 2, 1)))) / 2
    return CqState(m.labels, blocks)


def verify_mirror_identity(rho: DensityOperator, m: Povm) -> float:
    """Largest entrywise gap, on the support of ``rho``, between the PGM
    obtained from measuring the purifying copy with ``m`` and ``conj(m)``."""
    if m.dim != rho.dim:
        raise ValueError("measurement dimension does not match the state")
    alpha = measure_second_factor(canonical_purification(rho), m)
    pgm = pretty_good_measurement(alpha)
    _, proj = inv_sqrt_on_support(rho.matrix)
    gap = np.einsum("ij,cjk,kl->cil", proj, pgm.elements - np.conj(m.elements), proj)
    return float(np.max(np.abs(gap)))


class PgpBound(NamedTuple):
    lhs: float
    rhs: float
    f: float
    f_prime: float


def _pgp_terms(
    blocks: np.ndarray, c_of: Sequence[Hashable], succ: Sequence[bool], c_values: Sequence[Hashable]
) -> tuple[float, float, float]:
    """(lhs, f, f') contributions of one cq-state (possibly subnormalized)."""
    succ = np.asarray(succ, dtype=bool)
    total = blocks.sum(axis=0)
    inv, _ = inv_sqrt_on_support(total)
    alpha_succ = blocks[succ].sum(axis=0)
    r_succ = inv @ alpha_succ @ inv
    f = float(np.real(np.trace(alpha_succ @ r_succ)))
    f_prime = 0.0
    per_c: dict = {c: np.zeros_like(total) for c in c_values}
    for blk, c, s in zip(blocks, c_of, succ):
        if not s:
            continue
        r = inv @ blk @ inv
        f_prime += float(np.real(np.trace(blk @ r)))
        per_c[c] = per_c[c] + blk
    if len(per_c) != len(c_values):
        raise ValueError("cq-state carries a C value outside the declared alphabet")
    mixed = alpha_succ / len(c_values)
    lhs = sum(trace_norm(blk - mixed) for blk in per_c.values())
    return lhs, f, f_prime


def pgp_bound_check(alpha: CqState, c_values: Sequence[Hashable] | None = None) -> PgpBound:
    """Trace distance of C from uniform (given succ) against the PGM guessing bound.

    Labels of ``alpha`` are ``(c, z)`` with ``z`` in {SUCC, ABORT}.
    ``c_values`` is the full alphabet of C (default: the c values present).
    """
    for lab in alpha.labels:
        if not (isinstance(lab, tuple) and len(lab) == 2 and lab[1] in (SUCC, ABORT)):
            raise ValueError(f"label {lab!r} is not of the form (c, succ|abort)")
    if c_values is None:
        c_values = sorted({lab[0] for lab in alpha.labels}, key=repr)
    lhs, f, fp = _pgp_terms(
        alpha.blocks, [lab[0] for lab in alpha.labels], [lab[1] == SUCC for lab in alpha.labels], c_values
    )
    return combine_pgp_terms(lhs, f, fp, len(c_values))


def combine_pgp_terms(lhs: float, f: float, f_prime: float, num_c: int) -> PgpBound:
    gap = f_prime * num_c - f
    if gap < -tol.INEQUALITY_SLACK:
        raise ArithmeticError(f"f'|C| - f = {gap:.3e} < 0")
    return PgpBound(lhs, float(np.sqrt(max(gap, 0.0))), f, f_prime)


class Disturbance(NamedTuple):
    disturbance: float
    delta: float


def gentle_measurement_disturbance(alpha: CqState, m: Povm) -> Disturbance:
    """Disturbance of a projective measurement that predicts C with error ``delta``."""
    if m.dim != alpha.quantum_dim:
        raise ValueError("measurement dimension does not match the state")
    if not m.is_projective():
        raise ValueError("measurement is not projective")
    missing = set(alpha.labels) - set(m.labels)
    if missing:
        raise ValueError(f"measurement lacks outcomes for labels {sorted(missing, key=repr)}")
    hit = sum(float(np.real(np.trace(m[c] @ blk))) for c, blk in zip(alpha.labels, alpha.blocks))
    delta = max(0.0, 1.0 - hit)
    dist = 0.0
    for blk in alpha.blocks:
        after = np.einsum("cij,jk,ckl->il", m.elements, blk, m.elements)
        dist += trace_norm(after - blk)
    return Disturbance(dist, delta)


# ---------------------------------------------------------------------------
# random instances


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Ginibre-distributed state (full rank unless ``rank`` is given)."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def random_projective_povm(d: int, k: int, rng: np.random.Generator, labels: Sequence | None = None) -> Povm:
    """Eigenprojectors of a random Hermitian matrix, dealt round-robin into k outcomes."""
    _, v = np.linalg.eigh(random_hermitian(d, rng))
    els = np.zeros((k, d, d), dtype=np.complex128)
    for i in range(d):
        els[i % k] += np.outer(v[:, i], v[:, i].conj())
    return Povm(tuple(range(k)) if labels is None else tuple(labels), els)


def random_povm(d: int, k: int, rng: np.random.Generator) -> Povm:
    """Generic (non-projective) POVM: normalized random positive operators."""
    g = rng.standard_normal((k, d, d)) + 1j * rng.standard_normal((k, d, d))
    pos = np.einsum("kij,klj->kil", g, g.conj())
    inv, _ = inv_sqrt_on_support(pos.sum(axis=0))
    els = np.einsum("ij,kjl,lm->kim", inv, pos, inv)
    els = (els + np.conj(np.transpose(els, (0, 2, 1)))) / 2
    return Povm(tuple(range(k)), els)


def random_cq_state(d: int, labels: Sequence[Hashable], rng: np.random.Generator) -> CqState:
    probs = rng.dirichlet(np.ones(len(labels)))
    blocks = np.stack([p * random_density(d, rng).matrix for p in probs])
    blocks = blocks / np.trace(blocks.sum(axis=0)).real
    return CqState(tuple(labels), blocks)


# ---------------------------------------------------------------------------
# debug dump format: {"dim": d, "data": [re, im, re, im, ...]} row-major


def dump_matrix(a: Any) -> dict:
    m = _as_matrix(getattr(a, "matrix", a))
    flat = np.empty(2 * m.size)
    flat[0::2] = m.real.reshape(-1)
    flat[1::2] = m.imag.reshape(-1)
    return {"dim": m.shape[0], "data": flat.tolist()}


def load_matrix(obj: Mapping | str) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    d = int(obj["dim"])
    data = np.asarray(obj["data"], dtype=float)
    if data.size != 2 * d * d:
        raise ValueError(f"expected {2 * d * d} numbers for dim {d}, got {data.size}")
    return (data[0::2] + 1j * data[1::2]).reshape(d, d)
