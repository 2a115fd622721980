"""Affine 2-universal hashing over GF(2^v) and the extraction step."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import constants as tol
from .gf2 import Reducer, degree, is_irreducible, search_smallest_irreducible

# Lexicographically smallest irreducible polynomial of each degree
# (bit i = coefficient of X^i). Regenerate with scripts/modulus_table.py.
MODULUS_TABLE: dict[int, int] = {
    1: 0x2,
    2: 0x7,
    3: 0xb,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11b,
    9: 0x203,
    10: 0x409,
    11: 0x805,
    12: 0x1009,
    13: 0x201b,
    14: 0x4021,
    15: 0x8003,
    16: 0x1002b,
    17: 0x20009,
    18: 0x40009,
    19: 0x80027,
    20: 0x100009,
    21: 0x200005,
    22: 0x400003,
    23: 0x800021,
    24: 0x100001b,
    25: 0x2000009,
    26: 0x400001b,
    27: 0x8000027,
    28: 0x10000003,
    29: 0x20000005,
    30: 0x40000003,
    31: 0x80000009,
    32: 0x10000008d,
    33: 0x20000004b,
    34: 0x40000001b,
    35: 0x800000005,
    36: 0x1000000035,
    37: 0x200000003f,
    38: 0x4000000063,
    39: 0x8000000011,
    40: 0x10000000039,
    41: 0x20000000009,
    42: 0x40000000027,
    43: 0x80000000059,
    44: 0x100000000021,
    45: 0x20000000001b,
    46: 0x400000000003,
    47: 0x800000000021,
    48: 0x100000000002d,
    49: 0x2000000000071,
    50: 0x400000000001d,
    51: 0x800000000004b,
    52: 0x10000000000009,
    53: 0x20000000000047,
    54: 0x4000000000007d,
    55: 0x80000000000047,
    56: 0x100000000000095,
    57: 0x200000000000011,
    58: 0x400000000000063,
    59: 0x80000000000007b,
    60: 0x1000000000000003,
    61: 0x2000000000000027,
    62: 0x4000000000000069,
    63: 0x8000000000000003,
    64: 0x1000000000000001b,
}

# Larger degrees for common binary run lengths (N = 100, 1000, 2000, 10^4);
# same rule, searched offline with scripts/modulus_table.py --degree.
LARGE_MODULI: dict[int, int] = {
    100: (1 << 100) | 0x65,
    1000: (1 << 1000) | 0x39,
    2000: (1 << 2000) | 0x2441,
    10000: (1 << 10000) | 0b101001011110111,
}


@lru_cache(maxsize=None)
def _verified(modulus: int) -> bool:
    return is_irreducible(modulus)


def smallest_irreducible(v: int) -> int:
    """Pinned modulus for degree ``v``; searched (slowly) when not pinned."""
    if v in MODULUS_TABLE:
        return MODULUS_TABLE[v]
    if v in LARGE_MODULI:
        return LARGE_MODULI[v]
    return search_smallest_irreducible(v)


@dataclass(frozen=True)
class BinaryField:
    """GF(2^v) as F_2[X] modulo an irreducible ``modulus``."""

    v: int
    modulus: int

    def __post_init__(self):
        if self.v < 1 or degree(self.modulus) != self.v:
            raise ValueError(f"modulus {self.modulus:#x} does not have degree {self.v}")
        if not _verified(self.modulus):
            raise ValueError(f"modulus {self.modulus:#x} is reducible")

    @classmethod
    def of_degree(cls, v: int) -> "BinaryField":
        return cls(v, smallest_irreducible(v))

    @property
    def order(self) -> int:
        return 1 << self.v

    @property
    def reducer(self) -> Reducer:
        return _reducer(self.modulus)

    def mul(self, a: int, b: int) -> int:
        return self.reducer.mul(a, b)


@lru_cache(maxsize=64)
def _reducer(modulus: int) -> Reducer:
    return Reducer(modulus)


@dataclass(frozen=True)
class AffineHashFamily:
    """Maps p -> low ``u`` bits of (a*p + b) in GF(2^v), indexed by (a, b)."""

    field: BinaryField
    u: int

    def __post_init__(self):
        if not 0 <= self.u <= self.field.v:
            raise ValueError(f"output length u={self.u} exceeds field degree {self.field.v}")

    @property
    def v(self) -> int:
        return self.field.v

    @property
    def size(self) -> int:
        return 1 << (2 * self.v)

    @property
    def out_mask(self) -> int:
        return (1 << self.u) - 1

    def indices(self):
        n = self.field.order
        for a in range(n):
            for b in range(n):
                yield a, b

    def sample_index(self, rng: np.random.Generator) -> tuple[int, int]:
        """Draw (a, b) from 2v independent uniform bits."""
        nbytes = (self.v + 7) // 8
        mask = self.field.order - 1
        a = int.from_bytes(rng.bytes(nbytes), "little") & mask
        b = int.from_bytes(rng.bytes(nbytes), "little") & mask
        return a, b

    def __call__(self, index: tuple[int, int], p: int) -> int:
        return apply_hash(self, index, p)


def build_hash_family(p_size: int, u: int) -> AffineHashFamily:
    """Family from a set of ``p_size`` inputs to u-bit strings, |family| <= 4 p_size**2."""
    if p_size < 2:
        raise ValueError("input set needs at least two elements")
    if u < 0 or (1 << u) > p_size:
        raise ValueError(f"u={u} too large: 2^u must not exceed |P|={p_size}")
    v = (p_size - 1).bit_length()
    return AffineHashFamily(BinaryField.of_degree(v), u)


def apply_hash(fam: AffineHashFamily, index: tuple[int, int], p: int) -> int:
    a, b = index
    top = fam.field.order
    if not (0 <= a < top and 0 <= b < top and 0 <= p < top):
        raise ValueError("hash index or input outside the field")
    return (fam.field.mul(a, p) ^ b) & fam.out_mask


def apply_hash_reference(v: int, modulus: int, u: int, index: tuple[int, int], p: int) -> int:
    """Bit-serial reference path (multiply-and-reduce one bit at a time)."""
    a, b = index
    acc = 0
    top = 1 << v
    for i in range(v - 1, -1, -1):
        acc <<= 1
        if acc & top:
            acc ^= modulus
        if p >> i & 1:
            acc ^= a
    return (acc ^ b) & ((1 << u) - 1)


def encode_outputs(s: Sequence[int], n: int, v: int | None = None) -> int:
    """Base-n positional value of ``s`` with ``s[0]`` most significant."""
    value = 0
    for sym in s:
        sym = int(sym)
        if not 0 <= sym < n:
            raise ValueError(f"symbol {sym} outside alphabet of size {n}")
        value = value * n + sym
    if v is not None and n ** len(s) > (1 << v):
        raise OverflowError(f"{n}^{len(s)} strings do not fit in {v} bits")
    return value


def decode_outputs(value: int, n: int, length: int) -> list[int]:
    out = []
    for _ in range(length):
        value, r = divmod(value, n)
        out.append(r)
    if value:
        raise OverflowError("value too large for the requested length")
    return out[::-1]


def _product_table(field: BinaryField, p_size: int) -> np.ndarray:
    red = field.reducer
    tab = np.empty((field.order, p_size), dtype=np.int64)
    for a in range(field.order):
        tab[a] = [red.mul(a, p) for p in range(p_size)]
    return tab


def collision_counts(fam: AffineHashFamily, p_size: int) -> np.ndarray:
    """Number of family members with F(p) == F(p') for every pair (p, p')."""
    if p_size > fam.field.order:
        raise ValueError("p_size exceeds the field order")
    if p_size * p_size * fam.size > tol.HASH_EXHAUSTIVE_BUDGET:
        raise ValueError("exhaustive enumeration budget exceeded")
    prods = _product_table(fam.field, p_size)
    bs = np.arange(fam.field.order, dtype=np.int64)
    mask = fam.out_mask
    r = 1 << fam.u
    counts = np.zeros((p_size, p_size), dtype=np.int64)
    buf = None if r <= 16 else np.empty((len(bs), p_size, p_size), dtype=bool)
    for a in range(fam.field.order):
        outs = (prods[a][None, :] ^ bs[:, None]) & mask  # one row per b
        if buf is None:
            acc = np.zeros((p_size, p_size), dtype=np.float64)
            for val in range(r):
                hit = (outs == val).astype(np.float64)
                acc += hit.T @ hit
            counts += np.rint(acc).astype(np.int64)
        else:
            small = outs.astype(np.min_scalar_type(mask))
            np.equal(small[:, :, None], small[:, None, :], out=buf)
            counts += buf.view(np.uint8).sum(axis=0, dtype=np.int32)
    return counts


def verify_two_universality(fam: AffineHashFamily, p_size: int) -> float:
    """Exhaustive max over distinct inputs of the collision probability."""
    counts = collision_counts(fam, p_size)
    np.fill_diagonal(counts, 0)
    return float(counts.max()) / fam.size if p_size > 1 else 0.0


def pair_distribution(fam: AffineHashFamily, p: int, q: int) -> np.ndarray:
    """Counts of (F(p), F(q)) over the whole family, as a 2^u x 2^u table."""
    r = 1 << fam.u
    table = np.zeros((r, r), dtype=np.int64)
    red = fam.field.reducer
    mask = fam.out_mask
    for a in range(fam.field.order):
        ap, aq = red.mul(a, p), red.mul(a, q)
        for b in range(fam.field.order):
            table[(ap ^ b) & mask, (aq ^ b) & mask] += 1
    return table


def preimage_counts(fam: AffineHashFamily) -> np.ndarray:
    """How many field elements the truncation sends to each output."""
    vals = np.arange(fam.field.order, dtype=np.int64) & fam.out_mask
    return np.bincount(vals, minlength=1 << fam.u)


def min_field_degree(n: int, length: int) -> int:
    """Smallest v with n**length <= 2**v."""
    return max(1, (n**length - 1).bit_length())
