"""Polynomial arithmetic over F_2 on Python integers.

A polynomial is an ``int`` whose bit ``i`` is the coefficient of ``X**i``.
Everything here is exact and platform independent.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# byte -> the same bits spread to even positions (squaring in F_2[X])
_SPREAD = np.zeros(256, dtype="<u2")
for _i in range(256):
    for _k in range(8):
        if _i >> _k & 1:
            _SPREAD[_i] |= 1 << (2 * _k)


def degree(a: int) -> int:
    """Degree of ``a``; the zero polynomial has degree -1."""
    return a.bit_length() - 1


def clmul(a: int, b: int) -> int:
    """Carry-less (F_2[X]) product, shift-XOR schoolbook."""
    if a.bit_count() > b.bit_count():
        a, b = b, a
    out = 0
    while a:
        low = a & -a
        out ^= b << (low.bit_length() - 1)
        a ^= low
    return out


def square(a: int) -> int:
    """``a * a`` in F_2[X] by bit spreading."""
    if a == 0:
        return 0
    nb = (a.bit_length() + 7) // 8
    b = np.frombuffer(a.to_bytes(nb, "little"), dtype=np.uint8)
    return int.from_bytes(_SPREAD[b].tobytes(), "little")


def poly_mod(a: int, m: int) -> int:
    if m == 0:
        raise ZeroDivisionError("polynomial modulus is zero")
    dm = degree(m)
    da = degree(a)
    while da >= dm:
        a ^= m << (da - dm)
        da = degree(a)
    return a


def poly_divmod(a: int, m: int) -> tuple[int, int]:
    if m == 0:
        raise ZeroDivisionError("polynomial modulus is zero")
    dm = degree(m)
    q = 0
    da = degree(a)
    while da >= dm:
        q |= 1 << (da - dm)
        a ^= m << (da - dm)
        da = degree(a)
    return q, a


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


class Reducer:
    """Reduction modulo a fixed polynomial ``m`` of degree ``v``.

    Folds the high part through the tail ``m - X**v``; cheap when the tail
    is sparse and of low degree, which holds for lexicographically minimal
    moduli.
    """

    def __init__(self, m: int):
        if m < 2:
            raise ValueError("modulus must have degree >= 1")
        self.m = m
        self.v = degree(m)
        self.mask = (1 << self.v) - 1
        self.tail = m ^ (1 << self.v)
        self._tail_bits = [i for i in range(self.v) if self.tail >> i & 1]

    def reduce(self, a: int) -> int:
        v, mask, bits = self.v, self.mask, self._tail_bits
        while a >> v:
            h = a >> v
            a &= mask
            for i in bits:
                a ^= h << i
        return a

    def mul(self, a: int, b: int) -> int:
        return self.reduce(clmul(a, b))

    def sqr(self, a: int) -> int:
        return self.reduce(square(a))

    def frobenius(self, a: int, k: int) -> int:
        """``a ** (2**k) mod m``."""
        for _ in range(k):
            a = self.reduce(square(a))
        return a


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(f: int) -> bool:
    """Rabin's test: exact decision of irreducibility over F_2."""
    v = degree(f)
    if v < 1:
        return False
    if v == 1:
        return True
    if not f & 1:
        return False
    if f.bit_count() % 2 == 0:  # f(1) = 0
        return False
    red = Reducer(f)
    x = 2 % f if v > 1 else 0
    # frobenius powers x^(2^(v/q)) for each prime q | v, in increasing exponent
    targets = sorted(v // q for q in _prime_factors(v))
    cur, done = x, 0
    for k in targets:
        cur = red.frobenius(cur, k - done)
        done = k
        if poly_gcd(f, cur ^ x) != 1:
            return False
    cur = red.frobenius(cur, v - done)
    return cur == x


def _exponent_fold(f: int, i: int) -> int:
    """``f mod (X**(2**i) - X)`` for sparse ``f``."""
    period = (1 << i) - 1
    r = 0
    bits = f
    while bits:
        low = bits & -bits
        e = low.bit_length() - 1
        if e >= 1:
            e = (e - 1) % period + 1
        r ^= 1 << e
        bits ^= low
    return r


def has_small_factor(f: int, max_degree: int) -> bool:
    """True when ``f`` has an irreducible factor of degree <= ``max_degree``
    (and less than the degree of ``f``)."""
    v = degree(f)
    for i in range(1, min(max_degree, v // 2) + 1):
        big = (1 << (1 << i)) | 2  # X^(2^i) + X
        if poly_gcd(big, _exponent_fold(f, i)) != 1:
            return True
    return False


def brute_force_irreducible(f: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2 (oracle, small f)."""
    v = degree(f)
    if v < 1:
        return False
    for g in range(2, 1 << (v // 2 + 1)):
        if degree(g) <= v // 2 and poly_mod(f, g) == 0:
            return False
    return True


@lru_cache(maxsize=None)
def search_smallest_irreducible(v: int) -> int:
    """Lexicographically smallest (as an integer) irreducible of degree v."""
    if v < 1:
        raise ValueError("degree must be >= 1")
    if v == 1:
        return 0b10
    top = 1 << v
    sieve = 10 if v > 64 else 0
    for tail in range(1, top, 2):
        f = top | tail
        if f.bit_count() % 2 == 0:
            continue
        if sieve and has_small_factor(f, sieve):
            continue
        if is_irreducible(f):
            return f
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover
