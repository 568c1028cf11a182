"""Maximal-period linear feedback shift register (Tausworthe) generators.

Bits obey b_i = sum_j a_j b_{i-n+j} (mod 2). When the characteristic
polynomial p(x) = x^n + sum_j a_j x^j is primitive over GF(2), the n-bit
state walks through every nonzero pattern once per period 2^n - 1. Outputs
are 32-digit binary fractions read at stride g, gcd(g, 2^n - 1) = 1:

    v_i = sum_{j=0}^{31} b_{(i-1)g + j} 2^{-j-1},  i = 1, 2, ...

Primitivity is validated whenever parameters are constructed, so a corrupt
parameter file cannot produce a short-period generator silently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

W = 32  # output digits


# ---------------------------------------------------------------------------
# GF(2) polynomial arithmetic on Python ints (bit j = coefficient of x^j)

def _gf2_mul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _gf2_mod(a: int, p: int) -> int:
    dp = p.bit_length() - 1
    da = a.bit_length() - 1
    while da >= dp:
        a ^= p << (da - dp)
        da = a.bit_length() - 1
    return a


def _gf2_mulmod(a: int, b: int, p: int) -> int:
    return _gf2_mod(_gf2_mul(a, b), p)


def _gf2_powmod(a: int, e: int, p: int) -> int:
    r = 1
    a = _gf2_mod(a, p)
    while e:
        if e & 1:
            r = _gf2_mulmod(r, a, p)
        a = _gf2_mulmod(a, a, p)
        e >>= 1
    return r


def _gf2_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _gf2_mod(a, b)
    return a


def _prime_factors(m: int) -> list[int]:
    out = []
    d = 2
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            while m % d == 0:
                m //= d
        d += 1 if d == 2 else 2
    if m > 1:
        out.append(m)
    return out


def is_primitive(poly: int, n: int) -> bool:
    """True iff ``poly`` (degree n, bit j = coeff of x^j) is primitive over GF(2)."""
    if poly.bit_length() - 1 != n or not poly & 1:
        return False
    x = 2
    # irreducibility: x^(2^n) == x mod p and no factor of degree n/r
    if _gf2_powmod(x, 1 << n, poly) != x:
        return False
    for r in _prime_factors(n):
        h = _gf2_powmod(x, 1 << (n // r), poly) ^ x
        if _gf2_gcd(poly, h) != 1:
            return False
    # order of x must be exactly 2^n - 1
    period = (1 << n) - 1
    for q in _prime_factors(period):
        if _gf2_powmod(x, period // q, poly) == 1:
            return False
    return True


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LfsrParams:
    """Validated LFSR parameter set (order n, offset g, coefficients a_0..a_{n-1})."""

    n: int
    g: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"order n={self.n} too small")
        if len(self.coeffs) != self.n or any(c not in (0, 1) for c in self.coeffs):
            raise ValueError("coefficients must be n bits a_0..a_{n-1}")
        period = (1 << self.n) - 1
        if math.gcd(self.g, period) != 1:
            raise ValueError(f"offset g={self.g} shares a factor with 2^{self.n}-1")
        if not is_primitive(self.poly_int, self.n):
            raise ValueError(
                f"characteristic polynomial for n={self.n} is not primitive over GF(2)"
            )

    @property
    def poly_int(self) -> int:
        """x^n + sum a_j x^j as an int, bit j = coeff of x^j."""
        a = 0
        for j, c in enumerate(self.coeffs):
            a |= c << j
        return a | (1 << self.n)

    @property
    def period(self) -> int:
        return (1 << self.n) - 1


def _tap_mask(params: LfsrParams) -> int:
    m = 0
    for j, c in enumerate(params.coeffs):
        m |= c << j
    return m


def _seed_to_int(seed) -> int:
    """Seed bits b_0..b_{n-1} -> state int with b_j at bit j."""
    if isinstance(seed, int):
        return seed
    s = 0
    for j, b in enumerate(seed):
        s |= (int(b) & 1) << j
    return s


def bit_period(params: LfsrParams, seed=1) -> np.ndarray:
    """One full period of bits b_0..b_{P-1} as uint8, P = 2^n - 1."""
    return _bit_period_cached(params.n, params.coeffs, _seed_to_int(seed))


@lru_cache(maxsize=64)
def _bit_period_cached(n: int, coeffs: tuple, seed_int: int) -> np.ndarray:
    if seed_int == 0 or seed_int >> n:
        raise ValueError("seed must be n nonzero bits")
    taps = 0
    for j, c in enumerate(coeffs):
        taps |= c << j
    period = (1 << n) - 1
    out = np.empty(period, dtype=np.uint8)
    # state bit j holds b_{i-n+j}; emit b_{i-n} (bit 0) and push b_i on top
    top = 1 << (n - 1)
    state = seed_int
    for i in range(period):
        out[i] = state & 1
        new = (state & taps).bit_count() & 1
        state = (state >> 1) | (new * top)
    return out


def period_walk(params: LfsrParams, seed=1) -> int:
    """Steps until the n-bit state first recurs (full cycle length)."""
    if params.n > 22:
        raise ValueError("state walk limited to n <= 22; use is_primitive instead")
    taps = _tap_mask(params)
    top = 1 << (params.n - 1)
    s0 = _seed_to_int(seed)
    if s0 == 0:
        raise ValueError("seed must be n nonzero bits")
    state = s0
    steps = 0
    while True:
        new = (state & taps).bit_count() & 1
        state = (state >> 1) | (new * top)
        steps += 1
        if state == s0:
            return steps


def lfsr_values_u32(params: LfsrParams, seed=1, count: int | None = None) -> np.ndarray:
    """v_i scaled by 2^32, i = 1..count (default one full period 2^n - 1).

    The v sequence has period 2^n - 1: index (i-1)g mod period wraps exactly.
    """
    bits = bit_period(params, seed)
    period = params.period
    m = period if count is None else min(count, period)
    vals = np.empty(m, dtype=np.uint32)
    starts = (np.arange(m, dtype=np.int64) * params.g) % period
    weights = (np.uint64(1) << np.arange(W - 1, -1, -1, dtype=np.uint64))
    chunk = 1 << 15
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        idx = (starts[lo:hi, None] + np.arange(W, dtype=np.int64)[None, :]) % period
        block = bits[idx].astype(np.uint64)
        vals[lo:hi] = (block * weights).sum(axis=1).astype(np.uint32)
    if count is not None and count > period:
        reps = -(-count // period)
        vals = np.tile(vals, reps)[:count]
    return vals


def lfsr_stream(params: LfsrParams, seed=1, count: int = 1) -> np.ndarray:
    """Unit-interval outputs v_1..v_count (32 binary digits each)."""
    if count < 1:
        raise ValueError("count >= 1 required")
    return lfsr_values_u32(params, seed, count).astype(np.float64) / 2.0**W


# ---------------------------------------------------------------------------
# Parameter file: plain-text rows "n g a_{n-1} ... a_0" (MSB first)

def parse_params_line(line: str) -> LfsrParams:
    parts = line.split()
    n, g = int(parts[0]), int(parts[1])
    msb_first = [int(tok) for tok in parts[2:]]
    if len(msb_first) != n:
        raise ValueError(f"expected {n} coefficient bits, got {len(msb_first)}")
    return LfsrParams(n=n, g=g, coeffs=tuple(reversed(msb_first)))


def format_params_line(params: LfsrParams) -> str:
    bits = " ".join(str(b) for b in reversed(params.coeffs))
    return f"{params.n} {params.g} {bits}"


def load_params_file(text: str) -> dict[int, LfsrParams]:
    table = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        p = parse_params_line(line)
        if p.n in table:
            raise ValueError(f"duplicate parameter row for n={p.n}")
        table[p.n] = p
    return table


@lru_cache(maxsize=1)
def shipped_params() -> dict[int, LfsrParams]:
    """The validated parameter table bundled with the package."""
    text = resources.files("ubmcqmc.data").joinpath("lfsr_params.txt").read_text()
    return load_params_file(text)


def params_for_order(n: int) -> LfsrParams:
    table = shipped_params()
    if n not in table:
        raise ValueError(
            f"no shipped LFSR parameters for n={n}; available: {sorted(table)}"
        )
    return table[n]
