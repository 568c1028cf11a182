"""Classical Sobol' sequence from a Joe-Kuo style direction-number file.

Points are produced in Gray-code order with 32-bit direction integers; the
first point is the origin. Dimension 1 is the radix-2 van der Corput
sequence; higher dimensions come from the shipped direction-number table
(published column format "d s a m_i", dimensions 2..1100).
"""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np

W = 32


def parse_direction_file(text: str) -> dict[int, tuple[int, int, tuple[int, ...]]]:
    """Rows 'd s a m_1..m_s' -> {d: (s, a, m)}; header line tolerated."""
    table = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("d"):
            continue
        parts = line.split()
        d, s, a = int(parts[0]), int(parts[1]), int(parts[2])
        m = tuple(int(tok) for tok in parts[3 : 3 + s])
        if len(m) != s:
            raise ValueError(f"direction row for dim {d}: expected {s} m-values")
        table[d] = (s, a, m)
    return table


@lru_cache(maxsize=1)
def _shipped_directions() -> dict[int, tuple[int, int, tuple[int, ...]]]:
    text = resources.files("ubmcqmc.data").joinpath("joe-kuo-6.1100.txt").read_text()
    return parse_direction_file(text)


def max_dimension() -> int:
    return max(_shipped_directions()) if _shipped_directions() else 1


def _direction_integers(dim: int) -> np.ndarray:
    """V[j] for j = 0..W-1 (direction numbers scaled by 2^W) for one dimension."""
    v = np.zeros(W, dtype=np.uint32)
    if dim == 1:
        for j in range(W):
            v[j] = np.uint32(1) << (W - 1 - j)
        return v
    s, a, m = _shipped_directions()[dim]
    for j in range(min(s, W)):
        v[j] = np.uint32(m[j]) << (W - 1 - j)
    for j in range(s, W):
        prev = int(v[j - s])
        val = prev ^ (prev >> s)
        for k in range(1, s):
            if (a >> (s - 1 - k)) & 1:
                val ^= int(v[j - k])
        v[j] = np.uint32(val)
    return v


@lru_cache(maxsize=8)
def _direction_table(dim: int) -> np.ndarray:
    """(W, dim) direction integers for dimensions 1..dim."""
    return np.stack([_direction_integers(d) for d in range(1, dim + 1)], axis=1)


def sobol_points_u32(dim: int, count: int) -> np.ndarray:
    """Sobol' points scaled by 2^32, shape (count, dim), first row all zeros."""
    limit = max_dimension()
    if not 1 <= dim <= limit:
        raise ValueError(f"dim={dim} outside shipped direction numbers (1..{limit})")
    if count < 1:
        raise ValueError("count >= 1 required")
    if count > (1 << W):
        raise ValueError(f"count exceeds 2^{W}")
    v = _direction_table(dim)
    out = np.zeros((count, dim), dtype=np.uint32)
    if count == 1:
        return out
    i = np.arange(1, count, dtype=np.uint64)
    # Gray-code order: x_i = x_{i-1} xor V[ctz(i)]
    ctz = np.zeros(count - 1, dtype=np.int64)
    rem = i.copy()
    mask = (rem & 1) == 0
    while mask.any():
        ctz[mask] += 1
        rem[mask] >>= 1
        mask = (rem & 1) == 0
    np.bitwise_xor.accumulate(v[ctz, :], axis=0, out=out[1:])
    return out


def sobol_points(dim: int, count: int) -> np.ndarray:
    """Sobol' points in [0,1)^dim, shape (count, dim); first point is the origin."""
    return sobol_points_u32(dim, count).astype(np.float64) / 2.0**W
