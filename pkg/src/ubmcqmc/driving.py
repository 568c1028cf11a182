"""Array-(W)CUD variable matrices, their randomization, and row providers.

A variable matrix is the N x d block of unit-interval numbers consumed one
row per Gibbs iteration. Constructions: IID (baseline), Liao (randomly
permuted Sobol' points) and Harase (maximal-period LFSR outputs arranged in
d-blocks). Randomization is per chain: random shift (add z mod 1) or digital
shift (XOR of the first 32 binary digits). A RowProvider splices iid burn-in
rows, the randomized core matrix, and an iid overflow stream into the single
row sequence a chain consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lfsr import LfsrParams, lfsr_values_u32
from .sobol import sobol_points

_SCALE = float(2.0**32)


@dataclass(frozen=True)
class VariableMatrix:
    entries: np.ndarray  # (N, d) float64 in [0, 1)
    provenance: str      # 'IID' | 'Liao' | 'Harase'
    randomization: tuple | None = None  # ('random-shift', z) | ('digital-shift', z)

    def __post_init__(self):
        e = self.entries
        if e.ndim != 2:
            raise ValueError("entries must be an (N, d) array")
        if not ((e >= 0.0).all() and (e < 1.0).all()):
            raise ValueError("entries must lie in [0, 1)")

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]


def iid_matrix(rows: int, d: int, rng: np.random.Generator) -> VariableMatrix:
    return VariableMatrix(rng.random((rows, d)), "IID")


def liao_matrix(d: int, rows: int, permutation_seed) -> VariableMatrix:
    """Sobol' point set with rows in a seeded random order."""
    rng = (
        permutation_seed
        if isinstance(permutation_seed, np.random.Generator)
        else np.random.default_rng(permutation_seed)
    )
    pts = sobol_points(d, rows)
    return VariableMatrix(pts[rng.permutation(rows)], "Liao")


def harase_matrix(params: LfsrParams, d: int) -> VariableMatrix:
    """LFSR outputs arranged into an N x d matrix, N = 2^n.

    Single-loop case (gcd(d, N-1) = 1): a zero row followed by the N-1
    consecutive non-overlapping d-blocks of the output stream. Otherwise
    gcd = m > 1 and m short loops are generated: loop j starts at v_j and
    advances in steps of d for (N-1)/m rows; loops are concatenated in
    order j = 1..m after the zero row.
    """
    if d < 1:
        raise ValueError("d >= 1 required")
    period = params.period
    n_rows = period + 1
    v = lfsr_values_u32(params)  # v_1..v_P scaled by 2^32, index i-1
    m = math.gcd(d, period)
    cols = np.arange(d, dtype=np.int64)
    if m == 1:
        starts = np.arange(period, dtype=np.int64) * d
    else:
        per_loop = period // m
        j = np.repeat(np.arange(m, dtype=np.int64), per_loop)
        r = np.tile(np.arange(per_loop, dtype=np.int64), m)
        starts = j + r * d
    body = v[(starts[:, None] + cols[None, :]) % period]
    out = np.zeros((n_rows, d), dtype=np.uint32)
    out[1:] = body
    return VariableMatrix(out.astype(np.float64) / _SCALE, "Harase")


def random_shift(matrix: VariableMatrix, z: np.ndarray) -> VariableMatrix:
    """Entrywise a + z_j mod 1 (Cranley-Patterson rotation)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (matrix.n_cols,):
        raise ValueError("z must have one value per column")
    shifted = (matrix.entries + z[None, :]) % 1.0
    shifted[shifted >= 1.0] = 0.0  # guard against rounding at the seam
    return VariableMatrix(shifted, matrix.provenance, ("random-shift", z.copy()))


def digital_shift(matrix: VariableMatrix, z: np.ndarray) -> VariableMatrix:
    """XOR of binary digits with those of z_j, truncated at 32 digits."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (matrix.n_cols,):
        raise ValueError("z must have one value per column")
    xi = np.floor(matrix.entries * _SCALE).astype(np.uint64).astype(np.uint32)
    zi = np.floor(z * _SCALE).astype(np.uint64).astype(np.uint32)
    shifted = np.bitwise_xor(xi, zi[None, :]).astype(np.float64) / _SCALE
    return VariableMatrix(shifted, matrix.provenance, ("digital-shift", z.copy()))


@dataclass
class RowProvider:
    """Single-consumer source of driving rows row(1), row(2), ...

    Policy 'case2' (default): rows 1..k-1 iid, rows k..k+N-1 the core matrix
    in order, later rows iid overflow. Policy 'case1': the core matrix
    occupies rows 1..N (burn-in consumes its head), iid overflow afterwards.
    With no core matrix every row is iid (the fully-IID driving method).
    """

    d: int
    k: int
    core: VariableMatrix | None
    burnin_rng: np.random.Generator
    overflow_rng: np.random.Generator
    policy: str = "case2"
    _next: int = field(default=1, init=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k >= 1 required")
        if self.core is not None and self.core.n_cols != self.d:
            raise ValueError("core matrix column count differs from d")
        if self.policy not in ("case1", "case2"):
            raise ValueError(f"unknown burn-in policy {self.policy!r}")

    @property
    def core_rows(self) -> int:
        return 0 if self.core is None else self.core.n_rows

    def row(self, t: int) -> np.ndarray:
        if t != self._next:
            raise RuntimeError(
                f"rows must be consumed in order: asked for {t}, expected {self._next}"
            )
        self._next += 1
        if self.core is None:
            src = self.burnin_rng if t < self.k else self.overflow_rng
            return src.random(self.d)
        start = 1 if self.policy == "case1" else self.k
        if t < start:
            return self.burnin_rng.random(self.d)
        if t < start + self.core.n_rows:
            return self.core.entries[t - start]
        return self.overflow_rng.random(self.d)


def make_row_provider(
    core: VariableMatrix | None,
    k: int,
    burnin_rng: np.random.Generator,
    overflow_rng: np.random.Generator,
    policy: str = "case2",
    d: int | None = None,
) -> RowProvider:
    if core is None and d is None:
        raise ValueError("d required when no core matrix is given")
    return RowProvider(
        d=core.n_cols if core is not None else d,
        k=k,
        core=core,
        burnin_rng=burnin_rng,
        overflow_rng=overflow_rng,
        policy=policy,
    )


# ---------------------------------------------------------------------------
# Star discrepancy

_MAX_CELLS = 1 << 24


def star_discrepancy(points: np.ndarray) -> float:
    """Exact D*_N for small point sets (d <= 3 and a bounded corner grid).

    The sup over anchored boxes [0, z) is attained as z approaches corners of
    the grid formed by the point coordinates and 1; open and closed boxes are
    both evaluated (strict and non-strict counts).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2:
        raise ValueError("points must be (N, d)")
    n, d = pts.shape
    if n < 1:
        raise ValueError("need at least one point")
    if ((pts < 0) | (pts >= 1)).any():
        raise ValueError("points must lie in [0, 1)^d")
    if d > 3:
        raise ValueError(f"exact star discrepancy limited to d <= 3 (got d={d})")
    grids = [np.unique(np.concatenate([pts[:, j], [1.0]])) for j in range(d)]
    sizes = [g.size for g in grids]
    if math.prod(sizes) > _MAX_CELLS:
        raise ValueError(
            f"corner grid {sizes} exceeds the exact-computation limit ({_MAX_CELLS} cells)"
        )
    # pos[i, j]: index of pts[i, j] in grids[j]
    pos = np.stack(
        [np.searchsorted(grids[j], pts[:, j]) for j in range(d)], axis=1
    )
    hist = np.zeros(sizes, dtype=np.int32)
    np.add.at(hist, tuple(pos[:, j] for j in range(d)), 1)
    for axis in range(d):
        np.cumsum(hist, axis=axis, out=hist)
    # hist[i] now counts points with pos_j <= i_j for all j (non-strict).
    closed = hist
    padded = np.zeros([s + 1 for s in sizes], dtype=np.int32)
    padded[(slice(1, None),) * d] = closed
    strict = padded[(slice(0, -1),) * d]  # counts with pos_j <= i_j - 1
    vol = grids[0].reshape([-1] + [1] * (d - 1)).copy()
    for j in range(1, d):
        shape = [1] * d
        shape[j] = -1
        vol = vol * grids[j].reshape(shape)
    over = closed / n - vol
    under = vol - strict / n
    return float(max(over.max(), under.max(), 0.0))


def star_discrepancy_lower_bound(
    points: np.ndarray, n_boxes: int = 4096, rng: np.random.Generator | None = None
) -> float:
    """Monte Carlo lower bound on D*_N for dimensions beyond the exact limit."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, d = pts.shape
    rng = rng or np.random.default_rng(0)
    corners = rng.random((n_boxes, d))
    best = 0.0
    for z in corners:
        vol = float(np.prod(z))
        a_strict = float((pts < z[None, :]).all(axis=1).sum())
        a_closed = float((pts <= z[None, :]).all(axis=1).sum())
        best = max(best, abs(a_strict / n - vol), abs(a_closed / n - vol))
    return best
