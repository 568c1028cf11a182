"""PG(1, c) sampling by acceptance-rejection, driven or fully IID.

A PG(1, c) draw is X/4 with X from the tilted Jacobi density at z = |c|/2.
X comes from a two-piece proposal: inverse-Gaussian body on (0, t] and
exponential tail on (t, inf), t = 0.64, accepted through the alternating
series of the target density.

Three schemes connect driving-row values to the proposal draw; afterwards
everything runs on the IID stream:
  approach 1: IID component selector, driving value = chosen component's
      first uniform;
  approach 2: two driving values, selector then first uniform;
  approach 3: driving value inverted through the full proposal mixture CDF
      (safeguarded Newton); rejected proposals retry fully IID.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

_T = 0.64  # proposal truncation point
_EPS32 = 2.0**-32
_MAX_SERIES = 200
_MAX_NEWTON = 100


@dataclass(frozen=True)
class PgApproach:
    """Driving scheme selector: tag in {1, 2, 3}; Newton tolerance for tag 3."""

    tag: int
    newton_tol: float = 1e-8

    def __post_init__(self):
        if self.tag not in (1, 2, 3):
            raise ValueError(f"unknown approach tag {self.tag!r}")
        if not self.newton_tol > 0:
            raise ValueError("newton tolerance must be positive")

    def driving_values(self, n_components: int) -> int:
        """Driving-row values consumed for n_components PG draws."""
        return 2 * n_components if self.tag == 2 else n_components


APPROACH_1 = PgApproach(1)
APPROACH_2 = PgApproach(2)
APPROACH_3 = PgApproach(3)


def _clamp(u):
    return np.clip(np.asarray(u, dtype=np.float64), _EPS32, 1.0 - _EPS32)


def _pigauss(x, z):
    """P(IG(1/z, 1) <= x), z >= 0; z = 0 is the reciprocal-chi-square limit."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    rx = 1.0 / np.sqrt(x)
    return ndtr(rx * (x * z - 1.0)) + np.exp(2.0 * z + log_ndtr(-rx * (x * z + 1.0)))


def _ig_density(x, z):
    """Density of IG(1/z, 1) (derivative of _pigauss in x)."""
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-0.5 * (x * z - 1.0) ** 2 / x) / np.sqrt(2.0 * math.pi * x**3)


def _masses(z):
    """(K, exponential-piece mass, inverse-Gaussian-piece mass), unnormalized."""
    fz = math.pi**2 / 8.0 + 0.5 * z * z
    mass_exp = (math.pi / (2.0 * fz)) * np.exp(-fz * _T)
    mass_ig = 2.0 * np.exp(-z) * _pigauss(_T, z)
    return fz, mass_exp, mass_ig


def _series_coef(n, x):
    """a_n(x): alternating-series coefficients, piecewise at x = t."""
    x = np.asarray(x, dtype=np.float64)
    h = n + 0.5
    small = x <= _T
    out = np.empty_like(x)
    xs = x[small]
    out[small] = math.pi * h * (2.0 / (math.pi * xs)) ** 1.5 * np.exp(-2.0 * h * h / xs)
    xl = x[~small]
    out[~small] = math.pi * h * np.exp(-0.5 * h * h * math.pi**2 * xl)
    return out


def _series_accept(x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, int]:
    """Alternating-series accept/reject for proposals x; returns (accepted, depth)."""
    a0 = _series_coef(0, x)
    y = u * a0
    s = a0.copy()
    ok = np.zeros(x.shape, dtype=bool)
    open_ = np.ones(x.shape, dtype=bool)
    n = 0
    while open_.any():
        n += 1
        if n > _MAX_SERIES:
            raise RuntimeError(
                f"series accept/reject undecided after {_MAX_SERIES} terms"
            )
        idx = np.flatnonzero(open_)
        an = _series_coef(n, x[idx])
        if n % 2 == 1:
            s[idx] -= an
            hit = idx[y[idx] <= s[idx]]
            ok[hit] = True
            open_[hit] = False
        else:
            s[idx] += an
            open_[idx[y[idx] > s[idx]]] = False
    return ok, n


def _rtigauss(z: np.ndarray, iid: np.random.Generator, first_u=None) -> np.ndarray:
    """IG(1/z, 1) truncated to (0, t], elementwise; first_u drives the first
    random quantity of each element's first attempt (rejections are IID)."""
    z = np.asarray(z, dtype=np.float64)
    x = np.empty(z.shape, dtype=np.float64)
    wide = z < 1.0 / _T  # mean 1/z beyond the truncation point (z = 0 included)

    idx = np.flatnonzero(wide)
    first_round = True
    while idx.size:
        k = idx.size
        if first_round and first_u is not None:
            e1 = -np.log1p(-_clamp(first_u[idx]))
        else:
            e1 = iid.standard_exponential(k)
        e2 = iid.standard_exponential(k)
        bad = e1 * e1 > 2.0 * e2 / _T
        while bad.any():
            nb = int(bad.sum())
            e1[bad] = iid.standard_exponential(nb)
            e2[bad] = iid.standard_exponential(nb)
            bad = e1 * e1 > 2.0 * e2 / _T
        cand = _T / (1.0 + _T * e1) ** 2
        accept = iid.random(k) < np.exp(-0.5 * z[idx] ** 2 * cand)
        x[idx[accept]] = cand[accept]
        idx = idx[~accept]
        first_round = False

    idx = np.flatnonzero(~wide)
    first_round = True
    while idx.size:
        k = idx.size
        if first_round and first_u is not None:
            zn = ndtri(_clamp(first_u[idx]))
        else:
            zn = iid.standard_normal(k)
        y = zn * zn
        mu = 1.0 / z[idx]
        cand = mu + 0.5 * mu * mu * y - 0.5 * mu * np.sqrt(4.0 * mu * y + (mu * y) ** 2)
        flip = iid.random(k) > mu / (mu + cand)
        cand[flip] = mu[flip] ** 2 / cand[flip]
        inside = cand <= _T
        x[idx[inside]] = cand[inside]
        idx = idx[~inside]
        first_round = False
    return x


def _propose(z, fz, exp_weight, iid, sel_u=None, first_u=None) -> np.ndarray:
    """One proposal draw per element from the two-piece mixture."""
    k = z.size
    su = iid.random(k) if sel_u is None else _clamp(sel_u)
    x = np.empty(k, dtype=np.float64)
    take_exp = su < exp_weight
    ie = np.flatnonzero(take_exp)
    if ie.size:
        ue = iid.random(ie.size) if first_u is None else _clamp(first_u[ie])
        x[ie] = _T - np.log1p(-ue) / fz[ie]
    ii = np.flatnonzero(~take_exp)
    if ii.size:
        x[ii] = _rtigauss(z[ii], iid, None if first_u is None else first_u[ii])
    return x


def _mixture_inv_cdf(z: np.ndarray, u: np.ndarray, tol: float) -> np.ndarray:
    """Quantile of the two-piece proposal mixture, elementwise.

    Exponential tail inverts in closed form; the inverse-Gaussian body is
    solved by Newton iterations kept inside a shrinking bisection bracket
    (the CDF has a derivative kink at t, and the body CDF is flat near 0).
    """
    z = np.asarray(z, dtype=np.float64)
    u = _clamp(u)
    fz, mass_exp, mass_ig = _masses(z)
    w_ig = mass_ig / (mass_ig + mass_exp)
    x = np.empty(z.shape, dtype=np.float64)

    tail = u > w_ig
    x[tail] = _T - np.log1p(-(u[tail] - w_ig[tail]) / (1.0 - w_ig[tail])) / fz[tail]
    x[u == w_ig] = _T  # component seam maps to the truncation point exactly

    body = np.flatnonzero(u < w_ig)
    if body.size:
        zb = z[body]
        pig_t = _pigauss(_T, zb)
        scale = w_ig[body] / pig_t  # mixture-CDF units per pigauss unit
        target = u[body] / scale
        lo = np.full(body.size, 1e-10)
        hi = np.full(body.size, _T)
        xb = np.full(body.size, 0.5 * _T)
        done = np.zeros(body.size, dtype=bool)
        for it in range(_MAX_NEWTON):
            live = np.flatnonzero(~done)
            if live.size == 0:
                break
            f = _pigauss(xb[live], zb[live]) - target[live]
            conv = np.abs(f) * scale[live] <= tol
            done[live[conv]] = True
            live = live[~conv]
            if live.size == 0:
                break
            f = f[~conv]
            over = f > 0.0
            hi[live[over]] = xb[live[over]]
            lo[live[~over]] = xb[live[~over]]
            step = xb[live] - f / np.maximum(_ig_density(xb[live], zb[live]), 1e-300)
            inside = (step > lo[live]) & (step < hi[live])
            xb[live] = np.where(inside, step, 0.5 * (lo[live] + hi[live]))
        if not done.all():
            # pure bisection sweep; the bracket is valid by construction
            for _ in range(200):
                live = np.flatnonzero(~done)
                if live.size == 0:
                    break
                xb[live] = 0.5 * (lo[live] + hi[live])
                f = _pigauss(xb[live], zb[live]) - target[live]
                done[live[np.abs(f) * scale[live] <= tol]] = True
                over = f > 0.0
                hi[live[over]] = np.minimum(hi[live[over]], xb[live[over]])
                lo[live[~over]] = np.maximum(lo[live[~over]], xb[live[~over]])
            if not done.all():
                raise RuntimeError("proposal mixture CDF inversion did not converge")
        x[body] = xb
    return x


def pg_proposal_inv_cdf(c: float, u: float, tol: float = 1e-8) -> float:
    """Quantile of the PG proposal mixture at z = |c|/2."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly inside (0, 1)")
    z = np.asarray([abs(c) / 2.0])
    return float(_mixture_inv_cdf(z, np.asarray([u]), tol)[0])


def pg_proposal_cdf(c: float, x) -> np.ndarray:
    """CDF of the PG proposal mixture at z = |c|/2 (test and audit utility)."""
    z = abs(c) / 2.0
    fz, mass_exp, mass_ig = _masses(np.float64(z))
    w_ig = mass_ig / (mass_ig + mass_exp)
    x = np.asarray(x, dtype=np.float64)
    body = w_ig * _pigauss(np.minimum(x, _T), z) / _pigauss(_T, z)
    tail = (1.0 - w_ig) * -np.expm1(-fz * np.maximum(x - _T, 0.0))
    return np.where(x <= 0.0, 0.0, body + tail)


def pg_sample_vector(
    c,
    approach: PgApproach,
    u_first,
    iid: np.random.Generator,
    stats: dict | None = None,
) -> np.ndarray:
    """One PG(1, c_i) draw per element of c.

    u_first holds the driving-row values: shape (n,) for approaches 1 and 3,
    (2, n) for approach 2 (row 0 selectors, row 1 first uniforms). Pass
    u_first = None for a fully IID draw (the residual-sampler mode used by
    the second chain). Counters accumulate into stats when given.
    """
    c = np.atleast_1d(np.asarray(c, dtype=np.float64))
    n = c.size
    z = 0.5 * np.abs(c)
    fz, mass_exp, mass_ig = _masses(z)
    exp_weight = mass_exp / (mass_exp + mass_ig)

    sel0 = first0 = None
    invert_round0 = False
    if u_first is not None:
        u_first = np.asarray(u_first, dtype=np.float64)
        if approach.tag == 2:
            if u_first.shape != (2, n):
                raise ValueError("approach 2 needs u_first with shape (2, n)")
            sel0, first0 = u_first[0], u_first[1]
        else:
            if u_first.shape != (n,):
                raise ValueError("u_first must have one value per component")
            if approach.tag == 1:
                first0 = u_first
            else:
                invert_round0 = True

    x = np.empty(n, dtype=np.float64)
    active = np.arange(n)
    proposals = 0
    depth = 0
    first_round = True
    while active.size:
        k = active.size
        if first_round and invert_round0:
            cand = _mixture_inv_cdf(z[active], u_first[active], approach.newton_tol)
        elif first_round and (sel0 is not None or first0 is not None):
            cand = _propose(
                z[active], fz[active], exp_weight[active], iid,
                None if sel0 is None else sel0[active],
                None if first0 is None else first0[active],
            )
        else:
            cand = _propose(z[active], fz[active], exp_weight[active], iid)
        proposals += k
        ok, d = _series_accept(cand, iid.random(k))
        depth = max(depth, d)
        x[active[ok]] = cand[ok]
        active = active[~ok]
        first_round = False

    if stats is not None:
        stats["pg_proposals"] = stats.get("pg_proposals", 0) + proposals
        stats["pg_rejections"] = stats.get("pg_rejections", 0) + proposals - n
        stats["pg_series_depth"] = max(stats.get("pg_series_depth", 0), depth)
    return 0.25 * x


def pg_sample(
    c: float,
    approach: PgApproach,
    u_first,
    iid: np.random.Generator,
    stats: dict | None = None,
) -> float:
    """Single PG(1, c) draw; see pg_sample_vector for the driving conventions."""
    if u_first is None:
        uf = None
    else:
        uf = np.reshape(np.asarray(u_first, dtype=np.float64), (2, 1) if approach.tag == 2 else (1,))
    return float(pg_sample_vector(np.asarray([c]), approach, uf, iid, stats)[0])


def pg_density_ratio(x, c1, c2):
    """Density ratio PG(1,c2) over PG(1,c1) at x:
    cosh(c2/2)/cosh(c1/2) * exp(-(c2^2 - c1^2) x / 2)."""
    return np.exp(pg_log_density_ratio(x, c1, c2))


def pg_log_density_ratio(x, c1, c2):
    x = np.asarray(x, dtype=np.float64)
    c1 = np.asarray(c1, dtype=np.float64)
    c2 = np.asarray(c2, dtype=np.float64)
    return _log_cosh(0.5 * c2) - _log_cosh(0.5 * c1) - 0.5 * (c2 * c2 - c1 * c1) * x


def _log_cosh(a):
    a = np.abs(a)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def pg_density_series(x, c: float, terms: int = 200) -> np.ndarray:
    """PG(1, c) density via the truncated alternating series (oracle utility)."""
    x = np.asarray(x, dtype=np.float64)
    v = 4.0 * x  # underlying tilted-Jacobi argument
    total = np.zeros_like(v)
    for n in range(terms):
        total += (1 - 2 * (n % 2)) * _series_coef(n, v)
    tilt = np.exp(_log_cosh(0.5 * c) - 0.125 * c * c * v)
    return 4.0 * tilt * total
