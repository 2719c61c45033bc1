"""Forbidden sectors of central fields, crossing spirals, and planarity diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

from .errors import DegenerateCurvature, DomainError, NoIntersection, NonPositiveExponent
from .solver import CurveSolution


# -- forbidden sector ---------------------------------------------------------

@dataclass(frozen=True)
class SectorReport:
    n_exp: float
    c0: float
    theta: float
    theta_limit: float
    max_angle: float
    sector_central_angle: float
    D: float


def _den(log_x: float, n: float, log_c0: float) -> float:
    # 1 - c0^n x^(-2n/(n+2))
    return -math.expm1(n * log_c0 - 2.0 * n / (n + 2.0) * log_x)


def _num(x: float, one_minus_x2: float, n: float, log_c0: float, one_minus_xp: float) -> float:
    # (1 - x^2) - c0^n (1 - x^(4/(n+2)))
    return one_minus_x2 - math.exp(n * log_c0) * one_minus_xp


def sector_angle(n_exp: float, c0: float) -> SectorReport:
    """Polar angle swept from the start radius 1 down to the turning radius ``c0``.

    The angle is evaluated in the variable ``x = (c0 / w)^((n+2)/2)``, in
    which it reads ``-(2/(n+2)) int dx / sqrt(Q(x) - x^2)`` over
    ``[c0^((n+2)/2), 1]`` with ``Q = (1 - c0^n) / (1 - c0^n x^(-2n/(n+2)))``.
    The returned ``theta`` is negative (clockwise sweep); the forbidden
    sector bound is on its magnitude.
    """
    if not n_exp > 0:
        raise NonPositiveExponent(f"field exponent must be positive, got {n_exp!r}")
    if not 0.0 < c0 < 1.0:
        raise DomainError(f"turning radius must lie in (0, 1), got {c0!r}")
    n = float(n_exp)
    log_c0 = math.log(c0)
    k = 2.0 * n / (n + 2.0)
    p = 4.0 / (n + 2.0)
    x_lo = math.exp(0.5 * (n + 2.0) * log_c0)

    def near_one(t):
        # x = 1 - t^2 absorbs the inverse square root at x = 1
        t2 = t * t
        lg = math.log1p(-t2)
        g = -math.expm1(p * lg) / t2 if t2 > 0 else p
        m = (2.0 - t2) - math.exp(n * log_c0) * g
        return 2.0 * math.sqrt(max(_den(lg, n, log_c0), 0.0) / m)

    def near_lo(y):
        # x = x_lo e^y, so c0^n x^(-k) = e^(-k y); den / y is finite at y = 0
        x = x_lo * math.exp(y)
        ratio = k if y <= 0 else -math.expm1(-k * y) / y
        num = _num(x, 1.0 - x * x, n, log_c0, -math.expm1(p * math.log(x)))
        return x * math.sqrt(ratio / num)

    def near_lo_t(t):
        # same endpoint treatment in the t variable when x_lo is close to 1
        t2 = t * t
        lg = math.log1p(-t2)
        if t >= t_max:
            ratio = 2.0 * k * t_max / (1.0 - t_max * t_max)
        else:
            ratio = _den(lg, n, log_c0) / (t_max - t)
        g = -math.expm1(p * lg) / t2 if t2 > 0 else p
        m = (2.0 - t2) - math.exp(n * log_c0) * g
        return 2.0 * math.sqrt(max(ratio, 0.0) / m)

    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=200)
    if x_lo < 0.5:
        y_hi = math.log(0.5) - 0.5 * (n + 2.0) * log_c0
        head, _ = integrate.quad(near_lo, 0.0, y_hi, weight="alg", wvar=(0.5, 0.0), **opts)
        tail, _ = integrate.quad(near_one, 0.0, math.sqrt(0.5), **opts)
    else:
        t_max = math.sqrt(-math.expm1(0.5 * (n + 2.0) * log_c0))
        head, _ = integrate.quad(near_one, 0.0, 0.5 * t_max, **opts)
        tail, _ = integrate.quad(near_lo_t, 0.5 * t_max, t_max, weight="alg", wvar=(0.0, 0.5), **opts)
    val = head + tail
    theta = -2.0 / (n + 2.0) * val
    limit = math.pi / (n + 2.0)
    return SectorReport(
        n_exp=n,
        c0=c0,
        theta=theta,
        theta_limit=limit,
        max_angle=2.0 * abs(theta),
        sector_central_angle=2.0 * math.pi * n / (n + 2.0),
        D=c0 ** (-n - 2.0) - c0 ** (-2.0),
    )


def sector_limit_convergence(n_exp: float, c0_sequence: Sequence[float]) -> list:
    """``(c0, |theta|)`` for a strictly decreasing sequence of turning radii."""
    seq = [float(c) for c in c0_sequence]
    if any(b >= a for a, b in zip(seq, seq[1:])):
        raise DomainError("c0 sequence must be strictly decreasing")
    return [(c, abs(sector_angle(n_exp, c).theta)) for c in seq]


# -- intersections ------------------------------------------------------------

@dataclass(frozen=True)
class Crossing:
    u: float
    v_a: float
    v_b: float
    time_a: float
    time_b: float

    @property
    def gap(self) -> float:
        return self.time_b - self.time_a


@dataclass(frozen=True)
class IntersectionReport:
    """Crossings of two curves from a common start, ordered along curve A.

    ``gap`` is ``time_b - time_a`` at the first crossing, so ``winner`` is
    ``"a"`` when the gap is positive.  ``coincident`` marks identical curves.
    """

    crossings: tuple
    winner: Optional[str]
    gap: float
    coincident: bool = False

    @property
    def first(self) -> Optional[Crossing]:
        return self.crossings[0] if self.crossings else None


def _segment_hits(P, Q, tol):
    """Index pairs (i, j, ta, tb) of crossing segments of polylines P and Q."""
    p0, p1 = P[:-1], P[1:]
    q0, q1 = Q[:-1], Q[1:]
    r = p1 - p0
    w = q1 - q0
    # bounding-box prefilter
    pmin, pmax = np.minimum(p0, p1), np.maximum(p0, p1)
    qmin, qmax = np.minimum(q0, q1), np.maximum(q0, q1)
    overlap = ((pmin[:, None, 0] <= qmax[None, :, 0] + tol) & (qmin[None, :, 0] <= pmax[:, None, 0] + tol)
               & (pmin[:, None, 1] <= qmax[None, :, 1] + tol) & (qmin[None, :, 1] <= pmax[:, None, 1] + tol))
    hits = []
    for i, j in zip(*np.nonzero(overlap)):
        denom = r[i, 0] * w[j, 1] - r[i, 1] * w[j, 0]
        if denom == 0.0:
            continue
        d = q0[j] - p0[i]
        ta = (d[0] * w[j, 1] - d[1] * w[j, 0]) / denom
        tb = (d[0] * r[i, 1] - d[1] * r[i, 0]) / denom
        if -1e-12 <= ta <= 1 + 1e-12 and -1e-12 <= tb <= 1 + 1e-12:
            hits.append((int(i), int(j), float(ta), float(tb)))
    return hits


def _chart(curve: CurveSolution):
    return np.column_stack([curve.u, curve.v])


def _order_key(curve: CurveSolution) -> bytes:
    return _chart(curve).tobytes() + np.asarray(curve.time, dtype=float).tobytes()


def _swapped(rep: IntersectionReport) -> IntersectionReport:
    crossings = sorted((Crossing(c.u, c.v_b, c.v_a, c.time_b, c.time_a) for c in rep.crossings),
                       key=lambda c: c.time_a)
    winner = {"a": "b", "b": "a"}.get(rep.winner)
    return IntersectionReport(crossings=tuple(crossings), winner=winner,
                              gap=-rep.gap if rep.gap else 0.0, coincident=rep.coincident)


def compare_intersecting(curve_a: CurveSolution, curve_b: CurveSolution,
                         tol: float = 1e-7) -> IntersectionReport:
    """Locate transversal crossings of two sampled curves and compare arrival times.

    On charts periodic in ``v`` (surfaces of revolution) crossings are found
    modulo the period.  The common start point is excluded.  The search runs
    on a fixed ordering of the pair, so swapping the inputs swaps the winner
    and negates the gap exactly.
    """
    if _order_key(curve_b) < _order_key(curve_a):
        return _swapped(_compare(curve_b, curve_a, tol))
    return _compare(curve_a, curve_b, tol)


def _compare(curve_a: CurveSolution, curve_b: CurveSolution, tol: float) -> IntersectionReport:
    A, B = _chart(curve_a), _chart(curve_b)
    if not np.allclose(A[0], B[0], atol=tol):
        raise ValueError("curves do not share a start point")
    if A.shape == B.shape and np.allclose(A, B, rtol=0, atol=1e-12):
        crossings = tuple(Crossing(float(u), float(v), float(v), float(ta), float(tb))
                          for (u, v), ta, tb in zip(A[1:], curve_a.time[1:], curve_b.time[1:]))
        return IntersectionReport(crossings=crossings, winner=None, gap=0.0, coincident=True)

    period = curve_a.problem.surface.v_period if curve_a.problem is not None else None
    shifts = [0]
    if period:
        lo = int(math.floor((A[:, 1].min() - B[:, 1].max()) / period)) - 1
        hi = int(math.ceil((A[:, 1].max() - B[:, 1].min()) / period)) + 1
        shifts = range(lo, hi + 1)

    spl_a = _splines(curve_a)
    spl_b = _splines(curve_b)
    start = A[0]
    found = []
    for k in shifts:
        off = np.array([0.0, k * period]) if period else np.zeros(2)
        for i, j, ta, tb in _segment_hits(A, B + off, tol):
            pa = curve_a.param[i] + ta * (curve_a.param[i + 1] - curve_a.param[i])
            pb = curve_b.param[j] + tb * (curve_b.param[j + 1] - curve_b.param[j])
            pa, pb = _refine(spl_a, spl_b, pa, pb, off,
                             (curve_a.param[i], curve_a.param[i + 1]),
                             (curve_b.param[j], curve_b.param[j + 1]))
            ua, va = spl_a[0](pa), spl_a[1](pa)
            if k == 0 and math.hypot(ua - start[0], va - start[1]) < max(tol, 1e-6):
                continue
            found.append(Crossing(u=float(ua), v_a=float(va), v_b=float(spl_b[1](pb)),
                                  time_a=float(spl_a[2](pa)), time_b=float(spl_b[2](pb))))
    # merge duplicates reported by adjacent segments
    found.sort(key=lambda c: c.time_a)
    unique = []
    for c in found:
        if unique and abs(c.u - unique[-1].u) < tol and abs(c.v_a - unique[-1].v_a) < tol:
            continue
        unique.append(c)
    if not unique:
        raise NoIntersection("curves do not cross away from their common start")
    gap = unique[0].gap
    winner = "a" if gap > 0 else ("b" if gap < 0 else None)
    return IntersectionReport(crossings=tuple(unique), winner=winner, gap=gap)


def _splines(curve: CurveSolution):
    p = curve.param
    return (CubicSpline(p, curve.u), CubicSpline(p, curve.v), CubicSpline(p, curve.time))


def _refine(spl_a, spl_b, pa, pb, off, box_a, box_b):
    def resid(x):
        return [spl_a[0](x[0]) - spl_b[0](x[1]) - off[0],
                spl_a[1](x[0]) - spl_b[1](x[1]) - off[1]]

    sol, info, ok, _ = optimize.fsolve(resid, [pa, pb], full_output=True, xtol=1e-14)
    if ok == 1 and box_a[0] - 1e-9 <= sol[0] <= box_a[1] + 1e-9 and box_b[0] - 1e-9 <= sol[1] <= box_b[1] + 1e-9:
        return float(sol[0]), float(sol[1])
    return pa, pb


# -- Frenet frames ------------------------------------------------------------

@dataclass(frozen=True)
class FrenetData:
    s: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    tau_raw: np.ndarray
    T: np.ndarray
    N: np.ndarray
    B: np.ndarray
    degenerate: np.ndarray
    residual_T: float
    residual_B: float
    extra: dict = field(default_factory=dict)


def _d1(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered first derivative along axis 0 (second order at the ends)."""
    out = np.gradient(y, h, axis=0, edge_order=2)
    out[2:-2] = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * h)
    return out


def _moving_average(y: np.ndarray, width: int = 5) -> np.ndarray:
    k = width // 2
    # odd reflection keeps linear trends intact at the ends
    pad = np.concatenate([2 * y[:1] - y[k:0:-1], y, 2 * y[-1:] - y[-2:-k - 2:-1]])
    kernel = np.ones(width) / width
    return np.stack([np.convolve(pad[:, c], kernel, mode="valid") for c in range(y.shape[1])], axis=1)


def _as_points(curve) -> np.ndarray:
    pts = curve.points if isinstance(curve, CurveSolution) else np.asarray(curve, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("expected an (N, 3) array of points")
    return pts


def frenet_profile(curve, n_resample: Optional[int] = None, trim: int = 12) -> FrenetData:
    """Finite-difference Frenet frames on a curve resampled uniformly in arc length.

    ``tau`` comes from binormals smoothed by a 5-point moving average;
    ``tau_raw`` from the unsmoothed ones.  Samples with curvature below
    ``1e-10`` are flagged in ``degenerate`` and carry NaN torsion.
    """
    pts = _as_points(curve)
    if len(pts) < 7:
        raise ValueError("need at least 7 samples")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 0])
    pts = pts[keep]
    chord = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    M = n_resample or max(4 * len(pts), 2000)
    spline = CubicSpline(chord, pts, axis=0)
    sig = np.linspace(0.0, chord[-1], M)
    h = sig[1] - sig[0]
    r = spline(sig)

    dr = _d1(r, h)
    speed = np.linalg.norm(dr, axis=1)
    T = dr / speed[:, None]
    dT = _d1(T, h) / speed[:, None]
    kappa = np.linalg.norm(dT, axis=1)
    degenerate = kappa < 1e-10
    # exact dT/ds is normal to T; drop the along-T part of the difference error
    N = dT - np.einsum("ij,ij->i", dT, T)[:, None] * T
    nN = np.linalg.norm(N, axis=1)
    N = N / np.where(degenerate | (nN == 0), 1.0, nN)[:, None]
    B = np.cross(T, N)

    def torsion(Bv):
        nB = np.linalg.norm(Bv, axis=1)
        Bn = Bv / np.where(nB == 0, 1.0, nB)[:, None]
        dB = _d1(Bn, h) / speed[:, None]
        return -np.einsum("ij,ij->i", dB, N), dB

    tau_raw, dB = torsion(B)
    tau, _ = torsion(_moving_average(B))
    tau_raw = np.where(degenerate, np.nan, tau_raw)
    tau = np.where(degenerate, np.nan, tau)
    if np.all(degenerate):
        raise DegenerateCurvature("curve is straight: curvature vanishes everywhere")

    sl = slice(trim, M - trim)
    good = ~degenerate[sl]
    res_T = float(np.max(np.linalg.norm(dT - kappa[:, None] * N, axis=1)[sl][good]))
    res_B = float(np.nanmax(np.linalg.norm(dB + tau_raw[:, None] * N, axis=1)[sl][good]))
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(r, axis=0), axis=1))])
    return FrenetData(s=s[sl], kappa=kappa[sl], tau=tau[sl], tau_raw=tau_raw[sl], T=T[sl],
                      N=N[sl], B=B[sl], degenerate=degenerate[sl], residual_T=res_T,
                      residual_B=res_B, extra={"spacing": h})


# -- planarity ----------------------------------------------------------------

@dataclass(frozen=True)
class PlaneFit:
    deviation: float
    point: np.ndarray
    normal: np.ndarray
    origin_distance: float

    def __iter__(self):
        yield self.deviation
        yield (self.point, self.normal)


def planarity_check(curve) -> PlaneFit:
    """Least-squares plane through the embedded samples and the largest offset from it."""
    pts = _as_points(curve)
    if len(pts) < 4:
        raise ValueError("need at least 4 samples")
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    normal = vt[-1] / np.linalg.norm(vt[-1])
    dev = float(np.max(np.abs((pts - centroid) @ normal)))
    return PlaneFit(deviation=dev, point=centroid, normal=normal,
                    origin_distance=float(abs(centroid @ normal)))


# -- curve distance -----------------------------------------------------------

def _point_to_polyline(points: np.ndarray, line: np.ndarray, chunk: int = 512) -> np.ndarray:
    a, b = line[:-1], line[1:]
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd == 0.0, 1.0, dd)
    out = np.empty(len(points))
    for k in range(0, len(points), chunk):
        p = points[k:k + chunk, None, :]
        t = np.clip(np.einsum("pij,ij->pi", p - a[None], d) / dd, 0.0, 1.0)
        near = a[None] + t[..., None] * d[None]
        out[k:k + chunk] = np.sqrt(np.min(np.sum((p - near) ** 2, axis=-1), axis=1))
    return out


def curve_gap(curve_a, curve_b) -> float:
    """Symmetric sup-norm (Hausdorff) distance between two chart polylines."""
    A = _chart(curve_a) if isinstance(curve_a, CurveSolution) else np.asarray(curve_a, dtype=float)
    B = _chart(curve_b) if isinstance(curve_b, CurveSolution) else np.asarray(curve_b, dtype=float)
    return float(max(_point_to_polyline(A, B).max(), _point_to_polyline(B, A).max()))
