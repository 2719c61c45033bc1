"""Minimal-time curves and light rays by separated quadrature.

When the metric and the field do not depend on one chart coordinate, the
Euler-Lagrange equation for the travel time has the first integral
``dF/df' = C`` and the curve reduces to a single quadrature of the free
coordinate ``f`` against the independent coordinate ``s``::

    df/ds = +- sqrt(C^2 b q / (a (a - C^2 q)))

Here ``a`` is the metric coefficient of the free coordinate, ``b`` that of
the independent one and ``q`` is ``V0 - V`` for a falling particle or
``1/n^2`` for a light ray.  Time accumulates as
``dt/ds = k sqrt(a b / (q (a - C^2 q)))`` with ``k`` the medium's time factor.

Both integrands carry inverse-square-root endpoint singularities: ``dt/ds``
at the start (``q = 0``) and both at the turning point (``a = C^2 q``).
Each leg is therefore integrated in the angle ``theta`` of
``s = s0 + sigma L (1 - cos theta) / 2``, which makes the integrands smooth
on ``[0, pi]`` and continues straight through the turning point into the
return leg on ``[pi, 2 pi]``.  For the vertical plane ``theta`` is exactly
the rolling angle of the cycloid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import optimize

from .errors import (
    DomainError,
    NoBracket,
    NoTurningPoint,
    SingularStart,
    SymmetryMismatch,
    TargetUnreachable,
)
from .geometry import SurfacePatch, coefficient_independent_of
from .media import SQRT_HALF, Medium, Potential, Symmetry, check_symmetry

TWO_PI = 2.0 * math.pi


class Branch(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> float:
        return 1.0 if self is Branch.PLUS else -1.0

    @property
    def flipped(self) -> "Branch":
        return Branch.MINUS if self is Branch.PLUS else Branch.PLUS


@dataclass(frozen=True)
class SolverConfig:
    """Integration constant and numerical controls.

    ``C`` is never negative; the side of the curve is set by ``branch``.
    On the relativistic medium ``C`` plays the role of the ray constant k.
    """

    C: float = 0.0
    branch: Branch = Branch.PLUS
    quad_tol: float = 1e-10
    root_tol: float = 1e-12
    max_windings: int = 8

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch(self.branch))
        if not (self.C >= 0 and math.isfinite(self.C)):
            raise ValueError(f"C must be finite and >= 0, got {self.C!r}")
        if not (self.quad_tol > 0 and self.root_tol > 0):
            raise ValueError("quad_tol and root_tol must be positive")
        if self.max_windings < 1:
            raise ValueError("max_windings must be at least 1")

    @property
    def D(self) -> float:
        return math.inf if self.C == 0 else 1.0 / (self.C * self.C)


@dataclass(frozen=True)
class StopRule:
    """Where to stop sampling.

    ``target`` is a value of the independent coordinate.  With
    ``leg="return"`` the curve is continued through its turning point and
    the target (or, without one, the return to the start level) is sought
    on the way back.  ``span`` bounds the search on unbounded charts when no
    turning point exists.
    """

    target: Optional[float] = None
    leg: str = "outbound"
    n_samples: int = 200
    refine_levels: int = 12
    span: float = 20.0

    def __post_init__(self):
        if self.leg not in ("outbound", "return"):
            raise ValueError(f"leg must be 'outbound' or 'return', got {self.leg!r}")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")


@dataclass(frozen=True)
class TurningPoint:
    c0: float
    param: float
    free: float = math.nan
    time: float = math.nan


@dataclass(frozen=True)
class ReducedProblem:
    """A symmetric surface/field pair reduced to functions of one coordinate.

    ``case`` is 1 when the ignorable coordinate is ``u`` (curve ``u(v)``)
    and 2 when it is ``v`` (curve ``v(u)``).  ``sigma`` is the sign of the
    initial motion of the independent coordinate.
    """

    surface: SurfacePatch
    source: Union[Potential, Medium]
    case: int
    s0: float
    f0: float
    sigma: float
    V0: float
    time_factor: float
    label: str = ""

    def point(self, s: float, f: float) -> tuple[float, float]:
        return (f, s) if self.case == 1 else (s, f)

    def split(self, u: float, v: float) -> tuple[float, float]:
        """(independent, free) coordinates of a chart point."""
        return (v, u) if self.case == 1 else (u, v)

    @property
    def free_name(self) -> str:
        return "u" if self.case == 1 else "v"

    def a(self, s: float) -> float:
        u, v = self.point(s, self.f0)
        return self.surface.E(u, v) if self.case == 1 else self.surface.G(u, v)

    def b(self, s: float) -> float:
        u, v = self.point(s, self.f0)
        return self.surface.G(u, v) if self.case == 1 else self.surface.E(u, v)

    def q(self, s: float) -> float:
        u, v = self.point(s, self.f0)
        if isinstance(self.source, Potential):
            return self.V0 - self.source.V(u, v)
        return self.source.inv_n2(u, v)

    def psi(self, s: float, C: float) -> float:
        return self.a(s) - C * C * self.q(s)

    def slope(self, s: float, C: float) -> float:
        """``|df/ds|``."""
        a, b, q = self.a(s), self.b(s), self.q(s)
        return math.sqrt(C * C * b * q / (a * (a - C * C * q)))

    def rate(self, s: float, C: float) -> float:
        """``dt/|ds|``."""
        a, b, q = self.a(s), self.b(s), self.q(s)
        return self.time_factor * math.sqrt(a * b / (q * (a - C * C * q)))

    def limit_distance(self) -> float:
        """Distance from ``s0`` to the chart boundary in the direction of motion."""
        idx = 1 if self.case == 1 else 0
        lo, hi = self.surface.domain[idx]
        bound = hi if self.sigma > 0 else lo
        return abs(bound - self.s0)

    def free_bounds(self) -> tuple[float, float]:
        return self.surface.domain[0 if self.case == 1 else 1]


@dataclass(frozen=True)
class CurveSolution:
    """Sampled solution curve.  ``slope`` is ``df/ds`` at each sample."""

    param: np.ndarray
    u: np.ndarray
    v: np.ndarray
    points: np.ndarray
    time: np.ndarray
    slope: np.ndarray
    turning: Optional[TurningPoint]
    total_time: float
    config: SolverConfig
    stop: StopRule
    stop_reason: str
    truncated: bool = False
    meta: dict = field(default_factory=dict, compare=False)
    problem: Optional[ReducedProblem] = field(default=None, compare=False, repr=False)

    def __len__(self):
        return len(self.param)

    @property
    def samples(self) -> list:
        return list(zip(self.param, self.u, self.v, self.points, self.time))

    @property
    def independent(self) -> np.ndarray:
        return self.v if self.problem.case == 1 else self.u

    @property
    def free(self) -> np.ndarray:
        return self.u if self.problem.case == 1 else self.v


# -- quadrature helpers -------------------------------------------------------

def _derivative(fn, x: float, scale: float) -> float:
    h = 1e-6 * max(scale, 1e-12)
    return (fn(x + h) - fn(x - h)) / (2 * h)


class _Antiderivative:
    """Piecewise Chebyshev antiderivative of a smooth function on ``[a, b]``.

    Pieces are refined by degree doubling and then bisection until the
    trailing coefficients are below the requested absolute tolerance.  The
    integrand is only ever evaluated at interior Chebyshev points.
    """

    DEGREES = (16, 32, 64, 128, 256)
    MAX_DEPTH = 14

    def __init__(self, fn, a: float, b: float, tol: float):
        self.a, self.b = a, b
        self.pieces = []
        if b > a:
            vec = lambda x: np.array([fn(float(t)) for t in np.atleast_1d(x)])
            self._fit(vec, a, b, tol, 0)
        self.edges = np.array([p[0] for p in self.pieces] + [b])
        self.offsets = np.concatenate([[0.0], np.cumsum([p[2] for p in self.pieces])])

    def _fit(self, fn, a, b, tol, depth):
        width = b - a
        eps = np.finfo(float).eps
        prev_tail = math.inf
        for deg in self.DEGREES:
            cheb = Chebyshev.interpolate(fn, deg, domain=[a, b])
            c = np.abs(cheb.coef)
            tail = c[-max(4, deg // 4):].max()
            converged = tail * width < max(1e-2 * tol, 32 * eps * c.max() * width)
            # rounding noise near a root of psi puts a floor under the tail
            plateau = deg >= 64 and tail > 0.25 * prev_tail and tail < 1e-7 * c.max()
            if converged or plateau:
                anti = cheb.integ(lbnd=a)
                self.pieces.append((a, anti, float(anti(b))))
                return
            prev_tail = tail
        if depth >= self.MAX_DEPTH:
            anti = cheb.integ(lbnd=a)
            self.pieces.append((a, anti, float(anti(b))))
            return
        mid = 0.5 * (a + b)
        self._fit(fn, a, mid, 0.5 * tol, depth + 1)
        self._fit(fn, mid, b, 0.5 * tol, depth + 1)

    @property
    def total(self) -> float:
        return float(self.offsets[-1])

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(len(t))
        if not self.pieces:
            return out
        idx = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.pieces) - 1)
        for k in np.unique(idx):
            mask = idx == k
            out[mask] = self.offsets[k] + self.pieces[k][1](np.clip(t[mask], self.a, self.b))
        return out


class _Leg:
    """Integrands of one solution family expressed in a smooth parameter.

    With a turning point ``s_c`` the parameter is ``theta`` in ``[0, 2 pi]``;
    without one it is ``tau`` in ``[0, 1]`` with ``s = s0 + sigma L tau^2``.
    """

    def __init__(self, problem: ReducedProblem, C: float, s_c: Optional[float],
                 length: float):
        self.p = problem
        self.C = C
        self.s_c = s_c
        self.L = abs(s_c - problem.s0) if s_c is not None else length
        step = self.L
        self.dq0 = abs(_derivative(problem.q, problem.s0, step))
        self.dpsi_c = (abs(_derivative(lambda s: problem.psi(s, C), s_c, step))
                       if s_c is not None else math.nan)
        # s_c is a float root; shift psi so that it vanishes exactly there
        self.psi_c = problem.psi(s_c, C) if s_c is not None else 0.0

    @property
    def turning(self) -> bool:
        return self.s_c is not None

    def s_of(self, t: float) -> float:
        p = self.p
        if not self.turning:
            return p.s0 + p.sigma * self.L * t * t
        # half-angle forms keep the distance to the nearer endpoint exact
        w = math.remainder(t, TWO_PI)
        if abs(w) <= 0.5 * math.pi:
            return p.s0 + p.sigma * self.L * math.sin(0.5 * t) ** 2
        return self.s_c - p.sigma * self.L * math.cos(0.5 * t) ** 2

    def param_of_fraction(self, x: float, back: bool = False) -> float:
        """Parameter at fraction ``x`` of the leg length from ``s0``."""
        if self.turning:
            th = 2.0 * math.asin(math.sqrt(min(1.0, max(0.0, x))))
            return TWO_PI - th if back else th
        return math.sqrt(max(x, 0.0))

    def jac(self, t: float) -> float:
        if self.turning:
            return 0.5 * self.L * abs(math.sin(t))
        return 2.0 * self.L * t

    def _parts(self, t):
        p = self.p
        s = self.s_of(t)
        a, b, q = p.a(s), p.b(s), p.q(s)
        return s, a, b, q, a - self.C * self.C * q - self.psi_c

    def dfree(self, t: float) -> float:
        s, a, b, q, psi = self._parts(t)
        C2 = self.C * self.C
        if C2 == 0.0:
            return 0.0
        J = self.jac(t)
        if psi <= 0.0:
            # at the turning point: sqrt(C^2 b q / a) * sqrt(L / |psi'|)
            return math.sqrt(C2 * b * max(q, 0.0) / a) * math.sqrt(self.L / self.dpsi_c)
        return math.sqrt(C2 * b * max(q, 0.0) / (a * psi)) * J

    def dtime(self, t: float) -> float:
        s, a, b, q, psi = self._parts(t)
        k = self.p.time_factor
        J = self.jac(t)
        if q <= 0.0:
            # at the start level: k sqrt(a b / psi) * sqrt(L / |q'|)
            scale = math.sqrt(self.L / self.dq0)
            return k * math.sqrt(a * b / psi) * (scale if self.turning else 2.0 * scale)
        if psi <= 0.0:
            return k * math.sqrt(a * b / q) * math.sqrt(self.L / self.dpsi_c)
        return k * math.sqrt(a * b / (q * psi)) * J

    def antiderivatives(self, t0: float, t1: float, tol: float):
        return (_Antiderivative(self.dfree, t0, t1, tol),
                _Antiderivative(self.dtime, t0, t1, tol))

    def integrate(self, fn, t0: float, t1: float, tol: float) -> float:
        return _Antiderivative(fn, t0, t1, tol).total

    def cumulative(self, params, tol: float):
        params = np.asarray(params, dtype=float)
        F, T = self.antiderivatives(float(params[0]), float(params[-1]), tol)
        return F(params), T(params), (F, T)


def _fractions(n: int, levels: int, start: bool, end: bool) -> np.ndarray:
    x = np.linspace(0.0, 1.0, n + 1)
    h = 1.0 / n
    extra = []
    geo = h * 0.5 ** np.arange(1, levels + 1)
    if start:
        extra.append(geo)
    if end:
        extra.append(1.0 - geo)
    if extra:
        x = np.concatenate([x] + extra)
    return np.unique(x)


# -- field reduction ----------------------------------------------------------

def _reduce(surface: SurfacePatch, source, A, direction: Optional[float]) -> ReducedProblem:
    u0, v0 = float(A[0]), float(A[1])
    if not surface.contains(u0, v0):
        raise SingularStart(f"start point ({u0!r}, {v0!r}) is not interior to {surface.name}")
    symmetry = source.symmetry
    ignored = symmetry.ignored
    if not coefficient_independent_of(surface, ignored):
        raise SymmetryMismatch(
            f"metric of {surface.name} depends on {ignored}; field declares {symmetry.value}"
        )
    check_symmetry(source, surface.sample_interior(24, seed=3))
    case = 1 if ignored == "u" else 2
    s0, f0 = (v0, u0) if case == 1 else (u0, v0)
    if isinstance(source, Potential):
        V0 = source.V(u0, v0)
        time_factor = SQRT_HALF
        label = source.name
    else:
        V0 = source.V0 if source.V0 is not None else math.nan
        time_factor = source.time_factor
        label = source.name
    p = ReducedProblem(surface=surface, source=source, case=case, s0=s0, f0=f0,
                       sigma=1.0, V0=V0, time_factor=time_factor, label=label)
    if direction is None:
        slope = _derivative(p.q, s0, max(1.0, abs(s0)))
        if slope == 0.0:
            if isinstance(source, Potential):
                raise SingularStart(f"field has no downhill direction at ({u0!r}, {v0!r})")
            direction = -1.0
        else:
            direction = math.copysign(1.0, slope)
    return replace(p, sigma=float(math.copysign(1.0, direction)))


def reduce_particle(surface: SurfacePatch, pot: Potential, A, direction=None) -> ReducedProblem:
    """Reduce a falling-particle problem; ``V0 = V(A)``."""
    return _reduce(surface, pot, A, direction)


def reduce_ray(surface: SurfacePatch, medium: Medium, A, direction=None) -> ReducedProblem:
    """Reduce a light-ray problem in ``medium``."""
    return _reduce(surface, medium, A, direction)


# -- turning points -----------------------------------------------------------

def turning_polynomial(w, n_exp: float, D: float):
    """``r(w) = D w^(n+2) + w^n - 1`` for the field ``V = -u^-n`` started at radius 1."""
    w = np.asarray(w, dtype=float)
    return D * w ** (n_exp + 2) + w ** n_exp - 1.0


def central_turning_radius(n_exp: float, D: float, root_tol: float = 1e-12) -> float:
    """Unique root of :func:`turning_polynomial` on ``(0, 1)``."""
    if not (D > 0 and math.isfinite(D)):
        raise ValueError(f"D must be positive and finite, got {D!r}")
    f = lambda w: float(turning_polynomial(w, n_exp, D))
    return optimize.brentq(f, 0.0, 1.0, xtol=root_tol * 1e-3, rtol=4 * np.finfo(float).eps,
                           maxiter=500)


def _scan_distances(limit: float) -> np.ndarray:
    if math.isfinite(limit):
        x = np.concatenate([np.logspace(-10, 0, 1500, endpoint=False),
                            1.0 - np.logspace(-1, -13, 300)])
        return np.unique(x) * limit
    return np.logspace(-8, 12, 3000)


def _find_turning_s(problem: ReducedProblem, C: float, root_tol: float,
                    limit: Optional[float] = None) -> Optional[float]:
    if C == 0.0:
        return None
    if limit is None:
        limit = problem.limit_distance()
    s0, sig = problem.s0, problem.sigma
    psi = lambda d: problem.psi(s0 + sig * d, C)
    if psi(0.0) <= 0.0:
        raise ValueError(f"C = {C!r} is too large: the curve cannot leave the start point")
    prev = 0.0
    for d in _scan_distances(limit):
        try:
            val = psi(float(d))
        except (OverflowError, ZeroDivisionError, ValueError):
            break
        if not math.isfinite(val):
            break
        if val <= 0.0:
            lo, hi = prev, float(d)
            if val == 0.0:
                root = hi
            else:
                root = optimize.brentq(psi, lo, hi, xtol=root_tol * 1e-3,
                                       rtol=4 * np.finfo(float).eps, maxiter=500)
            # keep psi >= 0 on [s0, s_c]
            for _ in range(64):
                if psi(root) >= 0.0:
                    break
                root = np.nextafter(root, 0.0)
            return s0 + sig * root
        prev = float(d)
    return None


def find_turning_point(surface: SurfacePatch, source, A, cfg: SolverConfig,
                       direction=None) -> Optional[TurningPoint]:
    """First point where ``a = C^2 q`` along the direction of motion, if any."""
    problem = _reduce(surface, source, A, direction)
    s_c = _find_turning_s(problem, cfg.C, cfg.root_tol)
    if s_c is None:
        return None
    return TurningPoint(c0=s_c, param=math.pi)


# -- solving ------------------------------------------------------------------

def _assemble(problem: ReducedProblem, leg: _Leg, params, free_disp, time, cfg,
              back: bool, t_offset: float = 0.0, f_offset: float = 0.0):
    branch = cfg.branch.sign
    s = np.array([leg.s_of(t) for t in params])
    f = problem.f0 + branch * (f_offset + free_disp)
    direction = -problem.sigma if back else problem.sigma
    slope = np.array([branch * leg.p.slope(si, leg.C) * direction
                      if leg.C > 0 and problem.psi(si, leg.C) > 0 else
                      (math.copysign(math.inf, branch * direction) if leg.C > 0 else 0.0)
                      for si in s])
    return s, f, time + t_offset, slope


def _truncate(problem: ReducedProblem, params, s, f, time, slope, cfg, anti, leg):
    """Cut samples at the chart boundary or the winding cap on the free coordinate."""
    lo, hi = problem.free_bounds()
    cap = None
    if problem.surface.v_period is not None and problem.free_name == "v":
        cap = cfg.max_windings * problem.surface.v_period
    bad = None
    reason = None
    for i in range(len(f)):
        if not (lo < f[i] < hi):
            bad, reason = i, "domain"
            break
        if cap is not None and abs(f[i] - problem.f0) > cap:
            bad, reason = i, "winding_cap"
            break
    if bad is None:
        return params, s, f, time, slope, None
    if bad == 0:
        raise DomainError("curve leaves the chart immediately")
    if reason == "domain":
        edge = hi if f[bad] >= hi else lo
        edge -= math.copysign(1e-9 * max(1.0, abs(edge)), f[bad] - problem.f0)
    else:
        edge = problem.f0 + math.copysign(cap, f[bad] - problem.f0)
    F, T, f_base, t_base = anti
    branch = cfg.branch.sign
    free_at = lambda t: f_base + branch * float(F(t)[0])
    t_cut = optimize.brentq(lambda t: free_at(t) - edge, params[bad - 1], params[bad], xtol=1e-15)
    params = np.append(params[:bad], t_cut)
    s = np.append(s[:bad], leg.s_of(t_cut))
    f = np.append(f[:bad], free_at(t_cut))
    time = np.append(time[:bad], t_base + float(T(t_cut)[0]))
    slope = np.append(slope[:bad], slope[bad - 1])
    return params, s, f, time, slope, reason


def _make_curve(problem, cfg, stop, params, s, f, time, slope, turning, reason,
                truncated, leg) -> CurveSolution:
    uv = [problem.point(a, b) for a, b in zip(s, f)]
    u = np.array([p[0] for p in uv])
    v = np.array([p[1] for p in uv])
    points = problem.surface.embed_many(u, v)
    meta = {
        "surface": problem.surface.name,
        "field": problem.label,
        "C": cfg.C,
        "branch": cfg.branch.value,
        "case": problem.case,
        "V0": problem.V0,
        "winding_cap_reached": reason == "winding_cap",
        "_leg": leg,
    }
    return CurveSolution(param=np.asarray(params, dtype=float), u=u, v=v, points=points,
                         time=np.asarray(time, dtype=float), slope=np.asarray(slope, dtype=float),
                         turning=turning, total_time=float(time[-1]), config=cfg, stop=stop,
                         stop_reason=reason, truncated=truncated, meta=meta, problem=problem)


def _solve(problem: ReducedProblem, cfg: SolverConfig, stop: StopRule) -> CurveSolution:
    s0, sig = problem.s0, problem.sigma
    target_d = None
    if stop.target is not None:
        target_d = (float(stop.target) - s0) * sig
        if not target_d > 0:
            raise DomainError(f"target {stop.target!r} is not on the downhill side of the start")
    limit = problem.limit_distance()
    s_c = _find_turning_s(problem, cfg.C, cfg.root_tol, limit)
    reason = None

    if s_c is not None:
        L = abs(s_c - s0)
        leg = _Leg(problem, cfg.C, s_c, L)
        reaches_turning = True
        end_x = 1.0
        if target_d is not None and stop.leg == "outbound" and target_d < L * (1 - 1e-14):
            end_x = target_d / L
            reaches_turning = False
            reason = "target"
        xs = _fractions(stop.n_samples, stop.refine_levels, True, True)
        xs = xs[xs < end_x]
        xs = np.append(xs, end_x)
        if reaches_turning:
            reason = "turning"
    else:
        if target_d is not None:
            if target_d >= limit:
                raise DomainError(f"target {stop.target!r} lies outside the chart")
            L = target_d
            reason = "target"
        elif math.isfinite(limit):
            L = limit * (1.0 - 1e-9)
            reason = "domain"
        else:
            L = stop.span
            reason = "span"
        leg = _Leg(problem, cfg.C, None, L)
        xs = _fractions(stop.n_samples, stop.refine_levels, True, False)
        reaches_turning = False

    params = np.array([leg.param_of_fraction(x) for x in xs])
    disp, time, (F, T) = leg.cumulative(params, cfg.quad_tol)
    disp[0] = time[0] = 0.0   # the start is exact; drop antiderivative rounding
    s, f, time, slope = _assemble(problem, leg, params, disp, time, cfg, back=False)
    params, s, f, time, slope, cut = _truncate(problem, params, s, f, time, slope, cfg,
                                               (F, T, problem.f0, 0.0), leg)
    truncated = cut is not None
    if truncated:
        reason = cut
        reaches_turning = False
    turning = None
    if reaches_turning:
        s[-1] = s_c
        turning = TurningPoint(c0=s_c, param=float(params[-1]), free=float(f[-1]),
                               time=float(time[-1]))
    curve = _make_curve(problem, cfg, stop, params, s, f, time, slope, turning, reason,
                        truncated, leg)
    if stop.leg == "return" and turning is not None:
        curve = continue_past_turning(curve, cfg, stop)
    return curve


def solve_particle(surface: SurfacePatch, pot: Potential, A, cfg: SolverConfig,
                   stop: Optional[StopRule] = None, direction=None) -> CurveSolution:
    """Minimal-time curve from ``A`` for a falling particle (``V0 = V(A)``)."""
    problem = reduce_particle(surface, pot, A, direction)
    return _solve(problem, cfg, stop or StopRule())


def solve_ray(surface: SurfacePatch, medium: Medium, A, cfg: SolverConfig,
                   stop: Optional[StopRule] = None, direction=None) -> CurveSolution:
    """Light ray from ``A`` in ``medium``; time is ``time_factor * integral(n ds)``."""
    problem = reduce_ray(surface, medium, A, direction)
    return _solve(problem, cfg, stop or StopRule())


def solve(surface, source, A, cfg, stop=None, direction=None) -> CurveSolution:
    if isinstance(source, Medium):
        return solve_ray(surface, source, A, cfg, stop, direction)
    return solve_particle(surface, source, A, cfg, stop, direction)


def continue_past_turning(curve: CurveSolution, cfg: Optional[SolverConfig] = None,
                          stop: Optional[StopRule] = None) -> CurveSolution:
    """Extend ``curve`` through its turning point with the sign of the quadrature reversed.

    The return leg runs back to ``stop.target`` or, without a target, to the
    start level.
    """
    if curve.turning is None:
        raise NoTurningPoint("curve has no turning point to continue through")
    cfg = cfg or curve.config
    stop = stop or replace(curve.stop, leg="return")
    problem = curve.problem
    leg: _Leg = curve.meta["_leg"]
    L = leg.L
    end_x = 0.0
    reason = "start_level"
    if stop.target is not None:
        d = (float(stop.target) - problem.s0) * problem.sigma
        if not (0.0 < d <= L * (1 + 1e-14)):
            raise DomainError(f"target {stop.target!r} is not on the return leg")
        end_x = min(d / L, 1.0)
        reason = "target"
    xs = _fractions(stop.n_samples, stop.refine_levels, True, True)[::-1]
    xs = xs[(xs < 1.0) & (xs > end_x)]
    xs = np.append(xs, end_x)
    params = np.concatenate([[curve.turning.param],
                             [leg.param_of_fraction(x, back=True) for x in xs]])
    disp, time, (F, T) = leg.cumulative(params, cfg.quad_tol)
    f_turn = (curve.turning.free - problem.f0) * cfg.branch.sign
    s, f, time, slope = _assemble(problem, leg, params[1:], disp[1:], time[1:], cfg, back=True,
                                  t_offset=curve.turning.time, f_offset=f_turn)
    anti = (F, T, curve.turning.free, curve.turning.time)
    params, s, f, time, slope, cut = _truncate(problem, params[1:], s, f, time, slope, cfg,
                                               anti, leg)
    if cut is not None:
        reason = cut
    if stop.target is None and cut is None:
        s[-1] = problem.s0
    ext = _make_curve(problem, cfg, stop, params, s, f, time, slope, None, reason,
                      cut is not None, leg)
    merged = CurveSolution(
        param=np.concatenate([curve.param, ext.param]),
        u=np.concatenate([curve.u, ext.u]),
        v=np.concatenate([curve.v, ext.v]),
        points=np.vstack([curve.points, ext.points]),
        time=np.concatenate([curve.time, ext.time]),
        slope=np.concatenate([curve.slope, ext.slope]),
        turning=curve.turning,
        total_time=ext.total_time,
        config=cfg,
        stop=stop,
        stop_reason=reason,
        truncated=ext.truncated,
        meta={**curve.meta, "branch_after_turning": cfg.branch.flipped.value,
              "winding_cap_reached": ext.meta["winding_cap_reached"]},
        problem=problem,
    )
    return merged


# -- shooting -----------------------------------------------------------------

def _terminal_displacement(problem: ReducedProblem, C: float, d_B: float, leg_name: str,
                           cfg: SolverConfig) -> Optional[float]:
    """|f(B) - f0| on the requested leg, or None if that leg never reaches ``d_B``."""
    if C == 0.0:
        return 0.0
    s_c = _find_turning_s(problem, C, cfg.root_tol)
    if s_c is None:
        if leg_name == "return":
            return None
        leg = _Leg(problem, C, None, d_B)
        return leg.integrate(leg.dfree, 0.0, 1.0, cfg.quad_tol)
    leg = _Leg(problem, C, s_c, abs(s_c - problem.s0))
    if d_B > leg.L * (1 + 1e-12):
        return None
    t_B = leg.param_of_fraction(min(d_B / leg.L, 1.0))
    out = leg.integrate(leg.dfree, 0.0, t_B, cfg.quad_tol)
    if leg_name == "outbound":
        return out
    full = leg.integrate(leg.dfree, 0.0, math.pi, cfg.quad_tol)
    return 2.0 * full - out


def _sector_bound(source) -> Optional[float]:
    name = getattr(source, "name", "")
    pot = source if isinstance(source, Potential) else getattr(source, "potential", None)
    name = pot.name if pot is not None else name
    if name.startswith("central:"):
        n_exp = float(name.split(":")[1])
        return TWO_PI / (n_exp + 2.0)
    return None


def shoot(surface: SurfacePatch, source, A, B, cfg_template: Optional[SolverConfig] = None,
          shoot_tol: float = 1e-8, n_samples: int = 200, c_grid=None):
    """Find ``C`` and branch so that the curve from ``A`` passes through ``B``.

    Returns ``(config, curve)``; the curve ends at ``B``.
    """
    cfg_template = cfg_template or SolverConfig()
    problem = _reduce(surface, source, A, None)
    uB, vB = float(B[0]), float(B[1])
    if not surface.contains(uB, vB):
        raise DomainError(f"target ({uB!r}, {vB!r}) is outside the chart")
    s_B, f_B = problem.split(uB, vB)
    d_B = (s_B - problem.s0) * problem.sigma
    if not (d_B > 0 and problem.q(s_B) > 0):
        raise TargetUnreachable(f"target ({uB!r}, {vB!r}) is not below the start level")
    delta = f_B - problem.f0
    branch = Branch.PLUS if delta >= 0 else Branch.MINUS
    want = abs(delta)

    def finish(C, leg_name):
        cfg = replace(cfg_template, C=float(C), branch=branch)
        curve = _solve(problem, cfg, StopRule(target=s_B, leg=leg_name, n_samples=n_samples))
        miss = abs(curve.free[-1] - f_B)
        if miss > shoot_tol:
            raise NoBracket(f"shooting ended {miss:.3e} from the target", grid=None)
        return cfg, curve

    if want <= shoot_tol:
        return finish(0.0, "outbound")

    a_B, q_B = problem.a(s_B), problem.q(s_B)
    C_apex = math.sqrt(a_B / q_B)
    apex = _terminal_displacement(problem, C_apex, d_B, "outbound", cfg_template)
    if apex is None:
        C_apex = np.nextafter(C_apex, 0.0)
        apex = _terminal_displacement(problem, C_apex, d_B, "outbound", cfg_template)
    if abs(apex - want) <= 0.1 * shoot_tol:
        return finish(C_apex, "outbound")
    leg_name = "outbound" if want < apex else "return"

    scale = math.sqrt(problem.a(problem.s0) / q_B)
    grid = c_grid if c_grid is not None else scale * np.logspace(-6, 6, 121)
    grid = np.sort(np.append(np.asarray(grid, dtype=float)[np.asarray(grid) < C_apex], C_apex))
    values = []
    for C in grid:
        d = apex if C == C_apex else _terminal_displacement(problem, float(C), d_B, leg_name,
                                                            cfg_template)
        values.append(math.nan if d is None else d - want)
    values = np.array(values)
    bracket = None
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if math.isfinite(a) and math.isfinite(b) and a * b <= 0:
            bracket = (float(grid[i]), float(grid[i + 1]))
            break
    if bracket is None:
        bound = _sector_bound(source)
        if leg_name == "return" and bound is not None:
            raise TargetUnreachable(
                f"target lies in the forbidden sector: swept angle {want:.6g} exceeds "
                f"the bound {bound:.6g}", bound=bound)
        if leg_name == "return" and np.all(values[np.isfinite(values)] < 0):
            raise TargetUnreachable(f"no curve from A reaches free displacement {want:.6g}")
        raise NoBracket("terminal coordinate is not monotone over the C grid", grid=grid)

    def miss(C):
        d = _terminal_displacement(problem, C, d_B, leg_name, cfg_template)
        return (apex if d is None else d) - want

    C_star = optimize.brentq(miss, *bracket, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                             maxiter=500)
    return finish(C_star, leg_name)


def first_integral(curve: CurveSolution, slope=None) -> np.ndarray:
    """``dF/df'`` along the curve; constant ``+-C`` for a true solution.

    ``F = sqrt((a f'^2 + b) / q)``.  Samples with ``q = 0`` (start level) are
    returned as NaN.
    """
    p = curve.problem
    slope = curve.slope if slope is None else np.asarray(slope, dtype=float)
    out = np.full(len(slope), np.nan)
    for i, (s, fp) in enumerate(zip(curve.independent, slope)):
        a, b, q = p.a(s), p.b(s), p.q(s)
        if not q > 0:
            continue
        if math.isinf(fp):
            out[i] = math.copysign(a / math.sqrt(q * a), fp)
        else:
            out[i] = a * fp / math.sqrt(q * (a * fp * fp + b))
    return out
