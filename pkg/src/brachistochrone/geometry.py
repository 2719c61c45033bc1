"""Orthogonal coordinate patches and the concrete surfaces used by the solver.

A patch is described by its metric coefficients ``E`` and ``G``
(``ds^2 = E du^2 + G dv^2``) together with an embedding into R^3.  The
cross term ``F`` is always zero; :func:`check_orthogonality` verifies this
numerically from the embedding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, NonPositiveRadius
from .expr import compile_expression

TWO_PI = 2.0 * math.pi

Scalar2 = Callable[[float, float], float]
Embedding = Callable[[float, float], np.ndarray]


@dataclass(frozen=True)
class SurfacePatch:
    """Orthogonal chart ``x(u, v)`` with metric ``E du^2 + G dv^2``.

    ``domain`` is ``((u_min, u_max), (v_min, v_max))`` and is open; infinite
    bounds are allowed.  ``v_period`` is set for charts whose embedding is
    periodic in ``v`` (surfaces of revolution); ``v`` itself is then an
    unbounded real that records the winding.
    """

    E: Scalar2
    G: Scalar2
    embed: Embedding
    domain: tuple = ((-math.inf, math.inf), (-math.inf, math.inf))
    name: str = "custom"
    v_period: Optional[float] = None
    profile: Optional["RevolutionProfile"] = field(default=None, compare=False)

    def contains(self, u: float, v: float) -> bool:
        (u0, u1), (v0, v1) = self.domain
        return u0 < u < u1 and v0 < v < v1

    def require(self, u: float, v: float) -> None:
        if not self.contains(u, v):
            raise DomainError(
                f"point ({u!r}, {v!r}) is not inside the open domain {self.domain} of {self.name}"
            )

    def metric(self, u: float, v: float) -> tuple[float, float]:
        return self.E(u, v), self.G(u, v)

    def embed_many(self, u, v) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return np.array([self.embed(a, b) for a, b in zip(u, v)], dtype=float).reshape(-1, 3)

    def sample_interior(self, n: int = 100, seed: int = 0, window: float = 4.0) -> np.ndarray:
        """Quasi-random interior points, shape ``(n, 2)``.

        Unbounded sides are truncated to ``window`` chart units; bounded
        sides are shrunk by 5% so samples stay clear of the boundary.
        """
        lo, hi = [], []
        for a, b in self.domain:
            if math.isinf(a) and math.isinf(b):
                a, b = -window, window
            elif math.isinf(a):
                a = b - window
            elif math.isinf(b):
                b = a + window
            pad = 0.05 * (b - a)
            lo.append(a + pad)
            hi.append(b - pad)
        sampler = qmc.Halton(d=2, scramble=True, seed=seed)
        return qmc.scale(sampler.random(n), lo, hi)


@dataclass(frozen=True)
class RevolutionProfile:
    """Meridian of a surface of revolution: radius ``h(u)`` and height ``g(u)``.

    Missing derivatives are replaced by central differences with step
    ``1e-6 * max(1, |u|)``.
    """

    h: Callable[[float], float]
    g: Callable[[float], float]
    dh: Optional[Callable[[float], float]] = None
    dg: Optional[Callable[[float], float]] = None
    u_range: tuple = (-math.inf, math.inf)

    def h_prime(self, u: float) -> float:
        return self.dh(u) if self.dh is not None else central_difference(self.h, u)

    def g_prime(self, u: float) -> float:
        return self.dg(u) if self.dg is not None else central_difference(self.g, u)


def central_difference(f: Callable[[float], float], x: float) -> float:
    step = 1e-6 * max(1.0, abs(x))
    return (f(x + step) - f(x - step)) / (2.0 * step)


def make_vertical_plane() -> SurfacePatch:
    """The vertical plane ``(u, 0, v)``; ``v`` is height."""
    return SurfacePatch(
        E=lambda u, v: 1.0,
        G=lambda u, v: 1.0,
        embed=lambda u, v: np.array([u, 0.0, v], dtype=float),
        name="plane",
    )


def make_polar_plane() -> SurfacePatch:
    """Polar coordinates ``(u cos v, u sin v, 0)`` on the horizontal plane."""
    return SurfacePatch(
        E=lambda u, v: 1.0,
        G=lambda u, v: u * u,
        embed=lambda u, v: np.array([u * math.cos(v), u * math.sin(v), 0.0], dtype=float),
        domain=((0.0, math.inf), (-math.pi, math.pi)),
        name="polar",
    )


def make_surface_of_revolution(profile: RevolutionProfile, name: str = "revolution",
                               check_points: int = 64) -> SurfacePatch:
    """Chart ``(h(u) cos v, h(u) sin v, g(u))`` with ``E = h'^2 + g'^2``, ``G = h^2``."""
    a, b = profile.u_range
    lo = a if math.isfinite(a) else (b - 8.0 if math.isfinite(b) else -8.0)
    hi = b if math.isfinite(b) else lo + 16.0
    for u in np.linspace(lo, hi, check_points + 2)[1:-1]:
        r = profile.h(float(u))
        if not r > 0.0:
            raise NonPositiveRadius(f"radius profile h({u:.6g}) = {r!r} is not positive")

    def E(u, v):
        return profile.h_prime(u) ** 2 + profile.g_prime(u) ** 2

    def G(u, v):
        return profile.h(u) ** 2

    def embed(u, v):
        r = profile.h(u)
        # v carries the winding; reduce only for the trig evaluation
        w = math.remainder(v, TWO_PI)
        return np.array([r * math.cos(w), r * math.sin(w), profile.g(u)], dtype=float)

    return SurfacePatch(
        E=E,
        G=G,
        embed=embed,
        domain=(profile.u_range, (-math.inf, math.inf)),
        name=name,
        v_period=TWO_PI,
        profile=profile,
    )


def make_cone() -> SurfacePatch:
    profile = RevolutionProfile(
        h=lambda u: u, g=lambda u: u, dh=lambda u: 1.0, dg=lambda u: 1.0, u_range=(0.0, math.inf)
    )
    return make_surface_of_revolution(profile, name="cone")


def make_hyperboloid() -> SurfacePatch:
    profile = RevolutionProfile(h=math.cosh, g=math.sinh, dh=math.sinh, dg=math.cosh)
    return make_surface_of_revolution(profile, name="hyperboloid")


def make_cylinder() -> SurfacePatch:
    profile = RevolutionProfile(h=lambda u: 1.0, g=lambda u: u, dh=lambda u: 0.0, dg=lambda u: 1.0)
    return make_surface_of_revolution(profile, name="cylinder")


def surface_from_keyword(text: str) -> SurfacePatch:
    """Build a surface from ``plane``, ``cone``, ``hyperboloid``, ``cylinder``,
    ``polar`` or ``revolution:<h-expr>:<g-expr>``."""
    key = text.strip()
    simple = {
        "plane": make_vertical_plane,
        "cone": make_cone,
        "hyperboloid": make_hyperboloid,
        "cylinder": make_cylinder,
        "polar": make_polar_plane,
    }
    if key in simple:
        return simple[key]()
    if key.startswith("revolution:"):
        parts = key.split(":")
        if len(parts) != 3:
            raise ValueError("expected revolution:<h-expr>:<g-expr>")
        h = compile_expression(parts[1])
        g = compile_expression(parts[2])
        return make_surface_of_revolution(RevolutionProfile(h=h, g=g), name=key)
    raise ValueError(f"unknown surface keyword {text!r}")


def _d(f, x, step):
    # fourth-order centered difference
    return (-f(x + 2 * step) + 8 * f(x + step) - 8 * f(x - step) + f(x - 2 * step)) / (12 * step)


def tangent_vectors(surface: SurfacePatch, u: float, v: float, step: float = 1e-4):
    """Finite-difference ``(x_u, x_v)`` from the embedding."""
    xu = _d(lambda t: surface.embed(t, v), u, step * max(1.0, abs(u)))
    xv = _d(lambda t: surface.embed(u, t), v, step * max(1.0, abs(v)))
    return xu, xv


def fd_metric(surface: SurfacePatch, u: float, v: float, step: float = 1e-4):
    """Metric ``(E, F, G)`` estimated from the embedding alone."""
    xu, xv = tangent_vectors(surface, u, v, step)
    return float(xu @ xu), float(xu @ xv), float(xv @ xv)


def check_orthogonality(surface: SurfacePatch, points, tol: float = 1e-9) -> float:
    """Largest ``|x_u . x_v|`` over ``points``; raises if it exceeds ``tol``."""
    worst = 0.0
    for u, v in points:
        _, F, _ = fd_metric(surface, float(u), float(v))
        worst = max(worst, abs(F))
    if worst > tol:
        raise ValueError(f"{surface.name}: chart is not orthogonal (|F| = {worst:.3e})")
    return worst


def check_metric(surface: SurfacePatch, points, rtol: float = 1e-6) -> float:
    """Largest relative mismatch between declared and embedded metric."""
    worst = 0.0
    for u, v in points:
        u, v = float(u), float(v)
        E_fd, _, G_fd = fd_metric(surface, u, v)
        E, G = surface.metric(u, v)
        for declared, measured in ((E, E_fd), (G, G_fd)):
            worst = max(worst, abs(declared - measured) / max(abs(declared), 1e-300))
    if worst > rtol:
        raise ValueError(f"{surface.name}: declared metric disagrees with embedding ({worst:.3e})")
    return worst


def coefficient_independent_of(surface: SurfacePatch, coord: str, points=None,
                               atol: float = 1e-12) -> bool:
    """Spot-check that ``E`` and ``G`` do not depend on ``coord`` ('u' or 'v')."""
    if points is None:
        points = surface.sample_interior(24, seed=11)
    shifts = surface.sample_interior(len(points), seed=12)
    for (u, v), (su, sv) in zip(points, shifts):
        u, v, su, sv = float(u), float(v), float(su), float(sv)
        other = (su, v) if coord == "u" else (u, sv)
        for coef in (surface.E, surface.G):
            a, b = coef(u, v), coef(*other)
            if abs(a - b) > atol * max(1.0, abs(a)):
                return False
    return True


def polyline_length(points: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def metric_length(surface: SurfacePatch, u, v) -> float:
    """Arc length of a chart polyline measured with the metric at segment midpoints."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    um, vm = 0.5 * (u[1:] + u[:-1]), 0.5 * (v[1:] + v[:-1])
    du, dv = np.diff(u), np.diff(v)
    total = 0.0
    for a, b, x, y in zip(um, vm, du, dv):
        E, G = surface.metric(float(a), float(b))
        total += math.sqrt(E * x * x + G * y * y)
    return total
