"""Potentials (energy per unit mass) and the refractive indices derived from them.

The classical index is ``n = (V0 - V)^(-1/2)``.  The special-relativistic
index follows from ``gamma c^2 - c^2 + V = V0`` and is dimensionless,
``(1/n)^2 = (V0-V)(V0-V+2c^2)/(V0-V+c^2)^2``, i.e. ``1/n`` is the speed in
units of ``c``.

Every :class:`Medium` also carries ``time_factor`` so that physical travel
time is ``time_factor * integral(n ds)``: ``1/sqrt(2)`` for the classical
index (speed is ``sqrt(2 (V0 - V))``) and ``1/c`` for the relativistic one.
Rays depend on ``n`` only up to a constant factor, so this bookkeeping does
not move any curve.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonPositiveExponent, StartLevelSingularity, SymmetryMismatch

SQRT_HALF = math.sqrt(0.5)


class Symmetry(str, enum.Enum):
    INDEPENDENT_OF_U = "independent_of_u"
    INDEPENDENT_OF_V = "independent_of_v"

    @property
    def ignored(self) -> str:
        """The chart coordinate the field does not depend on."""
        return "u" if self is Symmetry.INDEPENDENT_OF_U else "v"


class MediumKind(str, enum.Enum):
    CLASSICAL = "classical"
    RELATIVISTIC = "relativistic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Potential:
    V: Callable[[float, float], float]
    symmetry: Symmetry
    name: str = "custom"

    def __call__(self, u: float, v: float) -> float:
        return self.V(u, v)


def check_symmetry(pot, points, atol: float = 1e-12) -> None:
    """Spot-check a declared symmetry; ``pot`` is a Potential or Medium."""
    fn = pot.V if isinstance(pot, Potential) else pot.inv_n2
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    for i, (u, v) in enumerate(pts):
        j = (i + 1 + (7 * i) % max(m - 1, 1)) % m   # always a different sample
        if pot.symmetry is Symmetry.INDEPENDENT_OF_U:
            other = (pts[j, 0], v)
        else:
            other = (u, pts[j, 1])
        a, b = fn(u, v), fn(*other)
        if abs(a - b) > atol * max(1.0, abs(a)):
            raise SymmetryMismatch(
                f"{pot.name} declared {pot.symmetry.value} but differs between "
                f"({u:.6g}, {v:.6g}) and ({other[0]:.6g}, {other[1]:.6g})"
            )


def uniform_potential() -> Potential:
    """Unit uniform field on a vertical chart: ``V(u, v) = v``."""
    return Potential(V=lambda u, v: v, symmetry=Symmetry.INDEPENDENT_OF_U, name="uniform")


def height_potential(surface) -> Potential:
    """Unit uniform field along +z for an arbitrary embedded chart: ``V = z``.

    On the vertical plane this is :func:`uniform_potential`; on a surface of
    revolution it is ``g(u)``.
    """
    if surface.profile is not None:
        g = surface.profile.g
        return Potential(V=lambda u, v: g(u), symmetry=Symmetry.INDEPENDENT_OF_V,
                         name="uniform")
    if surface.name == "plane":
        return uniform_potential()
    pts = surface.sample_interior(16, seed=5)
    z = lambda u, v: float(surface.embed(u, v)[2])
    for sym in Symmetry:
        pot = Potential(V=z, symmetry=sym, name="uniform")
        try:
            check_symmetry(pot, pts)
        except SymmetryMismatch:
            continue
        if np.ptp([z(*p) for p in pts]) == 0.0:
            break
        return pot
    raise SymmetryMismatch(f"height on {surface.name} has no coordinate symmetry")


def central_power_potential(n_exp: float) -> Potential:
    """``V = -u^(-n)`` on the polar chart (``u`` is the radius)."""
    if not n_exp > 0:
        raise NonPositiveExponent(f"field exponent must be positive, got {n_exp!r}")
    n_exp = float(n_exp)
    return Potential(V=lambda u, v: -u ** (-n_exp), symmetry=Symmetry.INDEPENDENT_OF_V,
                     name=f"central:{n_exp:g}")


@dataclass(frozen=True)
class Medium:
    """Refractive index field with its provenance.

    ``inv_n2`` returns ``1/n^2`` and is the quantity the ray quadrature uses;
    it is zero on the start level set where ``n`` itself is infinite.
    """

    inv_n2: Callable[[float, float], float]
    kind: MediumKind
    symmetry: Symmetry
    time_factor: float
    potential: Optional[Potential] = None
    V0: Optional[float] = None
    c: Optional[float] = None
    name: str = "custom"

    def n(self, u: float, v: float) -> float:
        q = self.inv_n2(u, v)
        if not q > 0.0:
            raise StartLevelSingularity(
                f"index is infinite at ({u!r}, {v!r}): on or above the start level"
            )
        return 1.0 / math.sqrt(q)

    def speed(self, u: float, v: float) -> float:
        """Physical speed ``1 / (time_factor * n)``."""
        return math.sqrt(max(self.inv_n2(u, v), 0.0)) / self.time_factor


def classical_index(pot: Potential, V0: float) -> Medium:
    V0 = float(V0)

    def inv_n2(u, v):
        return V0 - pot.V(u, v)

    return Medium(inv_n2=inv_n2, kind=MediumKind.CLASSICAL, symmetry=pot.symmetry,
                  time_factor=SQRT_HALF, potential=pot, V0=V0, name=f"classical({pot.name})")


def relativistic_inv_n2(drop: float, c: float) -> float:
    """``(1/n)^2`` as a function of the potential drop ``V0 - V``."""
    c2 = c * c
    if drop <= c2:
        return drop * (drop + 2.0 * c2) / (drop + c2) ** 2
    # same value written as 1 - (c^2/(drop + c^2))^2, which never rounds above 1
    r = c2 / (drop + c2)
    return 1.0 - r * r


def relativistic_index(pot: Potential, V0: float, c: float) -> Medium:
    """Index for a charged particle in a uniform electric field at relativistic speed."""
    if not c > 0:
        raise ValueError(f"speed of light must be positive, got {c!r}")
    V0, c = float(V0), float(c)

    def inv_n2(u, v):
        drop = V0 - pot.V(u, v)
        if drop <= 0.0:
            return drop
        return relativistic_inv_n2(drop, c)

    return Medium(inv_n2=inv_n2, kind=MediumKind.RELATIVISTIC, symmetry=pot.symmetry,
                  time_factor=1.0 / c, potential=pot, V0=V0, c=c,
                  name=f"relativistic({pot.name}, c={c:g})")


def custom_medium(n: Callable[[float, float], float], symmetry: Symmetry,
                  time_factor: float = 1.0, name: str = "custom") -> Medium:
    """Arbitrary positive index field (experimental; optics view only)."""

    def inv_n2(u, v):
        value = n(u, v)
        return 1.0 / (value * value)

    return Medium(inv_n2=inv_n2, kind=MediumKind.CUSTOM, symmetry=Symmetry(symmetry),
                  time_factor=time_factor, name=name)


def relativistic_constant(C: float, c: float) -> float:
    """Ray constant ``k`` whose relativistic ray tends to the classical curve with ``C``.

    For ``c -> inf`` the relativistic ``1/n^2`` tends to ``2 (V0 - V) / c^2``,
    so the two quadratures agree when ``k^2 * 2 / c^2 = C^2``.
    """
    return C * c / math.sqrt(2.0)


def potential_from_keyword(text: str, surface) -> tuple[Potential, Optional[float]]:
    """Parse ``uniform``, ``central:<n>`` or ``relativistic:<c>``.

    Returns the potential and, for the relativistic keyword, the value of c.
    """
    key = text.strip()
    if key == "uniform" or key.startswith("relativistic:"):
        pot = height_potential(surface)
        c = float(key.split(":", 1)[1]) if key.startswith("relativistic:") else None
        return pot, c
    if key.startswith("central:"):
        return central_power_potential(float(key.split(":", 1)[1])), None
    raise ValueError(f"unknown field keyword {text!r}")
