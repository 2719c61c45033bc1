"""Independent checks on solver output: a direct travel-time functional,
random perturbation probes and a lattice shortest-time search."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import AboveStartLevel, PerturbationLeftDomain, Unreachable
from .geometry import SurfacePatch
from .media import SQRT_HALF, Potential
from .solver import CurveSolution

LEVEL_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteCurve:
    """Ordered chart samples; ``v`` is unwrapped on periodic charts."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1 or len(u) < 2:
            raise ValueError("need matching 1-D arrays with at least two samples")
        if np.any((np.diff(u) == 0) & (np.diff(v) == 0)):
            raise ValueError("consecutive samples coincide")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __len__(self):
        return len(self.u)

    @classmethod
    def from_solution(cls, curve: CurveSolution) -> "DiscreteCurve":
        u, v = np.asarray(curve.u), np.asarray(curve.v)
        keep = np.concatenate([[True], (np.diff(u) != 0) | (np.diff(v) != 0)])
        return cls(u[keep], v[keep])

    @classmethod
    def chord(cls, A, B, n: int = 400) -> "DiscreteCurve":
        """Straight chart segment from ``A`` to ``B`` (a deliberately non-optimal curve)."""
        t = np.linspace(0.0, 1.0, n)
        return cls(A[0] + t * (B[0] - A[0]), A[1] + t * (B[1] - A[1]))


def _vectorized(fn):
    """Evaluate a scalar chart function on arrays, falling back to a Python loop."""

    def call(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        try:
            out = np.asarray(fn(u, v), dtype=float)
            return np.broadcast_to(out, u.shape).astype(float)
        except TypeError:
            return np.vectorize(lambda a, b: float(fn(a, b)), otypes=[float])(u, v)

    return call


def segment_times(surface: SurfacePatch, pot: Potential, V0: float, u0, v0, u1, v1) -> np.ndarray:
    """Travel time along straight chart segments ``(u0, v0) -> (u1, v1)``.

    Length uses the metric at the segment midpoint.  The drop ``V0 - V`` is
    taken as linear along the segment, for which ``int ds / sqrt(2 drop)`` is
    ``L sqrt(1/2) * 2 / (sqrt(d0) + sqrt(d1))`` in closed form.  This is a
    second-order rule on smooth segments that stays exact on a segment
    starting at rest, so no special start treatment is needed.
    """
    E = _vectorized(surface.E)
    G = _vectorized(surface.G)
    V = _vectorized(pot.V)
    um, vm = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
    du, dv = u1 - u0, v1 - v0
    length = np.sqrt(E(um, vm) * du * du + G(um, vm) * dv * dv)
    d0 = np.maximum(V0 - V(u0, v0), 0.0)
    d1 = np.maximum(V0 - V(u1, v1), 0.0)
    with np.errstate(divide="ignore"):
        return SQRT_HALF * length * 2.0 / (np.sqrt(d0) + np.sqrt(d1))


def travel_time(surface: SurfacePatch, pot: Potential, V0: float, curve: DiscreteCurve) -> float:
    """Time for a particle released at rest to traverse the polyline ``curve``."""
    u, v = curve.u, curve.v
    for a, b in zip(u, v):
        surface.require(float(a), float(b))
    drop = V0 - _vectorized(pot.V)(u, v)
    if np.any(drop[1:-1] <= 0.0):
        i = 1 + int(np.argmax(drop[1:-1] <= 0.0))
        raise AboveStartLevel(f"sample {i} at ({u[i]:.6g}, {v[i]:.6g}) is not below the start level")
    if drop[0] < -LEVEL_TOL or drop[-1] < -LEVEL_TOL:
        raise AboveStartLevel("curve endpoint lies above the start level")
    times = segment_times(surface, pot, V0, u[:-1], v[:-1], u[1:], v[1:])
    if not np.all(np.isfinite(times)):
        raise AboveStartLevel("a segment runs along the start level")
    return float(np.sum(times))


# -- perturbation probe -------------------------------------------------------

@dataclass(frozen=True)
class ProbeReport:
    seed: int
    trials: int
    amplitude: float
    base_time: float
    gaps: np.ndarray
    redraws: int
    tolerance: float = 1e-9

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gaps)) if len(self.gaps) else 0.0

    @property
    def passed(self) -> bool:
        return bool(np.all(self.gaps >= -self.tolerance))


def _bump(lam: np.ndarray, center: float, width: float) -> np.ndarray:
    """Smooth compactly supported bump with peak 1 at ``center``."""
    x = (lam - center) / width
    out = np.zeros_like(lam)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def _free_name(solution, free: Optional[str]) -> str:
    if free is not None:
        if free not in ("u", "v"):
            raise ValueError("free coordinate must be 'u' or 'v'")
        return free
    if isinstance(solution, CurveSolution) and solution.problem is not None:
        return solution.problem.free_name
    raise ValueError("free coordinate must be given for a bare DiscreteCurve")


def minimality_probe(surface: SurfacePatch, pot: Potential, solution, trials: int,
                     amplitude: float, seed: int, V0: Optional[float] = None,
                     free: Optional[str] = None, jobs: int = 1,
                     max_redraws: int = 50) -> ProbeReport:
    """Compare ``solution`` against ``trials`` random endpoint-preserving perturbations.

    Each trial adds ``+-amplitude * bump(lambda)`` to the free chart
    coordinate, where ``lambda`` is normalized chart arc length and the bump
    has random center and width inside ``(0, 1)``.  A draw that leaves the
    chart is re-drawn from the trial's own generator, so results do not
    depend on ``jobs``.
    """
    if trials < 0 or amplitude < 0:
        raise ValueError("trials and amplitude must be non-negative")
    if V0 is None:
        if not isinstance(solution, CurveSolution) or solution.problem is None:
            raise ValueError("V0 must be given for a bare DiscreteCurve")
        V0 = solution.problem.V0
    base = solution if isinstance(solution, DiscreteCurve) else DiscreteCurve.from_solution(solution)
    which = _free_name(solution, free)
    base_time = travel_time(surface, pot, V0, base)
    chord = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(base.u), np.diff(base.v)))])
    lam = chord / chord[-1]

    def trial(k: int):
        rng = np.random.default_rng([seed, k])
        for attempt in range(max_redraws + 1):
            center = rng.uniform(0.05, 0.95)
            width = rng.uniform(0.02, min(center, 1.0 - center))
            sign = rng.choice((-1.0, 1.0))
            delta = sign * amplitude * _bump(lam, center, width)
            u, v = (base.u + delta, base.v) if which == "u" else (base.u, base.v + delta)
            try:
                t = travel_time(surface, pot, V0, DiscreteCurve(u, v))
            except (AboveStartLevel, ValueError) as exc:
                if attempt == max_redraws:
                    raise PerturbationLeftDomain(f"trial {k}: no admissible draw") from exc
                continue
            return t - base_time, attempt

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(trial, range(trials)))
    else:
        results = [trial(k) for k in range(trials)]
    gaps = np.array([g for g, _ in results], dtype=float)
    return ProbeReport(seed=seed, trials=trials, amplitude=amplitude, base_time=base_time,
                       gaps=gaps, redraws=int(sum(r for _, r in results)))


# -- lattice oracle -----------------------------------------------------------

NEIGHBOURS_16 = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)]


def _axis(a: float, b: float, h: float, pad_cells: int) -> np.ndarray:
    """Nodes of spacing ``h`` through ``a`` and ``b`` exactly, padded on both sides."""
    span = int(round(abs(b - a) / h))
    lo = -pad_cells if b >= a else -span - pad_cells
    nodes = a + h * np.arange(lo, lo + span + 2 * pad_cells + 1)
    nodes[-lo] = a
    nodes[-lo + (span if b >= a else -span)] = b
    return nodes


def grid_oracle(surface: SurfacePatch, pot: Potential, V0: float, A, B,
                resolution=(400, 400), pad: float = 0.1):
    """Least travel time between ``A`` and ``B`` over paths on a 16-neighbour lattice.

    The lattice spans the chart box of ``A`` and ``B`` (both are nodes),
    widened by ``pad`` of the span on every side.  Edge weights use
    :func:`segment_times`; edges that run along or above the start level are
    dropped.  Returns ``(time, path)``.
    """
    nu, nv = resolution
    if min(nu, nv) < 2:
        raise ValueError("resolution must be at least 2 per axis")
    du, dv = abs(B[0] - A[0]), abs(B[1] - A[1])
    if du == 0 and dv == 0:
        raise ValueError("A and B coincide")
    hu = du / (nu - 1) if du > 0 else dv / (nv - 1)
    hv = dv / (nv - 1) if dv > 0 else hu
    cells = int(math.ceil(pad * (max(nu, nv) - 1)))
    us = _axis(A[0], B[0], hu, cells)
    vs = _axis(A[1], B[1], hv, cells)
    Mu, Mv = len(us), len(vs)
    U, Vg = np.meshgrid(us, vs, indexing="ij")
    inside = np.vectorize(lambda a, b: surface.contains(float(a), float(b)), otypes=[bool])(U, Vg)
    drop = np.full(U.shape, -np.inf)
    drop[inside] = V0 - _vectorized(pot.V)(U[inside], Vg[inside])
    ok = inside & (drop >= -LEVEL_TOL)

    def node(u, v):
        i = int(round((u - us[0]) / hu))
        j = int(round((v - vs[0]) / hv))
        return i, j

    iA, jA = node(*A)
    iB, jB = node(*B)
    rows, cols, wts = [], [], []
    ids = np.arange(Mu * Mv).reshape(Mu, Mv)
    for di, dj in NEIGHBOURS_16:
        for si, sj in ((di, dj), (-di, -dj)):
            i0 = slice(max(0, -si), Mu - max(0, si))
            j0 = slice(max(0, -sj), Mv - max(0, sj))
            i1 = slice(max(0, si), Mu - max(0, -si))
            j1 = slice(max(0, sj), Mv - max(0, -sj))
            good = ok[i0, j0] & ok[i1, j1]
            # an edge must dip strictly below the start level somewhere
            good &= (drop[i0, j0] > 0) | (drop[i1, j1] > 0)
            if not good.any():
                continue
            a, b = ids[i0, j0][good], ids[i1, j1][good]
            w = segment_times(surface, pot, V0, U.ravel()[a], Vg.ravel()[a],
                              U.ravel()[b], Vg.ravel()[b])
            fin = np.isfinite(w) & (w > 0)
            rows.append(a[fin])
            cols.append(b[fin])
            wts.append(w[fin])
    graph = csr_matrix((np.concatenate(wts), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(Mu * Mv, Mu * Mv))
    src, dst = ids[iA, jA], ids[iB, jB]
    dist, pred = dijkstra(graph, directed=True, indices=src, return_predecessors=True)
    if not np.isfinite(dist[dst]):
        raise Unreachable(f"no lattice path from {tuple(A)} to {tuple(B)}")
    path = [dst]
    while path[-1] != src:
        path.append(pred[path[-1]])
    path = np.array(path[::-1])
    return float(dist[dst]), DiscreteCurve(U.ravel()[path], Vg.ravel()[path])
