import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from oracles import helix, sector_theta_mp

from brachistochrone.analysis import (compare_intersecting, curve_gap, frenet_profile,
                                      planarity_check, sector_angle, sector_limit_convergence)
from brachistochrone.errors import (DegenerateCurvature, DomainError, NoIntersection,
                                    NonPositiveExponent)
from brachistochrone.media import Potential, Symmetry
from brachistochrone.solver import (SolverConfig, StopRule, central_turning_radius,
                                    continue_past_turning, solve_particle)


@pytest.fixture
def central_arc(polar, inverse_square):
    cfg = SolverConfig(C=0.7)
    return continue_past_turning(solve_particle(polar, inverse_square, (1.0, 0.0), cfg,
                                                StopRule(n_samples=400)))


@pytest.fixture
def sinh_field():
    return Potential(V=lambda u, v: math.sinh(u), symmetry=Symmetry.INDEPENDENT_OF_V)


class TestSectorAngle:
    @pytest.mark.parametrize("n", [0.5, 1, 2, 3, 4, 7])
    @pytest.mark.parametrize("c0", [0.999, 0.9, 0.5, 0.1, 0.01, 1e-3])
    def test_matches_direct_quadrature(self, n, c0):
        assert sector_angle(n, c0).theta == pytest.approx(sector_theta_mp(n, c0), abs=1e-12)

    def test_report_fields(self):
        r = sector_angle(2, 0.01)
        assert r.sector_central_angle == pytest.approx(math.pi, rel=1e-15)
        assert r.theta_limit == pytest.approx(math.pi / 4)
        assert r.max_angle == pytest.approx(2 * abs(r.theta))
        assert r.D == pytest.approx(0.01 ** -4 - 0.01 ** -2)
        assert r.theta < 0

    def test_limit_values(self):
        # n=1 sweeps towards pi/3, i.e. a full angle of 2 pi / 3
        assert abs(sector_angle(1, 1e-12).theta) == pytest.approx(math.pi / 3, abs=1e-5)
        assert abs(sector_angle(4, 1e-30).theta) == pytest.approx(math.pi / 6, abs=1e-12)

    def test_immediate_turn_sweeps_nothing(self):
        theta = sector_angle(1, 1 - 1e-9).theta
        assert -1e-8 < theta < 0

    def test_matches_solver_turning_angle(self, central_arc):
        # the solver reaches its turning point at the same swept angle
        c0 = central_arc.turning.c0
        assert abs(central_arc.turning.free) == pytest.approx(abs(sector_angle(1, c0).theta), abs=1e-9)
        assert c0 == pytest.approx(central_turning_radius(1, 1 / 0.49), abs=1e-12)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, 1.5])
    def test_rejects_radius(self, bad):
        with pytest.raises(DomainError):
            sector_angle(1, bad)

    def test_rejects_exponent(self):
        with pytest.raises(NonPositiveExponent):
            sector_angle(0, 0.5)

    @given(st.floats(0.2, 8.0), st.floats(1e-8, 0.999))
    @settings(max_examples=150, deadline=None)
    def test_strictly_inside_sector(self, n, c0):
        # the true margin shrinks roughly like c0^n; below ~1e-9 it drops under double resolution
        r = sector_angle(n, c0)
        if c0 ** n > 1e-9:
            assert abs(r.theta) < r.theta_limit
            assert r.max_angle < 2 * math.pi / (n + 2)
        else:
            assert abs(r.theta) < r.theta_limit + 1e-14

    @given(st.floats(0.2, 8.0), st.floats(1e-6, 0.99), st.floats(0.05, 0.95))
    @settings(max_examples=100, deadline=None)
    def test_decreasing_in_radius(self, n, c0, shrink):
        if (c0 * shrink) ** n < 1e-9:
            return
        assert abs(sector_angle(n, c0 * shrink).theta) > abs(sector_angle(n, c0).theta)


class TestSectorConvergence:
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_monotone_towards_limit(self, n):
        rows = sector_limit_convergence(n, [0.5, 0.1, 0.01, 1e-4])
        vals = [t for _, t in rows]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert all(v < math.pi / (n + 2) + 1e-12 for v in vals)
        assert abs(vals[-1] - math.pi / (n + 2)) < 1e-2

    def test_rejects_unsorted(self):
        with pytest.raises(DomainError):
            sector_limit_convergence(1, [0.1, 0.5])


class TestCompareIntersecting:
    def test_identical_curves(self, plane, gravity):
        c = solve_particle(plane, gravity, (0.0, 0.0), SolverConfig(C=0.5))
        rep = compare_intersecting(c, c)
        assert rep.coincident and rep.gap == 0.0 and rep.winner is None
        assert len(rep.crossings) == len(c) - 1

    def test_mirror_branches_meet_only_at_start(self, plane, gravity):
        a = solve_particle(plane, gravity, (0.0, 0.0), SolverConfig(C=0.5))
        b = solve_particle(plane, gravity, (0.0, 0.0), SolverConfig(C=0.5, branch="minus"))
        with pytest.raises(NoIntersection):
            compare_intersecting(a, b)

    def _spirals(self, hyperboloid, sinh_field):
        stop = StopRule(span=6.0, n_samples=400)
        a = solve_particle(hyperboloid, sinh_field, (0.0, 0.0), SolverConfig(C=1.41), stop)
        b = solve_particle(hyperboloid, sinh_field, (0.0, 0.0), SolverConfig(C=1.0), stop)
        return a, b

    def test_hyperboloid_spirals(self, hyperboloid, sinh_field):
        a, b = self._spirals(hyperboloid, sinh_field)
        rep = compare_intersecting(a, b)
        assert rep.crossings and abs(rep.gap) > 0
        x = rep.first
        # both curves pass through the reported point, modulo one turn in v
        period = hyperboloid.v_period
        assert (x.v_a - x.v_b) / period == pytest.approx(round((x.v_a - x.v_b) / period), abs=1e-6)
        T_a = np.interp(x.u, a.u[::-1], a.time[::-1])
        assert x.time_a == pytest.approx(T_a, rel=1e-3)

    def test_antisymmetric(self, hyperboloid, sinh_field):
        a, b = self._spirals(hyperboloid, sinh_field)
        ab, ba = compare_intersecting(a, b), compare_intersecting(b, a)
        assert ba.gap == -ab.gap
        assert {ab.winner, ba.winner} == {"a", "b"}


class TestFrenet:
    def test_helix_closed_form(self):
        a, b = 1.0, 0.3
        fr = frenet_profile(helix(a, b))
        assert np.max(np.abs(fr.kappa - a / (a * a + b * b))) < 1e-4
        assert np.max(np.abs(fr.tau - b / (a * a + b * b))) < 1e-4

    def test_frames_orthonormal(self):
        fr = frenet_profile(helix())
        for F in (fr.T, fr.N, fr.B):
            assert np.max(np.abs(np.linalg.norm(F, axis=1) - 1)) < 1e-9
        for F, G in ((fr.T, fr.N), (fr.T, fr.B), (fr.N, fr.B)):
            assert np.max(np.abs(np.einsum("ij,ij->i", F, G))) < 1e-9

    def test_cycloid_is_torsion_free(self, plane, gravity):
        c = continue_past_turning(solve_particle(plane, gravity, (0.0, 0.0), SolverConfig(C=0.5)))
        fr = frenet_profile(c)
        assert np.nanmax(np.abs(fr.tau)) < 1e-6

    def test_central_is_torsion_free(self, central_arc):
        R = Rotation.from_euler("zyx", [0.4, -1.1, 0.7]).as_matrix()
        fr = frenet_profile(central_arc.points @ R.T)
        assert np.nanmax(np.abs(fr.tau)) < 1e-6

    def test_straight_line_is_degenerate(self):
        t = np.linspace(0, 1, 50)
        with pytest.raises(DegenerateCurvature):
            frenet_profile(np.column_stack([t, 2 * t, -t]))

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            frenet_profile(helix(n=6))


class TestPlanarity:
    def test_plane_chart_exact(self, plane, gravity):
        c = solve_particle(plane, gravity, (0.0, 0.0), SolverConfig(C=0.5))
        assert planarity_check(c).deviation == 0.0

    def test_rotated_central_curve(self, central_arc):
        R = Rotation.random(random_state=11).as_matrix()
        fit = planarity_check(central_arc.points @ R.T)
        assert fit.deviation < 1e-8
        assert fit.origin_distance < 1e-8
        # the fitted normal is the rotated axis of the chart plane
        assert abs(abs(fit.normal @ (R @ [0.0, 0.0, 1.0])) - 1) < 1e-12
        dev, (point, normal) = fit
        assert dev == fit.deviation and np.allclose(normal, fit.normal)

    def test_helix_negative_control(self):
        fit = planarity_check(helix())
        assert fit.deviation > 1e-3


class TestCurveGap:
    def test_zero_for_same_curve(self, plane, gravity):
        c = solve_particle(plane, gravity, (0.0, 0.0), SolverConfig(C=0.5))
        assert curve_gap(c, c) == 0.0

    def test_parallel_offset(self):
        x = np.linspace(0, 1, 11)
        a = np.column_stack([x, 0 * x])
        b = np.column_stack([x, 0 * x + 0.25])
        assert curve_gap(a, b) == pytest.approx(0.25)
        assert curve_gap(b, a) == curve_gap(a, b)

    def test_independent_of_sampling(self):
        x = np.linspace(0, 1, 11)
        y = np.linspace(0, 1, 101)
        assert curve_gap(np.column_stack([x, x]), np.column_stack([y, y])) < 1e-15
