"""Envelope solver: fixed points, schedules, brackets, comparison scans."""

import warnings

import numpy as np
import pytest

from subeq import parse_name
from subeq.core import Subequation
from subeq.errors import BracketError, ConfigError
from subeq.grid import Grid, GridProblem, SolverParams
from subeq.solver import (SolveReport, _refine_axis, _prolong, _cascade_ladder,
                          perron_solve, obstacle_solve, dual_bracket_solve,
                          comparison_check, membership_scan, _precheck)


def box_problem(bc, m=17, name="laplace:n=2", bounds=((0, 1), (0, 1)),
                **params):
    g = Grid.regular(bounds, m)
    return GridProblem(g, parse_name(name), bc, params=SolverParams(**params))


def saddle(x):
    return x[:, 0] ** 2 - x[:, 1] ** 2


class TestProlongation:
    def test_refine_axis_shape_and_endpoints(self):
        a = np.array([0.0, 2.0, 6.0])
        out = _refine_axis(a, 0)
        assert np.allclose(out, [0.0, 1.0, 2.0, 4.0, 6.0])

    def test_prolong_exact_on_linear_fields(self):
        gc = Grid.regular([(0, 1), (0, 1)], 9)
        gf = Grid.regular([(0, 1), (0, 1)], 17)
        f = lambda x: 2.0 * x[:, 0] - 3.0 * x[:, 1] + 0.5
        coarse = f(gc.points()).reshape(gc.shape)
        fine = _prolong(coarse)
        assert fine.shape == gf.shape
        assert np.allclose(fine.ravel(), f(gf.points()), atol=1e-13)


class TestCascadeLadder:
    def test_shapes_coarsest_first(self):
        P = box_problem(saddle, m=65)
        ladder = _cascade_ladder(P)
        assert [q.grid.shape for q in ladder] == [(17, 17), (33, 33)]
        assert np.isclose(ladder[0].grid.h, 4 * P.grid.h)

    def test_odd_spacing_disables_ladder(self):
        P = box_problem(saddle, m=64)
        assert _cascade_ladder(P) == []

    def test_small_grids_have_no_ladder(self):
        P = box_problem(saddle, m=17)
        assert _cascade_ladder(P) == []


class TestPerron:
    def test_harmonic_quadratic_is_fixed_point(self):
        rep = perron_solve(box_problem(saddle, m=17))
        assert rep.converged
        g = Grid.regular([(0, 1), (0, 1)], 17)
        exact = saddle(g.points()).reshape(g.shape)
        assert np.nanmax(np.abs(rep.u - exact)) < 1e-6
        assert rep.residual < 1e-6

    def test_convexity_branch_quadratic(self):
        # x^2 has Hessian diag(2, 0): bottom eigenvalue exactly zero
        bc = lambda x: x[:, 0] ** 2
        rep = perron_solve(box_problem(bc, m=17, name="branch:real:k=1:n=2",
                                       bounds=((-1, 1), (-1, 1))))
        g = Grid.regular([(-1, 1), (-1, 1)], 17)
        exact = (g.points()[:, 0] ** 2).reshape(g.shape)
        assert rep.converged
        assert np.nanmax(np.abs(rep.u - exact)) < 1e-6

    def test_plain_iteration_same_fixed_point(self):
        a = perron_solve(box_problem(saddle, m=17))
        b = perron_solve(box_problem(saddle, m=17, omega=1.0, init="flat"))
        assert np.nanmax(np.abs(a.u - b.u)) < 1e-7

    def test_lex_schedule_agrees(self):
        a = perron_solve(box_problem(saddle, m=9))
        b = perron_solve(box_problem(saddle, m=9, order="lex"))
        assert np.nanmax(np.abs(a.u - b.u)) < 1e-7

    def test_cascade_agrees_with_flat(self):
        a = perron_solve(box_problem(saddle, m=33))            # ladder [17]
        b = perron_solve(box_problem(saddle, m=33, init="flat"))
        assert np.nanmax(np.abs(a.u - b.u)) < 1e-7

    def test_sweep_cap_reports_unconverged(self):
        P = box_problem(saddle, m=17, max_sweeps=3, init="flat")
        rep = perron_solve(P)
        assert not rep.converged and rep.sweeps == 3

    def test_report_json_is_stable_and_timeless(self):
        rep = perron_solve(box_problem(saddle, m=9))
        d = rep.to_json_dict()
        assert "wall_time" not in d and "u" not in d
        assert d["converged"] is True


class TestDegenerateAndEmptyFibers:
    def test_everything_member_rises_to_data_max(self):
        F = Subequation(2, lambda r, p, A: np.ones(len(np.atleast_1d(r))),
                        "always")
        g = Grid.regular([(0, 1), (0, 1)], 9)
        P = GridProblem(g, F, lambda x: x[:, 0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = perron_solve(P)
        assert rep.degenerate_nodes == len(P.interior_idx)
        assert np.allclose(rep.u[1:-1, 1:-1], 1.0, atol=1e-12)

    def test_nothing_member_raises(self):
        F = Subequation(2, lambda r, p, A: -np.ones(len(np.atleast_1d(r))),
                        "never")
        g = Grid.regular([(0, 1), (0, 1)], 9)
        P = GridProblem(g, F, lambda x: x[:, 0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(BracketError):
                perron_solve(P)

    def test_precheck_warns_on_bad_axioms(self):
        antilap = Subequation(
            2, lambda r, p, A: -np.trace(np.atleast_3d(A).reshape(-1, 2, 2),
                                         axis1=1, axis2=2), "anti")
        with pytest.warns(RuntimeWarning):
            _precheck(antilap)


class TestObstacle:
    def test_slack_obstacle_reproduces_perron(self):
        P1 = box_problem(saddle, m=9)
        free = perron_solve(P1)
        P2 = box_problem(saddle, m=9)
        capped = obstacle_solve(P2, lambda x: np.full(len(x), 10.0))
        assert np.nanmax(np.abs(free.u - capped.u)) < 1e-7
        assert capped.contact_nodes == 0

    def test_admissible_obstacle_is_attained(self):
        # g = x - 0.1 sin(pi x) sin(pi y) matches the data on the box edge
        # and its discrete Laplacian is >= 0, so the envelope climbs to g
        def g(x):
            return x[:, 0] - 0.1 * np.sin(np.pi * x[:, 0]) \
                * np.sin(np.pi * x[:, 1])
        P = box_problem(lambda x: x[:, 0], m=17)
        rep = obstacle_solve(P, g)
        gp = g(P.grid.points()).reshape(P.grid.shape)
        assert np.nanmax(np.abs(rep.u - gp)) < 1e-8
        assert rep.contact_nodes == len(P.interior_idx)
        assert rep.residual == 0.0

    def test_data_above_obstacle_rejected(self):
        P = box_problem(lambda x: x[:, 0], m=9)
        with pytest.raises(ConfigError):
            obstacle_solve(P, lambda x: np.full(len(x), 0.5))


class TestDualBracket:
    def test_laplace_bracket_is_tight(self):
        res = dual_bracket_solve(box_problem(saddle, m=17))
        st = res.report.sweep_tol
        assert res.min_gap >= -10.0 * st
        assert np.nanmax(np.abs(res.U - res.U_tilde)) < 1e-6
        d = res.to_json_dict()
        assert set(d) == {"report", "report_dual", "max_gap", "min_gap"}


def field_on(g, f):
    return f(g.points()).reshape(g.shape)


class TestComparison:
    def setup_method(self):
        self.g = Grid.regular([(0, 1), (0, 1)], 17)
        self.F = parse_name("laplace:n=2")

    def test_pass(self):
        u = field_on(self.g, saddle)
        rep = comparison_check(self.g, u, -u, self.F)
        assert rep.passed and rep.status == "pass"
        assert rep.witness is None

    def test_zmp_fail_with_witness(self):
        # an interior bump that vanishes on the edge band: the pair sums to
        # something positive inside while respecting both jet families
        eps = 0.02
        bump = lambda x: eps * np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])
        u = field_on(self.g, lambda x: saddle(x) + bump(x))
        v = field_on(self.g, lambda x: -saddle(x))
        rep = comparison_check(self.g, u, v, self.F)
        assert rep.status == "zmp_fail"
        assert rep.interior_max > 0
        assert rep.boundary_max <= 1e-30      # sin(pi) round-off only
        w = np.array(rep.witness["point"])
        assert 0.2 < w[0] < 0.8 and 0.2 < w[1] < 0.8

    def test_precondition_fail(self):
        u = field_on(self.g, lambda x: -x[:, 0] ** 2)    # concave: not in F
        rep = comparison_check(self.g, u, np.zeros(self.g.shape), self.F)
        assert rep.status == "precondition_fail"
        assert rep.sub_margin < 0

    def test_vacuous(self):
        u = field_on(self.g, lambda x: saddle(x) + 0.5)
        v = field_on(self.g, lambda x: -saddle(x) + 0.5)
        rep = comparison_check(self.g, u, v, self.F)
        assert rep.status == "vacuous"
        assert rep.boundary_max > 0

    def test_mask_without_interior_rejected(self):
        K = np.zeros(self.g.shape, dtype=bool)
        K[3, 3] = True
        with pytest.raises(ConfigError):
            comparison_check(self.g, np.zeros(self.g.shape),
                             np.zeros(self.g.shape), self.F, K=K)


class TestMembershipScan:
    def test_known_margins(self):
        g = Grid.regular([(-1, 1), (-1, 1)], 17)
        u = field_on(g, lambda x: x[:, 0] ** 2)
        assert abs(membership_scan(g, u, parse_name("branch:real:k=1:n=2"))) \
            < 1e-10
        assert abs(membership_scan(g, u, parse_name("laplace:n=2")) - 2.0) \
            < 1e-10

    def test_respects_mask(self):
        g = Grid.regular([(-1, 1), (-1, 1)], 17)
        pts = g.points()
        # field convex only where the mask looks
        u = np.where(pts[:, 0] > 0, pts[:, 0] ** 2,
                     -pts[:, 0] ** 2).reshape(g.shape)
        K = (pts[:, 0] > 0.2).reshape(g.shape)
        full = membership_scan(g, u, parse_name("branch:real:k=1:n=2"))
        masked = membership_scan(g, u, parse_name("branch:real:k=1:n=2"), K=K)
        assert full < -1.0 and abs(masked) < 1e-10
