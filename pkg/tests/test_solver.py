"""Tests for solver.py - damped Newton, the continuity run and the barriers."""

import logging
from unittest.mock import patch

import numpy as np
import pytest

from src.errors import BadBoundary, EntryFailure, NoConvergence, PositivityLoss
from src.field import INTERIOR, PotentialGrid, is_admissible, log_residual
from src.geometry import BackgroundGeometry, DivisorData, conical_c_max, smoothed_boundary
from src.solver import (
    DIRICHLET,
    NEUMANN,
    BoundarySpec,
    Schedule,
    ScheduleEntry,
    apply_closure,
    assemble_operator,
    bridge_entry,
    continuity_run,
    convexity_threshold,
    initial_guess,
    newton_solve,
    prolongation,
    roundoff_floor,
    sandwich_check,
    subsolution,
    subsolution_constant,
    supersolution,
    warm_start,
)
from src.stencils import mixed_derivative, second_derivative
from src.weights import constant_weight, product_weight
from tests.conftest import SMALL_N_T, admissible_potential


def _zeros(geo):
    return np.zeros(geo.n_u), np.zeros(geo.n_u)


def _flat_solution(geo, eps):
    """Exact discrete solution for zero data and a constant weight: ε·t(t−1)/2."""
    return PotentialGrid.from_function(geo, SMALL_N_T, lambda u, t: 0.5 * eps * t * (t - 1.0) + 0 * u)


def _conical_case(geo, beta, p=0.75):
    """Divisor at half its c_max with a product weight of exponent p."""
    div = DivisorData(beta, c=0.5 * conical_c_max(DivisorData(beta), geo))
    return div, product_weight(p=p)


class TestSchedule:
    """Tests for Schedule."""

    def test_defaults_from_eps(self):
        sched = Schedule.from_eps([1e-1, 1e-2], p=0.75)
        assert [e.eta for e in sched.entries] == pytest.approx([1e-1 ** (4 / 3), 1e-2 ** (4 / 3)])
        assert [e.smoothing_k for e in sched.entries] == [10, 100]
        assert len(sched) == 2

    def test_eps_must_decrease(self):
        with pytest.raises(ValueError, match="strictly decreasing"):
            Schedule.from_eps([1e-2, 1e-1], p=1.0)

    def test_k_must_not_decrease(self):
        with pytest.raises(ValueError, match="smoothing_k"):
            Schedule.from_eps([1e-1, 1e-2], p=1.0, k_list=[10, 5])

    def test_eta_list_length_must_match(self):
        with pytest.raises(ValueError, match="eta_list"):
            Schedule.from_eps([1e-1, 1e-2], p=1.0, eta_list=[1e-1])

    def test_eps_above_eta_power_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="src.solver"):
            Schedule.from_eps([1e-1], p=1.0, eta_list=[1e-3])
        assert "barrier" in caplog.text

    def test_geometric(self):
        sched = Schedule.geometric(1e-1, 1e-4, 4, p=1.0)
        assert [e.eps for e in sched.entries] == pytest.approx([1e-1, 1e-2, 1e-3, 1e-4])


class TestInitialGuess:
    """Tests for convexity_threshold and initial_guess."""

    def test_zero_data(self, small_geo):
        grid = initial_guess(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        np.testing.assert_allclose(grid.values, np.broadcast_to(grid.t**2 - grid.t, grid.values.shape), atol=1e-15)
        np.testing.assert_allclose(grid.det[INTERIOR], 2.0 * grid.density.repeat(SMALL_N_T, 1)[INTERIOR], rtol=1e-9)

    def test_shift_data_needs_no_convexification(self, small_geo):
        b0 = np.asarray(smoothed_boundary(DivisorData(0.75, c=1.0), 10, small_geo.u))
        assert convexity_threshold(b0, b0 + 3.0, geo=small_geo, n_t=SMALL_N_T) < 1e-12

    def test_threshold_separates_admissible_guesses(self, small_geo):
        b1 = np.asarray(smoothed_boundary(DivisorData(0.75, c=1.0), 100, small_geo.u))
        b0 = np.zeros_like(b1)
        threshold = convexity_threshold(b0, b1, geo=small_geo, n_t=SMALL_N_T)
        assert threshold > 0
        assert is_admissible(initial_guess(b0, b1, 1.01 * threshold, geo=small_geo, n_t=SMALL_N_T))
        assert not is_admissible(initial_guess(b0, b1, 0.99 * threshold, geo=small_geo, n_t=SMALL_N_T))

    def test_inadmissible_boundary_raises(self, small_geo):
        with pytest.raises(BadBoundary, match="boundary1"):
            initial_guess(np.zeros(small_geo.n_u), -(small_geo.u**2), geo=small_geo, n_t=SMALL_N_T)

    def test_wrong_boundary_shape_raises(self, small_geo):
        with pytest.raises(BadBoundary, match="shape"):
            initial_guess(np.zeros(5), np.zeros(5), geo=small_geo, n_t=SMALL_N_T)


class TestClosure:
    """Tests for apply_closure and prolongation."""

    def test_neumann_copies_neighbour_for_flat_data(self):
        values = np.arange(40.0).reshape(8, 5)
        closed = apply_closure(values, np.zeros(8), np.zeros(8), NEUMANN)
        np.testing.assert_array_equal(closed[0, 1:-1], values[1, 1:-1])
        np.testing.assert_array_equal(closed[-1, 1:-1], values[-2, 1:-1])
        np.testing.assert_array_equal(closed[1:-1], values[1:-1])

    def test_dirichlet_interpolates_boundary_corners(self):
        b0, b1 = np.full(8, 1.0), np.full(8, 3.0)
        closed = apply_closure(np.zeros((8, 5)), b0, b1, DIRICHLET)
        np.testing.assert_allclose(closed[0, 1:-1], [1.5, 2.0, 2.5])

    def test_unknown_closure_raises(self):
        with pytest.raises(ValueError, match="lateral"):
            apply_closure(np.zeros((8, 5)), np.zeros(8), np.zeros(8), "periodic")

    def test_prolongation_shapes(self):
        P = prolongation(7, 6, NEUMANN)
        assert P.shape == (42, 20)
        assert P.sum() == 20 + 2 * 4
        assert prolongation(7, 6, DIRICHLET).sum() == 20

    def test_assembled_operator_matches_stencils(self, admissible_grid):
        F_uu, F_tt, F_tu = admissible_grid.hessian
        geo = admissible_grid.geo
        T, U = np.meshgrid(admissible_grid.t, geo.u)
        psi = np.cos(U) * T**2
        K = assemble_operator(F_uu, F_tt, F_tu, geo.h_u, admissible_grid.h_t)
        applied = (K @ psi.ravel()).reshape(geo.n_u - 2, SMALL_N_T - 2)
        expected = (
            F_tt * second_derivative(psi, geo.h_u, axis=0)
            + F_uu * second_derivative(psi, admissible_grid.h_t, axis=1)
            - 2.0 * F_tu * mixed_derivative(psi, geo.h_u, admissible_grid.h_t)
        )[INTERIOR]
        np.testing.assert_allclose(applied, expected, rtol=1e-10, atol=1e-12)


class TestNewtonSolve:
    """Tests for newton_solve."""

    def test_constant_weight_zero_data(self, small_geo):
        start = initial_guess(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        outcome = newton_solve(start, 1e-2, constant_weight())
        np.testing.assert_allclose(outcome.grid.values, _flat_solution(small_geo, 1e-2).values, atol=1e-9)
        assert outcome.final_residual <= 1e-8 + outcome.residual_floor
        assert outcome.admissible
        assert len(outcome.damping_history) == outcome.iterations
        assert min(outcome.damping_history) < 1.0

    def test_manufactured_solution_recovered(self, small_geo):
        start = initial_guess(*_zeros(small_geo), 3.0, geo=small_geo, n_t=SMALL_N_T)
        outcome = newton_solve(start, 2.0, constant_weight())
        expected = np.broadcast_to(start.t**2 - start.t, start.values.shape)
        np.testing.assert_allclose(outcome.grid.values, expected, atol=1e-7)

    def test_solution_is_u_independent(self, small_geo):
        start = initial_guess(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        values = newton_solve(start, 1e-1, constant_weight()).grid.values
        np.testing.assert_allclose(values, np.broadcast_to(values[16], values.shape), atol=1e-10)

    def test_dirichlet_start_is_not_admissible(self, small_geo):
        # t-linear lateral data next to the M(t² − t) interior makes det < 0 near the corners.
        start = initial_guess(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T, lateral=DIRICHLET)
        assert not is_admissible(start)
        with pytest.raises(PositivityLoss):
            newton_solve(start, 1e-1, constant_weight(), lateral=DIRICHLET)

    def test_warm_start_needs_fewer_iterations(self, small_geo):
        w = constant_weight()
        cold_start = initial_guess(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        first = newton_solve(cold_start, 1e-1, w)
        warm = newton_solve(first.grid, 1e-2, w)
        cold = newton_solve(cold_start, 1e-2, w)
        assert warm.iterations <= cold.iterations

    def test_iteration_cap_raises(self, small_geo):
        start = initial_guess(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        with pytest.raises(NoConvergence) as exc:
            newton_solve(start, 1e-2, constant_weight(), max_iter=1)
        assert exc.value.iterations == 1
        assert exc.value.residual > 1e-8

    def test_inadmissible_start_raises(self, zero_grid):
        with pytest.raises(PositivityLoss):
            newton_solve(zero_grid, 1e-2, constant_weight())

    def test_eps_must_be_positive(self, admissible_grid):
        with pytest.raises(ValueError, match="eps"):
            newton_solve(admissible_grid, 0.0, constant_weight())

    def test_roundoff_floor_small_in_the_bulk(self, fine_geo):
        grid = PotentialGrid.from_function(fine_geo, SMALL_N_T, admissible_potential())
        floor = roundoff_floor(grid)
        assert floor[64, 8] < 1e-10
        assert floor[1, 8] > 100.0 * floor[64, 8]
        assert np.all(floor[0] == 0) and np.all(floor[:, 0] == 0)

    def test_truncation_margin_grid_converges(self):
        # u_max + 2 puts nodes where det Hess F ~ 1e-8 and round-off alone exceeds 1e-8.
        base = BackgroundGeometry(u_max=16.0, n_u=65)
        geo = base.extended(2.0)
        div, w = _conical_case(base, 0.75)
        b0, b1 = BoundarySpec().slices(div, 10, geo.u)
        start = initial_guess(b0, b1, geo=geo, n_t=33)
        outcome = newton_solve(start, 1e-1, w.with_eta(1e-1 ** (4.0 / 3.0)))
        assert outcome.admissible
        assert outcome.residual_floor > 0
        assert outcome.final_residual <= 1e-8 + outcome.residual_floor
        r = log_residual(outcome.grid, 1e-1, w.with_eta(1e-1 ** (4.0 / 3.0)))
        assert np.max(np.abs(r[20:53, 1:-1])) <= 1e-8


class TestWarmStart:
    """Tests for warm_start and bridge_entry."""

    def test_steeper_slice_gets_convexified(self, admissible_grid):
        geo = admissible_grid.geo
        b0 = admissible_grid.boundary0
        b1 = admissible_grid.boundary1 + 0.5 * geo.u
        naive = admissible_grid.values + 0.5 * geo.u[:, None] * admissible_grid.t[None, :]
        assert not is_admissible(PotentialGrid.from_values(geo, naive))
        start = warm_start(admissible_grid, b0, b1)
        assert start is not None
        assert is_admissible(start)
        np.testing.assert_array_equal(start.boundary1, b1)

    def test_concave_slice_change_gives_none(self, admissible_grid):
        geo = admissible_grid.geo
        b1 = admissible_grid.boundary1 - 0.01 * geo.u**2
        assert warm_start(admissible_grid, admissible_grid.boundary0, b1) is None

    def test_sharper_smoothing_stays_admissible(self):
        geo = BackgroundGeometry(u_max=16.0, n_u=65)
        div, w = _conical_case(geo, 0.25)
        spec = BoundarySpec()
        b0, b1 = spec.slices(div, 10, geo.u)
        first = newton_solve(initial_guess(b0, b1, geo=geo, n_t=SMALL_N_T), 1e-1, w.with_eta(1e-1 ** (4.0 / 3.0)))
        start = warm_start(first.grid, *spec.slices(div, 100, geo.u))
        assert start is not None
        assert is_admissible(start)

    def test_bridge_entry_is_geometric_midpoint(self):
        mid = bridge_entry(ScheduleEntry(1e-1, 1e-4, 10), ScheduleEntry(1e-3, 1e-8, 1000))
        assert mid.eps == pytest.approx(1e-2)
        assert mid.eta == pytest.approx(1e-6)
        assert mid.smoothing_k == 100

    def test_bridge_k_stays_between_neighbours(self):
        mid = bridge_entry(ScheduleEntry(1e-1, 1e-4, 7), ScheduleEntry(1e-2, 1e-6, 7))
        assert mid.smoothing_k == 7

    def test_inadmissible_warm_start_is_bridged(self, small_geo, caplog):
        caplog.set_level(logging.INFO, logger="src.solver")
        sched = Schedule.from_eps([1e-1, 1e-2], p=1.0)
        with patch("src.solver.warm_start", return_value=None):
            outcomes = continuity_run(
                sched,
                DivisorData(0.75, c=1.0),
                constant_weight(),
                geo=small_geo,
                n_t=SMALL_N_T,
                boundary=BoundarySpec(end_scale=0.0),
                max_bridges=1,
            )
        assert "bridging" in caplog.text
        assert "falling back to initial guess" in caplog.text
        np.testing.assert_allclose(outcomes[1].grid.values, _flat_solution(small_geo, 1e-2).values, atol=1e-9)

    def test_no_bridges_falls_back_to_initial_guess(self, small_geo, caplog):
        sched = Schedule.from_eps([1e-1, 1e-2], p=1.0)
        with patch("src.solver.warm_start", return_value=None):
            outcomes = continuity_run(
                sched,
                DivisorData(0.75, c=1.0),
                constant_weight(),
                geo=small_geo,
                n_t=SMALL_N_T,
                boundary=BoundarySpec(end_scale=0.0),
                max_bridges=0,
            )
        assert "bridging" not in caplog.text
        assert "falling back to initial guess" in caplog.text
        start = initial_guess(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        direct = newton_solve(start, 1e-2, constant_weight().with_eta(sched.entries[1].eta))
        np.testing.assert_array_equal(outcomes[1].grid.values, direct.grid.values)


class TestContinuityRun:
    """Tests for continuity_run."""

    def test_single_entry_equals_direct_solve(self, small_geo):
        w = constant_weight()
        sched = Schedule.from_eps([1e-2], p=1.0)
        flat = BoundarySpec(end_scale=0.0)
        outcome = continuity_run(sched, DivisorData(0.75, c=1.0), w, geo=small_geo, n_t=SMALL_N_T, boundary=flat)[0]
        start = initial_guess(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        direct = newton_solve(start, 1e-2, w.with_eta(sched.entries[0].eta))
        np.testing.assert_array_equal(outcome.grid.values, direct.grid.values)

    def test_records_and_decreasing_solutions(self, small_geo):
        records = []
        sched = Schedule.from_eps([1e-1, 1e-2, 1e-3], p=0.5)
        outcomes = continuity_run(
            sched,
            DivisorData(0.75, c=1.0),
            product_weight(p=0.5),
            geo=small_geo,
            n_t=SMALL_N_T,
            boundary=BoundarySpec(end_scale=0.0),
            on_record=records.append,
        )
        assert [r["entry"] for r in records] == [0, 1, 2]
        assert set(records[0]) == {"entry", "eps", "eta", "iters", "residual"}
        sups = [np.max(np.abs(o.grid.values)) for o in outcomes]
        assert sups[0] > sups[1] > sups[2]
        assert [o.eps for o in outcomes] == pytest.approx([1e-1, 1e-2, 1e-3])

    def test_failure_reports_entry(self, small_geo):
        sched = Schedule.from_eps([1e-2], p=1.0)
        with pytest.raises(EntryFailure) as exc:
            continuity_run(
                sched,
                DivisorData(0.75, c=1.0),
                constant_weight(),
                geo=small_geo,
                n_t=SMALL_N_T,
                boundary=BoundarySpec(end_scale=0.0),
                max_iter=1,
            )
        assert exc.value.entry == 0
        assert exc.value.outcomes == []
        assert isinstance(exc.value.cause, NoConvergence)

    def test_small_cone_angle_schedule_reaches_small_eps(self):
        geo = BackgroundGeometry(u_max=16.0, n_u=65)
        div, w = _conical_case(geo, 0.25)
        sched = Schedule.from_eps([1e-1, 1e-2, 1e-3, 1e-4], p=0.75)
        outcomes = continuity_run(sched, div, w, geo=geo, n_t=33)
        assert len(outcomes) == 4
        for outcome in outcomes:
            assert outcome.admissible
            assert outcome.final_residual <= 1e-8 + outcome.residual_floor

    @pytest.mark.integration
    def test_shift_data_approaches_translation(self, small_geo):
        div = DivisorData(0.75, c=1.0)
        spec = BoundarySpec(start_scale=1.0, end_scale=1.0, shift=3.0)
        sched = Schedule.from_eps([1e-1, 1e-2, 1e-3], p=0.75)
        outcomes = continuity_run(sched, div, product_weight(p=0.75), geo=small_geo, n_t=SMALL_N_T, boundary=spec)
        deviations = []
        for outcome, entry in zip(outcomes, sched.entries):
            b0, _ = spec.slices(div, entry.smoothing_k, small_geo.u)
            translation = b0[:, None] + 3.0 * outcome.grid.t[None, :]
            deviations.append(np.max(np.abs(outcome.grid.values - translation)))
        assert deviations[0] > deviations[1] > deviations[2]


class TestBarriers:
    """Tests for supersolution, subsolution and sandwich_check."""

    def test_supersolution_zero_data(self, small_geo):
        sup = supersolution(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        expected = np.broadcast_to(sup.t * (1.0 - sup.t), sup.values.shape)
        np.testing.assert_allclose(sup.values, expected, atol=1e-10)

    def test_supersolution_minimum_on_boundary(self, small_geo):
        b1 = np.asarray(smoothed_boundary(DivisorData(0.75, c=1.0), 10, small_geo.u))
        sup = supersolution(np.zeros_like(b1), b1, geo=small_geo, n_t=SMALL_N_T)
        boundary_min = min(np.min(sup.boundary0), np.min(sup.boundary1))
        assert np.min(sup.values[INTERIOR]) >= boundary_min - 1e-12

    def test_dirichlet_supersolution(self, small_geo):
        sup = supersolution(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T, lateral=DIRICHLET)
        np.testing.assert_array_equal(sup.values[0], 0.0)
        assert np.min(sup.values) >= -1e-12
        assert sup.values[16, 8] == pytest.approx(0.25, abs=0.05)

    def test_subsolution_zero_data(self, small_geo):
        assert subsolution_constant(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T) == pytest.approx(1.0)
        sub = subsolution(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        np.testing.assert_allclose(sub.values, np.broadcast_to(sub.t * (sub.t - 1.0), sub.values.shape))

    def test_subsolution_constant_without_rhs_is_convexity_threshold(self, small_geo):
        b1 = np.asarray(smoothed_boundary(DivisorData(0.75, c=1.0), 100, small_geo.u))
        b0 = np.zeros_like(b1)
        required = subsolution_constant(b0, b1, geo=small_geo, n_t=SMALL_N_T, rhs_bound=0.0)
        assert required == pytest.approx(convexity_threshold(b0, b1, geo=small_geo, n_t=SMALL_N_T))

    def test_equal_slices_without_rhs_give_constant_path(self, small_geo):
        b = np.asarray(smoothed_boundary(DivisorData(0.75, c=1.0), 10, small_geo.u))
        sub = subsolution(b, b, geo=small_geo, n_t=SMALL_N_T, rhs_bound=0.0)
        np.testing.assert_allclose(sub.values, np.broadcast_to(b[:, None], sub.values.shape), atol=1e-12)

    def test_given_constant_is_raised(self, small_geo):
        sub = subsolution(*_zeros(small_geo), 0.1, geo=small_geo, n_t=SMALL_N_T)
        assert sub.values[16, 8] == pytest.approx(-0.25)

    def test_sub_below_super(self, small_geo):
        b1 = np.asarray(smoothed_boundary(DivisorData(0.75, c=1.0), 10, small_geo.u))
        b0 = np.zeros_like(b1)
        sub = subsolution(b0, b1, geo=small_geo, n_t=SMALL_N_T)
        sup = supersolution(b0, b1, geo=small_geo, n_t=SMALL_N_T)
        assert np.all(sub.values <= sup.values + 1e-12)

    def test_sandwich_holds_for_solution(self, small_geo):
        grid = _flat_solution(small_geo, 1e-2)
        sub = subsolution(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        sup = supersolution(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        report = sandwich_check(grid, sub, sup)
        assert report.holds
        assert report.worst_node is None

    def test_sandwich_flags_corrupted_node(self, small_geo):
        values = np.array(_flat_solution(small_geo, 1e-2).values)
        values[16, 8] += 10.0
        sub = subsolution(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        sup = supersolution(*_zeros(small_geo), geo=small_geo, n_t=SMALL_N_T)
        report = sandwich_check(PotentialGrid.from_values(small_geo, values), sub, sup)
        assert not report.holds
        assert report.worst_node == (16, 8)
        assert report.max_above == pytest.approx(values[16, 8] - 0.25, rel=1e-6)

    def test_sandwich_shape_mismatch_raises(self, small_geo, admissible_grid):
        other = PotentialGrid.from_values(small_geo, np.zeros((small_geo.n_u, 9)))
        with pytest.raises(ValueError, match="dimensions"):
            sandwich_check(admissible_grid, other, other)


@pytest.fixture(scope="module")
def conical_run():
    """β = 0.75 conical data on the 129×65 grid, ε down to 1e-3."""
    geo = BackgroundGeometry(u_max=16.0, n_u=129)
    div, w = _conical_case(geo, 0.75)
    sched = Schedule.from_eps([1e-1, 1e-2, 1e-3], p=0.75)
    return geo, div, w, sched, continuity_run(sched, div, w, geo=geo, n_t=65)


@pytest.mark.integration
class TestSolverIntegration:
    """Integration tests on solved conical data at full grid size."""

    def test_fine_grid_reaches_tolerance(self, conical_run):
        geo, _, w, sched, outcomes = conical_run
        last, entry = outcomes[-1], sched.entries[-1]
        assert last.iterations <= 40
        assert last.admissible
        assert last.final_residual <= 1e-8 + last.residual_floor
        r = log_residual(last.grid, entry.eps, w.with_eta(entry.eta))
        resolved = roundoff_floor(last.grid) <= 1e-10
        assert np.max(np.abs(r[resolved])) <= 1e-8

    def test_every_entry_is_sandwiched(self, conical_run):
        geo, div, _, sched, outcomes = conical_run
        for outcome, entry in zip(outcomes, sched.entries):
            b0, b1 = BoundarySpec().slices(div, entry.smoothing_k, geo.u)
            sub = subsolution(b0, b1, geo=geo, n_t=65)
            sup = supersolution(b0, b1, geo=geo, n_t=65)
            assert sandwich_check(outcome, sub, sup, tol=1e-6).holds
