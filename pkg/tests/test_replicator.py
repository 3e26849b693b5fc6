"""Replicator fields, the simplex-preserving integrator, schedules, diagnostics."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from simplexflow import (
    ConstantSchedule,
    ExponentialSchedule,
    FieldKind,
    IntegratorControls,
    InteriorityError,
    InvalidInputError,
    PiecewiseConstantSchedule,
    ScoreVector,
    SimplexPoint,
    TerminalStatus,
    UnsupportedIdentityError,
    build_face_topk,
    check_time_reparameterization,
    effective_time,
    embed_in_face,
    euler_consistency,
    eval_field,
    integrate,
    kl_divergence,
    lyapunov_report,
    parse_schedule,
    restrict_to_face,
    softmax,
)
from simplexflow.oracles import closed_form_literal

from conftest import score_lists, weight_lists


class TestSchedules:
    def test_constant_effective_time(self):
        assert effective_time(ConstantSchedule(2.0), 4.0) == pytest.approx(2.0, abs=1e-15)

    def test_piecewise_effective_time_example(self):
        sched = PiecewiseConstantSchedule((1.0,), (1.0, 2.0))
        assert effective_time(sched, 3.0) == pytest.approx(2.0, abs=1e-15)
        assert sched.at(0.5) == 1.0
        assert sched.at(1.0) == 2.0

    def test_exponential_effective_time_example(self):
        sched = ExponentialSchedule(1.0, 1.0)
        assert effective_time(sched, 1.0) == pytest.approx(1.0 - math.exp(-1.0), abs=1e-15)

    def test_exponential_zero_rate_is_constant(self):
        assert effective_time(ExponentialSchedule(2.0, 0.0), 4.0) == pytest.approx(2.0)

    @given(st.floats(0.1, 10.0), st.lists(st.floats(0.01, 5.0), min_size=1, max_size=20))
    def test_effective_time_is_monotone(self, temp, increments):
        sched = ExponentialSchedule(temp, -0.2)
        ts = np.cumsum(increments)
        taus = [effective_time(sched, float(t)) for t in ts]
        assert np.all(np.diff(taus) > 0)

    def test_invalid_schedules_raise(self):
        with pytest.raises(InvalidInputError):
            PiecewiseConstantSchedule((2.0, 1.0), (1.0, 1.0, 1.0))
        with pytest.raises(InvalidInputError):
            PiecewiseConstantSchedule((1.0,), (1.0, -2.0))
        with pytest.raises(InvalidInputError):
            ConstantSchedule(0.0)

    def test_parse_round_trips(self):
        assert parse_schedule("constant:2.0") == ConstantSchedule(2.0)
        assert parse_schedule("piecewise:0:1.0,1:2.0") == PiecewiseConstantSchedule(
            (1.0,), (1.0, 2.0)
        )
        assert parse_schedule("exponential:1.0:0.5") == ExponentialSchedule(1.0, 0.5)
        with pytest.raises(InvalidInputError):
            parse_schedule("linear:1.0")
        with pytest.raises(InvalidInputError):
            parse_schedule("piecewise:1:1.0")


class TestEvalField:
    def test_literal_two_point_example(self):
        x = eval_field(FieldKind.LITERAL, SimplexPoint([0.5, 0.5]), ScoreVector([1.0, 0.0]), 1.0)
        assert np.allclose(x, [0.25, -0.25], atol=1e-15)

    def test_constant_scores_give_zero_field(self):
        x = eval_field(
            FieldKind.LITERAL, SimplexPoint([0.2, 0.3, 0.5]), ScoreVector([2.0, 2.0, 2.0]), 1.0
        )
        assert np.all(x == 0.0)

    def test_entropic_vanishes_at_softmax(self):
        s = ScoreVector([1.0, 0.0, -0.5])
        pi = softmax(s, 1.0)
        x = eval_field(FieldKind.ENTROPIC, pi, s, 1.0)
        assert np.max(np.abs(x)) <= 1e-12

    def test_literal_does_not_vanish_at_softmax(self):
        # the stationarity witness: score-only fitness is not equilibrated by softmax
        s = ScoreVector([1.0, 0.0])
        x = eval_field(FieldKind.LITERAL, softmax(s, 1.0), s, 1.0)
        assert np.max(np.abs(x)) > 0.1

    def test_entropic_boundary_raises(self):
        with pytest.raises(InteriorityError):
            eval_field(FieldKind.ENTROPIC, SimplexPoint([1.0, 0.0]), ScoreVector([1.0, 0.0]), 1.0)

    def test_zero_coordinates_stay_exactly_zero(self):
        x = eval_field(
            FieldKind.LITERAL, SimplexPoint([0.6, 0.0, 0.4]), ScoreVector([1.0, 5.0, 0.0]), 1.0
        )
        assert x[1] == 0.0

    @given(score_lists(max_size=12), weight_lists(max_size=12), st.floats(0.1, 5.0))
    def test_tangency_at_ulp_level(self, values, weights, t):
        size = min(len(values), len(weights))
        if size < 2:
            return
        p = SimplexPoint(np.asarray(weights[:size]) / np.sum(weights[:size]))
        s = ScoreVector(values[:size])
        for kind in FieldKind:
            x = eval_field(kind, p, s, t)
            # exact zero is not representable for a rounded product sum; a few
            # ulps of the largest component is the attainable contract
            assert abs(float(np.sum(x))) <= 1e-13

    @given(score_lists(max_size=8), weight_lists(max_size=8), st.floats(-4.0, 4.0))
    def test_shift_invariance(self, values, weights, c):
        size = min(len(values), len(weights))
        if size < 2:
            return
        p = SimplexPoint(np.asarray(weights[:size]) / np.sum(weights[:size]))
        s = ScoreVector(values[:size])
        for kind in FieldKind:
            a = eval_field(kind, p, s, 1.0)
            b = eval_field(kind, p, s.shifted(c), 1.0)
            assert np.max(np.abs(a - b)) <= 1e-12

    def test_entropic_equilibrium_is_unique_by_probing(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 6))
        t = 1.0
        pi = softmax(s, t)
        assert np.max(np.abs(eval_field(FieldKind.ENTROPIC, pi, s, t))) <= 1e-12
        for _ in range(10_000):
            p = SimplexPoint(rng.dirichlet(np.ones(6)))
            if kl_divergence(p, pi) > 1e-4:
                assert np.max(np.abs(eval_field(FieldKind.ENTROPIC, p, s, t))) > 1e-8


class TestIntegrateEntropic:
    def test_converges_to_softmax_with_monotone_free_energy(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 8))
        p0 = SimplexPoint(rng.dirichlet(np.ones(8)))
        traj = integrate(FieldKind.ENTROPIC, p0, s, 1.0)
        assert traj.terminal_status is TerminalStatus.CONVERGED
        assert kl_divergence(traj.terminal.p, softmax(s, 1.0)) < 1e-8
        report = lyapunov_report(traj, s, 1.0)
        assert report.monotone

    def test_probability_sums_stay_tight(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 16))
        p0 = SimplexPoint(rng.dirichlet(np.ones(16)))
        traj = integrate(FieldKind.ENTROPIC, p0, s, 0.5)
        for sample in traj.samples:
            assert abs(float(sample.p.probs.sum()) - 1.0) <= 1e-12
        assert traj.renormalizations == 0  # corrective events counted, none expected
        assert np.all(np.diff(traj.times) > 0)

    def test_boundary_push_hits_clamp_and_reports_diverged(self):
        # equilibrium mass below 1e-300: with early stopping disabled the flow
        # keeps driving log p_1 down until the clamp flags the run
        s = ScoreVector([0.0, 1600.0])
        traj = integrate(
            FieldKind.ENTROPIC,
            SimplexPoint.uniform(2),
            s,
            1.0,
            10.0,
            IntegratorControls(convergence_kl=0.0),
        )
        assert traj.terminal_status is TerminalStatus.DIVERGED
        assert "clamp" in traj.diagnostics

    def test_boundary_start_raises(self):
        with pytest.raises(InteriorityError):
            integrate(FieldKind.ENTROPIC, SimplexPoint([1.0, 0.0]), ScoreVector([1.0, 0.0]), 1.0)


class TestIntegrateLiteral:
    def test_matches_closed_form(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 32))
        p0 = SimplexPoint(rng.dirichlet(np.ones(32)))
        grid = tuple(np.linspace(0.0, 20.0, 11))
        traj = integrate(
            FieldKind.LITERAL,
            p0,
            s,
            1.0,
            20.0,
            IntegratorControls(sample_times=grid, convergence_kl=0.0),
        )
        for sample in traj.samples:
            exact = closed_form_literal(p0, s, 1.0, sample.t)
            mask = exact.probs > 0
            rel = np.max(np.abs(sample.p.probs[mask] / exact.probs[mask] - 1.0))
            assert rel < 1e-6

    def test_concentrates_on_argmax(self, rng):
        s = ScoreVector([1.0, 0.2, 0.0])
        p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
        traj = integrate(FieldKind.LITERAL, p0, s, 1.0, 100.0, IntegratorControls(convergence_kl=1e-14))
        assert traj.terminal.p.probs[0] > 1.0 - 1e-6

    def test_face_coordinates_stay_exactly_zero(self, rng):
        p0 = SimplexPoint([0.4, 0.0, 0.35, 0.25, 0.0])
        s = ScoreVector(rng.uniform(-3, 3, 5))
        traj = integrate(FieldKind.LITERAL, p0, s, 1.0, 50.0)
        for sample in traj.samples:
            assert sample.p.probs[1] == 0.0
            assert sample.p.probs[4] == 0.0

    def test_face_restricted_run_matches_restricted_system(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 6))
        mask = build_face_topk(s, 4)
        p_face = SimplexPoint(rng.dirichlet(np.ones(4)))
        p_full = embed_in_face(mask, p_face)
        s_face, _ = restrict_to_face(s, p_full, mask)
        grid = tuple(np.linspace(0.0, 15.0, 16))
        controls = IntegratorControls(sample_times=grid, convergence_kl=0.0)
        full = integrate(FieldKind.LITERAL, p_full, s, 1.0, 15.0, controls)
        restricted = integrate(FieldKind.LITERAL, p_face, s_face, 1.0, 15.0, controls)
        for a, b in zip(full.samples, restricted.samples):
            assert np.max(np.abs(a.p.probs[mask.support] - b.p.probs)) < 1e-8

    def test_tied_argmax_freezes_within_set_ratios(self):
        s = ScoreVector([1.0, 1.0, 0.0])
        p0 = SimplexPoint([0.2, 0.4, 0.4])
        traj = integrate(FieldKind.LITERAL, p0, s, 1.0, 200.0, IntegratorControls(convergence_kl=1e-16))
        terminal = traj.terminal.p.probs
        # closed form: tied-set mass goes to 1 with ratios locked at 0.2 : 0.4
        assert terminal[0] + terminal[1] > 1.0 - 1e-8
        assert terminal[0] / terminal[1] == pytest.approx(0.5, abs=1e-8)


class TestLyapunovReport:
    def test_entropic_runs_are_monotone(self, rng):
        for _ in range(40):
            size = int(rng.integers(2, 9))
            s = ScoreVector(rng.uniform(-3, 3, size))
            p0 = SimplexPoint(rng.dirichlet(np.ones(size)))
            traj = integrate(FieldKind.ENTROPIC, p0, s, 1.0)
            assert lyapunov_report(traj, s, 1.0).monotone

    def test_literal_from_softmax_loses_free_energy(self):
        s = ScoreVector([1.0, 0.0])
        pi = softmax(s, 1.0)
        traj = integrate(FieldKind.LITERAL, pi, s, 1.0, 50.0)
        report = lyapunov_report(traj, s, 1.0)
        assert not report.monotone
        assert report.worst_drop < 0.0

    def test_stationary_start_is_flat(self):
        s = ScoreVector([1.0, 0.0])
        pi = softmax(s, 1.0)
        traj = integrate(FieldKind.ENTROPIC, pi, s, 1.0, 10.0)
        report = lyapunov_report(traj, s, 1.0)
        assert report.worst_drop >= -1e-12


class TestEulerConsistency:
    def test_symmetric_point_degenerates_to_second_order(self):
        # at p = (1/2, 1/2) the second derivative of the MW map vanishes by
        # symmetry (sigmoid inflection), so the residual is O(eta^2) there;
        # the >= 0.9 first-order contract still holds
        report = euler_consistency(
            SimplexPoint([0.5, 0.5]), ScoreVector([1.0, 0.0]), 1.0, (1e-2, 1e-3, 1e-4)
        )
        assert report.order == pytest.approx(2.0, abs=0.1)
        assert report.order >= 0.9

    def test_generic_point_slope_near_one(self):
        report = euler_consistency(
            SimplexPoint([0.7, 0.3]), ScoreVector([1.0, 0.0]), 1.0, (1e-2, 1e-3, 1e-4)
        )
        assert report.order == pytest.approx(1.0, abs=0.1)

    def test_constant_scores_have_zero_residuals(self):
        report = euler_consistency(
            SimplexPoint([0.3, 0.7]), ScoreVector([2.0, 2.0]), 1.0, (1e-2, 1e-3)
        )
        assert all(r <= 1e-15 for r in report.residuals)
        assert report.order == math.inf

    def test_prox_step_linearizes_to_the_entropic_field(self, rng):
        for _ in range(20):
            size = int(rng.integers(2, 9))
            s = ScoreVector(rng.uniform(-3, 3, size))
            p = SimplexPoint(rng.dirichlet(np.ones(size)))
            t = float(rng.uniform(0.5, 2.0))
            report = euler_consistency(p, s, t, kind=FieldKind.ENTROPIC)
            assert report.order >= 0.9


class TestTimeReparameterization:
    def test_constant_schedule(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 3))
        p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
        dev = check_time_reparameterization(s, p0, ConstantSchedule(2.0), 5.0)
        assert dev < 1e-8

    def test_unit_schedule_is_trivial(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 3))
        p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
        dev = check_time_reparameterization(s, p0, ConstantSchedule(1.0), 5.0)
        assert dev < 1e-12

    def test_piecewise_schedule(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 3))
        p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
        sched = PiecewiseConstantSchedule((1.0,), (1.0, 0.5))
        dev = check_time_reparameterization(s, p0, sched, 5.0)
        assert dev < 1e-7

    def test_exponential_schedule(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 3))
        p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
        dev = check_time_reparameterization(s, p0, ExponentialSchedule(1.0, 0.4), 5.0)
        assert dev < 1e-7

    def test_entropic_kind_is_unsupported(self, rng):
        s = ScoreVector(rng.uniform(-3, 3, 3))
        p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
        with pytest.raises(UnsupportedIdentityError):
            check_time_reparameterization(s, p0, ConstantSchedule(2.0), 5.0, kind=FieldKind.ENTROPIC)
