"""State-dependent score fields: rotation, conservativity, recurrence, lock-in."""

import numpy as np
import pytest

from simplexflow import (
    FieldKind,
    IntegratorControls,
    ScoreField,
    ScoreVector,
    SimplexPoint,
    constant_field,
    curl_magnitude,
    detect_recurrence,
    eval_field,
    eval_path_field,
    find_multibasin_coupling,
    find_recurrent_beta,
    generalized_free_energy,
    integrate,
    integrate_path,
    is_conservative,
    linear_field,
    lockin_probe,
    rotation_coupling,
    softmax,
)


class TestScoreField:
    def test_constant_reduces_to_fixed_scores(self, rng):
        s0 = rng.uniform(-3, 3, 4)
        p = SimplexPoint(rng.dirichlet(np.ones(4)))
        for kind in FieldKind:
            a = eval_path_field(constant_field(s0), kind, p, 1.0)
            b = eval_field(kind, p, ScoreVector(s0), 1.0)
            assert np.array_equal(a, b)

    def test_zero_coupling_reduces_to_constant(self, rng):
        s0 = rng.uniform(-3, 3, 4)
        p = SimplexPoint(rng.dirichlet(np.ones(4)))
        a = eval_path_field(linear_field(s0, np.zeros((4, 4))), FieldKind.LITERAL, p, 1.0)
        b = eval_path_field(constant_field(s0), FieldKind.LITERAL, p, 1.0)
        assert np.array_equal(a, b)

    def test_rotation_at_uniform_is_tangent_rotation(self):
        field = linear_field(np.zeros(3), rotation_coupling(2.0))
        p = SimplexPoint.uniform(3)
        x = eval_path_field(field, FieldKind.LITERAL, p, 1.0)
        # B @ uniform = 0, so the field vanishes at the center of rotation
        assert np.max(np.abs(x)) <= 1e-15
        off_center = SimplexPoint([0.4, 0.3, 0.3])
        x = eval_path_field(field, FieldKind.LITERAL, off_center, 1.0)
        assert abs(float(np.sum(x))) <= 1e-14
        assert np.max(np.abs(x)) > 1e-3

    def test_antisymmetric_quadratic_form_vanishes(self, rng):
        field = linear_field(rng.uniform(-1, 1, 3), rotation_coupling(1.5))
        for _ in range(50):
            p = rng.dirichlet(np.ones(3))
            scores = field.scores_at(p)
            assert abs(float(p @ scores) - float(p @ field.base)) <= 1e-14

    def test_lipschitz_bound_is_the_spectral_norm(self, rng):
        coupling = rng.uniform(-2, 2, (4, 4))
        field = linear_field(np.zeros(4), coupling)
        assert field.lipschitz_bound == pytest.approx(np.linalg.norm(coupling, 2))
        assert constant_field(np.zeros(3)).lipschitz_bound == 0.0

    def test_json_round_trip(self, rng):
        field = linear_field(rng.uniform(-1, 1, 3), rotation_coupling(0.7))
        back = ScoreField.from_json(field.to_json())
        assert np.array_equal(back.base, field.base)
        assert np.array_equal(back.coupling, field.coupling)
        const = constant_field([1.0, 0.0])
        assert ScoreField.from_json(const.to_json()).coupling is None


class TestConservativity:
    def test_symmetric_is_conservative(self):
        coupling = np.array([[2.0, 1.0], [1.0, 0.0]])
        assert is_conservative(linear_field(np.zeros(2), coupling))
        assert curl_magnitude(linear_field(np.zeros(2), coupling)) == 0.0

    def test_antisymmetric_curl_is_twice_the_norm(self):
        coupling = rotation_coupling(1.5)
        field = linear_field(np.zeros(3), coupling)
        assert not is_conservative(field)
        assert curl_magnitude(field) == pytest.approx(
            2.0 * np.linalg.norm(coupling, "fro"), abs=1e-12
        )

    def test_mixed_parts_measure_only_the_antisymmetric_one(self, rng):
        raw = rng.uniform(-1, 1, (3, 3))
        symmetric = 0.5 * (raw + raw.T)
        antisymmetric = rotation_coupling(0.8)
        field = linear_field(np.zeros(3), symmetric + antisymmetric)
        assert curl_magnitude(field) == pytest.approx(
            2.0 * np.linalg.norm(antisymmetric, "fro"), abs=1e-12
        )

    def test_constant_field_is_conservative(self):
        assert is_conservative(constant_field([1.0, 0.0]))


class TestReduction:
    def test_constant_path_run_equals_replicator_run(self, rng):
        s0 = rng.uniform(-3, 3, 4)
        p0 = SimplexPoint(rng.dirichlet(np.ones(4)))
        controls = IntegratorControls(n_samples=40)
        a = integrate_path(constant_field(s0), FieldKind.ENTROPIC, p0, 1.0, 100.0, controls)
        b = integrate(FieldKind.ENTROPIC, p0, ScoreVector(s0), 1.0, 100.0, controls)
        assert a.terminal_status == b.terminal_status
        assert len(a.samples) == len(b.samples)
        for sa, sb in zip(a.samples, b.samples):
            assert sa.t == sb.t
            assert np.array_equal(sa.p.probs, sb.p.probs)
            assert sa.free_energy == sb.free_energy

    def test_zero_coupling_run_equals_replicator_run(self, rng):
        s0 = rng.uniform(-3, 3, 3)
        p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
        controls = IntegratorControls(n_samples=30)
        a = integrate_path(
            linear_field(s0, np.zeros((3, 3))), FieldKind.ENTROPIC, p0, 1.0, 50.0, controls
        )
        b = integrate(FieldKind.ENTROPIC, p0, ScoreVector(s0), 1.0, 50.0, controls)
        for sa, sb in zip(a.samples, b.samples):
            assert np.array_equal(sa.p.probs, sb.p.probs)


class TestRecurrence:
    def test_rotational_orbit_is_detected(self):
        beta, reports = find_recurrent_beta(betas=(1.0,))
        assert beta == 1.0
        report = reports[1.0]
        assert report.recurrent
        assert report.return_distance <= 1e-3
        # conservative rotation: near-zero free-energy drift over the loop
        assert abs(report.drift_per_cycle) < 1e-3
        # near the uniform center the period is about 10.9 T / beta; the
        # sampled orbit is larger, so the detected loop is somewhat longer
        assert 5.0 < report.first_return_time < 50.0

    def test_sweep_reports_every_probed_strength(self):
        beta, reports = find_recurrent_beta(betas=(0.5, 1.0))
        assert beta == 0.5
        assert set(reports) == {0.5}

    def test_converging_run_is_not_recurrent(self, rng):
        s0 = rng.uniform(-3, 3, 3)
        p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
        traj = integrate_path(
            constant_field(s0),
            FieldKind.ENTROPIC,
            p0,
            1.0,
            60.0,
            IntegratorControls(n_samples=2000, uniform_samples=True, convergence_kl=0.0),
        )
        assert not detect_recurrence(traj).recurrent

    def test_stationary_start_is_not_recurrent(self, rng):
        s0 = rng.uniform(-3, 3, 3)
        pi = softmax(ScoreVector(s0), 1.0)
        traj = integrate_path(
            constant_field(s0),
            FieldKind.ENTROPIC,
            pi,
            1.0,
            20.0,
            IntegratorControls(n_samples=500, uniform_samples=True, convergence_kl=0.0),
        )
        assert not detect_recurrence(traj).recurrent

    def test_needs_at_least_two_samples(self):
        from simplexflow.exceptions import InvalidInputError
        from simplexflow.trajectory import TerminalStatus, TrajectoryRecord, TrajectorySample

        sample = TrajectorySample(0.0, SimplexPoint.uniform(2), 0.0, 0.0, 0.0)
        with pytest.raises(InvalidInputError):
            detect_recurrence(TrajectoryRecord([sample], TerminalStatus.MAX_TIME))


class TestGeneralizedFreeEnergy:
    def test_reduces_to_free_energy_without_coupling(self, rng):
        from simplexflow import free_energy

        s0 = rng.uniform(-3, 3, 4)
        p = SimplexPoint(rng.dirichlet(np.ones(4)))
        g = generalized_free_energy(constant_field(s0), p, 1.5)
        f = free_energy(p, ScoreVector(s0), 1.5).value
        assert g == pytest.approx(f, abs=1e-14)

    def test_symmetric_coupling_ascends_g_under_entropic_flow(self, rng):
        coupling = np.array([[0.0, 2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
        field = linear_field(np.zeros(3), coupling)
        for _ in range(10):
            p0 = SimplexPoint(rng.dirichlet(np.ones(3)))
            traj = integrate_path(
                field, FieldKind.ENTROPIC, p0, 0.5, 200.0, IntegratorControls(n_samples=80)
            )
            values = [generalized_free_energy(field, s.p, 0.5) for s in traj.samples]
            assert np.all(np.diff(values) >= -1e-9)
            # the recorded annotation is the same functional
            for sample, value in zip(traj.samples, values):
                assert sample.free_energy == pytest.approx(value, abs=1e-12)


class TestLockinProbe:
    def test_constant_entropic_has_one_basin_at_softmax(self, rng):
        s0 = rng.uniform(-3, 3, 3)
        starts = [SimplexPoint(rng.dirichlet(np.ones(3))) for _ in range(50)]
        probe = lockin_probe(constant_field(s0), FieldKind.ENTROPIC, starts, 1.0)
        assert len(probe.clusters) == 1
        assert probe.basin_sizes == [50]
        pi = softmax(ScoreVector(s0), 1.0)
        assert np.max(np.abs(probe.clusters[0].representative - pi.probs)) < 1e-4

    def test_constant_literal_has_one_basin_at_the_argmax_vertex(self, rng):
        s0 = np.array([1.0, 0.3, 0.0])
        starts = [SimplexPoint(rng.dirichlet(np.ones(3))) for _ in range(50)]
        probe = lockin_probe(constant_field(s0), FieldKind.LITERAL, starts, 1.0, horizon=400.0)
        assert len(probe.clusters) == 1
        vertex = np.array([1.0, 0.0, 0.0])
        assert np.max(np.abs(probe.clusters[0].representative - vertex)) < 1e-4

    def test_multibasin_instance_found_by_search(self, rng):
        field, maxima = find_multibasin_coupling()
        assert field is not None
        assert is_conservative(field)
        assert len(maxima) >= 2
        starts = [SimplexPoint(rng.dirichlet(np.ones(3))) for _ in range(50)]
        probe = lockin_probe(field, FieldKind.ENTROPIC, starts, 0.5, horizon=300.0)
        assert len(probe.clusters) >= 2
        assert not probe.diverged
