import math

import numpy as np
import pytest

from softswarm import dynamics, experiments, objectives, softmin
from softswarm.dynamics import (IntegratorConfig, beta_at, fixed_schedule,
                                geometric_schedule, run_simulation,
                                step_annealing, step_softmin)
from softswarm.errors import ContractViolationError, DivergenceError
from softswarm.rng import make_generator
from softswarm.softmin import Swarm

from conftest import box_sample


class TestSchedule:
    def test_fixed_never_changes(self):
        sched = fixed_schedule(2.0)
        assert beta_at(sched, 0) == 2.0
        assert beta_at(sched, 10 ** 6) == 2.0

    def test_geometric_unit_factor_degenerates(self):
        sched = geometric_schedule(2.0, 1.0)
        for step in (0, 17, 10 ** 5):
            assert beta_at(sched, step) == 2.0

    def test_geometric_decay_value(self):
        sched = geometric_schedule(2.0, 0.999)
        expected = 2.0 * 0.999 ** 1000
        got = beta_at(sched, 1000)
        assert got == pytest.approx(expected, rel=1e-14)
        assert got == pytest.approx(0.7357, abs=1e-3)

    def test_growing_factor_allowed(self):
        sched = geometric_schedule(1.0, 1.001)
        assert beta_at(sched, 100) > 1.0

    def test_contracts(self):
        with pytest.raises(ContractViolationError):
            fixed_schedule(0.0)
        with pytest.raises(ContractViolationError):
            geometric_schedule(1.0, 0.0)
        with pytest.raises(ContractViolationError):
            IntegratorConfig(dt=0.0)
        with pytest.raises(ContractViolationError):
            IntegratorConfig(sigma=-1.0)
        with pytest.raises(ContractViolationError):
            IntegratorConfig(method="leapfrog")


class TestSingleSteps:
    def test_softmin_single_particle_gradient_descent(self):
        spec = objectives.quadratic(1.0, dim=1)
        cfg = IntegratorConfig(dt=0.1, sigma=0.0, max_steps=1, seed=0)
        out = step_softmin(Swarm(np.array([[1.0]])), spec, 2.0, cfg,
                           np.zeros((1, 1)))
        assert out.positions[0, 0] == pytest.approx(0.9, abs=1e-15)
        assert out.time == pytest.approx(0.1)

    def test_annealing_single_particle_gradient_descent(self):
        spec = objectives.quadratic(1.0, dim=1)
        cfg = IntegratorConfig(dt=0.1, sigma=0.0, max_steps=1, seed=0,
                               method=dynamics.METHOD_ANNEALING)
        out = step_annealing(Swarm(np.array([[1.0]])), spec, 1.0, cfg,
                             np.zeros((1, 1)))
        assert out.positions[0, 0] == pytest.approx(0.9, abs=1e-15)

    def test_equal_value_swarm_moves_by_plain_gradient(self, dw):
        swarm = Swarm(np.array([[1.1], [-1.1]]))
        cfg = IntegratorConfig(dt=0.01, sigma=0.0, max_steps=1, seed=0)
        out = step_softmin(swarm, dw, 2.0, cfg, np.zeros((2, 1)))
        expected = swarm.positions - 0.01 * objectives.gradients(dw, swarm.positions)
        np.testing.assert_allclose(out.positions, expected, atol=1e-15)

    def test_annealing_particles_do_not_interact(self, dw):
        rng = make_generator(5)
        X = box_sample(dw, 6, rng)
        noise = rng.standard_normal((6, 1))
        cfg = IntegratorConfig(dt=0.01, sigma=1.0, max_steps=1, seed=0,
                               method=dynamics.METHOD_ANNEALING)
        out = step_annealing(Swarm(X), dw, 2.0, cfg, noise)
        perm = np.array([3, 0, 5, 1, 4, 2])
        out_perm = step_annealing(Swarm(X[perm]), dw, 2.0, cfg, noise[perm])
        np.testing.assert_array_equal(out.positions[perm], out_perm.positions)

    def test_annealing_beta_one_equals_softmin_single_particle(self, dw):
        rng = make_generator(6)
        x = np.array([[0.37]])
        noise = rng.standard_normal((1, 1))
        cfg_s = IntegratorConfig(dt=0.01, sigma=0.5, max_steps=1, seed=0)
        cfg_a = IntegratorConfig(dt=0.01, sigma=0.5, max_steps=1, seed=0,
                                 method=dynamics.METHOD_ANNEALING)
        a = step_softmin(Swarm(x), dw, beta=7.0, cfg=cfg_s, noise=noise)
        b = step_annealing(Swarm(x), dw, beta=1.0, cfg=cfg_a, noise=noise)
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_noise_amplitude_moment(self):
        # at a gradient-free point the increment std is sqrt(2 sigma dt)
        spec = objectives.quadratic(1.0, dim=1)
        n = 100_000
        cfg = IntegratorConfig(dt=0.01, sigma=1.0, max_steps=1, seed=0,
                               method=dynamics.METHOD_ANNEALING)
        noise = make_generator(7).standard_normal((n, 1))
        out = step_annealing(Swarm(np.zeros((n, 1))), spec, 1.0, cfg, noise)
        std = out.positions.std()
        assert std == pytest.approx(math.sqrt(0.02), rel=0.02)

    def test_noise_shape_contract(self, dw):
        cfg = IntegratorConfig(dt=0.01, sigma=1.0, max_steps=1, seed=0)
        with pytest.raises(ContractViolationError):
            step_softmin(Swarm(np.zeros((2, 1))), dw, 1.0, cfg, np.zeros((3, 1)))


class TestRunSimulation:
    def test_always_true_stop_costs_zero_steps(self, dw):
        cfg = IntegratorConfig(dt=0.01, sigma=1.0, max_steps=100, seed=0)
        start = Swarm(np.array([[1.0]]))
        res = run_simulation(start, dw, fixed_schedule(2.0), cfg,
                             lambda sw, rec: True)
        assert res.hit_step == 0
        np.testing.assert_array_equal(res.final.positions, start.positions)

    def test_stationary_start_with_gradient_stop(self):
        spec = objectives.quadratic(2.0, dim=2)
        cfg = IntegratorConfig(dt=0.01, sigma=0.0, max_steps=100, seed=0)

        def stop(sw, rec):
            g = objectives.gradients(spec, sw.positions)
            return float(np.linalg.norm(g)) < 1e-10

        res = run_simulation(Swarm(np.zeros((3, 2))), spec, fixed_schedule(2.0),
                             cfg, stop)
        assert res.hit_step == 0

    def test_budget_exhaustion_returns_none(self, dw):
        cfg = IntegratorConfig(dt=0.01, sigma=0.0, max_steps=25, seed=0)
        res = run_simulation(Swarm(np.array([[1.0]])), dw, fixed_schedule(2.0),
                             cfg, lambda sw, rec: False)
        assert res.hit_step is None
        assert res.final.time == pytest.approx(0.25)

    def test_trace_stride(self, dw):
        cfg = IntegratorConfig(dt=0.01, sigma=0.0, max_steps=100, seed=0)
        res = run_simulation(Swarm(np.array([[1.0]])), dw, fixed_schedule(2.0),
                             cfg, lambda sw, rec: False, trace_stride=10)
        assert [r.step for r in res.trace] == list(range(0, 101, 10))
        for rec in res.trace:
            assert rec.time == pytest.approx(rec.step * 0.01)

    def test_divergence_carries_step_index(self):
        spec = objectives.quadratic(2.0, dim=1)
        # dt far beyond the stability bound explodes the quadratic flow
        cfg = IntegratorConfig(dt=200.0, sigma=0.0, max_steps=10_000, seed=0)
        with pytest.raises(DivergenceError) as err:
            run_simulation(Swarm(np.array([[1.0]])), spec, fixed_schedule(2.0),
                           cfg, lambda sw, rec: False)
        assert err.value.step >= 0

    def test_deterministic_trajectories_bitwise(self, dw):
        rng = make_generator(8)
        X = box_sample(dw, 100, rng)
        cfg = IntegratorConfig(dt=0.01, sigma=1.0, max_steps=10, seed=42)
        outs = []
        for _ in range(2):
            res = run_simulation(Swarm(X.copy()), dw, fixed_schedule(2.0), cfg,
                                 lambda sw, rec: False)
            outs.append(res.final.positions.tobytes())
        assert outs[0] == outs[1]

    def test_double_well_crossing_all_seeds(self, dw):
        # single minimizing particle crosses the barrier under unit noise
        stop = experiments.StoppingSpec(experiments.STOP_COORD_THRESHOLD,
                                        threshold=0.0, direction="above")
        xm = -math.sqrt(2.0)
        for run in range(96):
            cfg = IntegratorConfig(dt=0.01, sigma=1.0, max_steps=10 ** 6,
                                   seed=1234 + run)
            trial = experiments.run_trial(dw, fixed_schedule(2.0), cfg,
                                          np.array([[xm]]), stop)
            assert trial.hit, f"run {run} did not cross"
            assert trial.hitting_time <= 10 ** 6 * 0.01


class TestFlowInvariants:
    def test_exponential_contraction_bound(self):
        lam = 2.0
        spec = objectives.quadratic(lam, dim=1)
        dt = 0.01
        cfg = IntegratorConfig(dt=dt, sigma=0.0, max_steps=600, seed=0)
        for X0 in (np.array([[1.0], [-1.0]]), np.array([[0.5], [2.5], [-1.5]])):
            d0 = abs(X0[0, 0])
            records = []

            def stop(sw, rec):
                records.append((rec.time, abs(sw.positions[0, 0])))
                return False

            run_simulation(Swarm(X0.copy()), spec, fixed_schedule(2.0), cfg,
                           stop, trace_stride=0)
            pref0 = softmin.prefactor(Swarm(X0), spec, 2.0)
            assert pref0.values[0] <= -1.0 + 1e-12  # strongly minimizing start
            for t, dist in records:
                assert dist <= d0 * math.exp(-lam * t) * (1 + 5 * dt * lam) + 1e-14

    def test_deep_minimizing_particles_keep_negative_prefactor(self, catalog):
        rng = make_generator(9)
        beta = 2.0
        for spec in catalog:
            if not spec.minima:
                continue
            floor = min(v for _, v in spec.minima)
            X = box_sample(spec, 8, rng)
            X[0] = spec.minima[0][0] + 0.03 * rng.standard_normal(spec.dimension)
            f = objectives.values(spec, X)
            mask = (f <= floor + 1.0 / beta - 0.05).astype(np.int8)
            assert mask.any()
            cfg = IntegratorConfig(dt=0.01, sigma=0.0, max_steps=2000, seed=3)
            stop = experiments.StoppingSpec(experiments.STOP_FLIP_TO_MAXIMIZING,
                                            mask=mask)
            trial = experiments.run_trial(spec, fixed_schedule(beta), cfg,
                                          X, stop)
            assert not trial.hit, f"{spec.id}: deep particle flipped regime"

    def test_strongly_minimizing_persists_on_quadratic(self):
        # radial order is preserved, so the best particle stays the best
        spec = objectives.quadratic(2.0, dim=2)
        rng = make_generator(10)
        X = rng.uniform(-3, 3, size=(6, 2))
        f = objectives.values(spec, X)
        mask = np.zeros(6, dtype=np.int8)
        mask[int(np.argmin(f))] = 1
        cfg = IntegratorConfig(dt=0.01, sigma=0.0, max_steps=5000, seed=4)
        stop = experiments.StoppingSpec(experiments.STOP_EXIT_STRONG_MIN,
                                        mask=mask)
        trial = experiments.run_trial(spec, fixed_schedule(2.0), cfg, X, stop)
        assert not trial.hit

    def test_energy_descends_without_noise(self, dw, quad2):
        rng = make_generator(11)
        for spec in (dw, quad2):
            X = box_sample(spec, 6, rng)
            cfg = IntegratorConfig(dt=0.005, sigma=0.0, max_steps=1500, seed=0)
            energies = []

            def stop(sw, rec):
                energies.append(rec.energy)
                return False

            run_simulation(Swarm(X), spec, fixed_schedule(2.0), cfg, stop,
                           trace_stride=0)
            diffs = np.diff(energies)
            assert diffs.max() <= 1e-10
