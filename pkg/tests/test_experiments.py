import math

import numpy as np
import pytest

from softswarm import dynamics, experiments, objectives
from softswarm.errors import ContractViolationError
from softswarm.experiments import (InitSpec, StoppingSpec, TrialResult,
                                   aggregate, init_swarm, run_trial)
from softswarm.rng import derive_seed, make_generator


class TestInitSwarm:
    def test_zero_radius_ball_is_degenerate(self, dw):
        init = InitSpec("ball_around_minimum", radius=0.0, which_minimum=0)
        swarm = init_swarm(dw, init, 20, seed=1)
        np.testing.assert_array_equal(
            swarm.positions, np.tile(dw.minima[0][0], (20, 1)))

    def test_ball_radius_bound_and_seed_determinism(self, qw):
        init = InitSpec("ball_around_minimum", radius=0.1, which_minimum=0)
        a = init_swarm(qw, init, 500, seed=7)
        b = init_swarm(qw, init, 500, seed=7)
        np.testing.assert_array_equal(a.positions, b.positions)
        dist = np.linalg.norm(a.positions - qw.minima[0][0], axis=1)
        assert dist.max() <= 0.1 + 1e-12

    def test_ball_differs_across_seeds(self, dw):
        init = InitSpec("ball_around_minimum", radius=0.1)
        a = init_swarm(dw, init, 50, seed=1)
        b = init_swarm(dw, init, 50, seed=2)
        assert not np.array_equal(a.positions, b.positions)

    def test_circle_mean_radius(self, ackley_spec):
        init = InitSpec("circle_around_point", center=np.zeros(2), radius=3.0,
                        gauss_std=0.05)
        swarm = init_swarm(ackley_spec, init, 10_000, seed=3)
        mean_dist = np.linalg.norm(swarm.positions, axis=1).mean()
        assert abs(mean_dist - 3.0) < 0.01

    def test_circle_requires_two_dimensions(self, dw):
        init = InitSpec("circle_around_point", radius=1.0)
        with pytest.raises(ContractViolationError):
            init_swarm(dw, init, 5, seed=0)

    def test_explicit_positions(self, dw):
        pos = np.array([[0.0], [1.0], [-1.0]])
        swarm = init_swarm(dw, InitSpec("explicit", positions=pos), 3, seed=0)
        np.testing.assert_array_equal(swarm.positions, pos)
        with pytest.raises(ContractViolationError):
            init_swarm(dw, InitSpec("explicit", positions=pos), 4, seed=0)

    def test_init_and_noise_streams_are_distinct(self, dw):
        # same seed, different stream tags: draws must not repeat
        init = InitSpec("ball_around_minimum", radius=0.1)
        swarm = init_swarm(dw, init, 8, seed=99)
        noise = make_generator(99).standard_normal((8, 1))
        offsets = swarm.positions - dw.minima[0][0]
        assert not np.allclose(np.sort(offsets.ravel()), np.sort(noise.ravel()))


class TestAggregate:
    def test_single_run(self):
        stats = aggregate([TrialResult(0, 1, True, 5.0, 500)])
        assert stats.mean_time == 5.0
        assert stats.std_time == 0.0
        assert stats.count == stats.hits == 1

    def test_population_std(self):
        trials = [TrialResult(i, i, True, float(t), 10)
                  for i, t in enumerate((1, 2, 3, 4))]
        stats = aggregate(trials)
        assert stats.mean_time == pytest.approx(2.5, abs=1e-15)
        assert stats.std_time == pytest.approx(1.118033988749895, abs=1e-12)

    def test_censored_bookkeeping(self):
        trials = [TrialResult(0, 0, True, 1.0, 10),
                  TrialResult(1, 1, True, 2.0, 10),
                  TrialResult(2, 2, True, 3.0, 10),
                  TrialResult(3, 3, False, None, 10)]
        stats = aggregate(trials)
        assert (stats.count, stats.hits, stats.censored) == (4, 3, 1)
        assert stats.flagged

    def test_all_censored_is_not_an_error(self):
        stats = aggregate([TrialResult(0, 0, False, None, 10)])
        assert stats.hits == 0
        assert stats.mean_time is None and stats.std_time is None

    def test_order_independence(self):
        rng = np.random.default_rng(0)
        times = rng.uniform(0, 100, 500)
        trials = [TrialResult(i, i, True, float(t), 1)
                  for i, t in enumerate(times)]
        a = aggregate(trials)
        b = aggregate(list(reversed(trials)))
        assert a.mean_time == b.mean_time
        assert a.std_time == b.std_time

    def test_empty_rejected(self):
        with pytest.raises(ContractViolationError):
            aggregate([])


class TestSeedDerivation:
    def test_deterministic_and_distinct(self):
        seeds = {derive_seed(5, s, r) for s in range(20) for r in range(50)}
        assert len(seeds) == 1000
        assert derive_seed(5, 3, 7) == derive_seed(5, 3, 7)

    def test_sweep_extension_preserves_existing(self):
        before = [derive_seed(9, 0, r) for r in range(10)]
        after = [derive_seed(9, 0, r) for r in range(20)][:10]
        assert before == after


class TestRunTrial:
    def test_start_inside_ball_hits_immediately(self, dw):
        stop = StoppingSpec("enter_ball", target=dw.minima[1][0], epsilon=0.25)
        cfg = dynamics.IntegratorConfig(dt=0.01, sigma=1.0, max_steps=100,
                                        seed=0)
        trial = run_trial(dw, dynamics.fixed_schedule(2.0), cfg,
                          np.tile(dw.minima[1][0], (5, 1)), stop)
        assert trial.hit and trial.hitting_time == 0.0 and trial.steps_used == 0

    def test_determinism(self, dw):
        stop = StoppingSpec("enter_ball", target=dw.minima[1][0], epsilon=0.25)
        init = InitSpec("ball_around_minimum", radius=0.1, which_minimum=0)
        outs = []
        for _ in range(2):
            swarm = init_swarm(dw, init, 30, seed=5)
            cfg = dynamics.IntegratorConfig(dt=0.01, sigma=1.0,
                                            max_steps=10 ** 6, seed=5)
            outs.append(run_trial(dw, dynamics.fixed_schedule(2.0), cfg,
                                  swarm.positions, stop))
        assert outs[0] == outs[1]

    def test_single_particle_methods_coincide_at_unit_beta(self, dw):
        # beta = 1 makes the swarm drift equal the baseline drift exactly
        stop = StoppingSpec("custom_coordinate_threshold", threshold=0.0,
                            direction="above")
        x0 = np.array([[-math.sqrt(2.0)]])
        times = {}
        for method, name in ((dynamics.METHOD_SOFTMIN_FLOW, "softmin"),
                             (dynamics.METHOD_ANNEALING, "annealing")):
            cfg = dynamics.IntegratorConfig(dt=0.01, sigma=1.0,
                                            max_steps=10 ** 6, seed=21,
                                            method=method)
            trial = run_trial(dw, dynamics.fixed_schedule(1.0), cfg, x0, stop)
            times[name] = trial.hitting_time
        assert times["softmin"] == times["annealing"]

    def test_fraction_quorum(self, dw):
        target = dw.minima[1][0]
        positions = np.vstack((np.tile(target, (3, 1)),
                               np.tile(dw.minima[0][0], (3, 1))))
        half = StoppingSpec("enter_ball", target=target, epsilon=0.25,
                            quorum=0.5)
        cfg = dynamics.IntegratorConfig(dt=0.01, sigma=0.0, max_steps=10,
                                        seed=0)
        trial = run_trial(dw, dynamics.fixed_schedule(2.0), cfg, positions, half)
        assert trial.hit and trial.steps_used == 0
        most = StoppingSpec("enter_ball", target=target, epsilon=0.25,
                            quorum=0.9)
        trial = run_trial(dw, dynamics.fixed_schedule(2.0), cfg, positions, most)
        assert not trial.hit


class TestExperimentProtocols:
    def test_exit_time_layout_and_exponent(self):
        res = experiments.exit_time_experiment([1.0], runs=4, n=100,
                                               master_seed=3, threads=1,
                                               max_steps=10 ** 6)
        cell = res.cells[0]
        assert cell.stats.count == 4
        # theory exponent for the near-degenerate layout stays close to the
        # exact-layout value (0 - J - 1/beta)/sigma with J ~= -0.9986
        assert cell.theory_exponent == pytest.approx(4.986, abs=0.1)
        for trial in cell.trials:
            assert trial.theory_exponent is not None

    def test_transition_methods_share_seeds(self, dw):
        res = experiments.transition_time_experiment(
            "double_well", [1.0], methods=["softmin_fixed", "annealing"],
            runs=3, n=10, master_seed=11, max_steps=10 ** 5)
        by_method = {c.method: c for c in res.cells}
        s_seeds = [t.seed for t in by_method["softmin_fixed"].trials]
        a_seeds = [t.seed for t in by_method["annealing"].trials]
        assert s_seeds == a_seeds

    def test_quadruple_targets_are_the_global_pair(self, qw):
        start = experiments._default_start_minimum(qw)
        assert qw.minima[start][1] == pytest.approx(-1.125)
        targets = experiments._transition_targets(qw, start)
        assert targets.shape == (2, 2)
        for t in targets:
            assert objectives.evaluate(qw, t) == pytest.approx(-3.125)

    def test_double_well_target_is_opposite_minimum(self, dw):
        targets = experiments._transition_targets(dw, 0)
        np.testing.assert_allclose(targets, dw.minima[1][0][None, :])

    def test_thread_count_does_not_change_results(self):
        kwargs = dict(methods=["softmin_fixed", "annealing"], runs=6,
                      master_seed=17, max_steps=10 ** 5)
        res1 = experiments.particle_sweep_experiment([4, 10], threads=1, **kwargs)
        res8 = experiments.particle_sweep_experiment([4, 10], threads=8, **kwargs)
        for c1, c8 in zip(res1.cells, res8.cells):
            assert c1 == c8

    def test_entry_time_requires_positive_runs(self):
        with pytest.raises(ContractViolationError):
            experiments.exit_time_experiment([1.0], runs=0)


class TestMaximizingParticleProbability:
    def test_monotone_smoke(self, dw):
        from softswarm import theory
        p_small = theory.maximizing_probability(dw, 2.0, 2, samples=2000, seed=1)
        p_large = theory.maximizing_probability(dw, 2.0, 100, samples=2000, seed=1)
        assert p_small <= p_large
        assert p_large > 0.99
