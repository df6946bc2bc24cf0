"""Hitting-time studies: initialization, stopping rules, trials, sweeps.

Each experiment sweeps one coordinate (barrier parameter, particle count,
or initialization radius), runs a batch of independent seeded trials per
sweep point and method, and aggregates hitting times.  Trials are
independent units; a thread pool of configurable width executes them, and
results are assembled in deterministic trial order, so output is identical
for any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels, objectives, theory
from .dynamics import (METHOD_ANNEALING, METHOD_SOFTMIN_FLOW, IntegratorConfig,
                       Schedule, fixed_schedule, geometric_schedule)
from .errors import ContractViolationError
from .rng import STREAM_INIT, derive_seed, make_generator
from .softmin import Swarm

INIT_BALL = "ball_around_minimum"
INIT_CIRCLE = "circle_around_point"
INIT_EXPLICIT = "explicit"

STOP_ENTER_BALL = "enter_ball"
STOP_EXIT_MAXIMIZING = "exit_maximizing_regime"
STOP_COORD_THRESHOLD = "custom_coordinate_threshold"
STOP_FLIP_TO_MAXIMIZING = "flip_to_maximizing"
STOP_EXIT_STRONG_MIN = "exit_strongly_minimizing"
STOP_NONE = "none"

QUORUM_FIRST = "first_particle"

#: method name -> (integrator method, schedule kind)
METHODS = {
    "softmin_fixed": (METHOD_SOFTMIN_FLOW, "fixed"),
    "softmin_decay": (METHOD_SOFTMIN_FLOW, "geometric"),
    "annealing": (METHOD_ANNEALING, "geometric"),
    "annealing_fixed": (METHOD_ANNEALING, "fixed"),
}

PAPER_METHODS = ("softmin_fixed", "softmin_decay", "annealing")


@dataclass(frozen=True)
class InitSpec:
    kind: str
    center: np.ndarray | None = None
    radius: float = 0.0
    gauss_std: float = 0.0
    which_minimum: int = 0
    positions: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (INIT_BALL, INIT_CIRCLE, INIT_EXPLICIT):
            raise ContractViolationError(f"unknown init kind {self.kind!r}")
        if self.radius < 0 or self.gauss_std < 0:
            raise ContractViolationError("radius and gauss_std must be >= 0")


@dataclass(frozen=True)
class StoppingSpec:
    kind: str
    target: np.ndarray | None = None      # one point or a stack of points
    epsilon: float = 0.25
    watched_particle: int | None = None
    quorum: object = QUORUM_FIRST         # "first_particle" or fraction in (0, 1]
    axis: int = 0
    threshold: float = 0.0
    direction: str = "above"
    mask: np.ndarray | None = None        # particle mask for regime stops

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ContractViolationError("epsilon must be > 0")
        if isinstance(self.quorum, float) and not 0.0 < self.quorum <= 1.0:
            raise ContractViolationError("fractional quorum must be in (0, 1]")


@dataclass(frozen=True)
class TrialResult:
    run_index: int
    seed: int
    hit: bool
    hitting_time: float | None
    steps_used: int
    diverged: bool = False
    theory_exponent: float | None = None

    def __post_init__(self):
        if self.hit and self.hitting_time is None:
            raise ContractViolationError("hit trial must carry a hitting time")


@dataclass(frozen=True)
class SummaryStats:
    count: int
    hits: int
    mean_time: float | None
    std_time: float | None
    censored: int

    @property
    def flagged(self) -> bool:
        return self.censored > 0


@dataclass(frozen=True)
class Cell:
    """One (sweep value, method) grid cell of an experiment."""

    sweep_value: float
    method: str
    trials: tuple
    stats: SummaryStats
    theory_exponent: float | None = None


@dataclass(frozen=True)
class ExperimentResult:
    experiment: str
    objective_id: str
    sweep_key: str
    cells: tuple
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def init_swarm(spec: objectives.ObjectiveSpec, init: InitSpec, n: int,
               seed: int) -> Swarm:
    """Draw a deterministic initial configuration for the given seed."""
    if n < 1:
        raise ContractViolationError("n must be >= 1")
    d = spec.dimension
    rng = make_generator(seed, STREAM_INIT)
    if init.kind == INIT_EXPLICIT:
        if init.positions is None:
            raise ContractViolationError("explicit init requires positions")
        X = np.asarray(init.positions, dtype=np.float64)
        if X.shape != (n, d):
            raise ContractViolationError(
                f"explicit positions have shape {X.shape}, expected ({n}, {d})")
        return Swarm(X.copy())
    if init.kind == INIT_BALL:
        if init.center is not None:
            center = np.asarray(init.center, dtype=np.float64)
        else:
            try:
                center = spec.minima[init.which_minimum][0]
            except IndexError:
                raise ContractViolationError(
                    f"{spec.id} has no minimum #{init.which_minimum}") from None
        gauss = rng.standard_normal((n, d))
        u = rng.random(n)
        norms = np.linalg.norm(gauss, axis=1)
        norms[norms == 0.0] = 1.0
        radii = init.radius * u ** (1.0 / d)
        return Swarm(center + (radii / norms)[:, None] * gauss)
    # circle with Gaussian jitter
    if d != 2:
        raise ContractViolationError("circle init requires a 2-d objective")
    center = np.zeros(2) if init.center is None else \
        np.asarray(init.center, dtype=np.float64)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    base = center + init.radius * np.stack((np.cos(theta), np.sin(theta)), axis=1)
    return Swarm(base + init.gauss_std * rng.standard_normal((n, 2)))


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------

_STOP_CODES = {
    STOP_NONE: _kernels.STOP_NONE,
    STOP_EXIT_MAXIMIZING: _kernels.STOP_EXIT_MAXIMIZING,
    STOP_ENTER_BALL: _kernels.STOP_ENTER_BALL,
    STOP_COORD_THRESHOLD: _kernels.STOP_COORD_THRESHOLD,
    STOP_FLIP_TO_MAXIMIZING: _kernels.STOP_FLIP_TO_MAXIMIZING,
    STOP_EXIT_STRONG_MIN: _kernels.STOP_EXIT_STRONG_MINIMIZING,
}


def _encode_stop(stop: StoppingSpec, d: int, n: int):
    try:
        code = _STOP_CODES[stop.kind]
    except KeyError:
        raise ContractViolationError(f"unknown stop kind {stop.kind!r}") from None
    targets = np.zeros((1, d))
    if stop.target is not None:
        targets = np.atleast_2d(np.asarray(stop.target, dtype=np.float64))
        if targets.shape[1] != d:
            raise ContractViolationError(
                f"stop targets have dimension {targets.shape[1]}, expected {d}")
    if stop.quorum == QUORUM_FIRST:
        quorum_count = 1
    else:
        quorum_count = max(1, math.ceil(float(stop.quorum) * n))
    watched = 0 if stop.watched_particle is None else int(stop.watched_particle)
    if not 0 <= watched < n:
        raise ContractViolationError(f"watched particle {watched} out of range")
    mask = np.zeros(n, dtype=np.int8)
    if stop.mask is not None:
        mask = np.ascontiguousarray(np.asarray(stop.mask).astype(np.int8))
        if mask.shape != (n,):
            raise ContractViolationError("stop mask must have shape (n,)")
    return (code, np.ascontiguousarray(targets), float(stop.epsilon), watched,
            quorum_count, int(stop.axis), float(stop.threshold),
            1 if stop.direction == "above" else 0, mask)


def run_trial(spec: objectives.ObjectiveSpec, schedule: Schedule,
              cfg: IntegratorConfig, positions: np.ndarray,
              stop: StoppingSpec, run_index: int = 0) -> TrialResult:
    """Advance one trial through the fused kernel driver."""
    X = np.ascontiguousarray(np.asarray(positions, dtype=np.float64).copy())
    n, d = X.shape
    if d != spec.dimension:
        raise ContractViolationError(
            f"positions dimension {d} does not match {spec.id}")
    method_code = (_kernels.METHOD_SOFTMIN if cfg.method == METHOD_SOFTMIN_FLOW
                   else _kernels.METHOD_ANNEALING)
    sched_code = (_kernels.SCHED_FIXED if schedule.kind == "fixed"
                  else _kernels.SCHED_GEOMETRIC)
    stop_args = _encode_stop(stop, d, n)
    gen = make_generator(cfg.seed)
    status, event_step, steps, _ = _kernels.active().drive(
        method_code, X, spec.kernel_code, spec.kernel_params, sched_code,
        float(schedule.beta0), float(schedule.factor), float(cfg.dt),
        float(cfg.sigma), int(cfg.max_steps), gen, *stop_args)
    hit = status == _kernels.STATUS_HIT
    return TrialResult(
        run_index=run_index,
        seed=cfg.seed,
        hit=hit,
        hitting_time=event_step * cfg.dt if hit else None,
        steps_used=int(steps),
        diverged=status == _kernels.STATUS_DIVERGED,
    )


def aggregate(results) -> SummaryStats:
    """Mean/std of hitting times over hitting runs, with censored count.

    Sums are exactly-rounded (math.fsum), so the aggregate is independent
    of trial ordering.
    """
    results = list(results)
    if not results:
        raise ContractViolationError("aggregate requires at least one trial")
    times = [r.hitting_time for r in results if r.hit]
    hits = len(times)
    censored = len(results) - hits
    if hits == 0:
        return SummaryStats(len(results), 0, None, None, censored)
    mean = math.fsum(times) / hits
    var = math.fsum((t - mean) ** 2 for t in times) / hits
    return SummaryStats(len(results), hits, mean, math.sqrt(var), censored)


def _schedule_for(method: str, beta0: float, gamma: float) -> Schedule:
    kind = METHODS[method][1]
    return fixed_schedule(beta0) if kind == "fixed" \
        else geometric_schedule(beta0, gamma)


def _run_ordered(jobs, threads: int):
    if threads <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: job(), jobs))


# ---------------------------------------------------------------------------
# experiment protocols
# ---------------------------------------------------------------------------

def exit_time_experiment(a_values, beta: float = 2.0, sigma: float = 0.1,
                         runs: int = 96, n: int = 100, dt: float = 0.01,
                         max_steps: int = 10_000_000, master_seed: int = 0,
                         threads: int = 1, ball_radius: float = 0.1
                         ) -> ExperimentResult:
    """Exit of the watched particle from the maximizing regime.

    One particle starts at the double-well local maximum, the rest in a
    small ball around the lower minimum; the trial stops when the watched
    particle's pre-factor first becomes non-positive.  Each cell also
    carries the small-noise theory exponent (f(x*) - J(x_0) - 1/beta)/sigma.
    """
    if runs < 1:
        raise ContractViolationError("runs must be >= 1")
    cells = []
    for si, a in enumerate(a_values):
        spec = objectives.double_well(a)
        x_max = spec.maxima[0][0]
        ball = InitSpec(INIT_BALL, radius=ball_radius, which_minimum=0)
        stop = StoppingSpec(STOP_EXIT_MAXIMIZING, watched_particle=0)
        schedule = fixed_schedule(beta)

        def job(run_index, spec=spec, schedule=schedule, stop=stop,
                ball=ball, x_max=x_max, si=si):
            seed = derive_seed(master_seed, si, run_index)
            rest = init_swarm(spec, ball, n - 1, seed).positions
            X = np.vstack((x_max[None, :], rest))
            cfg = IntegratorConfig(dt=dt, sigma=sigma, max_steps=max_steps,
                                   seed=seed, method=METHOD_SOFTMIN_FLOW)
            bound = theory.kramers_exit_bound(spec, Swarm(X), 0, beta, sigma)
            trial = run_trial(spec, schedule, cfg, X, stop, run_index)
            return replace(trial, theory_exponent=bound.exponent)

        trials = _run_ordered(
            [lambda ri=ri: job(ri) for ri in range(runs)], threads)
        exponent = math.fsum(t.theory_exponent for t in trials) / runs
        cells.append(Cell(float(a), "softmin_fixed", tuple(trials),
                          aggregate(trials), theory_exponent=exponent))
    return ExperimentResult("exit_time", "double_well", "a",
                            tuple(cells), {"beta": beta, "sigma": sigma})


def _transition_targets(spec: objectives.ObjectiveSpec, start_idx: int):
    """Minima a transition run must reach: all strictly lower ones, or the
    remaining equal-depth ones when the landscape is symmetric."""
    start_pt, start_val = spec.minima[start_idx]
    lower = [pt for pt, v in spec.minima if v < start_val - 1e-12]
    if lower:
        return np.stack(lower)
    others = [pt for i, (pt, _) in enumerate(spec.minima) if i != start_idx]
    if not others:
        raise ContractViolationError(f"{spec.id} has a single minimum")
    return np.stack(others)


def _default_start_minimum(spec: objectives.ObjectiveSpec) -> int:
    vals = [v for _, v in spec.minima]
    return int(np.argmax(vals))


def transition_time_experiment(spec_family: str, a_values, methods=None,
                               runs: int = 96, n: int = 100,
                               beta0: float = 2.0, gamma: float = 0.9995,
                               sigma: float = 1.0, dt: float = 0.01,
                               max_steps: int = 10_000_000,
                               master_seed: int = 0, threads: int = 1,
                               init_radius: float = 0.1,
                               epsilon: float = 0.25,
                               quorum=QUORUM_FIRST,
                               which_minimum: int | None = None
                               ) -> ExperimentResult:
    """Mean first transition from one well to the target minimum.

    For the double well the target is the opposite minimum; for the
    quadruple well the start is the higher (shallow) well and the targets
    are the two equidistant global minima, whichever is reached first.
    """
    if spec_family not in ("double_well", "quadruple_well"):
        raise ContractViolationError(
            "transition experiment supports double_well and quadruple_well")
    methods = list(methods or PAPER_METHODS)
    cells = []
    for si, a in enumerate(a_values):
        spec = objectives.get_objective(spec_family, a=a)
        start_idx = which_minimum if which_minimum is not None \
            else _default_start_minimum(spec)
        targets = _transition_targets(spec, start_idx)
        init = InitSpec(INIT_BALL, radius=init_radius, which_minimum=start_idx)
        stop = StoppingSpec(STOP_ENTER_BALL, target=targets, epsilon=epsilon,
                            quorum=quorum)
        for method in methods:
            schedule = _schedule_for(method, beta0, gamma)

            def job(run_index, spec=spec, schedule=schedule, init=init,
                    stop=stop, method=method, si=si):
                seed = derive_seed(master_seed, si, run_index)
                swarm = init_swarm(spec, init, n, seed)
                cfg = IntegratorConfig(dt=dt, sigma=sigma, max_steps=max_steps,
                                       seed=seed, method=METHODS[method][0])
                return run_trial(spec, schedule, cfg, swarm.positions, stop,
                                 run_index)

            trials = _run_ordered(
                [lambda ri=ri: job(ri) for ri in range(runs)], threads)
            cells.append(Cell(float(a), method, tuple(trials),
                              aggregate(trials)))
    return ExperimentResult("transition_time", spec_family, "a",
                            tuple(cells),
                            {"sigma": sigma, "beta0": beta0, "gamma": gamma})


def particle_sweep_experiment(n_values, a: float = 1.0, methods=None,
                              runs: int = 96, beta0: float = 2.0,
                              gamma: float = 0.9995, sigma: float = 1.0,
                              dt: float = 0.01, max_steps: int = 10_000_000,
                              master_seed: int = 0, threads: int = 1,
                              init_radius: float = 0.1,
                              epsilon: float = 0.25) -> ExperimentResult:
    """Double-well transition protocol at fixed barrier, sweeping the swarm size."""
    methods = list(methods or PAPER_METHODS)
    spec = objectives.double_well(a)
    targets = _transition_targets(spec, 0)
    init = InitSpec(INIT_BALL, radius=init_radius, which_minimum=0)
    stop = StoppingSpec(STOP_ENTER_BALL, target=targets, epsilon=epsilon)
    cells = []
    for si, n in enumerate(n_values):
        for method in methods:
            schedule = _schedule_for(method, beta0, gamma)

            def job(run_index, n=n, schedule=schedule, method=method, si=si):
                seed = derive_seed(master_seed, si, run_index)
                swarm = init_swarm(spec, init, int(n), seed)
                cfg = IntegratorConfig(dt=dt, sigma=sigma, max_steps=max_steps,
                                       seed=seed, method=METHODS[method][0])
                return run_trial(spec, schedule, cfg, swarm.positions, stop,
                                 run_index)

            trials = _run_ordered(
                [lambda ri=ri: job(ri) for ri in range(runs)], threads)
            cells.append(Cell(float(n), method, tuple(trials),
                              aggregate(trials)))
    return ExperimentResult("particle_sweep", spec.id, "n", tuple(cells),
                            {"a": a, "sigma": sigma})


def entry_time_experiment(radii, methods=None, runs: int = 96, n: int = 100,
                          beta0: float = 2.0, gamma: float = 0.9995,
                          sigma: float = 1.0, dt: float = 0.01,
                          max_steps: int = 10_000_000, master_seed: int = 0,
                          threads: int = 1, jitter: float = 0.05,
                          epsilon: float = 0.25) -> ExperimentResult:
    """Entry into a neighborhood of the Ackley global minimum from a circle."""
    methods = list(methods or PAPER_METHODS)
    spec = objectives.ackley()
    origin = np.zeros(2)
    stop = StoppingSpec(STOP_ENTER_BALL, target=origin, epsilon=epsilon)
    cells = []
    for si, radius in enumerate(radii):
        init = InitSpec(INIT_CIRCLE, center=origin, radius=float(radius),
                        gauss_std=jitter)
        for method in methods:
            schedule = _schedule_for(method, beta0, gamma)

            def job(run_index, init=init, schedule=schedule, method=method,
                    si=si):
                seed = derive_seed(master_seed, si, run_index)
                swarm = init_swarm(spec, init, n, seed)
                cfg = IntegratorConfig(dt=dt, sigma=sigma, max_steps=max_steps,
                                       seed=seed, method=METHODS[method][0])
                return run_trial(spec, schedule, cfg, swarm.positions, stop,
                                 run_index)

            trials = _run_ordered(
                [lambda ri=ri: job(ri) for ri in range(runs)], threads)
            cells.append(Cell(float(radius), method, tuple(trials),
                              aggregate(trials)))
    return ExperimentResult("entry_time", spec.id, "radius", tuple(cells),
                            {"sigma": sigma, "jitter": jitter})
