"""Euler-Maruyama stepping for the swarm flow and the annealing baseline.

Both methods integrate an SDE of the form

    x <- x + drift * dt + sqrt(2 sigma dt) * xi,      xi ~ N(0, I),

where the swarm flow drift couples particles through the soft-min energy
(``A_k grad f(x_k)``) and the annealing baseline moves each particle
independently down its own gradient scaled by the scheduled beta.  Noise
comes from a counter-based Philox stream keyed by the integrator seed, so
trajectories are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, objectives
from .errors import ContractViolationError, DivergenceError
from .rng import STREAM_NOISE, make_generator
from .softmin import Swarm

METHOD_SOFTMIN_FLOW = "softmin_flow"
METHOD_ANNEALING = "annealing_baseline"

SCHEDULE_FIXED = "fixed"
SCHEDULE_GEOMETRIC = "geometric"


@dataclass(frozen=True)
class Schedule:
    """Per-step beta policy: fixed at beta0 or geometric beta0 * factor**step."""

    kind: str
    beta0: float
    factor: float = 1.0

    def __post_init__(self):
        if self.kind not in (SCHEDULE_FIXED, SCHEDULE_GEOMETRIC):
            raise ContractViolationError(f"unknown schedule kind {self.kind!r}")
        if self.beta0 <= 0:
            raise ContractViolationError("beta0 must be > 0")
        if self.factor <= 0:
            raise ContractViolationError("schedule factor must be > 0")


def fixed_schedule(beta0: float) -> Schedule:
    return Schedule(SCHEDULE_FIXED, float(beta0))


def geometric_schedule(beta0: float, factor: float) -> Schedule:
    return Schedule(SCHEDULE_GEOMETRIC, float(beta0), float(factor))


def beta_at(schedule: Schedule, step: int) -> float:
    if schedule.kind == SCHEDULE_FIXED:
        return schedule.beta0
    return schedule.beta0 * schedule.factor ** float(step)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    sigma: float = 1.0
    max_steps: int = 10_000_000
    seed: int = 0
    method: str = METHOD_SOFTMIN_FLOW

    def __post_init__(self):
        if self.dt <= 0:
            raise ContractViolationError("dt must be > 0")
        if self.sigma < 0:
            raise ContractViolationError("sigma must be >= 0")
        if self.max_steps < 1:
            raise ContractViolationError("max_steps must be >= 1")
        if self.method not in (METHOD_SOFTMIN_FLOW, METHOD_ANNEALING):
            raise ContractViolationError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class StepRecord:
    step: int
    time: float
    beta: float
    energy: float
    min_f: float
    prefactors: np.ndarray | None = None


@dataclass(frozen=True)
class SimulationResult:
    final: Swarm
    hit_step: int | None
    trace: tuple


def _check_noise(swarm: Swarm, noise) -> np.ndarray:
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != swarm.positions.shape:
        raise ContractViolationError(
            f"noise shape {noise.shape} does not match swarm {swarm.positions.shape}")
    return noise


def _advance(swarm: Swarm, cfg: IntegratorConfig, drift, noise) -> Swarm:
    dt = cfg.dt
    amp = np.sqrt(2.0 * cfg.sigma * dt)
    new = swarm.positions + dt * drift + amp * noise
    step = int(round(swarm.time / dt))
    if not np.all(np.isfinite(new)):
        raise DivergenceError(step)
    return Swarm(new, (step + 1) * dt)


def step_softmin(swarm: Swarm, spec: objectives.ObjectiveSpec, beta: float,
                 cfg: IntegratorConfig, noise) -> Swarm:
    """One Euler-Maruyama step of the interacting swarm flow."""
    if beta <= 0:
        raise ContractViolationError("softmin step requires beta > 0")
    noise = _check_noise(swarm, noise)
    k = _kernels.active()
    f, g = k.fg(spec.kernel_code, spec.kernel_params, swarm.positions)
    w, j = k.softmin_stats(f, beta)
    nf = float(swarm.n)
    a = (beta * (f - j) - 1.0) * (nf * w)
    return _advance(swarm, cfg, a[:, None] * g, noise)


def step_annealing(swarm: Swarm, spec: objectives.ObjectiveSpec, beta: float,
                   cfg: IntegratorConfig, noise) -> Swarm:
    """One Euler-Maruyama step of the independent-particle baseline."""
    noise = _check_noise(swarm, noise)
    k = _kernels.active()
    _, g = k.fg(spec.kernel_code, spec.kernel_params, swarm.positions)
    return _advance(swarm, cfg, -(beta * g), noise)


def run_simulation(initial: Swarm, spec: objectives.ObjectiveSpec,
                   schedule: Schedule, cfg: IntegratorConfig, stop,
                   trace_stride: int = 1,
                   record_prefactors: bool = False) -> SimulationResult:
    """Step until ``stop(swarm, record)`` fires or the step budget runs out.

    The stopping predicate is evaluated before each integration step,
    starting at step 0, so a predicate that is already true costs zero
    integration steps.  The trace records every ``trace_stride``-th step
    (0 disables tracing).  The noise stream is fully determined by
    ``cfg.seed``.
    """
    if initial.positions.shape[1] != spec.dimension:
        raise ContractViolationError(
            f"swarm dimension {initial.d} does not match {spec.id}")
    gen = make_generator(cfg.seed, STREAM_NOISE)
    kern = _kernels.active()
    step_fn = step_softmin if cfg.method == METHOD_SOFTMIN_FLOW else step_annealing
    swarm = initial
    trace = []
    s = 0
    while True:
        beta = beta_at(schedule, s)
        f, _ = kern.fg(spec.kernel_code, spec.kernel_params, swarm.positions)
        _, j = kern.softmin_stats(f, beta)
        pref = None
        if record_prefactors:
            w, _ = kern.softmin_stats(f, beta)
            pref = (beta * (f - j) - 1.0) * (float(swarm.n) * w)
        record = StepRecord(step=s, time=s * cfg.dt, beta=beta, energy=j,
                            min_f=float(np.min(f)), prefactors=pref)
        if trace_stride > 0 and s % trace_stride == 0:
            trace.append(record)
        if stop(swarm, record):
            return SimulationResult(swarm, s, tuple(trace))
        if s >= cfg.max_steps:
            return SimulationResult(swarm, None, tuple(trace))
        noise = gen.standard_normal((swarm.n, swarm.d))
        swarm = step_fn(swarm, spec, beta, cfg, noise)
        s += 1
