"""Cross-module invariant checks behind the ``validate`` CLI command.

Each check returns (name, passed, detail).  They are deliberately quick
versions of the full test-suite properties: analytic gradients against
finite differences, the beta-limit identities, the pre-factor upper bound,
deterministic-regime persistence, the contraction-rate fit, energy descent
along the deterministic flow, and bit-level reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics, objectives, softmin, theory
from .rng import make_generator
from .softmin import Swarm


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _catalog():
    return (objectives.double_well(1.0), objectives.quadruple_well(2.0),
            objectives.ackley(), objectives.quadratic(2.0, dim=2))


def _sample_box(spec, count, rng):
    lo, hi = spec.domain_box[:, 0], spec.domain_box[:, 1]
    return rng.uniform(lo, hi, size=(count, spec.dimension))


def fd_swarm_gradient(spec, X, beta, h=1e-6):
    """Central finite differences of n * J over every coordinate; the
    independent oracle for the analytic swarm gradient."""
    n, d = X.shape
    out = np.empty((n, d))
    for i in range(n):
        for j in range(d):
            plus = X.copy()
            minus = X.copy()
            plus[i, j] += h
            minus[i, j] -= h
            jp = softmin.softmin_energy(objectives.values(spec, plus), beta)
            jm = softmin.softmin_energy(objectives.values(spec, minus), beta)
            out[i, j] = n * (jp - jm) / (2.0 * h)
    return out


def check_objective_gradients(points: int = 1000) -> CheckResult:
    rng = make_generator(101)
    worst = 0.0
    for spec in _catalog():
        X = _sample_box(spec, points, rng)
        for x in X:
            err = np.linalg.norm(
                objectives.gradient(spec, x) - objectives.fd_gradient(spec, x))
            rel = err / (1.0 + np.linalg.norm(objectives.gradient(spec, x)))
            worst = max(worst, rel)
    return CheckResult("objective_gradients", worst < 1e-5,
                       f"worst normalized error {worst:.2e} (tol 1e-5)")


def check_softmin_gradient(configs: int = 60) -> CheckResult:
    rng = make_generator(202)
    worst = 0.0
    specs = _catalog()
    for i in range(configs):
        spec = specs[i % len(specs)]
        n = int(rng.integers(1, 8))
        beta = float(rng.choice([0.5, 2.0, 10.0]))
        X = _sample_box(spec, n, rng)
        analytic = softmin.softmin_gradient(Swarm(X), spec, beta)
        fd = fd_swarm_gradient(spec, X, beta)
        rel = np.linalg.norm(analytic - fd) / (1.0 + np.linalg.norm(analytic))
        worst = max(worst, rel)
    return CheckResult("softmin_gradient", worst < 1e-6,
                       f"worst normalized error {worst:.2e} (tol 1e-6)")


def check_beta_limits() -> CheckResult:
    rng = make_generator(303)
    f = rng.uniform(-3.0, 3.0, 17)
    w0 = softmin.softmin_weights(f, 0.0)
    uniform_err = float(np.abs(w0 - 1.0 / f.size).max())
    g = np.sort(rng.uniform(0.0, 4.0, 9))
    g[1:] += 0.5  # enforce a gap of at least 0.5 over the minimum
    sharp_err = abs(softmin.softmin_energy(g, 50.0) - g.min())
    ok = uniform_err < 1e-12 and sharp_err < 1e-8
    return CheckResult("beta_limits", ok,
                       f"beta=0 max|w-1/n|={uniform_err:.1e}, "
                       f"beta=50 |J-min f|={sharp_err:.1e}")


def check_prefactor_bound(configs: int = 10_000) -> CheckResult:
    """Pre-factor of the highest particle stays below 1 under the sum condition.

    The bound is checked for the particle that maximizes f, the configuration
    the exit-time analysis applies it to.  For other particles the pointwise
    bound can fail; see the acceptance suite for the boundary analysis.
    """
    rng = make_generator(404)
    violations = 0
    checked = 0
    for _ in range(configs):
        n = int(rng.integers(2, 12))
        beta = float(rng.uniform(0.1, 5.0))
        f = rng.uniform(-4.0, 4.0, n)
        k = int(np.argmax(f))
        fmin = f.min()
        e = np.exp(-beta * (f - fmin))
        s = e.sum()
        if not s > n * e[k]:
            continue
        w = e / s
        j = fmin + float(np.sum(w * (f - fmin)))
        a_k = (beta * (f[k] - j) - 1.0) * (n * w[k])
        checked += 1
        violations += a_k > 1.0 + 1e-12
    return CheckResult("prefactor_bound", violations == 0 and checked > 0,
                       f"{checked} filtered pre-factors, {violations} above 1")


def check_regime_persistence(trajectories: int = 20,
                             steps: int = 2000) -> CheckResult:
    """Deep minimizing particles (f <= min f + 1/beta) keep negative
    pre-factors along the deterministic flow."""
    from . import experiments as ex
    rng = make_generator(505)
    beta = 2.0
    flips = 0
    tested = 0
    specs = (objectives.double_well(1.0), objectives.quadratic(2.0, dim=2),
             objectives.quadruple_well(2.0))
    for t in range(trajectories):
        spec = specs[t % len(specs)]
        floor = min(v for _, v in spec.minima)
        n = 8
        X = _sample_box(spec, n, rng)
        anchor = spec.minima[int(rng.integers(len(spec.minima)))][0]
        X[0] = anchor + rng.uniform(-0.05, 0.05, spec.dimension)
        f = objectives.values(spec, X)
        mask = (f <= floor + 1.0 / beta - 0.05).astype(np.int8)
        if not mask.any():
            continue
        tested += 1
        cfg = dynamics.IntegratorConfig(dt=0.01, sigma=0.0, max_steps=steps,
                                        seed=1000 + t)
        stop = ex.StoppingSpec(ex.STOP_FLIP_TO_MAXIMIZING, mask=mask)
        trial = ex.run_trial(spec, dynamics.fixed_schedule(beta), cfg, X, stop)
        flips += int(trial.hit)
    return CheckResult("regime_persistence", flips == 0 and tested > 0,
                       f"{tested} trajectories x {steps} steps, {flips} sign flips")


def check_rate_fit() -> CheckResult:
    spec = objectives.quadratic(2.0, dim=1)
    cfg = dynamics.IntegratorConfig(dt=0.001, sigma=0.0, max_steps=10_000,
                                    seed=0)
    swarm = Swarm(np.array([[1.0], [-1.0]]))
    times, dists = [], []

    def stop(sw, rec):
        times.append(rec.time)
        dists.append(float(np.abs(sw.positions[0, 0])))
        return False

    dynamics.run_simulation(swarm, spec, dynamics.fixed_schedule(2.0), cfg,
                            stop, trace_stride=0)
    fit = theory.fit_convergence_rate(times, dists, lambda_theory=2.0)
    ok = fit.lambda_fit >= 2.0 * (1 - 0.02) and fit.r_squared > 0.999
    return CheckResult("rate_fit", ok,
                       f"lambda_fit={fit.lambda_fit:.4f} (>=1.96), "
                       f"r2={fit.r_squared:.6f}")


def check_energy_descent(steps: int = 2000) -> CheckResult:
    rng = make_generator(606)
    worst = -np.inf
    for spec in (objectives.double_well(1.0), objectives.quadratic(2.0, dim=2)):
        X = _sample_box(spec, 6, rng)
        cfg = dynamics.IntegratorConfig(dt=0.005, sigma=0.0, max_steps=steps,
                                        seed=0)
        energies = []

        def stop(sw, rec):
            energies.append(rec.energy)
            return False

        dynamics.run_simulation(Swarm(X), spec, dynamics.fixed_schedule(2.0),
                                cfg, stop, trace_stride=0)
        diffs = np.diff(energies)
        worst = max(worst, float(diffs.max()))
    return CheckResult("energy_descent", worst <= 1e-10,
                       f"largest per-step energy increase {worst:.2e}")


def check_determinism() -> CheckResult:
    spec = objectives.double_well(1.0)
    cfg = dynamics.IntegratorConfig(dt=0.01, sigma=1.0, max_steps=200, seed=99)
    X = _sample_box(spec, 12, make_generator(707))
    outs = []
    for _ in range(2):
        res = dynamics.run_simulation(Swarm(X.copy()), spec,
                                      dynamics.fixed_schedule(2.0), cfg,
                                      lambda sw, rec: False, trace_stride=0)
        outs.append(res.final.positions.tobytes())
    return CheckResult("determinism", outs[0] == outs[1],
                       "identical seeds give identical trajectories")


ALL_CHECKS = (
    check_objective_gradients,
    check_softmin_gradient,
    check_beta_limits,
    check_prefactor_bound,
    check_regime_persistence,
    check_rate_fit,
    check_energy_descent,
    check_determinism,
)


def run_all():
    return [check() for check in ALL_CHECKS]
