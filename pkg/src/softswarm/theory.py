"""Closed-form reference quantities for comparison against simulation.

Covers the small-noise exit-time bound of Kramers type, exponential
convergence-rate fits for the deterministic flow, and a Monte Carlo
estimate of the probability that a uniformly initialized swarm contains
at least one maximizing particle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import objectives
from .errors import ContractViolationError
from .rng import STREAM_SAMPLING, make_generator
from .softmin import Swarm, softmin_energy

_DISTANCE_FLOOR = 1e-14


@dataclass(frozen=True)
class ExitBound:
    """Small-noise bound C * exp(exponent) on the mean exit time from the
    maximizing regime; the curvature constant C is fixed to 1."""

    exponent: float
    c_constant: float
    bound_value: float


@dataclass(frozen=True)
class RateFit:
    lambda_fit: float
    lambda_theory: float
    r_squared: float


def kramers_exit_bound(spec: objectives.ObjectiveSpec, initial: Swarm,
                       watched: int, beta: float, sigma: float) -> ExitBound:
    """Exit-time exponent (f(x*) - J(x_0) - 1/beta) / sigma for a watched
    particle that starts at a listed maximum x*."""
    if sigma <= 0:
        raise ContractViolationError("sigma must be > 0")
    if beta <= 0:
        raise ContractViolationError("beta must be > 0")
    if not 0 <= watched < initial.n:
        raise ContractViolationError(f"watched index {watched} out of range")
    x = initial.positions[watched]
    f_star = None
    for pt, val in spec.maxima:
        if np.allclose(x, pt, rtol=0.0, atol=1e-9):
            f_star = val
            break
    if f_star is None:
        raise ContractViolationError(
            f"watched particle {x.tolist()} is not at a listed maximum of {spec.id}")
    f = objectives.values(spec, initial.positions)
    j0 = softmin_energy(f, beta)
    exponent = (f_star - j0 - 1.0 / beta) / sigma
    return ExitBound(exponent=exponent, c_constant=1.0,
                     bound_value=math.exp(exponent))


def fit_convergence_rate(times, distances,
                         lambda_theory: float = float("nan")) -> RateFit:
    """Least-squares slope of -log(distance) against time.

    The series is truncated at the first distance below 1e-14 (log
    underflow); at least 10 positive samples must remain.
    """
    t = np.asarray(times, dtype=np.float64).ravel()
    d = np.asarray(distances, dtype=np.float64).ravel()
    if t.shape != d.shape:
        raise ContractViolationError("times and distances must match in length")
    cut = np.nonzero(d < _DISTANCE_FLOOR)[0]
    if cut.size:
        t, d = t[:cut[0]], d[:cut[0]]
    if t.size < 10:
        raise ContractViolationError(
            "rate fit needs at least 10 samples with positive distances")
    y = -np.log(d)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-20 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(lambda_fit=float(slope), lambda_theory=float(lambda_theory),
                   r_squared=r2)


def maximizing_probability(spec: objectives.ObjectiveSpec, beta: float,
                           n: int, samples: int = 10_000,
                           seed: int = 0) -> float:
    """Monte Carlo probability that a swarm drawn uniformly on the domain
    box contains at least one maximizing particle.

    A particle is maximizing exactly when f(x_k) > J + 1/beta, so the swarm
    has one iff max_k f(x_k) clears that level.  Warns (and still returns
    the estimate) if the box's objective range does not exceed 1/beta, the
    regime where the estimate is not expected to approach 1.
    """
    if beta <= 0:
        raise ContractViolationError("beta must be > 0")
    if n < 1 or samples < 1:
        raise ContractViolationError("n and samples must be >= 1")
    lo = spec.domain_box[:, 0]
    hi = spec.domain_box[:, 1]
    grid_f = _box_range(spec)
    if beta * grid_f <= 1.0:
        warnings.warn(
            f"{spec.id}: objective range over the domain box ({grid_f:.3g}) "
            f"does not exceed 1/beta = {1.0 / beta:.3g}",
            stacklevel=2)
    rng = make_generator(seed, STREAM_SAMPLING)
    pts = rng.uniform(lo, hi, size=(samples, n, spec.dimension))
    f = objectives.values(spec, pts.reshape(samples * n, spec.dimension))
    f = f.reshape(samples, n)
    fmin = f.min(axis=1, keepdims=True)
    e = np.exp(-beta * (f - fmin))
    w = e / e.sum(axis=1, keepdims=True)
    j = fmin[:, 0] + np.sum(w * (f - fmin), axis=1)
    has_max = f.max(axis=1) > j + 1.0 / beta
    return float(np.count_nonzero(has_max)) / samples


def _box_range(spec: objectives.ObjectiveSpec) -> float:
    per_axis = max(8, int(round(4096 ** (1.0 / spec.dimension))))
    axes = [np.linspace(spec.domain_box[i, 0], spec.domain_box[i, 1], per_axis)
            for i in range(spec.dimension)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    f = objectives.values(spec, pts)
    return float(f.max() - f.min())
