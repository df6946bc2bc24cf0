"""Soft-min energy of a particle swarm: weights, gradient, pre-factors.

The energy is the softmax-weighted average of the particle objective
values with weights exp(-beta f_i) / sum_j exp(-beta f_j).  It smoothly
interpolates between the swarm mean (beta = 0) and the swarm minimum
(beta -> infinity).  The drift each particle feels under the swarm
gradient flow is A_k * grad f(x_k), where the pre-factor

    A_k = [beta (f_k - J) - 1] * n w_k

is negative for particles at low objective values (they descend f) and
positive for particles far above the energy (they climb f and explore).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, objectives
from .errors import ContractViolationError

REGIME_MAXIMIZING = "maximizing"
REGIME_MINIMIZING = "minimizing"
REGIME_STRONGLY_MINIMIZING = "strongly_minimizing"


@dataclass(frozen=True)
class Swarm:
    """Particle configuration: an (n, d) position matrix at a model time."""

    positions: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.positions, dtype=np.float64))
        if X.ndim != 2 or X.shape[0] < 1:
            raise ContractViolationError(
                f"positions must be a nonempty (n, d) matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ContractViolationError("positions contain non-finite entries")
        object.__setattr__(self, "positions", X)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class SoftminState:
    weights: np.ndarray
    energy: float
    f_values: np.ndarray
    beta: float


@dataclass(frozen=True)
class Prefactor:
    values: np.ndarray
    regimes: tuple


@dataclass(frozen=True)
class StationaryReport:
    m: int
    threshold_particles: tuple
    is_stationary: bool
    classification: str


def _check_f_values(f_values) -> np.ndarray:
    f = np.asarray(f_values, dtype=np.float64).ravel()
    if f.size == 0:
        raise ContractViolationError("f_values must be nonempty")
    if not np.all(np.isfinite(f)):
        raise ContractViolationError("f_values contain non-finite entries")
    return f


def _check_beta(beta: float, allow_zero: bool) -> float:
    beta = float(beta)
    if beta < 0 or (beta == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ContractViolationError(f"beta must be {bound}, got {beta}")
    return beta


def softmin_weights(f_values, beta: float) -> np.ndarray:
    """Softmax weights of -beta*f, computed with a min-shift so that no
    intermediate overflows.  beta = 0 gives the uniform vector."""
    f = _check_f_values(f_values)
    beta = _check_beta(beta, allow_zero=True)
    w, _ = _kernels.active().softmin_stats(f, beta)
    return w


def softmin_energy(f_values, beta: float) -> float:
    """Weighted average sum_i w_i f_i; always within [min f, max f]."""
    f = _check_f_values(f_values)
    beta = _check_beta(beta, allow_zero=True)
    _, j = _kernels.active().softmin_stats(f, beta)
    return j


def softmin_state(f_values, beta: float) -> SoftminState:
    f = _check_f_values(f_values)
    beta = _check_beta(beta, allow_zero=True)
    w, j = _kernels.active().softmin_stats(f, beta)
    return SoftminState(weights=w, energy=j, f_values=f, beta=beta)


def _swarm_stats(swarm: Swarm, spec: objectives.ObjectiveSpec, beta: float):
    X = swarm.positions
    if X.shape[1] != spec.dimension:
        raise ContractViolationError(
            f"swarm dimension {X.shape[1]} does not match {spec.id}")
    k = _kernels.active()
    f, g = k.fg(spec.kernel_code, spec.kernel_params, X)
    w, j = k.softmin_stats(f, beta)
    return f, g, w, j


def softmin_gradient(swarm: Swarm, spec: objectives.ObjectiveSpec,
                     beta: float) -> np.ndarray:
    """Row k of the returned (n, d) matrix is n * dJ/dx_k, the drift of the
    swarm gradient flow (equal to -A_k * grad f(x_k))."""
    beta = _check_beta(beta, allow_zero=False)
    f, g, w, j = _swarm_stats(swarm, spec, beta)
    nf = float(swarm.n)
    neg_a = (1.0 - beta * (f - j)) * (nf * w)
    return neg_a[:, None] * g


def prefactor(swarm: Swarm, spec: objectives.ObjectiveSpec,
              beta: float) -> Prefactor:
    """Per-particle drift pre-factors A_k and their regime labels."""
    beta = _check_beta(beta, allow_zero=False)
    f, _, w, j = _swarm_stats(swarm, spec, beta)
    nf = float(swarm.n)
    a = (beta * (f - j) - 1.0) * (nf * w)
    regimes = []
    for k in range(swarm.n):
        if a[k] > 0.0:
            regimes.append(REGIME_MAXIMIZING)
        elif f[k] <= j:
            regimes.append(REGIME_STRONGLY_MINIMIZING)
        else:
            regimes.append(REGIME_MINIMIZING)
    return Prefactor(values=a, regimes=tuple(regimes))


def condition_sum_holds(f_values, k: int, beta: float) -> bool:
    """True iff sum_j exp(-beta f_j) strictly exceeds n exp(-beta f_k),
    evaluated with the same min-shift as the weights."""
    f = _check_f_values(f_values)
    beta = _check_beta(beta, allow_zero=True)
    if not 0 <= k < f.size:
        raise ContractViolationError(f"index {k} out of range for n={f.size}")
    fmin = np.min(f)
    e = np.exp(-beta * (f - fmin))
    return bool(np.sum(e) > f.size * np.exp(-beta * (f[k] - fmin)))


def classify_stationary(swarm: Swarm, spec: objectives.ObjectiveSpec,
                        beta: float, tol_grad: float = 1e-8,
                        tol_level: float = 1e-6) -> StationaryReport:
    """Partition particles into the zero-gradient group and the group on the
    level set f = J + 1/beta, and classify the configuration.

    A configuration is stationary for the swarm flow exactly when the two
    groups cover all particles.  ``stable_all_min`` requires every particle
    to sit at a listed minimum; one level-set particle among zero-gradient
    ones is the source-type stationary point.
    """
    beta = _check_beta(beta, allow_zero=False)
    if tol_grad <= 0 or tol_level <= 0:
        raise ContractViolationError("tolerances must be > 0")
    f, g, _, j = _swarm_stats(swarm, spec, beta)
    gnorm = np.sqrt(np.sum(g * g, axis=1))
    zero_grad = gnorm < tol_grad
    level = np.abs(f - j - 1.0 / beta) < tol_level
    m = int(np.count_nonzero(zero_grad))
    covered = bool(np.all(zero_grad | level))
    if not covered:
        label = "not_stationary"
    elif m == swarm.n and _all_at_listed_minimum(swarm, spec, zero_grad):
        label = "stable_all_min"
    elif m == swarm.n - 1:
        label = "source_in_component"
    else:
        label = "mixed"
    return StationaryReport(
        m=m,
        threshold_particles=tuple(int(i) for i in np.nonzero(level)[0]),
        is_stationary=covered,
        classification=label,
    )


def _all_at_listed_minimum(swarm, spec, which) -> bool:
    tol = 1e-6
    for i in np.nonzero(which)[0]:
        at_min = any(
            np.allclose(swarm.positions[i], pt, rtol=0.0, atol=tol)
            for pt, _ in spec.minima
        )
        if not at_min:
            return False
    return True
