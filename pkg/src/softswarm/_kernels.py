"""Hot numerical kernels with interchangeable numba and pure-numpy backends.

The inner loops that dominate runtime live here: batched objective
evaluation, the stabilized soft-min statistics, and the fused trial driver
that advances a swarm until a stopping rule fires.  Two implementations are
provided:

* ``numba``: ``@njit`` loops (default whenever numba imports), and
* ``numpy``: a vectorized fallback with identical per-element arithmetic.

Select with the ``SOFTSWARM_BACKEND`` environment variable (``auto``,
``numba`` or ``numpy``), or programmatically with :func:`use_backend`.
Both paths consume the same Philox noise stream and use the same
floating-point expression trees, so they agree except for reduction order
(bitwise for swarms small enough that numpy's pairwise sum is sequential).
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

# objective codes
OBJ_QUADRATIC = 0
OBJ_DOUBLE_WELL = 1
OBJ_QUADRUPLE_WELL = 2
OBJ_ACKLEY = 3

# integrator method codes
METHOD_SOFTMIN = 0
METHOD_ANNEALING = 1

# beta schedule codes
SCHED_FIXED = 0
SCHED_GEOMETRIC = 1

# stopping rule codes for the fused driver
STOP_NONE = 0
STOP_EXIT_MAXIMIZING = 1
STOP_ENTER_BALL = 2
STOP_COORD_THRESHOLD = 3
STOP_FLIP_TO_MAXIMIZING = 4
STOP_EXIT_STRONG_MINIMIZING = 5

# driver status codes
STATUS_HIT = 0
STATUS_CENSORED = 1
STATUS_DIVERGED = 2

_TWO_PI = 2.0 * np.pi
_E_PLUS_20 = np.e + 20.0


# ---------------------------------------------------------------------------
# pure-numpy backend
# ---------------------------------------------------------------------------

def _fg_numpy(code, params, X):
    """Values and gradients of the coded objective at each row of X."""
    if code == OBJ_QUADRATIC:
        lam = params[0]
        f = 0.5 * lam * np.sum(X * X, axis=1)
        g = lam * X
    elif code == OBJ_DOUBLE_WELL:
        a = params[0]
        x = X[:, 0]
        x2 = x * x
        f = 0.25 * x2 * x2 - a * x2
        g = (x2 * x - 2.0 * a * x)[:, None]
    elif code == OBJ_QUADRUPLE_WELL:
        a = params[0]
        x = X[:, 0]
        y = X[:, 1]
        x2 = x * x
        y2 = y * y
        f = x2 * x2 + y2 * y2 - a * (x2 + y2) - x * y
        gx = 4.0 * x2 * x - 2.0 * a * x - y
        gy = 4.0 * y2 * y - 2.0 * a * y - x
        g = np.stack((gx, gy), axis=1)
    elif code == OBJ_ACKLEY:
        x = X[:, 0]
        y = X[:, 1]
        s = 0.5 * (x * x + y * y)
        r = np.sqrt(s)
        er = np.exp(-0.2 * r)
        c = 0.5 * (np.cos(_TWO_PI * x) + np.cos(_TWO_PI * y))
        ec = np.exp(c)
        f = -20.0 * er - ec + _E_PLUS_20
        rs = np.where(r > 0.0, r, 1.0)
        rad = np.where(r > 0.0, 2.0 * er / rs, 0.0)
        gx = rad * x + np.pi * ec * np.sin(_TWO_PI * x)
        gy = rad * y + np.pi * ec * np.sin(_TWO_PI * y)
        g = np.stack((gx, gy), axis=1)
    else:
        raise ValueError(f"unknown objective code {code}")
    return f, g


def _softmin_stats_numpy(f, beta):
    """Soft-min weights and energy, stabilized by shifting out min(f)."""
    fmin = np.min(f)
    e = np.exp(-beta * (f - fmin))
    s = np.sum(e)
    w = e / s
    j = fmin + np.sum(w * (f - fmin))
    return w, float(j)


def _drive_numpy(method, X, code, params, sched_kind, beta0, gamma, dt, sigma,
                 max_steps, gen, stop_kind, targets, eps, watched,
                 quorum_count, axis, threshold, direction_up, mask):
    """Advance a trial until its stopping rule fires (numpy fallback path).

    Mirrors the numba driver operation by operation; see that function for
    the step/stop semantics.
    """
    n, d = X.shape
    nf = float(n)
    amp = np.sqrt(2.0 * sigma * dt)
    eps2 = eps * eps
    maskb = mask.astype(bool)
    softmin = method == METHOD_SOFTMIN
    need_stats = softmin or stop_kind in (
        STOP_EXIT_MAXIMIZING, STOP_FLIP_TO_MAXIMIZING, STOP_EXIT_STRONG_MINIMIZING)
    s = 0
    while True:
        beta = beta0 if sched_kind == SCHED_FIXED else beta0 * gamma ** float(s)
        f, g = _fg_numpy(code, params, X)
        if need_stats:
            w, j = _softmin_stats_numpy(f, beta)
        fired = False
        if stop_kind == STOP_EXIT_MAXIMIZING:
            a_w = (beta * (f[watched] - j) - 1.0) * (nf * w[watched])
            fired = a_w <= 0.0
        elif stop_kind == STOP_ENTER_BALL:
            d2 = np.sum((X[:, None, :] - targets[None, :, :]) ** 2, axis=2)
            cnt = int(np.count_nonzero(np.any(d2 <= eps2, axis=1)))
            fired = cnt >= quorum_count
        elif stop_kind == STOP_COORD_THRESHOLD:
            v = X[watched, axis]
            fired = v >= threshold if direction_up else v <= threshold
        elif stop_kind == STOP_FLIP_TO_MAXIMIZING:
            a = (beta * (f - j) - 1.0) * (nf * w)
            fired = bool(np.any(a[maskb] >= 0.0))
        elif stop_kind == STOP_EXIT_STRONG_MINIMIZING:
            fired = bool(np.any(f[maskb] > j))
        if fired:
            return STATUS_HIT, s, s, X
        if s >= max_steps:
            return STATUS_CENSORED, -1, max_steps, X
        noise = gen.standard_normal((n, d))
        if softmin:
            a = (beta * (f - j) - 1.0) * (nf * w)
            X = X + dt * (a[:, None] * g) + amp * noise
        else:
            X = X + dt * (-(beta * g)) + amp * noise
        if not np.all(np.isfinite(X)):
            return STATUS_DIVERGED, s, s + 1, X
        s += 1


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

if _HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _fg_into_nb(code, params, X, f, g):
        n = X.shape[0]
        if code == OBJ_QUADRATIC:
            lam = params[0]
            for i in range(n):
                acc = 0.0
                for jj in range(X.shape[1]):
                    acc += X[i, jj] * X[i, jj]
                    g[i, jj] = lam * X[i, jj]
                f[i] = 0.5 * lam * acc
        elif code == OBJ_DOUBLE_WELL:
            a = params[0]
            for i in range(n):
                x = X[i, 0]
                x2 = x * x
                f[i] = 0.25 * x2 * x2 - a * x2
                g[i, 0] = x2 * x - 2.0 * a * x
        elif code == OBJ_QUADRUPLE_WELL:
            a = params[0]
            for i in range(n):
                x = X[i, 0]
                y = X[i, 1]
                x2 = x * x
                y2 = y * y
                f[i] = x2 * x2 + y2 * y2 - a * (x2 + y2) - x * y
                g[i, 0] = 4.0 * x2 * x - 2.0 * a * x - y
                g[i, 1] = 4.0 * y2 * y - 2.0 * a * y - x
        else:
            for i in range(n):
                x = X[i, 0]
                y = X[i, 1]
                s = 0.5 * (x * x + y * y)
                r = np.sqrt(s)
                er = np.exp(-0.2 * r)
                c = 0.5 * (np.cos(_TWO_PI * x) + np.cos(_TWO_PI * y))
                ec = np.exp(c)
                f[i] = -20.0 * er - ec + _E_PLUS_20
                if r > 0.0:
                    rad = 2.0 * er / r
                else:
                    rad = 0.0
                g[i, 0] = rad * x + np.pi * ec * np.sin(_TWO_PI * x)
                g[i, 1] = rad * y + np.pi * ec * np.sin(_TWO_PI * y)

    @njit(cache=True, nogil=True)
    def _softmin_into_nb(f, beta, w):
        n = f.shape[0]
        fmin = f[0]
        for i in range(1, n):
            if f[i] < fmin:
                fmin = f[i]
        s = 0.0
        for i in range(n):
            w[i] = np.exp(-beta * (f[i] - fmin))
            s += w[i]
        j = 0.0
        for i in range(n):
            w[i] = w[i] / s
            j += w[i] * (f[i] - fmin)
        return fmin + j

    @njit(cache=True, nogil=True)
    def _drive_nb(method, X, code, params, sched_kind, beta0, gamma, dt, sigma,
                  max_steps, gen, stop_kind, targets, eps, watched,
                  quorum_count, axis, threshold, direction_up, mask):
        n, d = X.shape
        nf = float(n)
        amp = np.sqrt(2.0 * sigma * dt)
        eps2 = eps * eps
        f = np.empty(n)
        g = np.empty((n, d))
        w = np.empty(n)
        softmin = method == METHOD_SOFTMIN
        need_stats = softmin or stop_kind == STOP_EXIT_MAXIMIZING \
            or stop_kind == STOP_FLIP_TO_MAXIMIZING \
            or stop_kind == STOP_EXIT_STRONG_MINIMIZING
        s = 0
        j = 0.0
        while True:
            if sched_kind == SCHED_FIXED:
                beta = beta0
            else:
                beta = beta0 * gamma ** float(s)
            _fg_into_nb(code, params, X, f, g)
            if need_stats:
                j = _softmin_into_nb(f, beta, w)
            fired = False
            if stop_kind == STOP_EXIT_MAXIMIZING:
                a_w = (beta * (f[watched] - j) - 1.0) * (nf * w[watched])
                fired = a_w <= 0.0
            elif stop_kind == STOP_ENTER_BALL:
                cnt = 0
                for i in range(n):
                    inside = False
                    for m in range(targets.shape[0]):
                        dist2 = 0.0
                        for jj in range(d):
                            diff = X[i, jj] - targets[m, jj]
                            dist2 += diff * diff
                        if dist2 <= eps2:
                            inside = True
                            break
                    if inside:
                        cnt += 1
                        if cnt >= quorum_count:
                            break
                fired = cnt >= quorum_count
            elif stop_kind == STOP_COORD_THRESHOLD:
                v = X[watched, axis]
                if direction_up:
                    fired = v >= threshold
                else:
                    fired = v <= threshold
            elif stop_kind == STOP_FLIP_TO_MAXIMIZING:
                for i in range(n):
                    if mask[i] != 0:
                        a_i = (beta * (f[i] - j) - 1.0) * (nf * w[i])
                        if a_i >= 0.0:
                            fired = True
                            break
            elif stop_kind == STOP_EXIT_STRONG_MINIMIZING:
                for i in range(n):
                    if mask[i] != 0 and f[i] > j:
                        fired = True
                        break
            if fired:
                return STATUS_HIT, s, s, X
            if s >= max_steps:
                return STATUS_CENSORED, -1, max_steps, X
            if softmin:
                for i in range(n):
                    a_i = (beta * (f[i] - j) - 1.0) * (nf * w[i])
                    for jj in range(d):
                        X[i, jj] = X[i, jj] + dt * (a_i * g[i, jj]) \
                            + amp * gen.standard_normal()
            else:
                for i in range(n):
                    for jj in range(d):
                        X[i, jj] = X[i, jj] + dt * (-(beta * g[i, jj])) \
                            + amp * gen.standard_normal()
            bad = False
            for i in range(n):
                for jj in range(d):
                    if not np.isfinite(X[i, jj]):
                        bad = True
            if bad:
                return STATUS_DIVERGED, s, s + 1, X
            s += 1

    def _fg_numba(code, params, X):
        n, d = X.shape
        f = np.empty(n)
        g = np.empty((n, d))
        _fg_into_nb(code, params, X, f, g)
        return f, g

    def _softmin_stats_numba(f, beta):
        w = np.empty(f.shape[0])
        j = _softmin_into_nb(f, float(beta), w)
        return w, float(j)


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_NUMPY_BACKEND = SimpleNamespace(
    name="numpy",
    fg=_fg_numpy,
    softmin_stats=_softmin_stats_numpy,
    drive=_drive_numpy,
)

_BACKENDS = {"numpy": _NUMPY_BACKEND}

if _HAVE_NUMBA:
    _BACKENDS["numba"] = SimpleNamespace(
        name="numba",
        fg=_fg_numba,
        softmin_stats=_softmin_stats_numba,
        drive=_drive_nb,
    )


def available_backends():
    return tuple(sorted(_BACKENDS))


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} not available (have {available_backends()})"
        ) from None


def _select_from_env():
    choice = os.environ.get("SOFTSWARM_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return _BACKENDS["numba"] if _HAVE_NUMBA else _NUMPY_BACKEND
    return get_backend(choice)


_ACTIVE = _select_from_env()


def active():
    """The currently selected kernel backend."""
    return _ACTIVE


def use_backend(name: str):
    """Switch the active backend ('numpy' or 'numba'). Returns the previous name."""
    global _ACTIVE
    previous = _ACTIVE.name
    _ACTIVE = get_backend(name)
    return previous
