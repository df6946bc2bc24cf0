"""Benchmark potentials with analytic gradients and landscape metadata.

Each objective is a closed-form smooth function together with its catalog
of critical points (minima, maxima, saddles), a domain box used for
initialization and sampling, and an optional strong-convexity constant.
A central finite-difference gradient is provided as an independent oracle
for the analytic gradients.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractViolationError, CriticalPointNotFoundError

CRITICAL_POINT_GRAD_TOL = 1e-8
_POINT_MATCH_ATOL = 1e-9


@dataclass(frozen=True)
class ObjectiveSpec:
    """A benchmark potential plus its landscape metadata.

    ``minima``/``maxima``/``saddles`` hold ``(point, value)`` pairs sorted by
    value then coordinates.  ``kernel_code``/``kernel_params`` address the
    compiled evaluation kernels.
    """

    name: str
    dimension: int
    params: dict = field(compare=False)
    domain_box: np.ndarray = field(compare=False)  # (d, 2) closed intervals
    minima: tuple = field(compare=False)
    maxima: tuple = field(compare=False)
    saddles: tuple = field(compare=False)
    strong_convexity_lambda: float | None = field(compare=False)
    kernel_code: int = field(compare=False, default=0)
    kernel_params: np.ndarray = field(compare=False, default=None)

    @property
    def id(self) -> str:
        return format_objective_id(self.name, self.params)

    def critical_points(self):
        return self.minima + self.maxima + self.saddles


def _point(x, d, what="point"):
    p = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if p.ndim != 1 or p.shape[0] != d:
        raise ContractViolationError(
            f"{what} has shape {p.shape}, expected ({d},)")
    if not np.all(np.isfinite(p)):
        raise ContractViolationError(f"{what} has non-finite entries")
    return p


def _check_positions(spec: ObjectiveSpec, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.dimension:
        raise ContractViolationError(
            f"positions have shape {X.shape}, expected (n, {spec.dimension})")
    return np.ascontiguousarray(X)


def values(spec: ObjectiveSpec, X) -> np.ndarray:
    """f at each row of the (n, d) position matrix."""
    X = _check_positions(spec, X)
    f, _ = _kernels.active().fg(spec.kernel_code, spec.kernel_params, X)
    return f


def gradients(spec: ObjectiveSpec, X) -> np.ndarray:
    """Analytic gradient at each row of the (n, d) position matrix."""
    X = _check_positions(spec, X)
    _, g = _kernels.active().fg(spec.kernel_code, spec.kernel_params, X)
    return g


def evaluate(spec: ObjectiveSpec, x) -> float:
    """f(x) for a single point."""
    p = _point(x, spec.dimension)
    return float(values(spec, p[None, :])[0])


def gradient(spec: ObjectiveSpec, x) -> np.ndarray:
    """Analytic gradient at a single point."""
    p = _point(x, spec.dimension)
    return gradients(spec, p[None, :])[0]


def fd_gradient(spec: ObjectiveSpec, x, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient, the oracle for :func:`gradient`."""
    if h <= 0:
        raise ContractViolationError("finite-difference step h must be > 0")
    p = _point(x, spec.dimension)
    out = np.empty_like(p)
    for i in range(p.shape[0]):
        plus = p.copy()
        minus = p.copy()
        plus[i] += h
        minus[i] -= h
        out[i] = (evaluate(spec, plus) - evaluate(spec, minus)) / (2.0 * h)
    return out


def _find_listed_value(spec: ObjectiveSpec, x) -> float:
    p = _point(x, spec.dimension)
    for pt, val in spec.critical_points():
        if np.allclose(p, pt, rtol=0.0, atol=_POINT_MATCH_ATOL):
            return val
    raise CriticalPointNotFoundError(
        f"{p.tolist()} is not a listed critical point of {spec.id}")


def barrier_height(spec: ObjectiveSpec, from_minimum, over) -> float:
    """f(over) - f(from_minimum) between two listed critical points."""
    return _find_listed_value(spec, over) - _find_listed_value(spec, from_minimum)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def _sorted_points(points):
    return tuple(sorted(
        ((np.asarray(p, dtype=np.float64), float(v)) for p, v in points),
        key=lambda pv: (round(pv[1], 12),) + tuple(np.round(pv[0], 12)),
    ))


def _validated(spec: ObjectiveSpec) -> ObjectiveSpec:
    lo = spec.domain_box[:, 0]
    hi = spec.domain_box[:, 1]
    for pt, val in spec.critical_points():
        gn = float(np.linalg.norm(gradient(spec, pt)))
        if gn >= CRITICAL_POINT_GRAD_TOL:
            raise ContractViolationError(
                f"{spec.id}: listed critical point {pt.tolist()} has "
                f"gradient norm {gn:.2e}")
        if np.any(pt < lo) or np.any(pt > hi):
            raise ContractViolationError(
                f"{spec.id}: critical point {pt.tolist()} outside domain box")
        if abs(evaluate(spec, pt) - val) > 1e-9:
            raise ContractViolationError(
                f"{spec.id}: listed value {val} disagrees with f at {pt.tolist()}")
    if spec.minima:
        top = max(v for _, v in spec.minima)
        for _, v in spec.maxima + spec.saddles:
            if v < top - 1e-12:
                raise ContractViolationError(
                    f"{spec.id}: saddle/maximum value {v} below a listed minimum")
    return spec


def double_well(a: float = 1.0) -> ObjectiveSpec:
    """1-d quartic double well x^4/4 - a x^2 with barrier height a^2."""
    if a <= 0:
        raise ContractViolationError("double_well requires a > 0")
    half_width = 2.0 * math.sqrt(a) + 1.0
    xm = math.sqrt(2.0 * a)
    spec = ObjectiveSpec(
        name="double_well",
        dimension=1,
        params={"a": float(a)},
        domain_box=np.array([[-half_width, half_width]]),
        minima=_sorted_points([([-xm], -a * a), ([xm], -a * a)]),
        maxima=_sorted_points([([0.0], 0.0)]),
        saddles=(),
        strong_convexity_lambda=None,
        kernel_code=_kernels.OBJ_DOUBLE_WELL,
        kernel_params=np.array([float(a)]),
    )
    return _validated(spec)


def quadruple_well(a: float = 2.0) -> ObjectiveSpec:
    """2-d unbalanced four-well potential x^4 + y^4 - a(x^2+y^2) - xy.

    For a > 1 the landscape has two deep wells on the main diagonal, two
    shallow wells on the antidiagonal, and four saddles between them; the
    cross-term makes the wells unequal.  For 1/2 < a < 1 the antidiagonal
    points are saddles instead.
    """
    if a <= 0.5:
        raise ContractViolationError("quadruple_well requires a > 1/2")
    half_width = 2.0 * math.sqrt(a) + 1.0
    p = math.sqrt(2.0 * a + 1.0) / 2.0
    deep = -((2.0 * a + 1.0) ** 2) / 8.0
    q = math.sqrt(2.0 * a - 1.0) / 2.0
    shallow = -((2.0 * a - 1.0) ** 2) / 8.0
    minima = [([-p, -p], deep), ([p, p], deep)]
    saddles = []
    if a >= 1.0:
        minima += [([-q, q], shallow), ([q, -q], shallow)]
    else:
        saddles += [([-q, q], shallow), ([q, -q], shallow)]
    if a > 1.0:
        u = (a + math.sqrt(a * a - 1.0)) / 4.0
        v = (a - math.sqrt(a * a - 1.0)) / 4.0
        su, sv = math.sqrt(u), math.sqrt(v)
        sval = -a * a / 4.0 + 0.125
        saddles += [([su, -sv], sval), ([-su, sv], sval),
                    ([sv, -su], sval), ([-sv, su], sval)]
    spec = ObjectiveSpec(
        name="quadruple_well",
        dimension=2,
        params={"a": float(a)},
        domain_box=np.array([[-half_width, half_width]] * 2),
        minima=_sorted_points(minima),
        maxima=_sorted_points([([0.0, 0.0], 0.0)]),
        saddles=_sorted_points(saddles),
        strong_convexity_lambda=None,
        kernel_code=_kernels.OBJ_QUADRUPLE_WELL,
        kernel_params=np.array([float(a)]),
    )
    return _validated(spec)


def ackley() -> ObjectiveSpec:
    """2-d Ackley benchmark; global minimum f(0,0) = 0, many local minima."""
    spec = ObjectiveSpec(
        name="ackley",
        dimension=2,
        params={},
        domain_box=np.array([[-5.0, 5.0]] * 2),
        minima=_sorted_points([([0.0, 0.0], 0.0)]),
        maxima=(),
        saddles=(),
        strong_convexity_lambda=None,
        kernel_code=_kernels.OBJ_ACKLEY,
        kernel_params=np.empty(0),
    )
    return _validated(spec)


def quadratic(lam: float = 1.0, dim: int = 1) -> ObjectiveSpec:
    """Isotropic quadratic bowl (lam/2)||x||^2, lam-strongly convex."""
    if lam <= 0:
        raise ContractViolationError("quadratic requires lam > 0")
    if dim < 1:
        raise ContractViolationError("quadratic requires dim >= 1")
    spec = ObjectiveSpec(
        name="quadratic",
        dimension=int(dim),
        params={"lam": float(lam), "dim": int(dim)},
        domain_box=np.array([[-5.0, 5.0]] * dim),
        minima=_sorted_points([(np.zeros(dim), 0.0)]),
        maxima=(),
        saddles=(),
        strong_convexity_lambda=float(lam),
        kernel_code=_kernels.OBJ_QUADRATIC,
        kernel_params=np.array([float(lam)]),
    )
    return _validated(spec)


CATALOG = {
    "double_well": double_well,
    "quadruple_well": quadruple_well,
    "ackley": ackley,
    "quadratic": quadratic,
}


def get_objective(name: str, **params) -> ObjectiveSpec:
    """Resolve an objective by name and parameter map."""
    try:
        ctor = CATALOG[name]
    except KeyError:
        raise ContractViolationError(
            f"unknown objective {name!r}; catalog has {sorted(CATALOG)}") from None
    try:
        return ctor(**params)
    except TypeError:
        raise ContractViolationError(
            f"objective {name!r} does not accept parameters {sorted(params)}") from None


def format_objective_id(name: str, params: dict) -> str:
    """Canonical string address, e.g. ``double_well{a=1.5}``."""
    if not params:
        return name
    inner = ",".join(f"{k}={params[k]:g}" for k in sorted(params))
    return f"{name}{{{inner}}}"


_ID_RE = re.compile(r"^([a-z_]+)(?:\{(.*)\})?$")


def parse_objective_id(text: str):
    """Parse ``name{k=v,...}`` into (name, params)."""
    m = _ID_RE.match(text.strip())
    if not m:
        raise ContractViolationError(f"malformed objective id {text!r}")
    name, inner = m.group(1), m.group(2)
    params = {}
    if inner:
        for item in inner.split(","):
            if "=" not in item:
                raise ContractViolationError(f"malformed objective id {text!r}")
            k, v = item.split("=", 1)
            k = k.strip()
            params[k] = int(v) if k == "dim" else float(v)
    return name, params
