"""Evolution schedules q(tau) and the sweep function d(tau).

All schedules map [0, 1] onto [0, 1] monotonically and carry closed-form
first and second derivatives.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import ParameterError

# below this dephasing strength q_OS degenerates to 0/0
B_FLOOR = 1e-6


class ScheduleKind(str, enum.Enum):
    LINEAR = "linear"
    ROLAND_CERF = "rc"
    OPTIMAL_STARE = "os"

    @classmethod
    def parse(cls, value) -> "ScheduleKind":
        if isinstance(value, cls):
            return value
        aliases = {
            "linear": cls.LINEAR, "lz": cls.LINEAR,
            "rc": cls.ROLAND_CERF, "rolandcerf": cls.ROLAND_CERF,
            "roland_cerf": cls.ROLAND_CERF,
            "os": cls.OPTIMAL_STARE, "optimalstare": cls.OPTIMAL_STARE,
            "optimal_stare": cls.OPTIMAL_STARE,
        }
        key = str(value).strip().lower().replace("-", "_")
        if key not in aliases:
            raise ParameterError(f"unknown schedule kind {value!r}")
        return aliases[key]

    @property
    def code(self) -> int:
        return {
            ScheduleKind.LINEAR: kernels.LINEAR,
            ScheduleKind.ROLAND_CERF: kernels.ROLAND_CERF,
            ScheduleKind.OPTIMAL_STARE: kernels.OPTIMAL_STARE,
        }[self]


@dataclass(frozen=True)
class SweepSpec:
    """Dimensionless problem: adiabaticity ``a = g0 T``, dephasing
    ``b = gamma T``, sweep endpoints ``d_i < d_f`` and the schedule kind."""

    a: float
    b: float
    d_i: float
    d_f: float
    kind: ScheduleKind = ScheduleKind.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind.parse(self.kind))
        for name in ("a", "b", "d_i", "d_f"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.a > 0:
            raise ParameterError(f"a must be positive, got {self.a}")
        if not self.b >= 0:
            raise ParameterError(f"b must be non-negative, got {self.b}")
        if not self.d_f > self.d_i:
            raise ParameterError("d_f must exceed d_i")

    def with_(self, **changes) -> "SweepSpec":
        data = dict(a=self.a, b=self.b, d_i=self.d_i, d_f=self.d_f,
                    kind=self.kind)
        data.update(changes)
        return SweepSpec(**data)


@dataclass(frozen=True)
class Schedule:
    """A schedule with analytic derivatives.

    ``kernel_code``/``kernel_params`` let the compiled integrator evaluate
    the same schedule; tabulated schedules leave them unset.
    """

    name: str
    q: Callable
    qdot: Callable
    qddot: Callable
    kernel_code: Optional[int] = None
    kernel_params: Optional[np.ndarray] = field(default=None, repr=False)
    fallback: bool = False

    def __call__(self, tau):
        return self.q(tau)


def d_of_tau(q_value, d_i, d_f):
    """Sweep function d = q d_f + (1 - q) d_i."""
    return q_value * d_f + (1.0 - q_value) * d_i


def x_of_d(d, a, b):
    """x(d) = b d / sqrt(a^2 (d^2 + 1) + b^2)."""
    d = np.asarray(d, dtype=float)
    return b * d / np.sqrt(a * a * (d * d + 1.0) + b * b)


def theta_bounds(spec: SweepSpec):
    """(theta_i, theta_f) = (arctan x(d_i), arctan x(d_f))."""
    return (float(np.arctan(x_of_d(spec.d_i, spec.a, spec.b))),
            float(np.arctan(x_of_d(spec.d_f, spec.a, spec.b))))


def theta_span(a, b, d_i, d_f) -> float:
    """theta_f - theta_i from raw parameters; d_f == d_i is allowed here."""
    return float(np.arctan(x_of_d(d_f, a, b)) - np.arctan(x_of_d(d_i, a, b)))


def xi_value(a, b, d_i, d_f) -> float:
    if not b > 0:
        raise ParameterError("xi is undefined for b = 0")
    return theta_span(a, b, d_i, d_f) ** 2 / (4.0 * b)


def xi_constant(spec: SweepSpec) -> float:
    """Conserved Lagrangian value along the optimal path, (theta_f - theta_i)^2 / (4 b)."""
    return xi_value(spec.a, spec.b, spec.d_i, spec.d_f)


def q_linear(tau):
    return np.asarray(tau, dtype=float) * 1.0


def _rc_parts(tau, d_i, d_f):
    tau = np.asarray(tau, dtype=float)
    phi_i = np.arctan(d_i)
    span = np.arctan(d_f) - phi_i
    t = np.tan(tau * span + phi_i)
    sec2 = 1.0 + t * t
    dd = d_f - d_i
    return ((t - d_i) / dd, span * sec2 / dd, 2.0 * span ** 2 * t * sec2 / dd)


def q_roland_cerf(tau, d_i, d_f):
    """Roland-Cerf schedule: local adiabatic condition for the unitary sweep."""
    return _rc_parts(tau, d_i, d_f)[0]


def _os_parts(tau, spec: SweepSpec):
    tau = np.asarray(tau, dtype=float)
    a, b = spec.a, spec.b
    th_i, th_f = theta_bounds(spec)
    span = th_f - th_i
    t = np.tan(tau * span + th_i)
    sec2 = 1.0 + t * t
    r = b * b - a * a * t * t
    if np.any(r <= 0):
        raise FloatingPointError("q_OS denominator lost positivity")
    s = np.hypot(a, b)
    dd = spec.d_f - spec.d_i
    f0 = t / np.sqrt(r)
    f1 = b * b / r ** 1.5
    f2 = 3.0 * a * a * b * b * t / r ** 2.5
    q = (s * f0 - spec.d_i) / dd
    qd = s * f1 * span * sec2 / dd
    qdd = s * span ** 2 * sec2 * (f2 * sec2 + 2.0 * t * f1) / dd
    return q, qd, qdd


def q_optimal_stare(tau, spec: SweepSpec):
    """Optimal open-system schedule for constant dephasing ``b``.

    Falls back to the Roland-Cerf form (with a warning) for ``b <= B_FLOOR``.
    """
    if spec.b <= B_FLOOR:
        warnings.warn("b below floor: optimal schedule reduces to Roland-Cerf",
                      RuntimeWarning, stacklevel=2)
        return q_roland_cerf(tau, spec.d_i, spec.d_f)
    return _os_parts(tau, spec)[0]


def _kernel_block(spec: SweepSpec) -> np.ndarray:
    th_i, th_f = theta_bounds(spec) if spec.b > 0 else (0.0, 0.0)
    return np.array([spec.d_i, spec.d_f, spec.a, spec.b, th_i, th_f])


def make_schedule(spec: SweepSpec, kind=None) -> Schedule:
    """Build the schedule of ``kind`` (default ``spec.kind``) for ``spec``."""
    kind = ScheduleKind.parse(kind if kind is not None else spec.kind)
    block = _kernel_block(spec)
    if kind is ScheduleKind.LINEAR:
        return Schedule(
            "linear", q_linear,
            lambda tau: np.ones_like(np.asarray(tau, dtype=float)),
            lambda tau: np.zeros_like(np.asarray(tau, dtype=float)),
            kernels.LINEAR, block)
    fallback = False
    if kind is ScheduleKind.OPTIMAL_STARE and spec.b <= B_FLOOR:
        warnings.warn("b below floor: optimal schedule reduces to Roland-Cerf",
                      RuntimeWarning, stacklevel=2)
        kind, fallback = ScheduleKind.ROLAND_CERF, True
    if kind is ScheduleKind.ROLAND_CERF:
        def parts(tau):
            return _rc_parts(tau, spec.d_i, spec.d_f)
        name, code = "rc", kernels.ROLAND_CERF
    else:
        def parts(tau):
            return _os_parts(tau, spec)
        name, code = "os", kernels.OPTIMAL_STARE
    return Schedule(name, lambda tau: parts(tau)[0],
                    lambda tau: parts(tau)[1], lambda tau: parts(tau)[2],
                    code, block, fallback)


def tabulated_schedule(tau_grid, q_grid, name="tabulated") -> Schedule:
    """Adapter for a user schedule sampled on a grid (cubic spline).

    Runs only through the uncompiled integrator path.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    q_grid = np.asarray(q_grid, dtype=float)
    if tau_grid[0] != 0.0 or tau_grid[-1] != 1.0:
        raise ParameterError("tabulated schedule must span tau in [0, 1]")
    if abs(q_grid[0]) > 1e-10 or abs(q_grid[-1] - 1.0) > 1e-10:
        raise ParameterError("tabulated schedule must satisfy q(0)=0, q(1)=1")
    if np.any(np.diff(q_grid) < 0):
        raise ParameterError("tabulated schedule must be nondecreasing")
    spline = CubicSpline(tau_grid, q_grid)
    return Schedule(name, spline, spline.derivative(1), spline.derivative(2))
