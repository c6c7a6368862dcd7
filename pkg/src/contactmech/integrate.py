"""Numerical integration of the contact evolution equations.

Explicit Runge-Kutta only: classical RK4 on a fixed grid and the
Fehlberg 4(5) embedded pair with proportional step control.  No
structure-preserving integrator is attempted; verification tests check
results against closed-form oracles instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .contact_core import ChartPoint, ContactSystem
from .expr import DomainError

__all__ = [
    "DivergenceError",
    "IntegrationError",
    "StepUnderflowError",
    "Trajectory",
    "integrate_adaptive",
    "integrate_fixed",
    "read_trajectory_csv",
    "rk4_step",
    "rkf45_step",
    "write_trajectory_csv",
]


class IntegrationError(Exception):
    """Base class for integration failures."""


class DivergenceError(IntegrationError):
    """The state left the finite domain; carries the last good sample."""

    def __init__(self, message: str, time: float, state: ChartPoint):
        super().__init__(f"{message} (last good state at t={time!r})")
        self.time = time
        self.state = state


class StepUnderflowError(IntegrationError):
    """Adaptive step control shrank below the resolvable step size."""

    def __init__(self, time: float, dt: float):
        super().__init__(
            f"step size underflow at t={time!r}: dt={dt!r} fell below the "
            f"minimum resolvable step"
        )
        self.time = time
        self.dt = dt


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered chart samples plus integrator metadata."""

    names: tuple
    times: np.ndarray
    states: np.ndarray
    method: str
    accepted: int = 0
    rejected: int = 0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if times.ndim != 1 or states.ndim != 2:
            raise ValueError("times must be 1-d and states 2-d")
        if len(times) != len(states):
            raise ValueError(
                f"{len(times)} times but {len(states)} states"
            )
        if len(times) == 0:
            raise ValueError("empty trajectory")
        if states.shape[1] != len(self.names):
            raise ValueError(
                f"states have {states.shape[1]} columns, expected "
                f"{len(self.names)}"
            )
        if len(times) > 1 and not np.all(np.diff(times) > 0.0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n(self) -> int:
        return (len(self.names) - 1) // 2

    def point(self, i: int) -> ChartPoint:
        return ChartPoint.from_flat(self.states[i].tolist())

    def points(self):
        for row in self.states:
            yield ChartPoint.from_flat(row.tolist())

    @property
    def final_point(self) -> ChartPoint:
        return self.point(len(self) - 1)

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.times
        return self.states[:, self.names.index(name)]


def _check_finite(values, t: float, last_state) -> None:
    for v in values:
        if not math.isfinite(v):
            raise DivergenceError(
                "state left the finite domain",
                t,
                ChartPoint.from_flat(last_state),
            )


def _rhs(sys: ContactSystem, y, t: float, last_good) -> tuple:
    try:
        k = sys.flow(y)
    except DomainError as exc:
        raise DivergenceError(
            f"right-hand side undefined: {exc}", t, ChartPoint.from_flat(last_good)
        ) from None
    _check_finite(k, t, last_good)
    return k


def _rk4_flat(sys: ContactSystem, y: tuple, t: float, h: float) -> tuple:
    dim = len(y)
    k1 = _rhs(sys, y, t, y)
    k2 = _rhs(sys, tuple(y[i] + 0.5 * h * k1[i] for i in range(dim)), t, y)
    k3 = _rhs(sys, tuple(y[i] + 0.5 * h * k2[i] for i in range(dim)), t, y)
    k4 = _rhs(sys, tuple(y[i] + h * k3[i] for i in range(dim)), t, y)
    out = tuple(
        y[i] + (h / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
        for i in range(dim)
    )
    _check_finite(out, t, y)
    return out


def rk4_step(sys: ContactSystem, state: ChartPoint, dt: float) -> ChartPoint:
    """One classical 4th-order Runge-Kutta step."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    sys._check_point(state)
    return ChartPoint.from_flat(_rk4_flat(sys, state.flat(), 0.0, dt))


# Fehlberg 4(5) tableau; _RKF_ERR = b5 - b4, so the weighted sum of the
# stages estimates the local error of the propagated 4th-order solution.
_RKF_A = (
    (),
    (1.0 / 4.0,),
    (3.0 / 32.0, 9.0 / 32.0),
    (1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0),
    (439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0),
    (-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0),
)
_RKF_B4 = (25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0)
_RKF_ERR = (
    1.0 / 360.0,
    0.0,
    -128.0 / 4275.0,
    -2197.0 / 75240.0,
    1.0 / 50.0,
    2.0 / 55.0,
)


def _rkf45_flat(sys: ContactSystem, y: tuple, t: float, h: float) -> tuple:
    dim = len(y)
    ks = [_rhs(sys, y, t, y)]
    for row in _RKF_A[1:]:
        stage = tuple(
            y[i] + h * sum(a * ks[j][i] for j, a in enumerate(row))
            for i in range(dim)
        )
        ks.append(_rhs(sys, stage, t, y))
    out = tuple(
        y[i] + h * sum(b * ks[j][i] for j, b in enumerate(_RKF_B4))
        for i in range(dim)
    )
    _check_finite(out, t, y)
    err = max(
        abs(h * sum(e * ks[j][i] for j, e in enumerate(_RKF_ERR)))
        for i in range(dim)
    )
    return out, err


def rkf45_step(sys: ContactSystem, state: ChartPoint, dt: float) -> tuple:
    """One embedded 4(5) step: (new state, max-norm local error estimate)."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    sys._check_point(state)
    out, err = _rkf45_flat(sys, state.flat(), 0.0, dt)
    return ChartPoint.from_flat(out), err


def _validate_window(t0: float, tf: float) -> float:
    t0, tf = float(t0), float(tf)
    if not (math.isfinite(t0) and math.isfinite(tf)):
        raise ValueError("t0 and tf must be finite")
    if not tf > t0:
        raise ValueError(f"tf must exceed t0, got t0={t0!r}, tf={tf!r}")
    return tf - t0


def integrate_fixed(
    sys: ContactSystem,
    s0: ChartPoint,
    t0: float,
    tf: float,
    dt: float,
) -> Trajectory:
    """RK4 on a uniform grid; a shortened final step lands exactly on tf."""
    span = _validate_window(t0, tf)
    dt = float(dt)
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    sys._check_point(s0)

    y = s0.flat()
    times = [float(t0)]
    states = [y]
    tiny = 1e-9 * min(dt, span)
    k = 0
    while True:
        t_k = t0 + k * dt
        t_next = t0 + (k + 1) * dt
        if t_next >= tf - tiny:
            y = _rk4_flat(sys, y, t_k, tf - t_k)
            times.append(float(tf))
            states.append(y)
            break
        y = _rk4_flat(sys, y, t_k, dt)
        times.append(t_next)
        states.append(y)
        k += 1

    return Trajectory(
        names=sys.chart_names,
        times=np.array(times),
        states=np.array(states),
        method="rk4",
        accepted=len(times) - 1,
        rejected=0,
    )


def integrate_adaptive(
    sys: ContactSystem,
    s0: ChartPoint,
    t0: float,
    tf: float,
    tol: float,
) -> Trajectory:
    """Fehlberg 4(5) with per-step acceptance err <= tol*(1 + |state|_inf).

    The mixed absolute/relative control keeps the test meaningful both
    near zero and when the action variable grows large.  Step factor is
    0.9*(budget/err)^(1/5) clamped to [0.2, 5.0].
    """
    span = _validate_window(t0, tf)
    tol = float(tol)
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    sys._check_point(s0)

    y = s0.flat()
    t = float(t0)
    times = [t]
    states = [y]
    accepted = 0
    rejected = 0
    dt = span
    dt_floor = 1e-12 * span
    while t < tf:
        h = min(dt, tf - t)
        out, err = _rkf45_flat(sys, y, t, h)
        budget = tol * (1.0 + max(abs(v) for v in y))
        if err <= budget:
            t = tf if h >= tf - t else t + h
            y = out
            times.append(t)
            states.append(y)
            accepted += 1
        else:
            rejected += 1
        factor = 5.0 if err == 0.0 else 0.9 * (budget / err) ** 0.2
        dt = h * min(5.0, max(0.2, factor))
        if t < tf and dt < dt_floor:
            raise StepUnderflowError(t, dt)

    return Trajectory(
        names=sys.chart_names,
        times=np.array(times),
        states=np.array(states),
        method="rkf45",
        accepted=accepted,
        rejected=rejected,
    )


def write_trajectory_csv(sys: ContactSystem, traj: Trajectory, path) -> None:
    """Header t,<chart names>,H; shortest round-trip float formatting."""
    if traj.names != sys.chart_names:
        raise ValueError("trajectory chart names do not match the system")
    lines = ["t," + ",".join(traj.names) + ",H"]
    for t, row in zip(traj.times, traj.states):
        point = ChartPoint.from_flat(row.tolist())
        h = sys.hamiltonian_value(point)
        values = [float(t), *point.flat(), float(h)]
        lines.append(",".join(repr(v) for v in values))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path) -> Trajectory:
    """Read a file produced by write_trajectory_csv (H column is dropped)."""
    text = Path(path).read_text()
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty trajectory file")
    header = lines[0].split(",")
    if len(header) < 5 or header[0] != "t" or header[-1] != "H":
        raise ValueError(f"{path}: expected header t,<chart names>,H")
    names = tuple(header[1:-1])
    times = []
    states = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ValueError(
                f"{path}: line {lineno}: expected {len(header)} columns, "
                f"got {len(cells)}"
            )
        try:
            row = [float(c) for c in cells]
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: non-numeric cell") from None
        times.append(row[0])
        states.append(row[1:-1])
    return Trajectory(
        names=names,
        times=np.array(times),
        states=np.array(states),
        method="file",
        accepted=0,
        rejected=0,
    )
