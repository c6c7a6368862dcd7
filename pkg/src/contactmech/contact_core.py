"""Darboux-chart states and contact Hamiltonian systems.

The chart is always canonical: coordinates (q^1..q^n, p_1..p_n, s) with
contact form eta = ds - p_i dq^i.  General contact forms and chart
transitions are out of scope; by the Darboux theorem this loses no local
generality.  Coordinate `x` pairs with momentum `p_x`, and `s` is the
reserved action variable, so the pairing is syntactic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .expr import Dual, Expression, FUNCTIONS, parse

__all__ = [
    "ACTION_NAME",
    "ChartPoint",
    "ContactSystem",
    "Covector",
    "Tangent",
    "contact_form_apply",
    "hamilton_equation_residuals",
    "hamiltonian_vector_field",
    "interior_d_eta",
    "reeb_field",
]

ACTION_NAME = "s"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _as_floats(values: Sequence[float], label: str) -> tuple:
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ValueError(f"{label} must be a sequence of reals") from None


@dataclass(frozen=True)
class ChartPoint:
    """A point (q, p, s) of the (2n+1)-dimensional chart."""

    q: tuple
    p: tuple
    s: float

    def __post_init__(self):
        object.__setattr__(self, "q", _as_floats(self.q, "q"))
        object.__setattr__(self, "p", _as_floats(self.p, "p"))
        object.__setattr__(self, "s", float(self.s))
        if len(self.q) < 1:
            raise ValueError("chart dimension must be at least 1")
        if len(self.q) != len(self.p):
            raise ValueError(
                f"q has dimension {len(self.q)} but p has {len(self.p)}"
            )

    @property
    def n(self) -> int:
        return len(self.q)

    def flat(self) -> tuple:
        """Values in chart order (q^1..q^n, p_1..p_n, s)."""
        return self.q + self.p + (self.s,)

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "ChartPoint":
        values = tuple(values)
        if len(values) < 3 or len(values) % 2 == 0:
            raise ValueError(f"flat state needs 2n+1 entries, got {len(values)}")
        n = (len(values) - 1) // 2
        return cls(values[:n], values[n : 2 * n], values[2 * n])


@dataclass(frozen=True)
class Tangent:
    """A tangent vector: components against (d/dq^i, d/dp_i, d/ds)."""

    dq: tuple
    dp: tuple
    ds: float

    def __post_init__(self):
        object.__setattr__(self, "dq", _as_floats(self.dq, "dq"))
        object.__setattr__(self, "dp", _as_floats(self.dp, "dp"))
        object.__setattr__(self, "ds", float(self.ds))
        if len(self.dq) != len(self.dp):
            raise ValueError(
                f"dq has dimension {len(self.dq)} but dp has {len(self.dp)}"
            )

    @property
    def n(self) -> int:
        return len(self.dq)

    def flat(self) -> tuple:
        return self.dq + self.dp + (self.ds,)

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "Tangent":
        values = tuple(values)
        n = (len(values) - 1) // 2
        return cls(values[:n], values[n : 2 * n], values[2 * n])

    def max_norm(self) -> float:
        return max(abs(v) for v in self.flat())


@dataclass(frozen=True)
class Covector:
    """A covector: components against the basis (dq^i, dp_i, ds)."""

    cq: tuple
    cp: tuple
    cs: float

    def __post_init__(self):
        object.__setattr__(self, "cq", _as_floats(self.cq, "cq"))
        object.__setattr__(self, "cp", _as_floats(self.cp, "cp"))
        object.__setattr__(self, "cs", float(self.cs))
        if len(self.cq) != len(self.cp):
            raise ValueError(
                f"cq has dimension {len(self.cq)} but cp has {len(self.cp)}"
            )

    @property
    def n(self) -> int:
        return len(self.cq)

    def flat(self) -> tuple:
        return self.cq + self.cp + (self.cs,)

    def max_norm(self) -> float:
        return max(abs(v) for v in self.flat())


class ContactSystem:
    """A Hamiltonian on the chart, with named coordinates and parameters.

    Immutable after construction; evaluation methods are pure, so one
    instance may serve any number of threads.
    """

    __slots__ = (
        "coordinates",
        "momenta",
        "parameters",
        "hamiltonian",
        "chart_names",
        "_env_base",
        "_index",
    )

    def __init__(
        self,
        coordinates: Sequence[str],
        hamiltonian,
        parameters: Mapping[str, float] | None = None,
    ):
        coordinates = tuple(coordinates)
        if not coordinates:
            raise ValueError("at least one coordinate is required")
        parameters = dict(parameters or {})

        momenta = tuple(f"p_{c}" for c in coordinates)
        chart_names = coordinates + momenta + (ACTION_NAME,)
        for name in chart_names + tuple(parameters):
            if not _NAME_RE.match(name):
                raise ValueError(f"invalid name {name!r}")
            if name in FUNCTIONS:
                raise ValueError(f"name {name!r} shadows a built-in function")
        if ACTION_NAME in coordinates or ACTION_NAME in parameters:
            raise ValueError(f"{ACTION_NAME!r} is reserved for the action variable")
        if len(set(chart_names)) != len(chart_names):
            raise ValueError(f"chart names collide: {sorted(chart_names)}")
        clashes = set(parameters).intersection(chart_names)
        if clashes:
            raise ValueError(f"parameters shadow chart names: {sorted(clashes)}")
        for name, value in parameters.items():
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"parameter {name!r} must be finite, got {value!r}")
            parameters[name] = value

        declared = frozenset(chart_names) | frozenset(parameters)
        if isinstance(hamiltonian, Expression):
            stray = hamiltonian.names - declared
            if stray:
                raise ValueError(
                    f"hamiltonian references undeclared names: {sorted(stray)}"
                )
        else:
            hamiltonian = parse(hamiltonian, declared)

        self.coordinates = coordinates
        self.momenta = momenta
        self.parameters = parameters
        self.hamiltonian = hamiltonian
        self.chart_names = chart_names
        self._env_base = dict(parameters)
        self._index = {name: k for k, name in enumerate(chart_names)}

    @property
    def n(self) -> int:
        return len(self.coordinates)

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def __repr__(self):
        return (
            f"ContactSystem(coordinates={self.coordinates!r}, "
            f"hamiltonian={str(self.hamiltonian)!r}, "
            f"parameters={self.parameters!r})"
        )

    def _check_point(self, point: ChartPoint) -> None:
        if point.n != self.n:
            raise ValueError(
                f"state has dimension n={point.n}, system expects n={self.n}"
            )

    def point(self, values: Sequence[float]) -> ChartPoint:
        point = ChartPoint.from_flat(values)
        self._check_point(point)
        return point

    def bindings(self, point: ChartPoint) -> dict:
        """Complete evaluation environment at a state."""
        self._check_point(point)
        env = dict(self._env_base)
        env.update(zip(self.chart_names, point.flat()))
        return env

    def hamiltonian_value(self, point: ChartPoint) -> float:
        return self.hamiltonian._run(self.bindings(point))

    def d_hamiltonian(self, var: str, point: ChartPoint) -> float:
        """Exact partial of H with respect to a chart variable."""
        if var not in self._index:
            raise ValueError(f"{var!r} is not a chart variable")
        env = self.bindings(point)
        env[var] = Dual(env[var], 1.0)
        out = self.hamiltonian._run(env)
        return out.eps if isinstance(out, Dual) else 0.0

    def _value_and_gradient(self, flat) -> tuple:
        """H and its chart-ordered partials at a flat state."""
        env = dict(self._env_base)
        env.update(zip(self.chart_names, flat))
        run = self.hamiltonian._run
        value = run(env)
        grad = []
        for name in self.chart_names:
            seeded = dict(env)
            seeded[name] = Dual(env[name], 1.0)
            out = run(seeded)
            grad.append(out.eps if isinstance(out, Dual) else 0.0)
        return value, grad

    def flow(self, flat: Sequence[float]) -> tuple:
        """Right-hand side of the evolution equations in flat layout.

        Darboux form of the contact Hamiltonian field:
        dq^i = dH/dp_i, dp_i = -(dH/dq^i + p_i dH/ds),
        ds = sum_i p_i dH/dp_i - H.
        """
        n = self.n
        value, grad = self._value_and_gradient(flat)
        h_q = grad[:n]
        h_p = grad[n : 2 * n]
        h_s = grad[2 * n]
        p = flat[n : 2 * n]
        dq = h_p
        dp = [-(h_q[i] + p[i] * h_s) for i in range(n)]
        ds = sum(p[i] * h_p[i] for i in range(n)) - value
        return tuple(dq) + tuple(dp) + (ds,)


def _check_dims(point: ChartPoint, v) -> None:
    if point.n != v.n:
        raise ValueError(
            f"dimension mismatch: state has n={point.n}, argument has n={v.n}"
        )


def contact_form_apply(point: ChartPoint, v: Tangent) -> float:
    """eta(v) = v.ds - sum_i p_i v.dq^i at the given state."""
    _check_dims(point, v)
    return v.ds - sum(pi * dqi for pi, dqi in zip(point.p, v.dq))


def interior_d_eta(point: ChartPoint, v: Tangent) -> Covector:
    """i(v) d eta, with d eta = dq^i wedge dp_i."""
    _check_dims(point, v)
    return Covector(
        cq=tuple(-x for x in v.dp),
        cp=v.dq,
        cs=0.0,
    )


def reeb_field(point: ChartPoint) -> Tangent:
    """The Reeb field: d/ds at every state (i(R)eta = 1, i(R)d eta = 0)."""
    zeros = (0.0,) * point.n
    return Tangent(zeros, zeros, 1.0)


def hamiltonian_vector_field(sys: ContactSystem, point: ChartPoint) -> Tangent:
    """The unique field with i(X)d eta = dH - (dH/ds) eta and i(X)eta = -H."""
    sys._check_point(point)
    return Tangent.from_flat(sys.flow(point.flat()))


def hamilton_equation_residuals(
    sys: ContactSystem, point: ChartPoint, field: Tangent | None = None
) -> tuple:
    """Residuals of both defining equations of the Hamiltonian field.

    Returns (r_eta, r_deta) where r_eta = i(X)eta + H and r_deta is the
    covector i(X)d eta - dH + (dH/ds) eta.  With the built-in field both
    vanish to rounding; passing an explicit `field` lets callers measure
    how far an arbitrary candidate is from satisfying the equations.
    """
    sys._check_point(point)
    if field is None:
        field = hamiltonian_vector_field(sys, point)
    else:
        _check_dims(point, field)
    value, grad = sys._value_and_gradient(point.flat())
    n = sys.n
    h_q = grad[:n]
    h_p = grad[n : 2 * n]
    h_s = grad[2 * n]

    r_eta = contact_form_apply(point, field) + value
    cq = tuple(
        -field.dp[i] - h_q[i] - point.p[i] * h_s for i in range(n)
    )
    cp = tuple(field.dq[i] - h_p[i] for i in range(n))
    # the ds slot cancels identically: 0 - dH/ds + (dH/ds) * 1
    return r_eta, Covector(cq, cp, 0.0)
