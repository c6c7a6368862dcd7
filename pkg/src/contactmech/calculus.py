"""Vector fields, Lie brackets, and Lie derivatives on the chart.

Derivatives of field components come from the expression engine, so
brackets carry no finite-difference noise.  The Hamiltonian field itself
is materialized as component expressions built from derivative nodes of
H; differentiating those components again evaluates nested duals, which
is how second derivatives of H enter bracket computations exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from .contact_core import ChartPoint, ContactSystem, Covector, Tangent
from .expr import Dual, Expression

__all__ = [
    "ScalarField",
    "VectorField",
    "hamiltonian_field",
    "lie_bracket",
    "lie_derivative_contact_form",
    "lie_derivative_scalar",
    "vector_field_value",
    "vf_jacobian",
]

_ZERO = ex.literal(0.0)


def _coerce_component(source, declared) -> Expression:
    if isinstance(source, Expression):
        stray = source.names - declared
        if stray:
            raise ValueError(f"component references undeclared names: {sorted(stray)}")
        return source
    if isinstance(source, (int, float)):
        return ex.literal(source)
    return ex.parse(source, declared)


@dataclass(frozen=True)
class VectorField:
    """Chart vector field: one expression per (d/dq^i, d/dp_i, d/ds) slot."""

    name: str
    components: tuple

    def __post_init__(self):
        components = tuple(self.components)
        if len(components) < 3 or len(components) % 2 == 0:
            raise ValueError(
                f"a chart field needs 2n+1 components, got {len(components)}"
            )
        if not all(isinstance(c, Expression) for c in components):
            raise TypeError("components must be Expressions")
        object.__setattr__(self, "components", components)

    @property
    def n(self) -> int:
        return (len(self.components) - 1) // 2

    @classmethod
    def from_mapping(
        cls,
        sys: ContactSystem,
        name: str,
        components: Mapping[str, object],
    ) -> "VectorField":
        """Build from a sparse {chart name: source} mapping; missing slots are 0."""
        unknown = set(components) - set(sys.chart_names)
        if unknown:
            raise ValueError(
                f"field {name!r} has components for unknown directions: "
                f"{sorted(unknown)}"
            )
        declared = frozenset(sys.chart_names) | frozenset(sys.parameters)
        built = tuple(
            _coerce_component(components[cn], declared) if cn in components else _ZERO
            for cn in sys.chart_names
        )
        return cls(name, built)


@dataclass(frozen=True)
class ScalarField:
    """A named scalar quantity on the chart."""

    name: str
    expression: Expression

    def value(self, sys: ContactSystem, point: ChartPoint) -> float:
        return self.expression._run(sys.bindings(point))


def _field_dim_check(sys: ContactSystem, field: VectorField) -> None:
    if field.n != sys.n:
        raise ValueError(
            f"field {field.name!r} has n={field.n}, system expects n={sys.n}"
        )


def vector_field_value(
    sys: ContactSystem, field: VectorField, point: ChartPoint
) -> Tangent:
    """Evaluate all components at a state."""
    _field_dim_check(sys, field)
    env = sys.bindings(point)
    return Tangent.from_flat(tuple(c._run(env) for c in field.components))


def vf_jacobian(
    sys: ContactSystem, field: VectorField, point: ChartPoint
) -> np.ndarray:
    """Matrix of exact partials: entry (k, j) = d(component k)/d(chart var j)."""
    _field_dim_check(sys, field)
    env = sys.bindings(point)
    dim = sys.dim
    jac = np.empty((dim, dim))
    for j, var in enumerate(sys.chart_names):
        seeded = dict(env)
        seeded[var] = Dual(env[var], 1.0)
        for k, comp in enumerate(field.components):
            out = comp._run(seeded)
            jac[k, j] = out.eps if isinstance(out, Dual) else 0.0
    return jac


def lie_bracket(
    sys: ContactSystem, a: VectorField, b: VectorField, point: ChartPoint
) -> Tangent:
    """[a, b]^k = sum_j (a^j d_j b^k - b^j d_j a^k) at the state."""
    va = np.array(vector_field_value(sys, a, point).flat())
    vb = np.array(vector_field_value(sys, b, point).flat())
    ja = vf_jacobian(sys, a, point)
    jb = vf_jacobian(sys, b, point)
    return Tangent.from_flat((jb @ va - ja @ vb).tolist())


def lie_derivative_scalar(
    sys: ContactSystem, field: VectorField, scalar: ScalarField, point: ChartPoint
) -> float:
    """Directional derivative sum_k Y^k dF/dx^k at the state."""
    _field_dim_check(sys, field)
    env = sys.bindings(point)
    total = 0.0
    for var, comp in zip(sys.chart_names, field.components):
        weight = comp._run(env)
        if weight == 0.0:
            continue
        seeded = dict(env)
        seeded[var] = Dual(env[var], 1.0)
        out = scalar.expression._run(seeded)
        if isinstance(out, Dual):
            total += weight * out.eps
    return total


def _eta_contraction(sys: ContactSystem, field: VectorField) -> Expression:
    """i(Y)eta = Y^s - sum_i p_i Y^{q_i} as an expression."""
    n = sys.n
    total = field.components[2 * n]
    for i, momentum in enumerate(sys.momenta):
        total = ex.sub(total, ex.mul(ex.variable(momentum), field.components[i]))
    return total


def lie_derivative_contact_form(
    sys: ContactSystem, field: VectorField, point: ChartPoint
) -> Covector:
    """L_Y eta via Cartan's formula i(Y)d eta + d(i(Y)eta).

    With g = i(Y)eta: the dq^i slot is -Y^{p_i} + dg/dq^i, the dp_i slot
    is Y^{q_i} + dg/dp_i, and the ds slot is dg/ds.
    """
    _field_dim_check(sys, field)
    g = _eta_contraction(sys, field)
    env = sys.bindings(point)
    n = sys.n

    def d_g(var: str) -> float:
        seeded = dict(env)
        seeded[var] = Dual(env[var], 1.0)
        out = g._run(seeded)
        return out.eps if isinstance(out, Dual) else 0.0

    y_q = [field.components[i]._run(env) for i in range(n)]
    y_p = [field.components[n + i]._run(env) for i in range(n)]
    cq = tuple(-y_p[i] + d_g(sys.coordinates[i]) for i in range(n))
    cp = tuple(y_q[i] + d_g(sys.momenta[i]) for i in range(n))
    return Covector(cq, cp, d_g("s"))


def hamiltonian_field(sys: ContactSystem, name: str = "hamiltonian_field") -> VectorField:
    """The contact Hamiltonian field as component expressions.

    Components are assembled from derivative nodes of H, so they can be
    differentiated again (Jacobians, brackets) with exact second
    derivatives of H.
    """
    h = sys.hamiltonian
    d_s = ex.partial_deriv(h, "s")
    dq = [ex.partial_deriv(h, m) for m in sys.momenta]
    dp = [
        ex.neg(
            ex.add(
                ex.partial_deriv(h, c),
                ex.mul(ex.variable(m), d_s),
            )
        )
        for c, m in zip(sys.coordinates, sys.momenta)
    ]
    ds = ex.literal(0.0)
    for m, comp in zip(sys.momenta, dq):
        ds = ex.add(ds, ex.mul(ex.variable(m), comp))
    ds = ex.sub(ds, h)
    return VectorField(name, tuple(dq) + tuple(dp) + (ds,))
