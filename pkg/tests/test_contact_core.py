"""Chart containers, the contact form, and the evolution equations."""

import pytest

from contactmech import (
    ChartPoint,
    ContactSystem,
    Covector,
    Tangent,
    builtin,
    contact_form_apply,
    hamilton_equation_residuals,
    hamiltonian_vector_field,
    interior_d_eta,
    parse,
    reeb_field,
    sample_states,
)

MODELS = ("gravity_friction", "damped_free_particle", "damped_oscillator")


def test_chart_point_basics():
    pt = ChartPoint(q=(1.0, 2.0), p=(3.0, 4.0), s=5.0)
    assert pt.n == 2
    assert pt.flat() == (1.0, 2.0, 3.0, 4.0, 5.0)
    assert ChartPoint.from_flat([1, 2, 3, 4, 5]) == pt


def test_chart_point_validation():
    with pytest.raises(ValueError):
        ChartPoint(q=(1.0,), p=(1.0, 2.0), s=0.0)
    with pytest.raises(ValueError):
        ChartPoint.from_flat([1.0, 2.0])
    with pytest.raises(ValueError):
        ChartPoint.from_flat([])


def test_tangent_and_covector_norms():
    v = Tangent(dq=(1.0,), dp=(-3.0,), ds=2.0)
    assert v.max_norm() == 3.0
    w = Covector(cq=(0.0,), cp=(0.5,), cs=-4.0)
    assert w.max_norm() == 4.0
    assert Tangent.from_flat(v.flat()) == v


def test_contact_form_and_interior_product(base_point):
    v = Tangent(dq=(1.0, 1.0), dp=(-0.5, -10.3), ds=1.0)
    # eta(v) = ds - sum p_i dq^i with p = (1, 1)
    assert contact_form_apply(base_point, v) == -1.0
    w = interior_d_eta(base_point, v)
    assert w.cq == (0.5, 10.3)
    assert w.cp == (1.0, 1.0)
    assert w.cs == 0.0


def test_reeb_field_is_normalized(base_point):
    r = reeb_field(base_point)
    assert r.dq == (0.0, 0.0) and r.dp == (0.0, 0.0) and r.ds == 1.0
    assert contact_form_apply(base_point, r) == 1.0
    assert interior_d_eta(base_point, r).max_norm() == 0.0


def test_system_construction(gravity):
    assert gravity.coordinates == ("x", "y")
    assert gravity.momenta == ("p_x", "p_y")
    assert gravity.chart_names == ("x", "y", "p_x", "p_y", "s")
    assert gravity.n == 2 and gravity.dim == 5
    assert gravity.parameters == {"m": 1.0, "g": 9.8, "gamma": 0.5}


@pytest.mark.parametrize(
    "coordinates, hamiltonian, parameters",
    [
        ((), "0", None),                        # no coordinates
        (("s",), "p_s", None),                  # action name reused
        (("x", "p_x"), "x", None),              # momentum collision
        (("sin",), "p_sin", None),              # function shadowed
        (("x",), "p_x", {"s": 1.0}),            # parameter named s
        (("x",), "p_x", {"p_x": 1.0}),          # parameter shadows chart
        (("x",), "p_x", {"k": float("inf")}),   # non-finite parameter
        (("2x",), "0", None),                   # invalid identifier
    ],
)
def test_system_rejects_bad_input(coordinates, hamiltonian, parameters):
    with pytest.raises(ValueError):
        ContactSystem(coordinates, hamiltonian, parameters)


def test_system_reports_undeclared_hamiltonian_names():
    from contactmech import UnknownNameError

    with pytest.raises(UnknownNameError):
        ContactSystem(("x",), "p_x + foo")


def test_system_accepts_parsed_hamiltonian():
    expr = parse("p_q^2/(2*m)", ("p_q", "m"))
    sys = ContactSystem(("q",), expr, {"m": 2.0})
    assert sys.hamiltonian_value(ChartPoint((0.0,), (2.0,), 0.0)) == 1.0


def test_system_rejects_expression_with_stray_names():
    expr = parse("p_q + foo", ("p_q", "foo"))
    with pytest.raises(ValueError):
        ContactSystem(("q",), expr)


def test_bindings_include_parameters(gravity, base_point):
    env = gravity.bindings(base_point)
    assert env["p_x"] == 1.0 and env["gamma"] == 0.5 and env["s"] == 0.0
    assert gravity.hamiltonian_value(base_point) == 1.0


def test_point_dimension_checks(gravity):
    with pytest.raises(ValueError):
        gravity.point((0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        gravity.hamiltonian_value(ChartPoint((0.0,), (1.0,), 0.0))


def test_partial_of_hamiltonian(gravity, base_point):
    assert gravity.d_hamiltonian("s", base_point) == 0.5
    assert gravity.d_hamiltonian("y", base_point) == 9.8
    with pytest.raises(ValueError):
        gravity.d_hamiltonian("m", base_point)  # parameters are not directions


def test_hamiltonian_field_at_base_state(gravity, base_point):
    v = hamiltonian_vector_field(gravity, base_point)
    assert v.dq == (1.0, 1.0)
    assert v.dp == (-0.5, -10.3)
    assert v.ds == 1.0
    # eta(X_H) = -H
    assert contact_form_apply(base_point, v) == -gravity.hamiltonian_value(base_point)


def test_hamiltonian_field_for_pure_action_hamiltonian():
    sys = ContactSystem(("q",), "s")
    v = hamiltonian_vector_field(sys, ChartPoint((0.0,), (1.0,), 2.0))
    assert v.flat() == (0.0, -1.0, -2.0)


def test_hamiltonian_field_vanishes_for_zero_hamiltonian():
    sys = ContactSystem(("q",), "0")
    v = hamiltonian_vector_field(sys, ChartPoint((3.0,), (4.0,), 5.0))
    assert v.max_norm() == 0.0


def test_residuals_vanish_at_base_state(gravity, base_point):
    r_eta, cov = hamilton_equation_residuals(gravity, base_point)
    assert r_eta == 0.0
    assert cov.max_norm() == 0.0
    assert cov.cs == 0.0


@pytest.mark.parametrize("name", MODELS)
def test_residuals_vanish_on_random_states(name):
    sys = builtin(name)
    worst = 0.0
    for point in sample_states(sys, count=100, seed=42):
        r_eta, cov = hamilton_equation_residuals(sys, point)
        worst = max(worst, abs(r_eta), cov.max_norm())
    assert worst <= 1e-12


def test_residuals_flag_a_corrupted_field(gravity, base_point):
    v = hamiltonian_vector_field(gravity, base_point)
    bad = Tangent(dq=(v.dq[0] + 1.0,) + v.dq[1:], dp=v.dp, ds=v.ds)
    r_eta, cov = hamilton_equation_residuals(gravity, base_point, field=bad)
    assert cov.cp[0] == 1.0
    assert cov.cp[1] == 0.0
    # eta(bad) - eta(X_H) = -p_x * 1
    assert r_eta == -1.0


def test_dissipation_rate_identity(gravity, gravity_states):
    # d/dt H along the flow equals -(dH/ds) H.
    worst = 0.0
    for point in gravity_states:
        flow = gravity.flow(point.flat())
        rate = sum(
            flow[k] * gravity.d_hamiltonian(var, point)
            for k, var in enumerate(gravity.chart_names)
        )
        expected = -gravity.d_hamiltonian("s", point) * gravity.hamiltonian_value(
            point
        )
        worst = max(worst, abs(rate - expected))
    assert worst <= 1e-10


def test_flow_matches_field(gravity, gravity_states):
    for point in gravity_states[:10]:
        assert gravity.flow(point.flat()) == hamiltonian_vector_field(
            gravity, point
        ).flat()


def test_repr_mentions_the_hamiltonian(gravity):
    text = repr(gravity)
    assert "gamma * s" in text and "coordinates=('x', 'y')" in text


def test_dimension_mismatch_in_form_helpers(base_point):
    v = Tangent(dq=(1.0,), dp=(1.0,), ds=0.0)
    with pytest.raises(ValueError):
        contact_form_apply(base_point, v)
    with pytest.raises(ValueError):
        interior_d_eta(base_point, v)
