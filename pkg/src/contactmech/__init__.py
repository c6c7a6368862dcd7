"""Contact Hamiltonian mechanics in Darboux coordinates.

Build dissipative mechanical systems from a Hamiltonian on extended
phase space, integrate their flow, and check which phase-space
quantities the dynamics conserves or dissipates and which vector fields
generate symmetries.
"""

from .expr import (
    DomainError,
    Expression,
    ExpressionError,
    MissingBindingError,
    ParseError,
    UnknownNameError,
    finite_difference,
    parse,
)
from .contact_core import (
    ChartPoint,
    ContactSystem,
    Covector,
    Tangent,
    contact_form_apply,
    hamilton_equation_residuals,
    hamiltonian_vector_field,
    interior_d_eta,
    reeb_field,
)
from .calculus import (
    ScalarField,
    VectorField,
    hamiltonian_field,
    lie_bracket,
    lie_derivative_contact_form,
    lie_derivative_scalar,
    vector_field_value,
    vf_jacobian,
)
from .integrate import (
    DivergenceError,
    IntegrationError,
    StepUnderflowError,
    Trajectory,
    integrate_adaptive,
    integrate_fixed,
    read_trajectory_csv,
    rk4_step,
    rkf45_step,
    write_trajectory_csv,
)
from .analysis import (
    CheckReport,
    PointMap,
    QuantityReport,
    characterization_residual,
    check_contact_symmetry_map,
    check_quantity,
    classify_symmetry,
    conserved_from_symmetry,
    noether_quantity,
    product_quantity,
    pullback_quantity,
    quotient_quantity,
    reeb_lift,
    sample_states,
)
from .models import ModelError, analytic_reference, builtin, list_models
from .specdoc import SpecDocument, SpecError, load_document

__version__ = "0.1.0"

__all__ = [
    "ChartPoint",
    "CheckReport",
    "ContactSystem",
    "Covector",
    "DivergenceError",
    "DomainError",
    "Expression",
    "ExpressionError",
    "IntegrationError",
    "MissingBindingError",
    "ModelError",
    "ParseError",
    "PointMap",
    "QuantityReport",
    "ScalarField",
    "SpecDocument",
    "SpecError",
    "StepUnderflowError",
    "Tangent",
    "Trajectory",
    "UnknownNameError",
    "VectorField",
    "analytic_reference",
    "builtin",
    "characterization_residual",
    "check_contact_symmetry_map",
    "check_quantity",
    "classify_symmetry",
    "conserved_from_symmetry",
    "contact_form_apply",
    "finite_difference",
    "hamilton_equation_residuals",
    "hamiltonian_field",
    "hamiltonian_vector_field",
    "integrate_adaptive",
    "integrate_fixed",
    "interior_d_eta",
    "lie_bracket",
    "lie_derivative_contact_form",
    "lie_derivative_scalar",
    "list_models",
    "load_document",
    "noether_quantity",
    "parse",
    "product_quantity",
    "pullback_quantity",
    "quotient_quantity",
    "read_trajectory_csv",
    "reeb_field",
    "reeb_lift",
    "rk4_step",
    "rkf45_step",
    "sample_states",
    "vector_field_value",
    "vf_jacobian",
    "write_trajectory_csv",
]
