"""Takiff algebras of sl_{n+1}, their invariants, Kostant sections and Toda lattices."""

from .algebra import (
    AlgebraError,
    NilpotentGroupElement,
    TakiffElement,
    bracket,
    chevalley_basis_sl,
    group_apply,
    inner_product,
    principal_f,
    project_bbar,
    q_form,
    star,
)
from .cartan import CartanMatrix, RootSystem, cartan_matrix, positive_roots, validate_cartan
from .dynamics import (
    PositivityLoss,
    TodaState,
    Trajectory,
    canonical_rhs,
    hamiltonian,
    integrate,
    lax_rhs,
    omega_block,
    quartic_identity_residual,
    symplectic_rhs,
)
from .invariants import (
    InvariantSpec,
    evaluate_invariant,
    generating_specs,
    gradient_invariant,
    poisson_bracket_at,
    restricted_invariant,
    restricted_poisson_bracket,
)
from .section import SectionBasis, graded_complement, orbit_invariance_check, reduce_to_section
from .series import (
    SeriesSolution,
    bound_check,
    global_condition,
    ode_rhs,
    series_coefficients,
    series_eval,
)

__version__ = "0.1.0"
