"""Reflection groups, Chevalley invariants and factorization of proper maps from pseudoellipsoids."""
from .chevalley import InvariantBasis, basic_invariants, chevalley_map, reynolds, verify_chevalley
from .factorize import FactorizationReport, solve_psi, target_map, verify_factorization
from .polyalg import PolyMap, Polynomial, compose, evaluate, jacobian_det, poly_equal_random, variables
from .propermap import (
    Pseudoellipsoid,
    SolverConfig,
    boundary_identity_check,
    multiplicity_estimate,
    orbit_check,
    phi_map,
    preimages,
    singular_locus,
)
from .unigroup import (
    FiniteUnitaryGroup,
    closure,
    coset_decomposition,
    is_reflection,
    orbit,
    reflection_subgroup,
)

__version__ = "0.1.0"
