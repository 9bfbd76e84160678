"""Noether charges, symmetry algebras and their central extensions for
regular Lagrangian systems, derived symbolically and verified numerically."""

from importlib.resources import files

from .symexpr import (DegreeReport, DomainError, Expr, ExprError, SymbolTable,
                      UnknownSymbolError, diff, eval_numeric, is_polynomial_in,
                      normalize, substitute, to_text)
from .sysdsl import GeneratorDecl, ParseError, SystemSpec, parse, render
from .legendre import (PhaseSystem, RegularityError, UnsupportedLagrangianError,
                       hessian, legendre_transform, to_phase)
from .noether import (ChargeSet, GeneratorAlgebraError, NotASymmetryError,
                      StructureConstants, derive_charges, find_surface_term,
                      noether_charge, noether_identity_residual,
                      structure_constants, total_time_derivative)
from .algebra import (AlgebraReport, ConservationError, CrossCheckError,
                      NonConstantExtensionError, analyze,
                      central_extension_direct, central_extension_formula,
                      check_conservation, cocycle_residual, poisson)
from .flow import (CoboundaryResult, IntegrationError, NumericConfig,
                   PhaseState, Trajectory, canonical_flow, charge_drift,
                   coboundary_check, coboundary_squared_residual,
                   compile_phase_function, flow_commutator_defect,
                   integrate_hamilton, lagrangian_transport_residual,
                   lambda_T_f, omega2, transform)

__version__ = "0.1.0"


def fixture_path(name: str):
    """Filesystem path of one of the bundled example system files."""
    if not name.endswith(".sys"):
        name += ".sys"
    return files("noetherkit").joinpath("fixtures", name)
