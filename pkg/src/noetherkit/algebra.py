"""Poisson brackets, conservation verdicts and the central extension.

Convention: {q_i, p_j} = +delta_ij throughout, and the structure constants
C are oriented exactly as :func:`noetherkit.noether.structure_constants`
returns them (the commutator of the generator vector fields in (r, s)
order).  With that orientation the charge algebra closes as

    {Q_r, Q_s} = -C^u_rs Q_u + L_rs,

so the extension matrix is extracted directly as {Q_r, Q_s} + C^u_rs Q_u
and independently from the surface terms as

    L_rs = dLambda_s/dq . delta_r q - dLambda_r/dq . delta_s q
           - C^u_rs Lambda_u + delta_r t dLambda_s/dt - delta_s t dLambda_r/dt.

The two routes must agree entrywise, and every entry must be free of
coordinates, momenta and time; both facts are enforced on every accepted
system.  The time-derivative terms in the second route vanish identically
whenever the surface terms carry no explicit time dependence.
"""

from __future__ import annotations

from dataclasses import dataclass

from .legendre import PhaseSystem, legendre_transform
from .noether import (ChargeSet, StructureConstants, derive_charges,
                      structure_constants)
from .symexpr import Expr, SymbolTable, to_text
from .sysdsl import SystemSpec


class ConservationError(Exception):
    """A derived charge fails its conservation identity (internal bug)."""


class CrossCheckError(Exception):
    """The two central-extension computations disagree (internal bug)."""


class NonConstantExtensionError(Exception):
    """A central-extension entry depends on coordinates, momenta or time."""

    def __init__(self, r: int, s: int, entry: Expr):
        super().__init__(
            f"extension entry L[{r}][{s}] = {to_text(entry)} is not constant")
        self.entry = entry


def poisson(a: Expr, b: Expr, table: SymbolTable | None = None) -> Expr:
    """Canonical Poisson bracket of two phase-space expressions."""
    table = table or a.table
    out = table.zero()
    for q, p in zip(table.coords, table.momenta):
        out = out + a.diff(q) * b.diff(p) - a.diff(p) * b.diff(q)
    return out


def check_conservation(q_r: Expr, h: Expr) -> Expr:
    """Residual {Q, H} + dQ/dt; the charge is conserved iff it is zero."""
    return poisson(q_r, h) + q_r.diff(q_r.table.time)


def central_extension_direct(charges: ChargeSet,
                             c: StructureConstants) -> tuple[tuple[Expr, ...], ...]:
    """Extension matrix read off the charge brackets themselves."""
    table = charges.spec.table
    w = len(charges.charges)
    rows = []
    for r in range(w):
        row = []
        for s in range(w):
            entry = poisson(charges.charges[r], charges.charges[s], table)
            for u in range(w):
                entry = entry + charges.charges[u] * c.c[r][s][u]
            row.append(entry)
        rows.append(tuple(row))
    return tuple(rows)


def central_extension_formula(charges: ChargeSet, c: StructureConstants,
                              spec: SystemSpec) -> tuple[tuple[Expr, ...], ...]:
    """Extension matrix computed from the surface terms and variations only,
    with no reference to the charges."""
    table = spec.table
    w = len(spec.generators)
    rows = []
    for r in range(w):
        gr = spec.generators[r]
        row = []
        for s in range(w):
            gs = spec.generators[s]
            entry = table.zero()
            for j, q in enumerate(table.coords):
                entry = entry + charges.surface_terms[s].diff(q) * gr.delta_q[j]
                entry = entry - charges.surface_terms[r].diff(q) * gs.delta_q[j]
            for u in range(w):
                entry = entry - charges.surface_terms[u] * c.c[r][s][u]
            entry = entry + gr.delta_t * charges.surface_terms[s].diff(table.time)
            entry = entry - gs.delta_t * charges.surface_terms[r].diff(table.time)
            row.append(entry)
        rows.append(tuple(row))
    return tuple(rows)


def cocycle_residual(c: StructureConstants,
                     l_matrix: tuple[tuple[Expr, ...], ...],
                     r: int, s: int, t: int) -> Expr:
    """Cyclic sum C^u_rs L_ut + C^u_st L_ur + C^u_tr L_us, which vanishes
    whenever the extended algebra satisfies Jacobi."""
    table = l_matrix[0][0].table
    out = table.zero()
    w = c.dim
    for u in range(w):
        out = out + l_matrix[u][t] * c.c[r][s][u]
        out = out + l_matrix[u][r] * c.c[s][t][u]
        out = out + l_matrix[u][s] * c.c[t][r][u]
    return out


def _is_parameter_constant(e: Expr, table: SymbolTable) -> bool:
    banned = set(table.coords) | set(table.velocities) | set(table.momenta) \
        | set(table.accels) | {table.time}
    return not (e.free_symbols() & banned)


@dataclass(frozen=True)
class AlgebraReport:
    """Full symbolic verdict for one system."""

    spec: SystemSpec
    phase: PhaseSystem
    charges: ChargeSet
    structure: StructureConstants
    conservation: tuple[Expr, ...]
    l_direct: tuple[tuple[Expr, ...], ...]
    l_formula: tuple[tuple[Expr, ...], ...]
    consistent: bool
    central: bool


def analyze(spec: SystemSpec) -> AlgebraReport:
    """Run the whole symbolic pipeline on a parsed system.

    Raises the parser/regularity/symmetry errors of the upstream modules on
    rejected input, and ConservationError / CrossCheckError /
    NonConstantExtensionError when an accepted system violates an identity
    the derivation guarantees (which would indicate a bug, not bad input).
    """
    phase = legendre_transform(spec)
    charges = derive_charges(spec, phase)
    structure = structure_constants(spec)

    residuals = tuple(check_conservation(q, phase.hamiltonian)
                      for q in charges.charges)
    for r, res in enumerate(residuals):
        if not res.is_zero():
            raise ConservationError(
                f"charge of generator {spec.generators[r].name!r} is not "
                f"conserved; residual {to_text(res)}")

    l_direct = central_extension_direct(charges, structure)
    l_formula = central_extension_formula(charges, structure, spec)

    w = len(spec.generators)
    table = spec.table
    for r in range(w):
        for s in range(w):
            if not (l_direct[r][s] - l_formula[r][s]).is_zero():
                raise CrossCheckError(
                    f"extension entry [{r}][{s}] differs between the bracket "
                    f"route ({to_text(l_direct[r][s])}) and the surface-term "
                    f"route ({to_text(l_formula[r][s])})")
            if not (l_direct[r][s] + l_direct[s][r]).is_zero():
                raise CrossCheckError("extension matrix is not antisymmetric")
            if not _is_parameter_constant(l_direct[r][s], table):
                raise NonConstantExtensionError(r, s, l_direct[r][s])

    return AlgebraReport(spec, phase, charges, structure, residuals,
                         l_direct, l_formula, consistent=True, central=True)
