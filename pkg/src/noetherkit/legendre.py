"""Regularity certification and the exact Legendre transform.

Supported Lagrangians are polynomial of degree at most two in the
velocities with a velocity-independent Hessian, so the momenta are an
affine function of the velocities and the inverse map is an exact linear
solve (Cramer's rule over the expression ring).  The Hessian determinant
must be an invertible element of that ring, i.e. a nonzero rational times
a parameter monomial; a parameter-dependent determinant is accepted as
nonzero only when all its parameters carry a positivity assumption.
"""

from __future__ import annotations

from dataclasses import dataclass

from .symexpr import Expr
from .sysdsl import SystemSpec


class RegularityError(Exception):
    """The velocity Hessian is singular or cannot be certified nonzero."""


class UnsupportedLagrangianError(Exception):
    """The Lagrangian is outside the exactly-solvable class."""


@dataclass(frozen=True)
class PhaseSystem:
    """Hamiltonian form of a regular system.

    ``momenta[i]`` is the defining expression p_i(q, dq, t);
    ``inverse_velocity_map[i]`` is dq_i(q, p, t); ``hamiltonian`` is
    H(q, p, t); ``lagrangian_phase`` is the Lagrangian rewritten in
    canonical variables.  ``hessian``/``hessian_det`` certify regularity.
    """

    spec: SystemSpec
    momenta: tuple[Expr, ...]
    inverse_velocity_map: tuple[Expr, ...]
    hamiltonian: Expr
    hessian: tuple[tuple[Expr, ...], ...]
    hessian_det: Expr
    lagrangian_phase: Expr


def hessian(spec: SystemSpec) -> tuple[tuple[tuple[Expr, ...], ...], Expr]:
    """Velocity Hessian of the Lagrangian and its determinant."""
    vels = spec.table.velocities
    rows = []
    for vi in vels:
        di = spec.lagrangian.diff(vi)
        rows.append(tuple(di.diff(vj) for vj in vels))
    mat = tuple(rows)
    return mat, _det(mat, spec.table)


def _det(mat, table) -> Expr:
    n = len(mat)
    if n == 1:
        return mat[0][0]
    total = table.zero()
    for j in range(n):
        minor = tuple(row[:j] + row[j + 1:] for row in mat[1:])
        cof = mat[0][j] * _det(minor, table)
        total = total + (cof if j % 2 == 0 else -cof)
    return total


def _adjugate(mat, table):
    n = len(mat)
    if n == 1:
        return ((table.one(),),)
    adj = [[table.zero()] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = tuple(tuple(mat[r][c] for c in range(n) if c != j)
                          for r in range(n) if r != i)
            cof = _det(minor, table)
            adj[j][i] = cof if (i + j) % 2 == 0 else -cof
    return tuple(tuple(row) for row in adj)


def _certify_invertible(det: Expr, table) -> None:
    if det.is_zero():
        raise RegularityError("velocity Hessian is singular (determinant is 0)")
    if len(det.terms) != 1:
        raise UnsupportedLagrangianError(
            f"Hessian determinant {det} is not a parameter monomial; "
            "the inverse velocity map is not expressible in this class")
    free = det.free_symbols()
    non_param = free - set(table.params)
    if non_param:
        raise UnsupportedLagrangianError(
            f"Hessian determinant {det} depends on {sorted(non_param)}; "
            "only parameter-monomial determinants are invertible here")
    unsigned = free - table.positive
    if unsigned:
        raise RegularityError(
            f"Hessian determinant {det} cannot be certified nonzero: "
            f"declare {sorted(unsigned)} > 0")


def legendre_transform(spec: SystemSpec) -> PhaseSystem:
    """Momenta, inverse velocity map and Hamiltonian, all exact."""
    table = spec.table
    vels = table.velocities
    for v in vels:
        if spec.lagrangian.min_exponent_in(v) < 0:
            raise UnsupportedLagrangianError(
                f"Lagrangian has a negative power of {v}")
    if spec.lagrangian.degree_over(vels) > 2:
        raise UnsupportedLagrangianError(
            "Lagrangian has velocity degree > 2; the momentum map is nonlinear")

    w, det = hessian(spec)
    for row in w:
        for entry in row:
            if entry.free_symbols() & set(vels):
                raise UnsupportedLagrangianError(
                    "velocity Hessian depends on the velocities")
    _certify_invertible(det, table)

    momenta = tuple(spec.lagrangian.diff(v) for v in vels)
    at_rest = {v: 0 for v in vels}
    affine = tuple(pi.subs(at_rest) for pi in momenta)

    adj = _adjugate(w, table)
    p_syms = [table.sym(p) for p in table.momenta]
    inverse = []
    for i in range(len(vels)):
        acc = table.zero()
        for j in range(len(vels)):
            acc = acc + adj[i][j] * (p_syms[j] - affine[j])
        inverse.append(acc / det)
    inverse_map = tuple(inverse)

    vel_bindings = dict(zip(vels, inverse_map))
    h = table.zero()
    for pj, dqj in zip(p_syms, inverse_map):
        h = h + pj * dqj
    h = h - spec.lagrangian.subs(vel_bindings)

    # Construction-time cross checks: Hamilton's first equation and the
    # momentum round trip must hold exactly.
    for i, (pname, dq_expr) in enumerate(zip(table.momenta, inverse_map)):
        if not (h.diff(pname) - dq_expr).is_zero():
            raise AssertionError("dH/dp does not reproduce the inverse velocity map")
        if not (momenta[i].subs(vel_bindings) - p_syms[i]).is_zero():
            raise AssertionError("momentum definition does not round-trip")

    lag_phase = spec.lagrangian.subs(vel_bindings)
    return PhaseSystem(spec, momenta, inverse_map, h, w, det, lag_phase)


def to_phase(e: Expr, ps: PhaseSystem) -> Expr:
    """Rewrite a configuration-space expression in canonical variables."""
    table = ps.spec.table
    free = e.free_symbols()
    if free & set(table.momenta):
        raise ValueError("expression already contains momentum symbols")
    if free & set(table.accels):
        raise ValueError("expression contains acceleration symbols")
    return e.subs(dict(zip(table.velocities, ps.inverse_velocity_map)))
