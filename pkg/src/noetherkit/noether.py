"""Surface terms, Noether charges and the generator algebra.

For each declared generator the first-order variation of the Lagrangian is
computed exactly.  A transformation is accepted as a symmetry iff that
variation is the total time derivative of some function Lambda(q, t); the
function is reconstructed in closed form by a straight-line path integral
from the origin, or verified when declared in the input.  Accepted
generators yield conserved charges in both velocity and momentum variables,
and the pairwise commutators of the generator vector fields yield the
rational structure constants of the symmetry algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .legendre import PhaseSystem, to_phase
from .symexpr import DomainError, Expr, SymbolTable, from_terms, to_text
from .sysdsl import SystemSpec


class NotASymmetryError(Exception):
    """The declared transformation does not leave the action invariant."""

    def __init__(self, generator: str, residual: Expr):
        super().__init__(
            f"generator {generator!r} is not a symmetry: the Lagrangian "
            f"variation differs from a total time derivative by {to_text(residual)}")
        self.generator = generator
        self.residual = residual


class GeneratorAlgebraError(Exception):
    """The generator set does not close into a Lie algebra over Q."""

    def __init__(self, message: str, pair: tuple[int, int] | None = None,
                 residual: tuple[Expr, ...] | None = None):
        super().__init__(message)
        self.pair = pair
        self.residual = residual


def total_time_derivative(e: Expr, table: SymbolTable,
                          with_accel: bool = False) -> Expr:
    """Total d/dt of a configuration-space expression.

    Velocity dependence introduces acceleration symbols, which is an error
    unless ``with_accel`` is set.  Momentum dependence is always an error.
    """
    free = e.free_symbols()
    if free & set(table.momenta):
        raise DomainError("total time derivative of a momentum-dependent expression")
    out = e.diff(table.time)
    for q, dq in zip(table.coords, table.velocities):
        out = out + table.sym(dq) * e.diff(q)
    vel_dep = free & set(table.velocities)
    if vel_dep:
        if not with_accel:
            raise DomainError(
                f"total time derivative of {to_text(e)} would introduce accelerations")
        for dq, ddq in zip(table.velocities, table.accels):
            out = out + table.sym(ddq) * e.diff(dq)
    return out


def lagrangian_variation(spec: SystemSpec, r: int) -> Expr:
    """First-order change of the Lagrangian under generator ``r``.

    Includes the Jacobian of the time reparametrization, so the result is
    the density whose vanishing (up to a total derivative) defines
    quasi-invariance of the action.
    """
    table = spec.table
    gen = spec.generators[r]
    lag = spec.lagrangian
    dt_rate = gen.delta_t.diff(table.time)
    out = lag * dt_rate + lag.diff(table.time) * gen.delta_t
    for j, (q, dq) in enumerate(zip(table.coords, table.velocities)):
        dq_sym = table.sym(dq)
        delta_vel = total_time_derivative(gen.delta_q[j], table) - dq_sym * dt_rate
        out = out + lag.diff(q) * gen.delta_q[j] + lag.diff(dq) * delta_vel
    return out


def _integrate_unit_segment(e: Expr, table: SymbolTable) -> Expr:
    """Exact value of the line integral q_j -> s*q_j, s from 0 to 1.

    Each monomial of ``e`` of total coordinate degree k picks up 1/k.
    Requires strictly positive coordinate degree throughout.
    """
    idx = [table.index(q) for q in table.coords]
    pairs = []
    for mon, c in e.terms:
        k = sum(mon[i] for i in idx)
        if k <= 0:
            raise DomainError(
                f"surface-term reconstruction needs positive coordinate degree, "
                f"got {k} in {to_text(e)}")
        pairs.append((mon, c / k))
    return from_terms(table, pairs)


def _integrate_time_from_zero(e: Expr, table: SymbolTable) -> Expr:
    """Antiderivative in t vanishing at t = 0, for polynomial t dependence."""
    it = table.index(table.time)
    pairs = []
    for mon, c in e.terms:
        m = mon[it]
        if m < 0:
            raise DomainError("surface term would need a logarithm of t")
        new = tuple(x + 1 if i == it else x for i, x in enumerate(mon))
        pairs.append((new, c / (m + 1)))
    return from_terms(table, pairs)


def find_surface_term(spec: SystemSpec, r: int) -> Expr:
    """Surface term Lambda_r(q, t) with d(Lambda_r)/dt equal to the
    Lagrangian variation, or raise :class:`NotASymmetryError`.

    If the generator declares a lambda it is verified; otherwise the unique
    candidate with Lambda(0, 0) = 0 is reconstructed by integrating the
    velocity-linear coefficients along the straight line from the origin
    and the velocity-free remainder in time.  The reconstruction is exact
    for polynomial data; the final check is an exact zero test either way.
    """
    table = spec.table
    gen = spec.generators[r]
    variation = lagrangian_variation(spec, r)

    if gen.surface_term is not None:
        lam = gen.surface_term
    else:
        at_rest = {v: 0 for v in table.velocities}
        b_part = variation.subs(at_rest)
        lam = table.zero()
        linear = table.zero()
        for q, dq in zip(table.coords, table.velocities):
            linear = linear + table.sym(q) * variation.diff(dq).subs(at_rest)
        if not linear.is_zero():
            lam = lam + _integrate_unit_segment(linear, table)
        b_origin = b_part.subs({q: 0 for q in table.coords})
        if not b_origin.is_zero():
            lam = lam + _integrate_time_from_zero(b_origin, table)

    residual = variation - total_time_derivative(lam, table)
    if not residual.is_zero():
        raise NotASymmetryError(gen.name, residual)
    return lam


def euler_lagrange(spec: SystemSpec) -> tuple[Expr, ...]:
    """Euler-Lagrange expressions dL/dq_j - d/dt(dL/ddq_j), acceleration
    symbols included."""
    table = spec.table
    out = []
    for q, dq in zip(table.coords, table.velocities):
        out.append(spec.lagrangian.diff(q)
                   - total_time_derivative(spec.lagrangian.diff(dq), table,
                                           with_accel=True))
    return tuple(out)


def charge_config(spec: SystemSpec, r: int, lam: Expr) -> Expr:
    """Conserved charge in (q, dq, t): p.delta_q - (p.dq - L).delta_t - Lambda
    with p meaning dL/ddq."""
    table = spec.table
    gen = spec.generators[r]
    lag = spec.lagrangian
    energy = table.zero()
    out = table.zero()
    for j, dq in enumerate(table.velocities):
        grad = lag.diff(dq)
        out = out + grad * gen.delta_q[j]
        energy = energy + grad * table.sym(dq)
    out = out - (energy - lag) * gen.delta_t - lam
    return out


def noether_charge(spec: SystemSpec, ps: PhaseSystem, r: int,
                   lam: Expr | None = None) -> tuple[Expr, Expr]:
    """The charge of generator ``r`` in configuration and in phase space."""
    if lam is None:
        lam = find_surface_term(spec, r)
    table = spec.table
    gen = spec.generators[r]
    q_config = charge_config(spec, r, lam)
    q_phase = to_phase(q_config, ps)
    direct = table.zero()
    for j, pname in enumerate(table.momenta):
        direct = direct + table.sym(pname) * gen.delta_q[j]
    direct = direct - ps.hamiltonian * gen.delta_t - lam
    if not (q_phase - direct).is_zero():
        raise AssertionError("phase-space charge disagrees with its direct form")
    return q_config, q_phase


def noether_identity_residual(spec: SystemSpec, r: int,
                              lam: Expr | None = None) -> Expr:
    """Off-shell identity satisfied by any candidate surface term:

        deltaL - dLambda/dt - d/dt(Qtilde) - sum_j (dq_j - v_j dt) EL_j = 0

    as a polynomial in coordinates, velocities and accelerations.  Returns
    the left-hand side, which must normalize to zero for every generator
    and every Lambda, symmetry or not.
    """
    table = spec.table
    gen = spec.generators[r]
    if lam is None:
        lam = table.zero()
    variation = lagrangian_variation(spec, r)
    q_tilde = charge_config(spec, r, lam)
    residual = (variation
                - total_time_derivative(lam, table)
                - total_time_derivative(q_tilde, table, with_accel=True))
    for j, (el, dq) in enumerate(zip(euler_lagrange(spec), table.velocities)):
        residual = residual - (gen.delta_q[j] - table.sym(dq) * gen.delta_t) * el
    return residual


@dataclass(frozen=True)
class ChargeSet:
    """All per-generator derived quantities of one accepted system."""

    spec: SystemSpec
    phase: PhaseSystem
    surface_terms: tuple[Expr, ...]
    charges_config: tuple[Expr, ...]
    charges: tuple[Expr, ...]
    delta_c: tuple[tuple[Expr, ...], ...]


def derive_charges(spec: SystemSpec, ps: PhaseSystem) -> ChargeSet:
    """Run the per-generator derivations for the whole system."""
    table = spec.table
    lams, configs, phases, delta_cs = [], [], [], []
    dh_dp = tuple(ps.hamiltonian.diff(p) for p in table.momenta)
    for r, gen in enumerate(spec.generators):
        lam = find_surface_term(spec, r)
        qc, qp = noether_charge(spec, ps, r, lam)
        dc = tuple(gen.delta_q[i] - dh_dp[i] * gen.delta_t
                   for i in range(len(table.coords)))
        for i, pname in enumerate(table.momenta):
            if not (qp.diff(pname) - dc[i]).is_zero():
                raise AssertionError(
                    "canonical variation disagrees with the charge gradient")
        lams.append(lam)
        configs.append(qc)
        phases.append(qp)
        delta_cs.append(dc)
    return ChargeSet(spec, ps, tuple(lams), tuple(configs), tuple(phases),
                     tuple(delta_cs))


@dataclass(frozen=True)
class StructureConstants:
    """Rational structure constants C[r][s][u] of the generator algebra,
    antisymmetric in (r, s) and satisfying the Jacobi identity exactly."""

    c: tuple[tuple[tuple[Fraction, ...], ...], ...]
    closed: bool

    @property
    def dim(self) -> int:
        return len(self.c)

    def is_abelian(self) -> bool:
        return all(x == 0 for plane in self.c for row in plane for x in row)

    def jacobi_residual(self, r: int, s: int, t: int, v: int) -> Fraction:
        total = Fraction(0)
        for u in range(self.dim):
            total += (self.c[r][s][u] * self.c[u][t][v]
                      + self.c[s][t][u] * self.c[u][r][v]
                      + self.c[t][r][u] * self.c[u][s][v])
        return total


def _component_vectors(spec: SystemSpec):
    """Stacked (coordinate..., time) component expressions per generator."""
    out = []
    for gen in spec.generators:
        out.append(tuple(gen.delta_q) + (gen.delta_t,))
    return out


def _bracket_components(spec: SystemSpec, r: int, s: int) -> tuple[Expr, ...]:
    """Commutator of generators r and s, in the same stacked layout."""
    table = spec.table
    gr, gs = spec.generators[r], spec.generators[s]
    comps = []
    for i in range(len(table.coords)):
        acc = table.zero()
        for j, q in enumerate(table.coords):
            acc = acc + gr.delta_q[j] * gs.delta_q[i].diff(q)
            acc = acc - gs.delta_q[j] * gr.delta_q[i].diff(q)
        acc = acc + gr.delta_t * gs.delta_q[i].diff(table.time)
        acc = acc - gs.delta_t * gr.delta_q[i].diff(table.time)
        comps.append(acc)
    time_part = (gr.delta_t * gs.delta_t.diff(table.time)
                 - gs.delta_t * gr.delta_t.diff(table.time))
    comps.append(time_part)
    return tuple(comps)


def _linear_solve(columns, target):
    """Solve sum_u x_u * columns[u] = target exactly over the rationals.

    Each vector is a list of expression components; rows are indexed by
    (component slot, monomial).  Returns (solution, unique, inconsistent_rows).
    """
    keys: list[tuple[int, tuple]] = []
    seen = set()
    for vec in list(columns) + [target]:
        for slot, e in enumerate(vec):
            for mon, _ in e.terms:
                k = (slot, mon)
                if k not in seen:
                    seen.add(k)
                    keys.append(k)
    w = len(columns)

    def coeff(e: Expr, mon) -> Fraction:
        for m, c in e.terms:
            if m == mon:
                return c
        return Fraction(0)

    rows = []
    for slot, mon in keys:
        rows.append([coeff(columns[u][slot], mon) for u in range(w)]
                    + [coeff(target[slot], mon)])

    pivot_cols: list[int] = []
    row_i = 0
    for col in range(w):
        pivot = next((i for i in range(row_i, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[row_i], rows[pivot] = rows[pivot], rows[row_i]
        inv = 1 / rows[row_i][col]
        rows[row_i] = [x * inv for x in rows[row_i]]
        for i in range(len(rows)):
            if i != row_i and rows[i][col] != 0:
                factor = rows[i][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[row_i])]
        pivot_cols.append(col)
        row_i += 1
    inconsistent = any(all(x == 0 for x in row[:w]) and row[w] != 0
                       for row in rows)
    solution = [Fraction(0)] * w
    for i, col in enumerate(pivot_cols):
        solution[col] = rows[i][w]
    unique = len(pivot_cols) == w
    return solution, unique, inconsistent


def structure_constants(spec: SystemSpec) -> StructureConstants:
    """Expand every pairwise generator commutator back over the generator
    basis, solving for rational coefficients exactly.

    Raises :class:`GeneratorAlgebraError` if the generators are linearly
    dependent (the expansion would not be unique) or if some commutator
    falls outside the span (the set does not close).
    """
    table = spec.table
    w = len(spec.generators)
    basis = _component_vectors(spec)

    zero_vec = tuple(table.zero() for _ in range(len(table.coords) + 1))
    _, independent, _ = _linear_solve(basis, zero_vec)
    if not independent:
        raise GeneratorAlgebraError(
            "generator variations are linearly dependent; structure constants "
            "would not be unique")

    c = [[[Fraction(0)] * w for _ in range(w)] for _ in range(w)]
    for r in range(w):
        for s in range(w):
            if r == s:
                continue
            bracket = _bracket_components(spec, r, s)
            sol, unique, inconsistent = _linear_solve(basis, bracket)
            if inconsistent or not unique:
                raise GeneratorAlgebraError(
                    f"generators {spec.generators[r].name!r} and "
                    f"{spec.generators[s].name!r} do not close into the algebra",
                    pair=(r, s), residual=bracket)
            c[r][s] = sol

    for r in range(w):
        for s in range(w):
            for u in range(w):
                if c[r][s][u] != -c[s][r][u]:
                    raise AssertionError("structure constants are not antisymmetric")
    result = StructureConstants(
        tuple(tuple(tuple(row) for row in plane) for plane in c), True)
    for r in range(w):
        for s in range(w):
            for t_ in range(w):
                for v in range(w):
                    if result.jacobi_residual(r, s, t_, v) != 0:
                        raise AssertionError("structure constants violate Jacobi")
    return result
