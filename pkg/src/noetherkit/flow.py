"""Numeric verification layer.

Hamiltonian trajectories and canonical flows are integrated with the
classical fourth-order one-step method at fixed step size; the line
integral of the transported surface term rides along the same grid as an
extra quadrature component, so all numeric checks share one error order.
Canonical flows act at frozen time: the group transformations move (q, p)
while t enters only as an explicit parameter of the generator.

Group elements are represented by their parameter vectors and composed
additively, which is exact for the commuting transformation groups handled
here (structure constants zero); for non-commuting groups the composites
are accurate to second order in the parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .algebra import AlgebraReport
from .noether import ChargeSet
from .symexpr import DomainError, Expr, SymbolTable
from .sysdsl import SystemSpec
from .legendre import PhaseSystem


class IntegrationError(Exception):
    """Numeric blow-up during integration; carries the last finite state."""

    def __init__(self, message: str, last_state=None):
        super().__init__(message)
        self.last_state = last_state


@dataclass(frozen=True)
class PhaseState:
    """One phase-space point at a given time."""

    q: tuple[float, ...]
    p: tuple[float, ...]
    t: float = 0.0


@dataclass(frozen=True)
class NumericConfig:
    """Step size, horizon, parameter bindings, seed and tolerance used by
    every numeric check.  Symbolic checks are exact and take no tolerance."""

    dt: float = 1e-3
    horizon: float = 10.0
    bindings: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    tolerance: float = 1e-6

    def validate(self, table: SymbolTable) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        missing = [p for p in table.params if p not in self.bindings]
        if missing:
            raise ValueError(f"unbound parameter(s): {missing}")
        for p in table.positive:
            if not self.bindings[p] > 0:
                raise ValueError(f"parameter {p} is declared positive but bound "
                                 f"to {self.bindings[p]}")


# -- compiled evaluation -------------------------------------------------

@lru_cache(maxsize=4096)
def _compile_cached(e: Expr, bound: tuple[tuple[str, float], ...]) -> Callable:
    table = e.table
    bindings = dict(bound)
    n = len(table.coords)
    arg_of = {table.coords[i]: f"q{i}" for i in range(n)}
    arg_of.update({table.momenta[i]: f"p{i}" for i in range(n)})
    arg_of[table.time] = "t"
    names = table.names
    terms_src = []
    for mon, coeff in e.terms:
        factor = float(coeff)
        syms = []
        for i, exp in enumerate(mon):
            if exp == 0:
                continue
            name = names[i]
            if name in bindings:
                factor *= bindings[name] ** exp
            elif name in arg_of:
                syms.append(arg_of[name] if exp == 1 else f"{arg_of[name]}**{exp}")
            else:
                raise DomainError(
                    f"cannot compile {name!r} into a phase-space function")
        terms_src.append("*".join([repr(factor)] + syms))
    body = " + ".join(terms_src) if terms_src else "0.0"
    args = ", ".join([f"q{i}" for i in range(n)] + [f"p{i}" for i in range(n)] + ["t"])
    ns: dict = {}
    exec(f"def _f({args}):\n    return {body}\n", {"__builtins__": {}}, ns)
    return ns["_f"]


def compile_phase_function(e: Expr, bindings: Mapping[str, float]) -> Callable:
    """Compile a phase-space expression to a fast callable
    f(q0..qn-1, p0..pn-1, t) with parameters folded in; works elementwise
    on floats and on numpy arrays."""
    return _compile_cached(e, tuple(sorted(bindings.items())))


# -- Hamiltonian trajectories --------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Sampled states of a batch of trajectories sharing one time grid.

    ``qs`` and ``ps`` have shape (samples, batch, n); ``times`` has shape
    (samples,)."""

    times: np.ndarray
    qs: np.ndarray
    ps: np.ndarray
    table: SymbolTable
    cfg: NumericConfig

    def state(self, k: int, b: int = 0) -> PhaseState:
        return PhaseState(tuple(self.qs[k, b]), tuple(self.ps[k, b]),
                          float(self.times[k]))


def _as_batch(x0) -> list[PhaseState]:
    if isinstance(x0, PhaseState):
        return [x0]
    return list(x0)


def integrate_hamilton(ps: PhaseSystem, x0, cfg: NumericConfig,
                       sample_stride: int = 10) -> Trajectory:
    """Integrate dq/dt = dH/dp, dp/dt = -dH/dq from ``x0`` (one state or a
    batch sharing the initial time) over cfg.horizon at fixed step cfg.dt."""
    table = ps.spec.table
    cfg.validate(table)
    states = _as_batch(x0)
    t0 = states[0].t
    if any(abs(s.t - t0) > 0 for s in states):
        raise ValueError("batched initial states must share the initial time")
    n = len(table.coords)
    q = np.array([s.q for s in states], dtype=float)
    p = np.array([s.p for s in states], dtype=float)

    dq_f = [compile_phase_function(ps.hamiltonian.diff(pm), cfg.bindings)
            for pm in table.momenta]
    dp_f = [compile_phase_function(-ps.hamiltonian.diff(qn), cfg.bindings)
            for qn in table.coords]

    def rhs(q_arr, p_arr, t):
        cols = [q_arr[:, i] for i in range(n)] + [p_arr[:, i] for i in range(n)]
        dq = np.stack([np.broadcast_to(f(*cols, t), q_arr.shape[:1])
                       for f in dq_f], axis=1)
        dp = np.stack([np.broadcast_to(f(*cols, t), p_arr.shape[:1])
                       for f in dp_f], axis=1)
        return dq, dp

    n_steps = max(1, round(cfg.horizon / cfg.dt))
    h = cfg.horizon / n_steps
    times = [t0]
    qs, ps_out = [q.copy()], [p.copy()]
    t = t0
    for k in range(1, n_steps + 1):
        k1q, k1p = rhs(q, p, t)
        k2q, k2p = rhs(q + 0.5 * h * k1q, p + 0.5 * h * k1p, t + 0.5 * h)
        k3q, k3p = rhs(q + 0.5 * h * k2q, p + 0.5 * h * k2p, t + 0.5 * h)
        k4q, k4p = rhs(q + h * k3q, p + h * k3p, t + h)
        q = q + (h / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        t = t0 + k * h
        if k % sample_stride == 0 or k == n_steps:
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
                last = PhaseState(tuple(qs[-1][0]), tuple(ps_out[-1][0]), times[-1])
                raise IntegrationError(
                    f"trajectory became non-finite near t = {t}", last)
            times.append(t)
            qs.append(q.copy())
            ps_out.append(p.copy())
    return Trajectory(np.array(times), np.stack(qs), np.stack(ps_out), table, cfg)


def charge_drift(q_r: Expr, traj: Trajectory) -> np.ndarray:
    """Maximum absolute drift of a charge along each trajectory in the batch."""
    n = traj.qs.shape[2]
    f = compile_phase_function(q_r, traj.cfg.bindings)
    vals = []
    for k in range(traj.qs.shape[0]):
        cols = [traj.qs[k, :, i] for i in range(n)] + \
               [traj.ps[k, :, i] for i in range(n)]
        vals.append(np.broadcast_to(f(*cols, float(traj.times[k])),
                                    traj.qs.shape[1:2]))
    arr = np.stack(vals)
    return np.max(np.abs(arr - arr[0]), axis=0)


# -- canonical flows -------------------------------------------------------

def _flow_weighted(gen_exprs: Sequence[Expr], weights: Sequence[float],
                   x0: PhaseState, sigma: float, cfg: NumericConfig,
                   integrands: Sequence[Expr] | None = None
                   ) -> tuple[PhaseState, float]:
    """Flow of the combined generator sum_r weights[r] * gen_exprs[r] over
    the group parameter from 0 to sigma, at frozen time x0.t, optionally
    accumulating the quadrature of sum_r weights[r] * integrands[r]."""
    table = gen_exprs[0].table
    n = len(table.coords)
    dq_f = [[compile_phase_function(g.diff(pm), cfg.bindings)
             for pm in table.momenta] for g in gen_exprs]
    dp_f = [[compile_phase_function(-g.diff(qn), cfg.bindings)
             for qn in table.coords] for g in gen_exprs]
    quad_f = None
    if integrands is not None:
        quad_f = [compile_phase_function(g, cfg.bindings) for g in integrands]
    t = x0.t
    w = list(map(float, weights))

    def rhs(y):
        args = list(y[:2 * n]) + [t]
        dq = [0.0] * n
        dp = [0.0] * n
        for r, wr in enumerate(w):
            if wr == 0.0:
                continue
            for i in range(n):
                dq[i] += wr * dq_f[r][i](*args)
                dp[i] += wr * dp_f[r][i](*args)
        di = 0.0
        if quad_f is not None:
            for r, wr in enumerate(w):
                if wr != 0.0:
                    di += wr * quad_f[r](*args)
        return dq + dp + [di]

    scale = abs(sigma) * max(1.0, math.sqrt(sum(x * x for x in w)))
    n_steps = max(1, math.ceil(scale / cfg.dt - 1e-12))
    h = sigma / n_steps
    y = list(x0.q) + list(x0.p) + [0.0]
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs([a + 0.5 * h * b for a, b in zip(y, k1)])
        k3 = rhs([a + 0.5 * h * b for a, b in zip(y, k2)])
        k4 = rhs([a + h * b for a, b in zip(y, k3)])
        y = [a + (h / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
             for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
    if not all(math.isfinite(v) for v in y):
        raise IntegrationError("canonical flow became non-finite",
                               PhaseState(tuple(x0.q), tuple(x0.p), t))
    return PhaseState(tuple(y[:n]), tuple(y[n:2 * n]), t), y[2 * n]


def canonical_flow(generator: Expr, x0: PhaseState, sigma: float,
                   cfg: NumericConfig) -> PhaseState:
    """Image of ``x0`` under the canonical flow generated by one observable,
    with flow parameter running from 0 to sigma.  sigma = 0 returns x0."""
    if sigma == 0.0:
        return x0
    return _flow_weighted([generator], [1.0], x0, sigma, cfg)[0]


def transform(charges: ChargeSet, alpha: Sequence[float], x0: PhaseState,
              cfg: NumericConfig) -> PhaseState:
    """Finite group transformation with parameter vector ``alpha``."""
    if all(a == 0.0 for a in alpha):
        return x0
    return _flow_weighted(charges.charges, list(alpha), x0, 1.0, cfg)[0]


def flow_commutator_defect(q_r: Expr, q_s: Expr, x0: PhaseState,
                           alpha1: float, alpha2: float, cfg: NumericConfig,
                           c_rs: Sequence | None = None,
                           charges: Sequence[Expr] | None = None) -> float:
    """Distance between flowing (r then s) and (s then r), minus the
    first-order displacement predicted by the structure constants.

    With ``c_rs`` omitted or zero this is the plain commutator defect, which
    the central-extension theorem makes vanish for commuting groups even
    when the charge brackets do not."""
    x_rs = canonical_flow(q_s, canonical_flow(q_r, x0, alpha1, cfg), alpha2, cfg)
    x_sr = canonical_flow(q_r, canonical_flow(q_s, x0, alpha2, cfg), alpha1, cfg)
    n = len(x0.q)
    diff = [x_rs.q[i] - x_sr.q[i] for i in range(n)] + \
           [x_rs.p[i] - x_sr.p[i] for i in range(n)]
    if c_rs is not None and charges is not None:
        table = q_r.table
        args = list(x0.q) + list(x0.p) + [x0.t]
        for u, cu in enumerate(c_rs):
            cu = float(cu)
            if cu == 0.0:
                continue
            for i in range(n):
                fq = compile_phase_function(charges[u].diff(table.momenta[i]),
                                            cfg.bindings)
                fp = compile_phase_function(charges[u].diff(table.coords[i]),
                                            cfg.bindings)
                diff[i] -= alpha1 * alpha2 * cu * fq(*args)
                diff[n + i] -= -alpha1 * alpha2 * cu * fp(*args)
    return max(abs(d) for d in diff)


# -- transported surface terms and cochains --------------------------------

def _lambda_transported(charges: ChargeSet) -> tuple[Expr, ...]:
    """Per generator: Lambda_r minus the phase-space Lagrangian times the
    generator's time shift."""
    spec = charges.spec
    return tuple(charges.surface_terms[r]
                 - charges.phase.lagrangian_phase * spec.generators[r].delta_t
                 for r in range(len(spec.generators)))


def lambda_T_f(charges: ChargeSet, direction: Sequence[float], sigma: float,
               x0: PhaseState, cfg: NumericConfig) -> float:
    """Line integral of the transported surface term along the canonical
    flow of the generator picked out by ``direction``, from 0 to sigma.
    Shares the flow's step grid and error order."""
    if sigma == 0.0:
        return 0.0
    lam_t = _lambda_transported(charges)
    return _flow_weighted(charges.charges, list(direction), x0, sigma, cfg,
                          integrands=lam_t)[1]


def _lambda_f_alpha(charges: ChargeSet, alpha: Sequence[float],
                    x0: PhaseState, cfg: NumericConfig) -> float:
    if all(a == 0.0 for a in alpha):
        return 0.0
    lam_t = _lambda_transported(charges)
    return _flow_weighted(charges.charges, list(alpha), x0, 1.0, cfg,
                          integrands=lam_t)[1]


def omega2(charges: ChargeSet, alpha1: Sequence[float], alpha2: Sequence[float],
           x0: PhaseState, cfg: NumericConfig) -> float:
    """The 2-cochain obtained by applying the coboundary operation to the
    transported-surface-term 1-cochain."""
    x_g1 = transform(charges, alpha1, x0, cfg)
    a12 = [a + b for a, b in zip(alpha1, alpha2)]
    return (_lambda_f_alpha(charges, alpha2, x_g1, cfg)
            - _lambda_f_alpha(charges, a12, x0, cfg)
            + _lambda_f_alpha(charges, alpha1, x0, cfg))


@dataclass(frozen=True)
class CoboundaryResult:
    """Antisymmetrized 2-cochain against its central-extension prediction,
    plus the drift of the 2-cochain along a Hamiltonian trajectory."""

    omega2_diff: float
    predicted: float
    time_drift: float


def coboundary_check(report: AlgebraReport, alpha1: Sequence[float],
                     alpha2: Sequence[float], x0: PhaseState,
                     cfg: NumericConfig) -> CoboundaryResult:
    """Evaluate omega2(g1, g2) - omega2(g2, g1) numerically, the prediction
    L_rs alpha1_r alpha2_s from the symbolic extension matrix, and the
    conservation drift of omega2 along the trajectory through x0."""
    charges = report.charges
    cfg.validate(charges.spec.table)
    d = (omega2(charges, alpha1, alpha2, x0, cfg)
         - omega2(charges, alpha2, alpha1, x0, cfg))
    predicted = 0.0
    w = len(charges.charges)
    for r in range(w):
        for s in range(w):
            entry = report.l_direct[r][s]
            if entry.is_zero():
                continue
            predicted += entry.eval(dict(cfg.bindings)) * alpha1[r] * alpha2[s]

    check_cfg = NumericConfig(dt=cfg.dt, horizon=min(cfg.horizon, 1.0),
                              bindings=cfg.bindings, seed=cfg.seed,
                              tolerance=cfg.tolerance)
    traj = integrate_hamilton(charges.phase, x0, check_cfg,
                              sample_stride=max(1, round(0.5 / cfg.dt)))
    base = None
    drift = 0.0
    for k in range(traj.qs.shape[0]):
        xk = traj.state(k)
        val = omega2(charges, alpha1, alpha2, xk, cfg)
        if base is None:
            base = val
        else:
            drift = max(drift, abs(val - base))
    return CoboundaryResult(d, predicted, drift)


def coboundary_squared_residual(charges: ChargeSet, alpha1: Sequence[float],
                                alpha2: Sequence[float], x0: PhaseState,
                                cfg: NumericConfig) -> float:
    """Apply the coboundary operation twice to the phase-space Lagrangian;
    the result reduces to L(x^(g1 then g2)) - L(x^(g1 g2)) and must vanish."""
    lag = compile_phase_function(charges.phase.lagrangian_phase, cfg.bindings)
    x_seq = transform(charges, alpha2, transform(charges, alpha1, x0, cfg), cfg)
    a12 = [a + b for a, b in zip(alpha1, alpha2)]
    x_dir = transform(charges, a12, x0, cfg)
    args_seq = list(x_seq.q) + list(x_seq.p) + [x_seq.t]
    args_dir = list(x_dir.q) + list(x_dir.p) + [x_dir.t]
    return abs(lag(*args_seq) - lag(*args_dir))


def _advance_state(ps: PhaseSystem, x0: PhaseState, span: float,
                   cfg: NumericConfig) -> PhaseState:
    """Single-state trajectory advance by a signed time span."""
    table = ps.spec.table
    n = len(table.coords)
    dq_f = [compile_phase_function(ps.hamiltonian.diff(pm), cfg.bindings)
            for pm in table.momenta]
    dp_f = [compile_phase_function(-ps.hamiltonian.diff(qn), cfg.bindings)
            for qn in table.coords]

    def rhs(y, t):
        args = list(y) + [t]
        return [f(*args) for f in dq_f] + [f(*args) for f in dp_f]

    n_steps = max(1, math.ceil(abs(span) / cfg.dt - 1e-12))
    h = span / n_steps
    y = list(x0.q) + list(x0.p)
    t = x0.t
    for _ in range(n_steps):
        k1 = rhs(y, t)
        k2 = rhs([a + 0.5 * h * b for a, b in zip(y, k1)], t + 0.5 * h)
        k3 = rhs([a + 0.5 * h * b for a, b in zip(y, k2)], t + 0.5 * h)
        k4 = rhs([a + h * b for a, b in zip(y, k3)], t + h)
        y = [a + (h / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
             for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
        t += h
    return PhaseState(tuple(y[:n]), tuple(y[n:]), t)


def lagrangian_transport_residual(charges: ChargeSet, alpha: Sequence[float],
                                  x0: PhaseState, cfg: NumericConfig,
                                  fd_step: float = 1e-4) -> float:
    """Check that the change of the phase-space Lagrangian under a finite
    transformation equals the time derivative of the transported surface
    term along the motion, via a central finite difference at x0."""
    lag = compile_phase_function(charges.phase.lagrangian_phase, cfg.bindings)
    x_g = transform(charges, alpha, x0, cfg)
    lhs = (lag(*(list(x_g.q) + list(x_g.p) + [x_g.t]))
           - lag(*(list(x0.q) + list(x0.p) + [x0.t])))
    x_plus = _advance_state(charges.phase, x0, fd_step, cfg)
    x_minus = _advance_state(charges.phase, x0, -fd_step, cfg)
    f_plus = _lambda_f_alpha(charges, alpha, x_plus, cfg)
    f_minus = _lambda_f_alpha(charges, alpha, x_minus, cfg)
    rhs_val = (f_plus - f_minus) / (2.0 * fd_step)
    return abs(lhs - rhs_val)
