"""Batch driver: analyze a system file and emit a report.

Exit codes: 0 when the analysis completed and every enabled check passed,
1 when the input was rejected (parse error, irregular system, declared
transformation that is not a symmetry, non-closing generator set), and 2
when an internal cross-check failed (the two extension computations
disagree, a charge fails conservation, or the numeric suite contradicts
the symbolic verdict).

The JSON report is deterministic: identical inputs and seed produce
byte-identical documents.  Expressions are rendered in the input grammar's
infix syntax so reports can be re-parsed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import algebra, flow, noether, sysdsl
from .legendre import RegularityError, UnsupportedLagrangianError
from .symexpr import to_text

SCHEMA = "noetherkit-report/1"

_REJECTION_ERRORS = (sysdsl.ParseError, RegularityError,
                     UnsupportedLagrangianError, noether.NotASymmetryError,
                     noether.GeneratorAlgebraError, ValueError, OSError)
_INTERNAL_ERRORS = (algebra.ConservationError, algebra.CrossCheckError,
                    algebra.NonConstantExtensionError, AssertionError)


def _parse_bindings(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"malformed binding {item!r}; expected name=value")
        name, value = item.split("=", 1)
        out[name.strip()] = float(value)
    return out


def _matrix_doc(matrix) -> list[list[str]]:
    return [[to_text(e) for e in row] for row in matrix]


def _structure_doc(report: algebra.AlgebraReport) -> dict:
    names = [g.name for g in report.spec.generators]
    entries = []
    c = report.structure.c
    for r in range(len(names)):
        for s in range(len(names)):
            for u in range(len(names)):
                if c[r][s][u] != 0:
                    entries.append({
                        "r": names[r], "s": names[s], "u": names[u],
                        "value": str(c[r][s][u]),
                    })
    return {"dimension": len(names), "closed": report.structure.closed,
            "nonzero": entries}


def build_document(report: algebra.AlgebraReport,
                   numeric: dict | None, exit_status: int) -> dict:
    gens = []
    for r, g in enumerate(report.spec.generators):
        gens.append({
            "name": g.name,
            "delta_q": [to_text(e) for e in g.delta_q],
            "delta_t": to_text(g.delta_t),
            "lambda": to_text(report.charges.surface_terms[r]),
            "charge_config": to_text(report.charges.charges_config[r]),
            "charge": to_text(report.charges.charges[r]),
            "delta_c_q": [to_text(e) for e in report.charges.delta_c[r]],
        })
    return {
        "schema": SCHEMA,
        "system": report.spec.name,
        "regular": True,
        "hessian_det": to_text(report.phase.hessian_det),
        "hamiltonian": to_text(report.phase.hamiltonian),
        "generators": gens,
        "structure_constants": _structure_doc(report),
        "conservation_residuals": [to_text(e) for e in report.conservation],
        "central_extension": {
            "direct": _matrix_doc(report.l_direct),
            "formula": _matrix_doc(report.l_formula),
            "consistent": report.consistent,
            "central": report.central,
        },
        "numeric": numeric,
        "exit_status": exit_status,
    }


def render_text(doc: dict) -> str:
    lines = [f"system: {doc['system']}"]
    lines.append(f"regular: yes (hessian det = {doc['hessian_det']})")
    lines.append(f"hamiltonian: {doc['hamiltonian']}")
    lines.append("generators:")
    for g in doc["generators"]:
        lines.append(f"  {g['name']}:")
        lines.append(f"    lambda = {g['lambda']}")
        lines.append(f"    charge = {g['charge']}")
    sc = doc["structure_constants"]
    if sc["nonzero"]:
        lines.append("structure constants (nonzero):")
        for e in sc["nonzero"]:
            lines.append(f"  C[{e['r']},{e['s']}]^{e['u']} = {e['value']}")
    else:
        lines.append("structure constants: all zero")
    lines.append(f"conservation residuals: "
                 f"{', '.join(doc['conservation_residuals'])}")
    ce = doc["central_extension"]
    lines.append(f"central extension (direct == formula: "
                 f"{'yes' if ce['consistent'] else 'no'}; "
                 f"constant: {'yes' if ce['central'] else 'no'}):")
    names = [g["name"] for g in doc["generators"]]
    any_nonzero = False
    for r, row in enumerate(ce["direct"]):
        for s, entry in enumerate(row):
            if entry != "0":
                any_nonzero = True
                lines.append(f"  L[{names[r]}][{names[s]}] = {entry}")
    if not any_nonzero:
        lines.append("  all entries zero")
    if doc["numeric"] is not None:
        num = doc["numeric"]
        lines.append("numeric suite:")
        lines.append(f"  pass: {'yes' if num['pass'] else 'no'}")
        lines.append(f"  max charge drift: {num['max_charge_drift']!r}")
        lines.append(f"  max flow defect: {num['max_flow_defect']!r}")
        lines.append(f"  max omega2 error: {num['max_omega2_error']!r}")
        lines.append(f"  max delta2 residual: {num['max_delta2_residual']!r}")
    lines.append(f"exit status: {doc['exit_status']}")
    return "\n".join(lines) + "\n"


def run_numeric_suite(report: algebra.AlgebraReport,
                      cfg: flow.NumericConfig) -> dict:
    """Seeded numeric spot checks: charge drift along trajectories, flow
    commutation for parameter pairs with vanishing structure constants, and
    the antisymmetrized 2-cochain against its symbolic prediction."""
    spec = report.spec
    table = spec.table
    cfg.validate(table)
    rng = np.random.default_rng(cfg.seed)
    n = len(table.coords)
    w = len(spec.generators)
    states = [flow.PhaseState(tuple(rng.uniform(-1, 1, n)),
                              tuple(rng.uniform(-1, 1, n)), 0.0)
              for _ in range(3)]

    traj = flow.integrate_hamilton(report.phase, states, cfg)
    drifts = {}
    numeric_pass = True
    for r, g in enumerate(spec.generators):
        q_r = report.charges.charges[r]
        f = flow.compile_phase_function(q_r, cfg.bindings)
        q0 = max(abs(f(*(list(s.q) + list(s.p) + [s.t]))) for s in states)
        drift = float(np.max(flow.charge_drift(q_r, traj)))
        drifts[g.name] = drift
        if drift > cfg.tolerance * (1.0 + q0):
            numeric_pass = False

    defects = {}
    omega_checks = []
    delta2 = {}
    max_defect = 0.0
    max_omega_err = 0.0
    max_delta2 = 0.0
    for r in range(w):
        for s in range(r + 1, w):
            pair = f"{spec.generators[r].name}|{spec.generators[s].name}"
            abelian = all(x == 0 for x in report.structure.c[r][s])
            if not abelian:
                defects[pair] = None
                continue
            a1 = float(rng.uniform(0.3, 0.9))
            a2 = float(rng.uniform(0.3, 0.9))
            defect = flow.flow_commutator_defect(
                report.charges.charges[r], report.charges.charges[s],
                states[0], a1, a2, cfg)
            defects[pair] = defect
            max_defect = max(max_defect, defect)
            if defect > 1e-8:
                numeric_pass = False
            alpha1 = [0.0] * w
            alpha2 = [0.0] * w
            alpha1[r] = a1
            alpha2[s] = a2
            result = flow.coboundary_check(report, alpha1, alpha2, states[0], cfg)
            err = abs(result.omega2_diff - result.predicted)
            omega_checks.append({
                "pair": pair, "diff": result.omega2_diff,
                "predicted": result.predicted, "time_drift": result.time_drift,
            })
            max_omega_err = max(max_omega_err, err)
            if err > cfg.tolerance * (1.0 + abs(result.predicted)):
                numeric_pass = False
            if result.time_drift > cfg.tolerance:
                numeric_pass = False
            res2 = flow.coboundary_squared_residual(
                report.charges, alpha1, alpha2, states[0], cfg)
            delta2[pair] = res2
            max_delta2 = max(max_delta2, res2)
            if res2 > cfg.tolerance:
                numeric_pass = False

    return {
        "pass": numeric_pass,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "tolerance": cfg.tolerance,
        "bindings": {k: cfg.bindings[k] for k in sorted(cfg.bindings)},
        "charge_drift": drifts,
        "max_charge_drift": max(drifts.values()) if drifts else 0.0,
        "flow_defect": defects,
        "max_flow_defect": max_defect,
        "omega2": omega_checks,
        "max_omega2_error": max_omega_err,
        "delta2_residual": delta2,
        "max_delta2_residual": max_delta2,
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="noether-analyze",
        description="Derive Noether charges, structure constants and the "
                    "central extension of a declared symmetry group.")
    parser.add_argument("file", help="system definition file")
    parser.add_argument("--report", choices=("text", "json"), default="text")
    parser.add_argument("--numeric", action="store_true",
                        help="also run the seeded numeric verification suite")
    parser.add_argument("--dt", type=float, default=1e-3)
    parser.add_argument("--horizon", type=float, default=10.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bind", default="",
                        help="parameter bindings for --numeric, e.g. M=1,B=2")
    parser.add_argument("--tolerance", type=float, default=1e-6)
    args = parser.parse_args(argv)

    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read()
        spec = sysdsl.parse(text)
        report = algebra.analyze(spec)
    except _INTERNAL_ERRORS as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return 2
    except _REJECTION_ERRORS as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return 1

    numeric = None
    exit_status = 0
    if args.numeric:
        try:
            cfg = flow.NumericConfig(dt=args.dt, horizon=args.horizon,
                                     bindings=_parse_bindings(args.bind),
                                     seed=args.seed, tolerance=args.tolerance)
            numeric = run_numeric_suite(report, cfg)
        except (ValueError, flow.IntegrationError) as exc:
            print(f"rejected: {exc}", file=sys.stderr)
            return 1
        if not numeric["pass"]:
            exit_status = 2

    doc = build_document(report, numeric, exit_status)
    if args.report == "json":
        print(json.dumps(doc, indent=2))
    else:
        print(render_text(doc), end="")
    return exit_status


if __name__ == "__main__":
    sys.exit(main())
