"""Operator entry point.

Subcommands: simulate (trajectory CSV), verify (expectation-checked
report), analyze (one symmetry candidate in depth), list-models, and
export-model (write a built-in model as a spec document).

Exit codes: 0 success, 2 spec/usage error, 3 integration failure,
4 verification expectation mismatch (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import (
    check_contact_symmetry_map,
    check_quantity,
    classify_symmetry,
    conserved_from_symmetry,
    noether_quantity,
    quotient_quantity,
    sample_states,
)
from .integrate import (
    IntegrationError,
    integrate_adaptive,
    integrate_fixed,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .models import ModelError, list_models
from .specdoc import (
    SpecDocument,
    SpecError,
    document_for_model,
    load_document,
    write_document,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTEGRATION = 3
EXIT_MISMATCH = 4


class _UsageError(Exception):
    pass


def _require_window(t0: float, tf: float) -> None:
    if not tf > t0:
        raise _UsageError(f"tf must exceed t0 (got t0={t0!r}, tf={tf!r})")


def _require_initial_state(doc: SpecDocument, spec_path) -> None:
    if doc.initial_state is None:
        raise _UsageError(
            f"{spec_path}: spec declares no initial_state; one is required "
            f"to integrate"
        )


def _fresh_trajectory(doc: SpecDocument, args):
    _require_window(args.t0, args.tf)
    _require_initial_state(doc, args.spec)
    if not args.dt > 0.0:
        raise _UsageError(f"dt must be positive (got {args.dt!r})")
    return integrate_fixed(doc.system, doc.initial_state, args.t0, args.tf, args.dt)


def cmd_simulate(args) -> int:
    doc = load_document(args.spec)
    _require_window(args.t0, args.tf)
    _require_initial_state(doc, args.spec)

    if args.method == "rk4":
        if args.tol is not None:
            raise _UsageError("--tol applies only to --method rkf45")
        dt = 1e-3 if args.dt is None else args.dt
        if not dt > 0.0:
            raise _UsageError(f"dt must be positive (got {dt!r})")
        traj = integrate_fixed(doc.system, doc.initial_state, args.t0, args.tf, dt)
    else:
        if args.dt is not None:
            raise _UsageError("--dt applies only to --method rk4")
        tol = 1e-9 if args.tol is None else args.tol
        if not tol > 0.0:
            raise _UsageError(f"tol must be positive (got {tol!r})")
        traj = integrate_adaptive(doc.system, doc.initial_state, args.t0, args.tf, tol)

    write_trajectory_csv(doc.system, traj, args.out)

    system = doc.system
    h0 = system.hamiltonian_value(traj.point(0))
    hf = system.hamiltonian_value(traj.final_point)
    print(f"method: {traj.method}")
    print(f"steps: {traj.accepted} accepted, {traj.rejected} rejected")
    final = ", ".join(
        f"{name}={value!r}"
        for name, value in zip(traj.names, traj.final_point.flat())
    )
    print(f"final state (t={float(traj.times[-1])!r}): {final}")
    decay = repr(hf / h0) if h0 != 0.0 else "n/a (H(t0) = 0)"
    print(f"H(t0)={h0!r}  H(tf)={hf!r}  decay factor: {decay}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _observed_symmetry(contact, dynamical) -> str:
    if contact.passed:
        return "contact"
    if dynamical.passed:
        return "dynamical"
    return "neither"


def _quantity_matches(expect: str, classification: str) -> bool:
    if classification == "both":
        return expect in ("conserved", "dissipated")
    return classification == expect


def cmd_verify(args) -> int:
    doc = load_document(args.spec)
    if doc.candidate_count == 0:
        raise _UsageError(
            f"{args.spec}: spec declares no symmetry, quantity, or map "
            f"candidates; nothing to verify"
        )
    if not args.tol > 0.0:
        raise _UsageError(f"tol must be positive (got {args.tol!r})")
    system = doc.system
    states = sample_states(system, count=args.samples, seed=args.seed)

    if args.trajectory is not None:
        traj = read_trajectory_csv(args.trajectory)
        if traj.names != system.chart_names:
            raise _UsageError(
                f"{args.trajectory}: trajectory chart {traj.names} does not "
                f"match the spec chart {system.chart_names}"
            )
        traj_meta = {"source": str(args.trajectory), "samples": len(traj)}
    else:
        traj = _fresh_trajectory(doc, args)
        traj_meta = {
            "source": "fresh-run",
            "method": traj.method,
            "t0": float(args.t0),
            "tf": float(args.tf),
            "dt": float(args.dt),
            "samples": len(traj),
        }

    checks = []

    def add(category, name, expected, observed, matched, **extra):
        entry = {
            "category": category,
            "name": name,
            "expected": expected,
            "observed": observed,
            "matched": bool(matched),
        }
        entry.update(extra)
        checks.append(entry)
        status = "ok" if matched else "MISMATCH"
        print(f"{category} {name}: observed {observed}, expected {expected} [{status}]")

    dynamical_passers = []
    for cand in doc.symmetries:
        contact, dynamical = classify_symmetry(system, cand.field, states, args.tol)
        observed = _observed_symmetry(contact, dynamical)
        add(
            "symmetry",
            cand.name,
            cand.expect,
            observed,
            observed == cand.expect,
            contact=contact.as_dict(),
            dynamical=dynamical.as_dict(),
        )
        if dynamical.passed:
            dynamical_passers.append(cand)

    for cand in dynamical_passers:
        quantity = noether_quantity(system, cand.field)
        report = check_quantity(system, quantity, traj, args.tol)
        matched = report.classification in ("dissipated", "both")
        add(
            "noether",
            quantity.name,
            "dissipated",
            report.classification,
            matched,
            source_symmetry=cand.name,
            expression=str(quantity.expression),
            report=report.as_dict(),
        )

    dissipated_verified = []
    for cand in doc.quantities:
        report = check_quantity(system, cand.quantity, traj, args.tol)
        add(
            "quantity",
            cand.name,
            cand.expect,
            report.classification,
            _quantity_matches(cand.expect, report.classification),
            expression=str(cand.quantity.expression),
            report=report.as_dict(),
        )
        if cand.expect == "dissipated" and report.classification in (
            "dissipated",
            "both",
        ):
            dissipated_verified.append(cand)

    for i, first in enumerate(dissipated_verified):
        for second in dissipated_verified[i + 1 :]:
            quotient = quotient_quantity(first.quantity, second.quantity)
            report = check_quantity(system, quotient, traj, args.tol)
            matched = report.classification in ("conserved", "both")
            add(
                "quotient",
                quotient.name,
                "conserved",
                report.classification,
                matched,
                expression=str(quotient.expression),
                report=report.as_dict(),
            )

    for cand in doc.maps:
        report = check_contact_symmetry_map(system, cand.point_map, states, args.tol)
        observed = "contact" if report.passed else "neither"
        add(
            "map",
            cand.name,
            cand.expect,
            observed,
            observed == cand.expect,
            report=report.as_dict(),
        )

    all_ok = all(entry["matched"] for entry in checks)
    report_doc = {
        "seed": int(args.seed),
        "tolerance": float(args.tol),
        "sample_count": int(args.samples),
        "trajectory": traj_meta,
        "system": {
            "coordinates": list(system.coordinates),
            "parameters": dict(system.parameters),
            "hamiltonian": str(system.hamiltonian),
        },
        "checks": checks,
        "all_expectations_met": all_ok,
    }
    Path(args.report).write_text(
        json.dumps(report_doc, indent=2, sort_keys=True) + "\n"
    )

    mismatches = sum(1 for entry in checks if not entry["matched"])
    print(f"wrote {args.report}")
    if all_ok:
        print(f"all {len(checks)} expectations met")
        return EXIT_OK
    print(f"{mismatches} of {len(checks)} expectations MISMATCHED")
    return EXIT_MISMATCH


def cmd_analyze(args) -> int:
    doc = load_document(args.spec)
    by_name = {cand.name: cand for cand in doc.symmetries}
    if args.field not in by_name:
        known = ", ".join(sorted(by_name)) or "none declared"
        raise _UsageError(
            f"{args.spec}: no symmetry candidate named {args.field!r} "
            f"(known: {known})"
        )
    cand = by_name[args.field]
    system = doc.system
    if not args.tol > 0.0:
        raise _UsageError(f"tol must be positive (got {args.tol!r})")
    states = sample_states(system, count=args.samples, seed=args.seed)

    contact, dynamical = classify_symmetry(system, cand.field, states, args.tol)
    print(f"field: {cand.name}")
    if contact.passed:
        print(
            f"classification: contact symmetry "
            f"(max residual {contact.max_residual:.3e}, tol {args.tol:g})"
        )
    elif dynamical.passed:
        print(
            f"classification: dynamical symmetry, not contact "
            f"(contact residual {contact.max_residual:.3e}, "
            f"bracket residual {dynamical.max_residual:.3e}, tol {args.tol:g})"
        )
    else:
        print(
            f"classification: not a symmetry "
            f"(contact residual {contact.max_residual:.3e}, "
            f"bracket residual {dynamical.max_residual:.3e}, tol {args.tol:g})"
        )

    quantity = noether_quantity(system, cand.field)
    print(f"generated quantity: {quantity.expression}")
    if not dynamical.passed:
        print("note: not a dynamical symmetry, so no dissipation guarantee")

    if doc.initial_state is None:
        print("no initial_state declared; trajectory check skipped")
    else:
        traj = _fresh_trajectory(doc, args)
        report = check_quantity(system, quantity, traj, args.tol)
        print(
            f"along trajectory [{args.t0:g}, {args.tf:g}] at dt={args.dt:g}: "
            f"{report.classification} "
            f"(dissipation residual {report.dissipated.max_residual:.3e})"
        )

    h_values = [abs(system.hamiltonian_value(pt)) for pt in states]
    if min(h_values) > 1e-3:
        ratio = conserved_from_symmetry(system, cand.field)
        print(f"conserved ratio (valid while H != 0): {ratio.expression}")
    else:
        print("H vanishes on sampled states; conserved ratio skipped")
    return EXIT_OK


def cmd_list_models(args) -> int:
    for info in list_models():
        schema = ", ".join(f"{k}={v!r}" for k, v in info.defaults.items())
        print(f"{info.name}: {info.description}; parameters: {schema}")
    return EXIT_OK


def cmd_export_model(args) -> int:
    overrides = {}
    for item in args.param or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise _UsageError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            overrides[key] = float(value)
        except ValueError:
            raise _UsageError(f"--param {key}: {value!r} is not a number") from None
    out = args.out if args.out is not None else f"{args.name}.yaml"
    write_document(document_for_model(args.name, overrides), out)
    print(f"wrote {out}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contactmech",
        description=(
            "Simulate contact Hamiltonian systems and verify their "
            "symmetries and conserved/dissipated quantities."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a spec and write a CSV")
    sim.add_argument("spec", help="spec document (YAML)")
    sim.add_argument("--t0", type=float, default=0.0)
    sim.add_argument("--tf", type=float, default=10.0)
    sim.add_argument("--dt", type=float, default=None, help="rk4 step (default 1e-3)")
    sim.add_argument(
        "--tol", type=float, default=None, help="rkf45 tolerance (default 1e-9)"
    )
    sim.add_argument("--method", choices=("rk4", "rkf45"), default="rk4")
    sim.add_argument("--out", default="trajectory.csv")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="check every declared expectation")
    ver.add_argument("spec", help="spec document (YAML)")
    ver.add_argument("--trajectory", default=None, help="reuse a simulate CSV")
    ver.add_argument("--t0", type=float, default=0.0)
    ver.add_argument("--tf", type=float, default=10.0)
    ver.add_argument("--dt", type=float, default=1e-2)
    ver.add_argument("--tol", type=float, default=1e-8)
    ver.add_argument("--seed", type=int, default=42)
    ver.add_argument("--samples", type=int, default=100)
    ver.add_argument("--report", default="report.json")
    ver.set_defaults(func=cmd_verify)

    ana = sub.add_parser("analyze", help="inspect one symmetry candidate")
    ana.add_argument("spec", help="spec document (YAML)")
    ana.add_argument("field", help="symmetry candidate name")
    ana.add_argument("--t0", type=float, default=0.0)
    ana.add_argument("--tf", type=float, default=10.0)
    ana.add_argument("--dt", type=float, default=1e-2)
    ana.add_argument("--tol", type=float, default=1e-8)
    ana.add_argument("--seed", type=int, default=42)
    ana.add_argument("--samples", type=int, default=100)
    ana.set_defaults(func=cmd_analyze)

    lst = sub.add_parser("list-models", help="show built-in models")
    lst.set_defaults(func=cmd_list_models)

    exp = sub.add_parser("export-model", help="write a built-in model as a spec")
    exp.add_argument("name", help="model name (see list-models)")
    exp.add_argument("--out", default=None, help="output path (default NAME.yaml)")
    exp.add_argument(
        "--param",
        action="append",
        metavar="KEY=VALUE",
        help="override a model parameter (repeatable)",
    )
    exp.set_defaults(func=cmd_export_model)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (_UsageError, SpecError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
