"""Command-line interface.

Commands::

    clinch run -i FILE [--trace OUT] [--format json|text]
    clinch verify -i FILE [--format json|text]
    clinch check-submodular -i FILE
    clinch demo appendix-d|impossibility
    clinch gen --kind KIND --n N [--m M] --seed S -o FILE

Exit codes: 0 all properties pass, 1 some property failed, 2 input error,
3 size/internal error.  Set CLINCH_BRUTE_FORCE_CAP to raise or lower the
subset-enumeration cap.
"""

from __future__ import annotations

import argparse
import json
import sys

from .auction import run_clinching, run_decreasing_marginals, run_generic_2player, run_scaled
from .errors import ClinchError, DivergenceError, DomainError, ParseError, SizeError
from .instances import (
    POLYMATROID_KINDS,
    InstanceFile,
    generate_instance,
    parse_instance,
    write_instance,
)
from .submodular import verify_submodular
from .verify import (
    VerificationReport,
    check_dominated_direction,
    check_outcome,
    demo_appendix_d,
    demo_impossibility,
    run_with_monitors,
    validate_trace,
)

EXIT_OK = 0
EXIT_PROPERTY_FAIL = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _run_instance(inst: InstanceFile, force_trace: bool = False):
    """Dispatch an instance to the right engine and return its Outcome."""
    cfg = inst.config
    if force_trace and not cfg.trace:
        from dataclasses import replace
        cfg = replace(cfg, trace=True)
    if inst.environment.kind == "h-polytope-2d":
        rows, rhs = inst.polytope_rows()
        return run_generic_2player(rows, rhs, inst.bidders, cfg)
    if inst.curves is not None:
        supply = inst.environment.payload["supply"]
        return run_decreasing_marginals(inst.curves, [b.budget for b in inst.bidders],
                                        supply, cfg)
    oracle = inst.build_oracle()
    if inst.quality is not None:
        return run_scaled(oracle, inst.quality, inst.bidders, cfg)
    return run_clinching(oracle, inst.bidders, cfg)


def execute(command: str, inst: InstanceFile | None, args) -> dict:
    """Run one command and assemble the report dict (the ReportFile)."""
    report = {"schema": 1, "command": command}
    if command == "run":
        outcome = _run_instance(inst)
        report["outcome"] = outcome.to_json(with_trace=False)
        if outcome.trace is not None and args.trace_out:
            with open(args.trace_out, "w", encoding="utf-8") as fh:
                json.dump([s.to_json() for s in outcome.trace], fh, indent=1)
                fh.write("\n")
        report["properties"] = []
        return report

    if command == "verify":
        if inst.environment.kind == "h-polytope-2d":
            outcome = _run_instance(inst, force_trace=True)
            rows, rhs = inst.polytope_rows()
            direction = check_dominated_direction(rows, rhs, inst.bidders, outcome)
            ver = VerificationReport()
            ver.add("pareto-optimal", direction is None,
                    None if direction is None else {"direction": [str(t) for t in direction]})
        elif inst.curves is not None:
            outcome = _run_instance(inst, force_trace=True)
            ver = validate_trace(inst.build_oracle(), outcome.trace)
        else:
            oracle = inst.build_oracle()
            if inst.quality is not None:
                from .submodular import membership
                outcome = run_scaled(oracle, inst.quality, inst.bidders, inst.config)
                ver = VerificationReport()
                unscaled = [x / g for x, g in zip(outcome.allocation, inst.quality)]
                member = membership(oracle, unscaled)
                ver.add("scaled-membership", member.ok,
                        None if member.ok else {"violating_set": sorted(member.violating)},
                        "x / gamma lies in the base polymatroid")
                ver.add("individual-rationality",
                        all(outcome.payments[i] <= b.value * outcome.allocation[i]
                            for i, b in enumerate(inst.bidders)))
                ver.add("budget-feasibility",
                        all(b.budget is None or outcome.payments[i] <= b.budget
                            for i, b in enumerate(inst.bidders)))
            else:
                outcome, ver = run_with_monitors(oracle, inst.bidders, inst.config)
                for prop in check_outcome(oracle, inst.bidders, outcome).properties:
                    ver.properties.append(prop)
        report["outcome"] = outcome.to_json(with_trace=False)
        report["properties"] = [p.to_json() for p in ver.properties]
        return report

    if command == "check-submodular":
        oracle = inst.build_oracle()
        check = verify_submodular(oracle)
        prop = {"name": "submodular-oracle", "passed": check.ok}
        if not check.ok:
            prop["witness"] = {"violation": check.violation,
                               "sets": [sorted(w) for w in check.witness]}
            prop["detail"] = check.detail
        report["properties"] = [prop]
        return report

    if command == "demo":
        ver = demo_appendix_d() if args.which == "appendix-d" else demo_impossibility()
        payload = ver.to_json()
        report["properties"] = payload["properties"]
        report["narrative"] = payload.get("narrative", [])
        report["attachments"] = payload.get("attachments", {})
        return report

    raise DomainError(f"unknown command {command!r}")


def render_report(report: dict, fmt: str = "text") -> tuple:
    """Render the report and derive the exit code from its content alone."""
    properties = report.get("properties", [])
    code = EXIT_PROPERTY_FAIL if any(not p["passed"] for p in properties) else EXIT_OK
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n", code
    lines = [f"command: {report.get('command', '?')}"]
    outcome = report.get("outcome")
    if outcome:
        lines.append("allocation: " + " ".join(outcome["x"]))
        lines.append("payments:   " + " ".join(outcome["pay"]))
        lines.append("exhausted:  " +
                     (" ".join(str(i) for i in outcome["exhausted"]) or "(none)"))
    for prop in properties:
        mark = "PASS" if prop["passed"] else "FAIL"
        line = f"[{mark}] {prop['name']}"
        if not prop["passed"] and prop.get("witness") is not None:
            line += f"  witness: {json.dumps(prop['witness'])}"
        lines.append(line)
    for note in report.get("narrative", []):
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n", code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clinch",
        description="Polyhedral clinching auctions with exact-rational verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("-i", "--instance", required=True, help="instance JSON file")
        p.add_argument("--format", choices=("json", "text"), default="text")

    run_p = sub.add_parser("run", help="run the auction and print the outcome")
    add_common(run_p)
    run_p.add_argument("--trace", dest="trace_out", default=None,
                       help="write the step trace to this file (JSON)")

    verify_p = sub.add_parser("verify", help="run with monitors and property checks")
    add_common(verify_p)

    check_p = sub.add_parser("check-submodular", help="verify the environment oracle")
    add_common(check_p)

    demo_p = sub.add_parser("demo", help="run a built-in counterexample demo")
    demo_p.add_argument("which", choices=("appendix-d", "impossibility"))
    demo_p.add_argument("--format", choices=("json", "text"), default="text")

    gen_p = sub.add_parser("gen", help="generate a seeded random instance")
    gen_p.add_argument("--kind", required=True, choices=POLYMATROID_KINDS)
    gen_p.add_argument("--n", type=int, required=True, help="number of bidders")
    gen_p.add_argument("--m", type=int, default=None, help="number of keywords (adwords)")
    gen_p.add_argument("--seed", type=int, required=True)
    gen_p.add_argument("-o", "--output", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            inst = generate_instance(args.kind, args.n, args.m, args.seed)
            write_instance(inst, args.output)
            print(f"wrote {args.output}")
            return EXIT_OK
        inst = None
        if args.command in ("run", "verify", "check-submodular"):
            inst = parse_instance(args.instance)
        setattr(args, "which", getattr(args, "which", None))
        setattr(args, "trace_out", getattr(args, "trace_out", None))
        report = execute(args.command, inst, args)
    except ParseError as exc:
        print(f"input error [{exc.code}] at {exc.field}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SizeError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ClinchError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    text, code = render_report(report, args.format)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
