"""Batch command-line entry point.

Exit codes: 0 success, 1 I/O or parse failure, 2 validation failure.
Text output rounds money-like numbers to 2 decimals; JSON carries full
precision and is the source of truth.  No command writes to the warehouse
unless its name says so.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .model import load_problem, ProblemFormatError, validate_problem
from .optimizer import analyze, report_to_doc
from .simengine import matrix_to_csv, simulate
from .warehouse import Warehouse

STORE_ENV = "DECISIM_STORE"
DEFAULT_STORE = "decisim-store.log"


def _load(path: str):
    try:
        return load_problem(path)
    except (OSError, ProblemFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _validated(path: str):
    problem = _load(path)
    violations = validate_problem(problem)
    if violations:
        for v in violations:
            print(f"error: {v.code} at {v.path}: {v.message}", file=sys.stderr)
        raise SystemExit(2)
    return problem


def _apply_overrides(problem, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.samples is not None:
        changes["sample_count"] = args.samples
    if changes:
        from dataclasses import replace
        problem = replace(problem, **changes)
    return problem


def _fmt_money(x: float) -> str:
    return f"{x:,.2f}"


def _render_text(doc: dict) -> str:
    lines = []
    lines.append(f"Recommendation: {doc['recommendation']}  ({doc['direction']})")
    lines.append(f"Seed {doc['seed']}, {doc['sample_count']} scenarios")
    lines.append("")
    lines.append("Expected objective per alternative:")
    for name in doc["expected"]:
        lines.append(f"  {name:<16} {_fmt_money(doc['expected'][name]):>14}"
                     f"   (stddev {_fmt_money(doc['stddev'][name])})")
    lines.append("")
    lines.append("Win probability (row beats column):")
    names = list(doc["expected"].keys())
    header = "  " + " " * 16 + "".join(f"{n:>12}" for n in names)
    lines.append(header)
    for a in names:
        row = f"  {a:<16}"
        for b in names:
            row += f"{'-':>12}" if a == b else f"{doc['win_matrix'][a][b]:>12.4f}"
        lines.append(row)
    lines.append("")
    lines.append("P(best overall):")
    for name, p in doc["best_probability"].items():
        lines.append(f"  {name:<16} {p:>8.4f}")
    if "sensitivity" in doc:
        lines.append("")
        lines.append("Variance contribution by parameter:")
        for alt, row in doc["sensitivity"].items():
            varying = {k: v for k, v in row.items() if v > 0}
            lines.append(f"  {alt}:")
            if not varying:
                lines.append("    (all parameters fixed)")
            for pname, frac in sorted(varying.items(), key=lambda kv: -kv[1]):
                lines.append(f"    {pname:<20} {frac:>8.4f}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    problem = _apply_overrides(_validated(args.problem), args)
    if args.format == "csv":
        sys.stdout.write(matrix_to_csv(simulate(problem, workers=args.workers)))
        return 0
    doc = report_to_doc(analyze(problem, workers=args.workers))
    if args.format == "json":
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        sys.stdout.write(_render_text(doc))
    return 0


def cmd_validate(args) -> int:
    problem = _load(args.problem)
    violations = validate_problem(problem)
    if not violations:
        print("ok")
        return 0
    for v in violations:
        print(f"{v.code} at {v.path}: {v.message}")
    return 2


def cmd_sensitivity(args) -> int:
    problem = _apply_overrides(_validated(args.problem), args)
    from .optimizer import sensitivity
    table = sensitivity(problem, simulate(problem, workers=args.workers))
    if args.format == "json":
        json.dump(table, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    for alt, row in table.items():
        print(f"{alt}:")
        for pname, frac in sorted(row.items(), key=lambda kv: -kv[1]):
            print(f"  {pname:<20} {frac:>8.4f}")
    return 0


def _store_path(args) -> str:
    return args.store or os.environ.get(STORE_ENV, DEFAULT_STORE)


def cmd_warehouse(args) -> int:
    store = Warehouse(_store_path(args))
    try:
        if args.warehouse_cmd == "import":
            count = store.import_jsonl(args.file)
            print(f"imported {count} records")
        else:
            count = store.export_jsonl(args.file)
            print(f"exported {count} records")
        return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        store.close()


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        store_path=_store_path(args),
        cors_origins=tuple(args.cors_origin or ()),
    )
    if args.llm_endpoint:
        if not args.llm_model:
            print("error: --llm-endpoint requires --llm-model", file=sys.stderr)
            return 1
        from .dialog import LlmConfig
        config.llm = LlmConfig(endpoint_url=args.llm_endpoint, model=args.llm_model)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decisim",
                                     description="Run seeded decision simulations from problem files.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a problem file and print the comparison report")
    run.add_argument("problem")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--samples", type=int, default=None)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--format", choices=("text", "json", "csv"), default="text")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a problem file against every invariant")
    val.add_argument("problem")
    val.set_defaults(func=cmd_validate)

    sens = sub.add_parser("sensitivity", help="print the per-parameter variance contributions")
    sens.add_argument("problem")
    sens.add_argument("--seed", type=int, default=None)
    sens.add_argument("--samples", type=int, default=None)
    sens.add_argument("--workers", type=int, default=1)
    sens.add_argument("--format", choices=("text", "json"), default="text")
    sens.set_defaults(func=cmd_sensitivity)

    wh = sub.add_parser("warehouse", help="import or export priors and stored sessions")
    wh.add_argument("warehouse_cmd", choices=("import", "export"))
    wh.add_argument("file")
    wh.add_argument("--store", default=None, help=f"store path (default ${STORE_ENV} or {DEFAULT_STORE})")
    wh.set_defaults(func=cmd_warehouse)

    serve = sub.add_parser("serve", help="launch the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8712)
    serve.add_argument("--store", default=None)
    serve.add_argument("--cors-origin", action="append", default=None)
    serve.add_argument("--llm-endpoint", default=None, help="chat-completions URL for the llm backend")
    serve.add_argument("--llm-model", default=None, help="model name sent to the llm endpoint")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
