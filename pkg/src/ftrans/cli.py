"""Command-line entry point for the whole pipeline.

Subcommands: analyze (unit manifest), graph (DOT export), order
(translation order), translate (run or resume a session), fit (Vcmax
estimation), bench (solver throughput), verify (translated outputs vs the
reference numerics).

Exit codes: 0 success, 1 pipeline failure, 2 usage or input error.
Every subcommand takes --json; when it targets stdout ("-"), human chatter
moves to stderr. Config precedence is env > flags > file > defaults, and
the API key is only ever read from an environment variable.
"""

from __future__ import annotations

import argparse
import importlib
import json
import math
import os
import sys
from pathlib import Path

from . import corpus_fixtures, orchestrator
from .dep_graph import build_graph, graph_to_json, order_for_translation, order_to_json, to_dot
from .errors import FtransError
from .fortran_units import scan_root, units_manifest
from .leaf_numerics import (
    PhotoParams,
    bench_kernel,
    default_observations_path,
    fit_gradient_descent,
    fit_uniform,
    load_observations,
)
from .llm_gateway import KIND_REPLAY, KIND_RULE_BASED, ProviderConfig, RecordingProvider, make_provider
from .test_harness import HarnessConfig

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_USAGE = 2

ENV_PREFIX = "FTRANS_"
_ENV_KEYS = {
    "provider": "FTRANS_PROVIDER",
    "model_name": "FTRANS_MODEL_NAME",
    "base_url": "FTRANS_BASE_URL",
    "temperature": "FTRANS_TEMPERATURE",
    "timeout": "FTRANS_TIMEOUT",
    "token_budget": "FTRANS_TOKEN_BUDGET",
    "max_iters": "FTRANS_MAX_ITERS",
    "api_key_env": "FTRANS_API_KEY_ENV",
}
_DEFAULTS = {
    "provider": KIND_RULE_BASED,
    "model_name": None,
    "base_url": None,
    "temperature": 0.0,
    "timeout": 60.0,
    "token_budget": orchestrator.DEFAULT_TOKEN_BUDGET,
    "max_iters": orchestrator.DEFAULT_MAX_ITERS,
    "api_key_env": "FTRANS_API_KEY",
}


def load_config_file(path: str | None) -> dict:
    """Read a TOML or JSON config file; {} when no path is given."""
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    if p.suffix == ".json":
        return json.loads(p.read_text(encoding="utf-8"))
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(p.read_text(encoding="utf-8"))


def resolve_settings(flags: dict, env: dict | None = None,
                     config_path: str | None = None) -> dict:
    """Merge the four setting layers: env > flags > file > defaults."""
    env = os.environ if env is None else env
    file_values = load_config_file(config_path or env.get("FTRANS_CONFIG"))
    out: dict = {}
    for key, default in _DEFAULTS.items():
        value = default
        if key in file_values and file_values[key] is not None:
            value = file_values[key]
        if flags.get(key) is not None:
            value = flags[key]
        env_raw = env.get(_ENV_KEYS[key])
        if env_raw is not None:
            value = env_raw
        if default is not None and value is not None:
            value = type(default)(value)
        out[key] = value
    return out


class _Output:
    """Routes machine output (--json) and human output per the CLI contract."""

    def __init__(self, json_target: str | None):
        self.json_target = json_target
        self.human_stream = sys.stderr if json_target == "-" else sys.stdout

    def human(self, *parts) -> None:
        print(*parts, file=self.human_stream)

    def emit(self, document) -> None:
        if self.json_target is None:
            return
        text = json.dumps(document, indent=2, sort_keys=True)
        if self.json_target == "-":
            print(text)
        else:
            Path(self.json_target).write_text(text + "\n", encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FtransError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE if _is_pipeline_error(exc) else EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _is_pipeline_error(exc: FtransError) -> bool:
    """Pipeline failures exit 1; bad input or usage exits 2."""
    from .errors import (
        CorruptSession,
        DuplicateUnitName,
        EmptyCodebase,
        FortranScanError,
        GatewayError,
        HarnessError,
        NumericsError,
        SchemaMismatch,
        SessionLocked,
    )

    if isinstance(exc, (EmptyCodebase, FortranScanError, DuplicateUnitName,
                        SchemaMismatch, CorruptSession)):
        return False
    return isinstance(exc, (GatewayError, HarnessError, NumericsError, SessionLocked))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftrans",
        description="Fortran-to-Python migration pipeline and leaf-physics oracle",
    )
    parser.add_argument("--config", help="TOML or JSON config file (or FTRANS_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="scan units and emit a manifest")
    p.add_argument("root")
    p.add_argument("--json", dest="json_out", metavar="PATH",
                   help="manifest destination ('-' for stdout)")
    p.add_argument("--inline-text", action="store_true",
                   help="store unit text inline in the manifest")
    p.add_argument("--glob", action="append", default=None,
                   help="source glob (repeatable; default *.f90 *.F90 *.f95)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("graph", help="emit the dependency graph")
    p.add_argument("root")
    p.add_argument("--dot", metavar="PATH", help="DOT destination ('-' for stdout)")
    p.add_argument("--json", dest="json_out", metavar="PATH")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("order", help="print the translation order")
    p.add_argument("root")
    p.add_argument("--json", dest="json_out", metavar="PATH")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("translate", help="run or resume a translation session")
    p.add_argument("root", nargs="?")
    p.add_argument("--unit", help="translate only this unit (and its dependencies)")
    p.add_argument("--provider", choices=["rule_based", "replay", "http_chat"])
    p.add_argument("--transcripts", help="transcript directory (replay provider)")
    p.add_argument("--record", help="record transcripts of every exchange here")
    p.add_argument("--out", help="emit translated package layout here")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--token-budget", type=int, dest="token_budget")
    p.add_argument("--session", default="ftrans_session.json",
                   help="session file (default ./ftrans_session.json)")
    p.add_argument("--resume", metavar="SESSION_JSON",
                   help="resume a persisted session instead of planning anew")
    p.add_argument("--waive", action="append", default=[],
                   help="mark a unit waived before running (repeatable)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--inject-first-failure", action="store_true",
                   help="rule_based only: break the first daylength translation")
    p.add_argument("--json", dest="json_out", metavar="PATH")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("fit", help="estimate Vcmax from observations")
    p.add_argument("--data", help="observations CSV (default: bundled synthetic set)")
    p.add_argument("--method", choices=["grid", "gd"], default="gd")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--lr", type=float, default=2.0)
    p.add_argument("--n", type=int, default=50, help="grid points (method=grid)")
    p.add_argument("--range", nargs=2, type=float, default=[10.0, 100.0],
                   metavar=("LO", "HI"))
    p.add_argument("--start", type=float, default=60.0, help="initial vcmax (gd)")
    p.add_argument("--json", dest="json_out", metavar="PATH", default="-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bench", help="benchmark the internal-CO2 solver")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ci-range", nargs=2, type=float, default=[35.0, 70.0],
                   metavar=("LO", "HI"))
    p.add_argument("--workers", type=int, default=1,
                   help="fan solves out over this many threads")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--json", dest="json_out", metavar="PATH", default="-")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="compare translated outputs with the oracle")
    p.add_argument("--out", required=True, help="translate output directory")
    p.add_argument("--json", dest="json_out", metavar="PATH")
    p.set_defaults(func=cmd_verify)

    return parser


# --- static analysis commands ----------------------------------------------

def _scan(args) -> list:
    globs = tuple(args.glob) if getattr(args, "glob", None) else ("*.f90", "*.F90", "*.f95")
    root = Path(args.root)
    if not root.is_dir():
        raise FileNotFoundError(f"root directory not found: {root}")
    units = scan_root(root, globs)
    if not units:
        raise orchestrator.EmptyCodebase(str(root))
    return units


def cmd_analyze(args) -> int:
    out = _Output(args.json_out)
    units = _scan(args)
    manifest = units_manifest(units, inline_text=args.inline_text)
    out.human(f"{len(units)} unit(s) in {args.root}")
    for row in manifest:
        out.human(f"  {row['kind']:22} {row['name']:24} "
                  f"{row['file']}:{row['start_line']}-{row['end_line']} "
                  f"~{row['approx_tokens']} tokens")
    out.emit(manifest)
    return EXIT_OK


def cmd_graph(args) -> int:
    out = _Output(args.json_out)
    units = _scan(args)
    graph = build_graph(units)
    dot = to_dot(graph)
    if args.dot == "-" or (args.dot is None and args.json_out is None):
        print(dot, end="")
    elif args.dot:
        Path(args.dot).write_text(dot, encoding="utf-8")
        out.human(f"wrote {args.dot}")
    out.emit(graph_to_json(graph))
    return EXIT_OK


def cmd_order(args) -> int:
    out = _Output(args.json_out)
    units = _scan(args)
    graph = build_graph(units)
    order = order_for_translation(graph)
    for group in order.groups:
        names = [graph.name_of[uid] for uid in group]
        line = names[0] if len(names) == 1 else "{" + ", ".join(names) + "}"
        print(line, file=out.human_stream if args.json_out == "-" else sys.stdout)
    out.emit(order_to_json(order))
    return EXIT_OK


# --- translation -------------------------------------------------------------

def cmd_translate(args) -> int:
    out = _Output(args.json_out)
    settings = resolve_settings(
        {
            "provider": args.provider,
            "max_iters": args.max_iters,
            "token_budget": args.token_budget,
        },
        config_path=args.config,
    )
    provider_config = ProviderConfig(
        kind=settings["provider"],
        base_url=settings["base_url"],
        model_name=settings["model_name"],
        temperature=settings["temperature"],
        timeout=settings["timeout"],
        api_key_env=settings["api_key_env"],
        transcript_dir=args.transcripts,
        inject_first_failure=args.inject_first_failure,
    )

    if args.resume:
        session = orchestrator.resume(args.resume)
        session_path = Path(args.resume)
    else:
        if not args.root:
            print("error: translate needs a root directory or --resume", file=sys.stderr)
            return EXIT_USAGE
        config = orchestrator.SessionConfig(
            max_iters=settings["max_iters"],
            token_budget=settings["token_budget"],
        )
        session = orchestrator.plan_session(args.root, config)
        session_path = Path(args.session)

    if args.unit:
        known = {u.name for u in session.units.values()}
        if args.unit not in known:
            print(f"error: unknown unit {args.unit!r}", file=sys.stderr)
            return EXIT_USAGE

    provider = make_provider(provider_config)
    if args.record:
        provider = RecordingProvider(provider, args.record)

    with orchestrator.SessionLock(session_path):
        runner = orchestrator.SessionRunner(
            session, provider, session_path, harness=HarnessConfig()
        )
        orchestrator.save_session(session, session_path)
        for unit_name in args.waive:
            by_name = session.name_to_id()
            if unit_name in by_name:
                runner.waive(by_name[unit_name])
        if args.unit:
            _translate_with_deps(runner, args.unit)
        elif args.workers > 1:
            orchestrator.run_parallel(runner, args.workers)
        else:
            runner.run_all()

    if args.out:
        orchestrator.emit_outputs(session, args.out)
        out.human(f"outputs written to {args.out}")

    summary = {
        "session": str(session_path),
        "units": {
            session.units[uid].name: {
                "status": st.status,
                "attempts": len(st.attempts),
                **({"reason": st.reason} if st.reason else {}),
            }
            for uid, st in session.unit_states.items()
        },
    }
    failed = [n for n, s in summary["units"].items() if s["status"] == "failed"]
    for name, info in sorted(summary["units"].items()):
        out.human(f"  {info['status']:12} {name} ({info['attempts']} attempt(s))")
    out.emit(summary)
    if failed:
        out.human(f"{len(failed)} unit(s) failed: {', '.join(sorted(failed))}")
        return EXIT_PIPELINE
    return EXIT_OK


def _translate_with_deps(runner: orchestrator.SessionRunner, unit_name: str) -> None:
    session = runner.session
    target = session.name_to_id()[unit_name]
    wanted = set(session.transitive_dependencies(target)) | {target}
    for group in session.order:
        if not any(uid in wanted for uid in group):
            continue
        if session.unit_states[group[0]].status in (
            orchestrator.STATUS_PASSED, orchestrator.STATUS_WAIVED,
            orchestrator.STATUS_BLOCKED,
        ):
            continue
        runner.translate_group(list(group))


# --- numerics ----------------------------------------------------------------

def cmd_fit(args) -> int:
    out = _Output(args.json_out)
    data_path = Path(args.data) if args.data else default_observations_path()
    if not data_path.is_file():
        print(f"error: observations file not found: {data_path}", file=sys.stderr)
        return EXIT_USAGE
    observations = load_observations(data_path)
    params = PhotoParams.defaults(vcmax25=args.start)
    if args.method == "grid":
        result = fit_uniform(params, observations,
                             vcmax_range=(args.range[0], args.range[1]), n=args.n)
    else:
        result = fit_gradient_descent(params, observations,
                                      steps=args.steps, lr=args.lr)
    out.human(
        f"{result.method}: vcmax_hat={result.vcmax_hat:.4f} "
        f"loss={result.loss:.6f} iterations={result.iterations}"
    )
    out.emit({
        "method": result.method,
        "vcmax_hat": result.vcmax_hat,
        "loss": result.loss,
        "iterations": result.iterations,
        "trajectory": [list(t) for t in result.trajectory],
        "data": str(data_path),
    })
    return EXIT_OK


def cmd_bench(args) -> int:
    out = _Output(args.json_out)
    if args.n < 1:
        print("error: --n must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    report = bench_kernel(args.n, ci_range=(args.ci_range[0], args.ci_range[1]),
                          workers=args.workers)
    out.human(
        f"bench: n={report['n']} wall={report['wall_time_s']:.3f}s "
        f"rate={report['solves_per_second']:.0f}/s digest={report['results_digest'][:12]}"
    )
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    else:
        out.emit(report)
    return EXIT_OK


# --- verification --------------------------------------------------------------

def cmd_verify(args) -> int:
    out = _Output(args.json_out)
    out_dir = Path(args.out)
    if not out_dir.is_dir() or not any(out_dir.glob("*.py")):
        print(f"error: no translated modules found in {out_dir}", file=sys.stderr)
        return EXIT_USAGE
    registry = corpus_fixtures.oracle_registry()
    entries = corpus_fixtures.load_corpus()
    results = []
    mismatches = 0
    sys.path.insert(0, str(out_dir))
    try:
        for entry in entries:
            for unit, (oracle_name, cases) in sorted(entry.oracle.items()):
                module_path = out_dir / f"{unit}.py"
                if not module_path.is_file():
                    continue
                module = _import_fresh(unit)
                fn = getattr(module, unit)
                oracle_fn = registry[oracle_name]
                for case in cases:
                    got = float(fn(*case.args))
                    want = float(oracle_fn(*case.args))
                    ok = (math.isnan(got) and math.isnan(want)) \
                        or abs(got - want) <= case.tol
                    results.append({
                        "unit": unit, "args": list(case.args),
                        "got": got, "oracle": want, "tol": case.tol, "ok": ok,
                    })
                    if not ok:
                        mismatches += 1
                        out.human(f"MISMATCH {unit}{tuple(case.args)}: "
                                  f"translated={got!r} oracle={want!r} tol={case.tol}")
    finally:
        sys.path.remove(str(out_dir))
    checked = len(results)
    if checked == 0:
        print(f"error: {out_dir} has no modules matching corpus oracle units",
              file=sys.stderr)
        return EXIT_USAGE
    out.human(f"verified {checked} case(s), {mismatches} mismatch(es)")
    out.emit({"checked": checked, "mismatches": mismatches, "results": results})
    return EXIT_OK if mismatches == 0 else EXIT_PIPELINE


def _import_fresh(name: str):
    if name in sys.modules:
        del sys.modules[name]
    return importlib.import_module(name)


if __name__ == "__main__":
    sys.exit(main())
