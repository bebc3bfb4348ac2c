"""Command-line entry point: parse | transform | analyze | check | run | hs | ni-test | selftest.

Exit codes: 0 success/accept, 1 reject/counterexample/runtime failure,
2 usage or configuration error.  JSON output schemas are documented in
docs/formats.md.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import EqFact, TruthFact, build_cfg, liveness, predicates
from .errors import AnalysisError, ConfigError, IflowError, ParseError
from .harness import NiTrialReport, ni_test
from .hs import construct_env, hs_check, verify_construction
from .interp import RunError, StepLimit, Terminated, erasure_run, run
from .labels import Level
from .lang import Assign, vars_of_cmd
from .lattice import Lattice, two_point
from .parser import (
    LabelFile,
    ParsedProgram,
    parse_labels,
    parse_lattice,
    parse_program,
    scan_lattice_ref,
)
from .pretty import render_cmd, render_expr, render_label, render_label_file, render_program
from .transform import bracket_all, identity_active_set, transform_program
from .typecheck import CheckOptions, CheckReport, check_program


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def _load_program(path: str) -> ParsedProgram:
    return parse_program(_read(path))


def _load_lattice(args, labels_path: str | None) -> Lattice:
    if getattr(args, "lattice", None):
        return parse_lattice(_read(args.lattice))
    if labels_path:
        ref = scan_lattice_ref(_read(labels_path))
        if ref:
            resolved = Path(labels_path).parent / ref
            return parse_lattice(_read(str(resolved)))
    return two_point()


def _load_labels(path: str, lat: Lattice) -> LabelFile:
    return parse_labels(_read(path), lat)


def _fact_text(fact) -> str:
    match fact:
        case TruthFact(expr, truth):
            return render_expr(expr) if truth else f"!({render_expr(expr)})"
        case EqFact(var, expr):
            return f"{var} == {render_expr(expr)}"
    return repr(fact)


def _obligation_dict(o) -> dict:
    return {
        "site": o.site,
        "hypothesis": sorted(_fact_text(f) for f in o.hypothesis),
        "lhs": render_label(o.lhs),
        "rhs": render_label(o.rhs),
        "status": o.status,
        "witness": (
            None if o.witness is None
            else {render_expr(g): v for g, v in o.witness.items()}
        ),
    }


def _report_dict(report: CheckReport) -> dict:
    return {
        "verdict": report.verdict,
        "active": dict(sorted(report.active_final.items())),
        "obligations": [_obligation_dict(o) for o in report.obligations],
        "side_failures": [
            {"site": s.site, "target": s.target, "variable": s.variable}
            for s in report.side_failures
        ],
        "wellformedness": [
            {"variable": v.var, "dependency": v.dep, "reason": v.reason}
            for v in report.wf_violations
        ],
    }


def _print_check_text(report: CheckReport) -> None:
    print(f"verdict: {report.verdict.upper()}")
    nontrivial = {v: c for v, c in report.active_final.items() if v != c}
    if nontrivial:
        print("final active set: " + ", ".join(f"{v} -> {c}" for v, c in sorted(nontrivial.items())))
    for o in report.obligations:
        hypo = ", ".join(sorted(_fact_text(f) for f in o.hypothesis)) or "true"
        line = (f"  site {o.site}: [{hypo}] |= "
                f"{render_label(o.lhs)} <= {render_label(o.rhs)}  {o.status}")
        if o.witness:
            line += "  witness: " + ", ".join(
                f"{render_expr(g)}={'1' if v else '0'}" for g, v in o.witness.items()
            )
        print(line)
    for s in report.side_failures:
        print(f"  site {s.site}: assigning '{s.target}' while '{s.variable}' is live "
              f"and its label depends on '{s.target}'")
    for v in report.wf_violations:
        print(f"  environment: {v.var} / {v.dep}: {v.reason}")


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_parse(args) -> int:
    p = _load_program(args.file)
    sys.stdout.write(render_program(p.cmd, active=p.active, init=p.init))
    return 0


def _cmd_transform(args) -> int:
    p = _load_program(args.file)
    cmd = bracket_all(p.cmd) if args.fully_bracketed else p.cmd
    active, ct = transform_program(cmd, frozenset(p.init))
    text = render_program(ct, active=active, init=p.init)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_check(args) -> int:
    lat = _load_lattice(args, args.labels)
    labels = _load_labels(args.labels, lat)
    program = _load_program(args.file)
    options = CheckOptions(levels_only=args.levels_only)
    report = check_program(program, labels, lat, options)
    if args.format == "json":
        print(json.dumps(_report_dict(report), indent=2, sort_keys=True))
    else:
        _print_check_text(report)
    return 0 if report.accepted else 1


def _cmd_analyze(args) -> int:
    lat = _load_lattice(args, args.labels)
    labels = _load_labels(args.labels, lat)
    program = _load_program(args.file)
    report = check_program(program, labels, lat)
    facts = predicates(report.transformed)
    rows = []
    for node in report.cfg.nodes:
        if node.kind != "assign":
            continue
        assert node.site is not None and node.target is not None and node.expr is not None
        rows.append({
            "site": node.site,
            "statement": f"{node.target} := {render_expr(node.expr)}",
            "live_before": sorted(report.live.before[node.site]),
            "live_after": sorted(report.live.after[node.site]),
            "facts": sorted(_fact_text(f) for f in facts[node.site]),
        })
    rows.sort(key=lambda r: r["site"])
    payload = {
        "active": dict(sorted(report.active_final.items())),
        "sites": rows,
        "verdict": report.verdict,
    }
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("final active set: " + ", ".join(f"{v} -> {c}" for v, c in sorted(report.active_final.items())))
        for r in rows:
            print(f"site {r['site']}: {r['statement']}")
            print(f"  live before: {{{', '.join(r['live_before'])}}}")
            print(f"  live after:  {{{', '.join(r['live_after'])}}}")
            print(f"  facts:       {{{', '.join(r['facts'])}}}")
        print(f"verdict: {report.verdict.upper()}")
    return 0


def _parse_init_overrides(text: str | None) -> dict[str, int]:
    if not text:
        return {}
    out: dict[str, int] = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise ConfigError(f"bad --init entry {piece!r}; expected name=value")
        name, value = piece.split("=", 1)
        try:
            out[name.strip()] = int(value.strip())
        except ValueError:
            raise ConfigError(f"bad --init value {value!r}") from None
    return out


def _cmd_run(args) -> int:
    program = _load_program(args.file)
    memory = dict(program.init)
    memory.update(_parse_init_overrides(args.init))
    if args.erasure:
        if not args.labels:
            raise ConfigError("--erasure needs --labels to evaluate label dependencies")
        lat = _load_lattice(args, args.labels)
        labels = _load_labels(args.labels, lat)
        from .lang import has_brackets

        if has_brackets(program.cmd):
            raise ConfigError("--erasure runs transformed programs; transform this file first")
        active = identity_active_set(vars_of_cmd(program.cmd) | set(program.init))
        if program.active:
            active.update(program.active)
        env = labels.resolve(vars_of_cmd(program.cmd) | set(active.values()) | set(active))
        live = liveness(build_cfg(program.cmd), env, active)
        outcome = erasure_run(program.cmd, memory, env, live.after, args.max_steps)
    else:
        outcome = run(program.cmd, memory, args.max_steps)

    if isinstance(outcome, Terminated):
        status, final = "terminated", outcome.memory
    elif isinstance(outcome, StepLimit):
        status, final = "step-limit", outcome.memory
    else:
        assert isinstance(outcome, RunError)
        status, final = f"runtime-error: {outcome.reason}", outcome.memory
    if args.format == "json":
        print(json.dumps({"status": status, "steps": outcome.steps,
                          "memory": dict(sorted(final.items()))}, indent=2, sort_keys=True))
    else:
        print(status + f" after {outcome.steps} steps")
        for var in sorted(final):
            print(f"{var} = {final[var]}")
    return 0 if isinstance(outcome, Terminated) else 1


def _cmd_hs(args) -> int:
    lat = _load_lattice(args, args.labels)
    labels = _load_labels(args.labels, lat)
    program = _load_program(args.file)
    source_vars = vars_of_cmd(program.cmd) | set(program.init)
    resolved = labels.resolve(source_vars)
    bad = sorted(v for v, lbl in resolved.items() if not isinstance(lbl, Level))
    if bad:
        raise ConfigError("initial levels must be plain lattice levels; offending: " + ", ".join(bad))
    env0 = {v: lbl.name for v, lbl in resolved.items()}  # type: ignore[union-attr]

    final_env = hs_check(lat.bottom, env0, program.cmd, lat)
    if args.format == "json":
        payload: dict = {"final_levels": dict(sorted(final_env.items()))}
    else:
        print("final levels:")
        for var in sorted(final_env):
            print(f"  {var} : {final_env[var]}")
        payload = {}

    code = 0
    if args.construct or args.verify:
        a0 = identity_active_set(source_vars)
        bracketed = bracket_all(program.cmd)
        _, a_out, ct, constructed = construct_env(lat.bottom, env0, a0, bracketed, lat)
        if args.construct:
            prefix = args.output or str(Path(args.file).with_suffix("")) + ".constructed"
            Path(prefix + ".while").write_text(render_program(ct, active=a_out, init=program.init))
            Path(prefix + ".labels").write_text(
                render_label_file({v: Level(l) for v, l in constructed.types.items()})
            )
            if args.format != "json":
                print(f"wrote {prefix}.while and {prefix}.labels")
        if args.verify:
            ok, verify = verify_construction(constructed, ct, lat.bottom, a_out, lat, a0)
            if args.format == "json":
                payload["verify"] = {
                    "ok": ok,
                    "domain_ok": verify.domain_ok,
                    "violated_sites": verify.violated_sites,
                    "side_failure_sites": verify.side_failure_sites,
                    "merge_disagreements": [list(c) for c in verify.conflicts],
                }
            else:
                print(f"construction verifies: {'yes' if ok else 'NO'}")
            if not ok:
                code = 1
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    return code


def _cmd_ni_test(args) -> int:
    lat = _load_lattice(args, args.labels)
    labels = _load_labels(args.labels, lat)
    program = _load_program(args.file)
    report = ni_test(
        program,
        labels,
        lat,
        trials=args.trials,
        seed=args.seed,
        force=args.force,
        obs=args.obs,
        max_steps=args.max_steps,
    )
    if args.format == "json":
        payload = {
            "attempted": report.attempted,
            "passed": report.passed,
            "failed": report.failed,
            "discarded": {
                "sampling": report.discarded_sampling,
                "divergence": report.discarded_divergence,
                "runtime_error": report.discarded_error,
            },
            "verdict": report.verdict,
        }
        if report.counterexample:
            cx = report.counterexample
            payload["counterexample"] = {
                "trial": cx.trial,
                "variable": cx.variable,
                "initial_1": cx.initial_1,
                "initial_2": cx.initial_2,
                "final_1": cx.final_1,
                "final_2": cx.final_2,
            }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"trials: {report.attempted}  passed: {report.passed}  "
              f"failed: {report.failed}  discarded: {report.discarded}")
        if report.counterexample:
            cx = report.counterexample
            print(f"counterexample at trial {cx.trial}: final value of '{cx.variable}' differs")
            print(f"  initial 1: {cx.initial_1}")
            print(f"  initial 2: {cx.initial_2}")
            print(f"  final 1:   {cx.final_1}")
            print(f"  final 2:   {cx.final_2}")
    return 1 if report.failed else 0


def _find_corpus(explicit: str | None) -> Path:
    if explicit:
        p = Path(explicit)
        if not p.is_dir():
            raise ConfigError(f"corpus directory {explicit} does not exist")
        return p
    here = Path(__file__).resolve()
    for parent in [Path.cwd(), *here.parents]:
        candidate = parent / "corpus"
        if (candidate / "manifest.json").is_file():
            return candidate
    raise ConfigError("cannot locate the bundled corpus; pass --corpus DIR")


def _cmd_selftest(args) -> int:
    corpus = _find_corpus(args.corpus)
    manifest = json.loads((corpus / "manifest.json").read_text())
    rows = []
    all_ok = True
    for entry in manifest:
        lat = two_point()
        if entry.get("lattice"):
            lat = parse_lattice((corpus / entry["lattice"]).read_text())
        labels = parse_labels((corpus / entry["labels"]).read_text(), lat)
        program = parse_program((corpus / entry["program"]).read_text())
        report = check_program(program, labels, lat)
        ok = report.verdict == entry["verdict"]
        all_ok = all_ok and ok
        rows.append({
            "name": entry["name"],
            "expected": entry["verdict"],
            "actual": report.verdict,
            "result": "PASS" if ok else "FAIL",
        })
    if args.format == "json":
        print(json.dumps({"rows": rows, "ok": all_ok}, indent=2, sort_keys=True))
    else:
        width = max(len(r["name"]) for r in rows)
        for r in rows:
            print(f"{r['name']:<{width}}  expected {r['expected']:<6}  "
                  f"got {r['actual']:<6}  {r['result']}")
        print("all conformance rows pass" if all_ok else "CONFORMANCE FAILURES")
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lattice", help="lattice file (.lat); default is the two-point L<H")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=0)

    top = argparse.ArgumentParser(prog="iflow", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse and echo the canonical form")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_parse)

    p = sub.add_parser("transform", parents=[common], help="apply the copy-introducing transformation")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--fully-bracketed", action="store_true",
                   help="bracket every assignment before transforming")
    p.set_defaults(fn=_cmd_transform)

    p = sub.add_parser("analyze", parents=[common], help="dump per-site live sets and facts")
    p.add_argument("file")
    p.add_argument("--labels", required=True)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("check", parents=[common], help="type-check a program against a label file")
    p.add_argument("file")
    p.add_argument("--labels", required=True)
    p.add_argument("--levels-only", action="store_true",
                   help="restrict labels to bare lattice levels")
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("run", parents=[common], help="execute a program and print the final memory")
    p.add_argument("file")
    p.add_argument("--labels")
    p.add_argument("--erasure", action="store_true",
                   help="use the erasing assignment rule (needs --labels)")
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--init", help="comma-separated overrides, e.g. x=3,y=-2")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("hs", parents=[common], help="floating-level analysis and type construction")
    p.add_argument("file")
    p.add_argument("--labels", required=True, help="initial levels (bare levels only)")
    p.add_argument("--construct", action="store_true",
                   help="emit the transformed program and constructed label file")
    p.add_argument("--verify", action="store_true",
                   help="check the construction with the fixed-label system")
    p.add_argument("-o", "--output", help="output prefix for --construct")
    p.set_defaults(fn=_cmd_hs)

    p = sub.add_parser("ni-test", parents=[common], help="differential noninterference testing")
    p.add_argument("file")
    p.add_argument("--labels", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--force", action="store_true", help="test a program the checker rejects")
    p.add_argument("--obs", help="observation level (default: lattice bottom)")
    p.add_argument("--max-steps", type=int, default=10_000)
    p.set_defaults(fn=_cmd_ni_test)

    p = sub.add_parser("selftest", parents=[common], help="run the bundled conformance corpus")
    p.add_argument("--corpus", help="corpus directory (default: auto-detect)")
    p.set_defaults(fn=_cmd_selftest)

    return top


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ConfigError, AnalysisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IflowError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
