"""Command-line front door: validate scenarios, run them, reproduce the
bundled failure experiments.

Exit codes: 0 success, 1 validation failure, 2 runtime failure.  Diagnostics
go to stderr; stdout carries only the recovery summary.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import engine, report, scenario as scenario_mod
from .errors import SimulationError, ValidationError

PAPER_SCENARIOS = {
    "1": [("adaptive", "scenario1.txt", engine.ADAPTIVE),
          ("dv-baseline", "scenario1.txt", engine.DV_BASELINE)],
    "2": [("adaptive", "scenario2.txt", engine.ADAPTIVE),
          ("dv-baseline", "scenario2.txt", engine.DV_BASELINE)],
    "3": [("fr", "scenario3_fr.txt", engine.ADAPTIVE),
          ("sr", "scenario3_sr.txt", engine.ADAPTIVE),
          ("dv-baseline", "scenario3_fr.txt", engine.DV_BASELINE)],
}


def bundled_scenario_text(name: str) -> str:
    return resources.files("adroute.scenarios").joinpath(name).read_text(
        encoding="utf-8")


def _write_artifacts(result, outdir: Path, force: bool) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    targets = {
        outdir / "events.csv": report.events_csv(result),
        outdir / "throughput.csv": report.throughput_csv(result),
        outdir / "summary.txt": report.render_summary(result),
    }
    if not force:
        existing = [str(p) for p in targets if p.exists()]
        if existing:
            raise FileExistsError(
                "refusing to overwrite without --force: " + ", ".join(existing))
    for path, text in targets.items():
        path.write_text(text, encoding="utf-8", newline="\n")
    return outdir


def cmd_validate(args) -> int:
    try:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        scenario_mod.loads(text)
    except ValidationError as exc:
        for diag in exc.diagnostics:
            print(f"{args.scenario}:{diag}", file=sys.stderr)
        return 1
    print("OK")
    return 0


def cmd_run(args) -> int:
    try:
        scenario = scenario_mod.load(args.scenario)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        for diag in exc.diagnostics:
            print(f"{args.scenario}:{diag}", file=sys.stderr)
        return 1
    try:
        result = engine.run(scenario, mode=args.mode, seed=args.seed,
                            sample_window=args.window)
        _write_artifacts(result, Path(args.out), args.force)
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    print(report.render_summary(result), end="")
    return 0


def cmd_paper(args) -> int:
    runs = PAPER_SCENARIOS[args.scenario]
    outdir = Path(args.out)
    results = []
    try:
        for label, filename, mode in runs:
            scenario = scenario_mod.loads(bundled_scenario_text(filename))
            result = engine.run(scenario, mode=mode)
            _write_artifacts(result, outdir / label, args.force)
            results.append((label, result))
        # Pairwise recovery report against the first (reference) run.
        ref_label, ref = results[0]
        texts = []
        for label, result in results[1:]:
            texts.append(report.render_comparison(ref_label, ref, label, result))
        comparison = "".join(texts)
        target = outdir / "comparison.txt"
        if target.exists() and not args.force:
            raise FileExistsError(
                f"refusing to overwrite without --force: {target}")
        target.write_text(comparison, encoding="utf-8", newline="\n")
    except (SimulationError, FileExistsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(comparison, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adroute",
        description="Discrete-event simulator for flow-label adaptive routing")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a scenario file")
    p_validate.add_argument("scenario")
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="run a scenario and write artifacts")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.add_argument("--mode", choices=list(engine.MODES),
                       default=engine.ADAPTIVE)
    p_run.add_argument("--window", type=float, default=None,
                       help="throughput sample window in seconds")
    p_run.add_argument("--force", action="store_true",
                       help="overwrite existing artifacts")
    p_run.set_defaults(func=cmd_run)

    p_paper = sub.add_parser(
        "paper", help="run a bundled failure experiment in both modes")
    p_paper.add_argument("scenario", choices=sorted(PAPER_SCENARIOS))
    p_paper.add_argument("--out", required=True)
    p_paper.add_argument("--force", action="store_true")
    p_paper.set_defaults(func=cmd_paper)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
