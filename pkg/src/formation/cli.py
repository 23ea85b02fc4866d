"""Command line entry point.

    formation run CONFIG        trace CSV, metrics and figures for one variant
    formation compare CONFIG    total velocity error of all four variants
    formation validate CONFIG   check a config and print it with defaults filled in
    formation demo [ACTION]     any of the above on the bundled demo scenario

Exit status: 0 success, 1 invalid configuration, 2 failure during simulation.
"""

from __future__ import annotations

import argparse
import shutil
import sys
import tempfile
import warnings
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, demo_text, dump_config, load_config, load_demo
from .dynamic_control import ParameterUnderflowError
from .models import TrajectoryError
from .sim import VARIANTS, SimulationError, Variant, compare_variants, run

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class InvalidInvocation(ValueError):
    pass


def _overrides(config, args):
    changes = {}
    for name in ("dt", "horizon", "decimation"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    if getattr(args, "variant", None) is not None:
        changes["variant"] = Variant(args.variant)
    if not changes:
        return config
    config = replace(config, **changes)
    problems = config.problems()
    if problems:
        raise InvalidInvocation("after command line overrides: " + "; ".join(problems))
    return config


def _load(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        config = load_demo() if args.command == "demo" else load_config(args.config)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return _overrides(config, args)


def _slug(variant):
    return variant.replace("+", "_")


class _Staging:
    """Collects outputs in a scratch directory and publishes them only on success."""

    def __init__(self, outdir):
        self.outdir = Path(outdir)

    def __enter__(self):
        self.outdir.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".formation-", dir=self.outdir.parent))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                self.outdir.mkdir(parents=True, exist_ok=True)
                for src in sorted(self.tmp.rglob("*")):
                    if src.is_file():
                        dst = self.outdir / src.relative_to(self.tmp)
                        dst.parent.mkdir(parents=True, exist_ok=True)
                        src.replace(dst)
        finally:
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def _run(config, args):
    trace, report = run(config)
    with _Staging(args.output) as tmp:
        trace.to_csv(tmp / "trace.csv")
        (tmp / "metrics.txt").write_text(report.to_text())
        written = ["trace.csv", "metrics.txt"]
        if args.figures:
            from .report import run_figures
            written += [f"figures/{p.name}" for p in run_figures(trace, config, tmp / "figures")]
    print(report.to_text(), end="")
    for name in written:
        print(f"wrote {Path(args.output) / name}")


def _compare(config, args):
    comparison = compare_variants(config, parallel=args.parallel)
    text = comparison.to_text()
    with _Staging(args.output) as tmp:
        header = "follower," + ",".join(v.value for v in VARIANTS)
        rows = [header] + [f"{i + 1}," + ",".join(repr(float(x)) for x in comparison.table[:, i])
                           for i in range(comparison.table.shape[1])]
        (tmp / "comparison.csv").write_text("\n".join(rows) + "\n")
        (tmp / "comparison.txt").write_text(text)
        written = ["comparison.csv", "comparison.txt"]
        for v in VARIANTS:
            name = f"trace_{_slug(v.value)}.csv"
            comparison.traces[v.value].to_csv(tmp / name)
            written.append(name)
        if args.figures:
            from .report import compare_figures
            written += [f"figures/{p.name}" for p in compare_figures(comparison, tmp / "figures")]
    print(text, end="")
    for name in written:
        print(f"wrote {Path(args.output) / name}")


def _validate(config, args):
    print("valid scenario; resolved configuration:")
    print(dump_config(config), end="")


ACTIONS = {"run": _run, "compare": _compare, "validate": _validate}


def _add_overrides(p, with_variant=True):
    p.add_argument("--dt", type=float, help="integration step [s]")
    p.add_argument("--horizon", type=float, help="simulated time [s]")
    p.add_argument("--decimation", type=int, help="log every N steps")
    if with_variant:
        p.add_argument("--variant", choices=[v.value for v in Variant],
                       help="controller variant (run only)")


def _add_outputs(p):
    p.add_argument("-o", "--output", default="out", help="output directory (default: out)")
    p.add_argument("--no-figures", dest="figures", action="store_false",
                   help="skip the PNG figures")
    p.add_argument("--serial", dest="parallel", action="store_false",
                   help="compare: run the variants one after another")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="formation",
        description="Leader-follower formation control of unicycle robots.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one controller variant")
    p.add_argument("config", help="scenario YAML file")
    _add_overrides(p)
    _add_outputs(p)

    p = sub.add_parser("compare", help="total velocity error of all four variants")
    p.add_argument("config", help="scenario YAML file")
    _add_overrides(p, with_variant=False)
    _add_outputs(p)

    p = sub.add_parser("validate", help="check a scenario and echo it with defaults")
    p.add_argument("config", help="scenario YAML file")
    _add_overrides(p)

    p = sub.add_parser("demo", help="use the bundled demo scenario")
    p.add_argument("action", nargs="?", default="compare", choices=sorted(ACTIONS),
                   help="what to do with it (default: compare)")
    p.add_argument("--print-config", action="store_true",
                   help="print the demo YAML and exit")
    _add_overrides(p)
    _add_outputs(p)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "demo" and args.print_config:
        print(demo_text(), end="")
        return EXIT_OK
    action = args.action if args.command == "demo" else args.command
    try:
        config = _load(args)
    except (ConfigError, InvalidInvocation, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        ACTIONS[action](config, args)
    except (ParameterUnderflowError, TrajectoryError, SimulationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
