"""Command line entry point.

Subcommands: ``run``, ``classify``, ``threshold``, ``convergence`` and
``dump-coupling``. Exit status is 0 on success, 1 when some grid points
failed and 2 for an invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .basis import build_basis
from .coupling import build_coupling
from .errors import InvalidInputError
from .scenario import (
    PRESETS,
    apply_override,
    convergence_check,
    expand_points,
    parse_config,
    preset_document,
    run_scenario,
)
from .theory import classify_regime, efficient_lc_threshold

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2


def _scenario_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="scenario JSON file")
    src.add_argument("--preset", choices=PRESETS, help="bundled scenario")
    p.add_argument("--seed", type=int, help="override numerics.seed in every case")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="set a dotted config key")


def _build_parser():
    parser = argparse.ArgumentParser(prog="centrifuge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write reports")
    _scenario_args(run)
    run.add_argument("--out", required=True, metavar="DIR")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--convergence", action="store_true", help="also run the convergence check")

    cls = sub.add_parser("classify", help="classify (p1, p2) points by regime")
    cls.add_argument("--p1", type=float, nargs="+")
    cls.add_argument("--p2", type=float, nargs="+")
    src = cls.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH")
    src.add_argument("--preset", choices=PRESETS)
    cls.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")

    thr = sub.add_parser("threshold", help="drive strength where the ladder efficiency reaches a level")
    thr.add_argument("--l-hat", type=int, nargs="+", default=[40])
    thr.add_argument("--level", type=float, default=0.5)

    conv = sub.add_parser("convergence", help="rerun one point with refined numerics")
    _scenario_args(conv)
    conv.add_argument("--point", type=int, default=0)
    conv.add_argument("--out", metavar="DIR")
    conv.add_argument("--workers", type=int, default=1, help="accepted for symmetry; the check is serial")

    dump = sub.add_parser("dump-coupling", help="write the coupling table of a basis as CSV")
    dump.add_argument("--l-max", type=int, required=True)
    dump.add_argument("--c-max", type=int)
    dump.add_argument("--parity-l", choices=("even", "odd"))
    dump.add_argument("--parity-m", choices=("even", "odd"))
    dump.add_argument("--resonant-only", action="store_true")
    dump.add_argument("--out", required=True, metavar="PATH")
    return parser


def _load(args):
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {args.config}: {exc}") from None
    else:
        doc = preset_document(args.preset)
    for item in args.override:
        doc = apply_override(doc, item)
    if getattr(args, "seed", None) is not None:
        doc = apply_override(doc, f"numerics.seed={args.seed}")
        for i in range(len(doc.get("cases", []))):
            if "seed" in doc["cases"][i].get("numerics", {}):
                doc = apply_override(doc, f"cases.{i}.numerics.seed={args.seed}")
    return parse_config(doc)


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _cmd_run(args):
    if args.workers < 1:
        raise InvalidInputError("--workers must be >= 1")
    config = _load(args)
    manifest = run_scenario(config, args.out, workers=args.workers, convergence=args.convergence)
    _emit({"out": args.out, "points": manifest["points"], "failed": manifest["failed"]})
    return EXIT_PARTIAL if manifest["failed"] else EXIT_OK


def _cmd_classify(args):
    if args.config or args.preset:
        pairs = [(p.p1, p.p2) for p in expand_points(_load(args))]
    else:
        if not args.p1 or not args.p2:
            raise InvalidInputError("give --p1 and --p2, or a config")
        pairs = [(p1, p2) for p2 in args.p2 for p1 in args.p1]
    for p1, p2 in pairs:
        _emit(classify_regime(p1, p2).to_dict())
    return EXIT_OK


def _cmd_threshold(args):
    for l_hat in args.l_hat:
        _emit({"l_hat": l_hat, "level": args.level, "p1": efficient_lc_threshold(l_hat, args.level)})
    return EXIT_OK


def _cmd_convergence(args):
    report = convergence_check(_load(args), args.point)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "convergence.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    _emit(report)
    return EXIT_OK


def _cmd_dump(args):
    c_max = 2 * args.l_max if args.c_max is None else args.c_max
    basis = build_basis(args.l_max, c_max, args.parity_l, args.parity_m)
    build_coupling(basis, resonant_only=args.resonant_only).to_csv(args.out)
    _emit({"out": args.out, "states": basis.size})
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "classify": _cmd_classify,
    "threshold": _cmd_threshold,
    "convergence": _cmd_convergence,
    "dump-coupling": _cmd_dump,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InvalidInputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
