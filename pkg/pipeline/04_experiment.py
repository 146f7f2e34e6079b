#!/usr/bin/env python3
"""
pipeline/04_experiment.py - Run one registered statistical experiment.

    python pipeline/04_experiment.py scale-invariance --gamma 4 --s 2
    python pipeline/04_experiment.py forcing-fixture
    python pipeline/04_experiment.py --list

The report (parameters, seeds, statistics, thresholds, verdict) goes to
<out>/<name>.json; tabular results also to <out>/<name>.csv. Long runs
checkpoint to <out>/<name>_checkpoint.json and resume from it.

Flags
-----
--s S              Scale factor for scale-invariance.
--replicates N     Replicate count (default SIRSN_REPLICATES).
--param KEY=VALUE  Any other keyword of the experiment (JSON values, repeatable).
--gamma            Passed to the experiment only when given.
--dev, --verbose and the run flags, see --help.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.commands import add_run_flags, cmd_experiment, configure_logging, parse_param, run_config
from core.errors import SirsnError
from core.experiments import EXPERIMENTS

log = logging.getLogger(__name__)

SEPARATOR = "=" * 70


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Run a statistical experiment")
    add_run_flags(parser)
    parser.add_argument("name", nargs="?", help="Experiment name (see --list).")
    parser.add_argument("--list", action="store_true", help="List the registered experiments.")
    parser.add_argument("--s", type=float, help="Scale factor (scale-invariance).")
    parser.add_argument("--replicates", type=int, help="Replicate count.")
    parser.add_argument("--param", type=parse_param, action="append", default=[],
                        help="Extra experiment keyword as key=value.")
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    if args.list:
        for name, fn in sorted(EXPERIMENTS.items()):
            summary = (fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else ""
            print(f"  {name:<20} {summary}")
        return 0
    if not args.name:
        parser.error("an experiment name is required (or --list)")

    try:
        c = run_config(args, "experiment")
        options = dict(args.param)
        if args.gamma is not None:
            options["gamma"] = args.gamma
        if args.s is not None:
            options["s"] = args.s
        if args.replicates is not None:
            c = dataclasses.replace(c, replicates=args.replicates)
        c = dataclasses.replace(c, options=options)
        print(f"\n{SEPARATOR}")
        print(f"Experiment {args.name}  [{c.label()}]")
        print(f"  seed={c.seed}  replicates={c.replicates}  options={options or '-'}")
        print(f"{SEPARATOR}\n")
        report, result = cmd_experiment(c, args.name)
    except SirsnError as exc:
        log.error("Error: %s", exc)
        return exc.exit_code

    print(f"\n  {result.name}: {result.verdict}")
    for key, value in result.statistics.items():
        print(f"    {key:<28} {value}")
    report.print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
