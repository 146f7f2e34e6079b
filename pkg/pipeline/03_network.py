#!/usr/bin/env python3
"""
pipeline/03_network.py - Route network between two endpoint clusters.

For every γ in SIRSN_NETWORK_GAMMAS (default 2.1, 4, 8, 16) the floor is
chosen so SIRSN_NETWORK_LINE_BUDGET lines are expected in the window and
ε = SIRSN_EPSILON_RATIO·v_floor. All pairs of cluster points are routed.

Outputs: network_gamma<γ>.svg per γ (route pieces darker when faster),
network_routes.json and sharing.csv (gamma, union_length, shared_length,
sharing_fraction).

Flags
-----
--gammas G,G,...   Override the γ list.
--cluster-size N   Points per cluster (0 gives empty figures).
--point X,Y        Use explicit endpoints instead of the seeded clusters (repeatable).
--dev, --verbose and the run flags, see --help.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.commands import add_run_flags, cmd_network, configure_logging, parse_point, run_config
from core.errors import SirsnError

log = logging.getLogger(__name__)

SEPARATOR = "=" * 70


def _gammas(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(g) for g in raw.split(",") if g.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from None


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Pairwise route network between two clusters")
    add_run_flags(parser)
    parser.add_argument("--gammas", type=_gammas, help="Comma-separated gamma values.")
    parser.add_argument("--cluster-size", dest="cluster_size", type=int, help="Points per cluster.")
    parser.add_argument("--point", dest="points", type=parse_point, action="append",
                        help="Explicit endpoint x,y (repeatable).")
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        c = run_config(args, "network")
        if args.gammas:
            c = dataclasses.replace(c, network_gammas=args.gammas)
        if args.cluster_size is not None:
            if args.cluster_size < 0:
                parser.error("--cluster-size must be non-negative")
            c = dataclasses.replace(c, cluster_size=args.cluster_size)
        print(f"\n{SEPARATOR}")
        print(f"Route network  [{c.label()}]")
        print(f"  gammas={', '.join(f'{g:g}' for g in c.network_gammas)}  seed={c.seed}")
        print(f"  lines per window={c.network_line_budget}  cluster size={c.cluster_size}")
        print(f"{SEPARATOR}\n")
        report = cmd_network(c, args.points)
    except SirsnError as exc:
        log.error("Error: %s", exc)
        return exc.exit_code
    report.print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
