#!/usr/bin/env python3
"""
pipeline/02_route.py - Fastest route between two points of the window.

Single level (default)
    Samples at --v-floor, builds the arrangement, injects both endpoints with
    WALK speed --epsilon and writes route.json, graph.json and route.svg.

Coupled refinement (--levels N, N > 1)
    Halves the floor N−1 times on one coupled sample at fixed ε and also
    writes convergence.csv (level, v_floor, epsilon, k_nearest, time, length,
    walk_time). Times never increase from one row to the next.

Flags
-----
--from X,Y / --to X,Y   Endpoints (default −0.5,0 and 0.5,0).
--dev, --verbose and the run flags, see --help.

Exit codes: 0 success, 1 disconnected, 2 usage, 3 resource cap, 4 I/O.
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.commands import add_run_flags, cmd_route, configure_logging, parse_point, run_config
from core.errors import SirsnError

log = logging.getLogger(__name__)

SEPARATOR = "=" * 70


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Minimum-time route on a line sample")
    add_run_flags(parser)
    parser.add_argument("--from", dest="x1", type=parse_point, default=(-0.5, 0.0), help="Start point x,y.")
    parser.add_argument("--to", dest="x2", type=parse_point, default=(0.5, 0.0), help="End point x,y.")
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        c = run_config(args, "route")
        print(f"\n{SEPARATOR}")
        print(f"Route {args.x1} -> {args.x2}  [{c.label()}]")
        print(f"  gamma={c.gamma:g}  v_floor={c.v_floor:g}  epsilon={c.epsilon:g}  levels={c.levels}")
        print(f"{SEPARATOR}\n")
        report = cmd_route(c, args.x1, args.x2)
    except SirsnError as exc:
        log.error("Error: %s", exc)
        return exc.exit_code
    report.print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
