#!/usr/bin/env python3
"""
pipeline/01_sample.py - Sample the speed-marked lines hitting a disk window.

Writes <out>/sample.json (versioned line sample) and <out>/sample.svg
(lines shaded by speed).

Flags
-----
--dev        Dev-mode config (output/dev/).
--verbose    DEBUG logging.
--gamma, --v-floor, --radius, --seed, --out, --format   see --help.

Exit codes: 0 success, 2 usage, 3 resource cap, 4 I/O.
Configuration comes from .env via config.py.
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.commands import add_run_flags, cmd_sample, configure_logging, run_config
from core.errors import SirsnError

log = logging.getLogger(__name__)

SEPARATOR = "=" * 70


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Sample a speed-marked Poisson line process")
    add_run_flags(parser)
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        c = run_config(args, "sample")
        print(f"\n{SEPARATOR}")
        print(f"Line sample  [{c.label()}]")
        print(f"  gamma={c.gamma:g}  v_floor={c.v_floor:g}  R={c.radius:g}  seed={c.seed}")
        print(f"  Output : {c.out_dir}")
        print(f"{SEPARATOR}\n")
        report = cmd_sample(c)
    except SirsnError as exc:
        log.error("Error: %s", exc)
        return exc.exit_code
    report.print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
