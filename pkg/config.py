"""
Central configuration for the speed-marked line network toolkit.

All tuneable values live here. Every other module imports from this file.
Values are read from environment variables (populated from a .env file via
python-dotenv). Defaults reproduce the documented reference runs, so an
empty environment is a valid configuration.

Production vs. development mode
--------------------------------
Pipeline scripts accept a ``--dev`` flag. When active, they call
``config.dev()`` which returns a ``RunConfig`` snapshot of the production
values with the following overrides:

  - OUTPUT_DIR   → DEV_OUTPUT_DIR   (isolated from reference outputs)
  - REPLICATES   → DEV_REPLICATES   (quick statistical runs)
  - schedule     → first DEV_SCHEDULE_LEVELS levels of the default schedule

Seeds, tolerances and guardrails are identical to prod, so a dev run is a
prefix of the production run and never a different experiment.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import load_dotenv

from core.errors import UsageError

load_dotenv()


def _floats(raw: str) -> tuple[float, ...]:
    """Parse a comma-separated list of floats; fractions like 1/8 are allowed."""
    values = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if "/" in part:
            num, den = part.split("/", 1)
            values.append(float(num) / float(den))
        else:
            values.append(float(part))
    return tuple(values)


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in raw.split(",") if p.strip())


# ---------------------------------------------------------------------------
# Run defaults
# ---------------------------------------------------------------------------
# Fixed documented seed; runs never seed from the wall clock.
SEED: int = int(os.getenv("SIRSN_SEED", "1729"))
GAMMA: float = float(os.getenv("SIRSN_GAMMA", "3.0"))
V_FLOOR: float = float(os.getenv("SIRSN_V_FLOOR", "1.0"))
EPSILON: float = float(os.getenv("SIRSN_EPSILON", "0.05"))
RADIUS: float = float(os.getenv("SIRSN_RADIUS", "1.0"))
K_NEAREST: int = int(os.getenv("SIRSN_K_NEAREST", "64"))

# ---------------------------------------------------------------------------
# Guardrails
# ---------------------------------------------------------------------------
MAX_LINES: int = int(float(os.getenv("SIRSN_MAX_LINES", "1e6")))
MAX_INTERSECTIONS: int = int(float(os.getenv("SIRSN_MAX_INTERSECTIONS", "5e7")))
MAX_POINTS: int = int(os.getenv("SIRSN_MAX_POINTS", "64"))

# ---------------------------------------------------------------------------
# Tolerances
# ---------------------------------------------------------------------------
# Vertex merge distance, relative to the clip radius.
MERGE_TOL: float = float(os.getenv("SIRSN_MERGE_TOL", "1e-9"))
TIE_TOL: float = float(os.getenv("SIRSN_TIE_TOL", "1e-9"))
STABILITY_TOL: float = float(os.getenv("SIRSN_STABILITY_TOL", "0.01"))
ANGLE_TOL: float = 1e-12

# ---------------------------------------------------------------------------
# Convergence schedule
# ---------------------------------------------------------------------------
SCHEDULE_V_FLOORS: tuple[float, ...] = _floats(
    os.getenv("SIRSN_SCHEDULE_V_FLOORS", "1,1/2,1/4,1/8,1/16")
)
SCHEDULE_EPSILONS: tuple[float, ...] = _floats(
    os.getenv("SIRSN_SCHEDULE_EPSILONS", "0.05,0.025,0.0125,0.00625,0.003125")
)
SCHEDULE_K: tuple[int, ...] = _ints(os.getenv("SIRSN_SCHEDULE_K", "16,24,32,48,64"))

# ---------------------------------------------------------------------------
# Network figure
# ---------------------------------------------------------------------------
NETWORK_GAMMAS: tuple[float, ...] = _floats(os.getenv("SIRSN_NETWORK_GAMMAS", "2.1,4,8,16"))
# Expected number of lines hitting the window at every γ of the figure.
NETWORK_LINE_BUDGET: int = int(os.getenv("SIRSN_NETWORK_LINE_BUDGET", "150"))
CLUSTER_SIZE: int = int(os.getenv("SIRSN_CLUSTER_SIZE", "6"))
# WALK speed as a fraction of the speed floor when ε is derived from v_floor.
EPSILON_RATIO: float = float(os.getenv("SIRSN_EPSILON_RATIO", "0.5"))

# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------
REPLICATES: int = int(os.getenv("SIRSN_REPLICATES", "500"))

# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------
OUTPUT_DIR: Path = Path(os.getenv("SIRSN_OUTPUT_DIR", "./output"))
FORMATS: tuple[str, ...] = ("json", "csv", "svg")

# ---------------------------------------------------------------------------
# Development mode overrides
# ---------------------------------------------------------------------------
DEV_OUTPUT_DIR: Path = Path(os.getenv("SIRSN_DEV_OUTPUT_DIR", "./output/dev"))
DEV_REPLICATES: int = int(os.getenv("SIRSN_DEV_REPLICATES", "40"))
DEV_SCHEDULE_LEVELS: int = int(os.getenv("SIRSN_DEV_SCHEDULE_LEVELS", "3"))


# ---------------------------------------------------------------------------
# Run config snapshot
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """
    A snapshot of every value a command needs.

    Commands work with a RunConfig instance (the production snapshot or the
    dev snapshot returned by ``dev()``), overlaid with command-line flags via
    ``dataclasses.replace``, so scripts carry no mode-specific branches.
    """
    command: str = ""
    gamma: float = GAMMA
    v_floor: float = V_FLOOR
    epsilon: float = EPSILON
    radius: float = RADIUS
    seed: int = SEED
    levels: int = 1
    k_nearest: int = K_NEAREST
    out_dir: Path = OUTPUT_DIR
    formats: tuple[str, ...] = FORMATS
    # Guardrails
    max_lines: int = MAX_LINES
    max_intersections: int = MAX_INTERSECTIONS
    max_points: int = MAX_POINTS
    # Tolerances
    merge_tol: float = MERGE_TOL
    tie_tol: float = TIE_TOL
    stability_tol: float = STABILITY_TOL
    # Schedule
    schedule_v_floors: tuple[float, ...] = SCHEDULE_V_FLOORS
    schedule_epsilons: tuple[float, ...] = SCHEDULE_EPSILONS
    schedule_k: tuple[int, ...] = SCHEDULE_K
    # Network / experiments
    network_gammas: tuple[float, ...] = NETWORK_GAMMAS
    network_line_budget: int = NETWORK_LINE_BUDGET
    cluster_size: int = CLUSTER_SIZE
    epsilon_ratio: float = EPSILON_RATIO
    replicates: int = REPLICATES
    options: dict = field(default_factory=dict)
    # Mode
    is_dev: bool = False

    def label(self) -> str:
        """Human-readable mode label for log output."""
        return "DEV" if self.is_dev else "PROD"

    def validate(self, routing: bool = False) -> "RunConfig":
        """
        Raise UsageError for values no command can run with.

        ``routing`` adds the γ > 2 requirement of every routing command.
        Returns self so calls can be chained.
        """
        if not self.v_floor > 0:
            raise UsageError(f"--v-floor must be positive, got {self.v_floor}")
        if not self.epsilon > 0:
            raise UsageError(f"--epsilon must be positive, got {self.epsilon}")
        if not self.radius > 0:
            raise UsageError(f"--radius must be positive, got {self.radius}")
        if self.levels < 1:
            raise UsageError(f"--levels must be at least 1, got {self.levels}")
        if self.k_nearest < 1:
            raise UsageError(f"--k-nearest must be at least 1, got {self.k_nearest}")
        if not 0 <= self.seed < 2**64:
            raise UsageError(f"--seed must be an unsigned 64-bit integer, got {self.seed}")
        if routing and not self.gamma > 2:
            raise UsageError(f"routing commands need gamma > 2, got {self.gamma}")
        if not self.gamma > 1:
            raise UsageError(f"gamma must exceed 1, got {self.gamma}")
        unknown = set(self.formats) - set(FORMATS)
        if unknown:
            raise UsageError(
                f"unknown format(s) {sorted(unknown)}; choose from {', '.join(FORMATS)}"
            )
        return self


def prod() -> RunConfig:
    """Return the production RunConfig (reads module-level variables)."""
    return RunConfig(is_dev=False)


def dev() -> RunConfig:
    """
    Return a dev-mode RunConfig with an isolated output directory, fewer
    replicates and a truncated schedule. Seeds and tolerances are inherited.
    """
    n = max(1, DEV_SCHEDULE_LEVELS)
    return RunConfig(
        out_dir=DEV_OUTPUT_DIR,
        replicates=DEV_REPLICATES,
        schedule_v_floors=SCHEDULE_V_FLOORS[:n],
        schedule_epsilons=SCHEDULE_EPSILONS[:n],
        schedule_k=SCHEDULE_K[:n],
        is_dev=True,
    )
