"""
core/commands.py - The four commands behind the pipeline scripts.

Each command takes a RunConfig snapshot (see config.py), runs its stages
under StageTimer, writes its files into ``config.out_dir`` and returns the
RunReport listing stage timings and written paths. Errors are SirsnError
subclasses; the scripts turn them into exit codes.
"""

import argparse
import dataclasses
import json
import logging
import math
from pathlib import Path

import config as cfg
from config import RunConfig
from core import experiments, render, serialize
from core.arrangement import build, inject_terminal
from core.checkpoint import checkpoint_path
from core.errors import UsageError
from core.geodesics import Schedule, converge, require_routing_gamma, shortest_time_route, validate_route
from core.geometry import Disk, Point
from core.line_process import ProcessParams, sample
from core.timing import RunReport, StageTimer

logger = logging.getLogger(__name__)


def _out(c: RunConfig, name: str) -> Path:
    return Path(c.out_dir) / name


def _window(c: RunConfig) -> Disk:
    return Disk((0.0, 0.0), c.radius)


def _check_point(window: Disk, p: Point, flag: str) -> Point:
    p = (float(p[0]), float(p[1]))
    if not all(math.isfinite(x) for x in p):
        raise UsageError(f"{flag} must be finite, got {p}")
    if not window.contains(p):
        raise UsageError(f"{flag} {p} lies outside the window of radius {window.radius}")
    return p


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def cmd_sample(c: RunConfig) -> RunReport:
    """Sample the lines hitting the window and write sample.json / sample.svg."""
    c.validate()
    report = RunReport("sample")
    with StageTimer("Sample lines") as t:
        smp = sample(ProcessParams(c.gamma, c.seed), _window(c), c.v_floor, max_lines=c.max_lines)
    report.record(t.name, t.elapsed)
    logger.info("sampled %d lines (gamma=%g, v_floor=%g, R=%g)", len(smp.lines), c.gamma, c.v_floor, c.radius)

    if "json" in c.formats:
        report.wrote(serialize.write_json(_out(c, "sample.json"), serialize.sample_to_dict(smp)))
    if "svg" in c.formats:
        report.wrote(render.write_svg(_out(c, "sample.svg"), render.render_sample(smp)))
    return report


# ---------------------------------------------------------------------------
# route
# ---------------------------------------------------------------------------

def cmd_route(c: RunConfig, x1: Point, x2: Point) -> RunReport:
    """
    Route x1 → x2 and write route.json (with its validation), graph.json and
    route.svg. With ``levels`` > 1 the floor is halved per level at fixed ε
    on coupled samples, and convergence.csv gets one row per level.
    """
    c.validate(routing=True)
    window = _window(c)
    x1 = _check_point(window, x1, "--from")
    x2 = _check_point(window, x2, "--to")
    report = RunReport("route")
    params = ProcessParams(c.gamma, c.seed)
    convergence = None

    if c.levels == 1:
        with StageTimer("Sample lines") as t:
            smp = sample(params, window, c.v_floor, max_lines=c.max_lines)
        report.record(t.name, t.elapsed)
        with StageTimer("Build arrangement") as t:
            graph = build(smp, max_intersections=c.max_intersections, merge_tol=c.merge_tol)
            graph, t1 = inject_terminal(graph, x1, c.epsilon, k_nearest=c.k_nearest)
            graph, t2 = inject_terminal(graph, x2, c.epsilon, k_nearest=c.k_nearest)
        report.record(t.name, t.elapsed)
        with StageTimer("Shortest route") as t:
            route = shortest_time_route(graph, t1, t2, tie_tol=c.tie_tol)
        report.record(t.name, t.elapsed)
    else:
        schedule = Schedule.coupled(tuple(c.v_floor * 2.0 ** -k for k in range(c.levels)), c.epsilon, c.k_nearest)
        with StageTimer("Converge") as t:
            convergence = converge(
                x1, x2, params, schedule, window,
                max_lines=c.max_lines, max_intersections=c.max_intersections,
                stability_tol=c.stability_tol, tie_tol=c.tie_tol,
            )
        report.record(t.name, t.elapsed)
        if not convergence.levels:
            raise UsageError("the first schedule level already exceeds the resource caps; raise --v-floor")
        if convergence.truncated:
            logger.warning("schedule truncated after %d of %d levels", len(convergence.levels), c.levels)
        route = convergence.routes[-1]
        smp = convergence.final_sample
        graph = None

    check = validate_route(route, smp, c.epsilon)
    logger.info(
        "route time %.6g, length %.6g, walk time %.3g%s",
        route.total_time, route.total_length, route.walk_time, " (tie)" if route.tie else "",
    )
    if not check.passed:
        logger.warning("route failed validation: %s", "; ".join(check.failures))

    if "json" in c.formats:
        doc = serialize.route_to_dict(route)
        doc["validation"] = {
            "on_lines": check.on_lines,
            "walk_speed": check.walk_speed,
            "walk_budget": check.walk_budget,
            "continuous": check.continuous,
            "epsilon_effective": check.epsilon_effective,
        }
        if convergence is not None:
            doc["convergence"] = serialize.convergence_to_dict(convergence)
        report.wrote(serialize.write_json(_out(c, "route.json"), doc))
        if graph is not None:
            report.wrote(serialize.write_json(_out(c, "graph.json"), serialize.graph_to_dict(graph)))
    if convergence is not None and "csv" in c.formats:
        report.wrote(serialize.write_csv(
            _out(c, "convergence.csv"), serialize.CONVERGENCE_COLUMNS, serialize.convergence_rows(convergence),
        ))
    if "svg" in c.formats:
        report.wrote(render.write_svg(_out(c, "route.svg"), render.render_route(smp, route)))
    return report


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

SHARING_COLUMNS = ("gamma", "union_length", "shared_length", "sharing_fraction")


def _gamma_tag(gamma: float) -> str:
    return f"{gamma:g}".replace(".", "_")


def cmd_network(c: RunConfig, points: list[Point] | None = None) -> RunReport:
    """
    Route all pairs of the two endpoint clusters at every γ of the figure.

    Writes network_gamma<γ>.svg per γ, network_routes.json and sharing.csv.
    ``points`` replaces the seeded clusters; an empty set produces empty
    figures.
    """
    c.validate()
    for g in c.network_gammas:
        require_routing_gamma(g)
    window = _window(c)
    if points is not None:
        points = [_check_point(window, p, "--point") for p in points]
    report = RunReport("network")
    rows = []
    routes_doc = []
    for gamma in c.network_gammas:
        with StageTimer(f"Network gamma={gamma:g}") as t:
            run = experiments.network_routes(
                gamma, c.seed, c.network_line_budget, c.cluster_size, c.epsilon_ratio, c.radius,
                points=points, max_lines=c.max_lines, max_intersections=c.max_intersections,
            )
        report.record(t.name, t.elapsed)
        logger.info(
            "gamma=%g: %d lines, %d routes, sharing fraction %.4f",
            gamma, len(run.sample.lines), len(run.routes), run.sharing_fraction,
        )
        rows.append((gamma, run.union_length, run.shared_length, run.sharing_fraction))
        routes_doc.append({
            "gamma": gamma,
            "v_floor": run.sample.v_floor,
            "epsilon": run.epsilon,
            "points": [list(p) for p in run.points],
            "routes": [serialize.route_to_dict(r) for r in run.routes],
        })
        if "svg" in c.formats:
            path = _out(c, f"network_gamma{_gamma_tag(gamma)}.svg")
            report.wrote(render.write_svg(path, render.render_network(run.sample, run.routes, run.points)))

    if "json" in c.formats:
        report.wrote(serialize.write_json(_out(c, "network_routes.json"), {"seed": c.seed, "networks": routes_doc}))
    if "csv" in c.formats:
        report.wrote(serialize.write_csv(_out(c, "sharing.csv"), SHARING_COLUMNS, rows))
    return report


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

def experiment_options(c: RunConfig, name: str) -> dict:
    """Options handed to the experiment; explicit ``c.options`` win."""
    options = {
        "seed": c.seed,
        "n_replicates": c.replicates,
        "schedule": Schedule(c.schedule_v_floors, c.schedule_epsilons, c.schedule_k),
        "max_points": c.max_points,
        "tie_tol": c.tie_tol,
        "checkpoint": checkpoint_path(c.out_dir, name),
        "progress": True,
    }
    options.update(c.options)
    return options


def cmd_experiment(c: RunConfig, name: str) -> tuple[RunReport, experiments.ExperimentReport]:
    """
    Run a registered experiment and write <name>.json, plus <name>.csv for
    tabular results and <name>_trace.csv for chain trajectories.
    """
    c.validate()
    if name not in experiments.EXPERIMENTS:
        raise UsageError(
            f"unknown experiment {name!r}; available: {', '.join(sorted(experiments.EXPERIMENTS))}"
        )
    report = RunReport(f"experiment {name}")
    with StageTimer(name) as t:
        result = experiments.run_experiment(name, **experiment_options(c, name))
    report.record(t.name, t.elapsed)
    logger.info("%s: %s", name, result.verdict)

    if "json" in c.formats:
        report.wrote(serialize.write_json(_out(c, f"{name}.json"), result.to_dict()))
    if result.table and "csv" in c.formats:
        header, rows = serialize.table_rows(result.to_dict()["table"])
        report.wrote(serialize.write_csv(_out(c, f"{name}.csv"), header, rows))
    if result.trace is not None and "csv" in c.formats:
        rows = serialize.trace_rows(result.trace)
        report.wrote(serialize.write_csv(_out(c, f"{name}_trace.csv"), serialize.TRACE_COLUMNS, rows))
    return report, result


# ---------------------------------------------------------------------------
# Command-line plumbing shared by the pipeline scripts
# ---------------------------------------------------------------------------

def parse_point(raw: str) -> Point:
    """'x,y' → (x, y); argparse type."""
    try:
        x, y = (float(p) for p in raw.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {raw!r}") from None
    return (x, y)


def parse_param(raw: str) -> tuple[str, object]:
    """'key=value' with a JSON value when it parses as one, else the string."""
    key, sep, value = raw.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {raw!r}")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    if isinstance(parsed, list):
        parsed = tuple(tuple(p) if isinstance(p, list) else p for p in parsed)
    return key.replace("-", "_"), parsed


def add_run_flags(parser: argparse.ArgumentParser) -> None:
    """Flags every script accepts; unset flags keep the snapshot's value."""
    parser.add_argument("--dev", action="store_true",
                        help=f"Dev mode: write to {cfg.DEV_OUTPUT_DIR}, {cfg.DEV_REPLICATES} replicates, "
                             "shorter schedule.")
    parser.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging with timestamps.")
    parser.add_argument("--gamma", type=float, help=f"Speed-law exponent (default {cfg.GAMMA}).")
    parser.add_argument("--v-floor", dest="v_floor", type=float, help=f"Speed floor (default {cfg.V_FLOOR}).")
    parser.add_argument("--epsilon", type=float, help=f"WALK speed (default {cfg.EPSILON}).")
    parser.add_argument("--radius", type=float, help=f"Window radius (default {cfg.RADIUS}).")
    parser.add_argument("--seed", type=int, help=f"Root seed (default {cfg.SEED}).")
    parser.add_argument("--levels", type=int, help="Refinement levels (default 1).")
    parser.add_argument("--k-nearest", dest="k_nearest", type=int,
                        help=f"Access feet per terminal (default {cfg.K_NEAREST}).")
    parser.add_argument("--out", dest="out_dir", type=Path, help="Output directory.")
    parser.add_argument("--format", dest="formats", action="append", choices=cfg.FORMATS,
                        help="Output format; repeat for several (default: all).")


RUN_FLAGS = ("gamma", "v_floor", "epsilon", "radius", "seed", "levels", "k_nearest", "out_dir")


def run_config(args: argparse.Namespace, command: str) -> RunConfig:
    """The prod or dev snapshot with the flags given on the command line laid over it."""
    c = cfg.dev() if args.dev else cfg.prod()
    overrides = {k: getattr(args, k) for k in RUN_FLAGS if getattr(args, k, None) is not None}
    if getattr(args, "formats", None):
        overrides["formats"] = tuple(dict.fromkeys(args.formats))
    return dataclasses.replace(c, command=command, **overrides)


def configure_logging(verbose: bool) -> None:
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
            force=True,
        )
    else:
        logging.basicConfig(level=logging.INFO, format="%(message)s", force=True)
