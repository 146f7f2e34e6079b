"""
Unit tests for core/experiments.py

The heavy statistical runs live in tests/eval/acceptance.py; here each
experiment is exercised with a handful of replicates.
"""

import json
import math

import numpy as np
import pytest

from core import checkpoint as ckpt
from core.arrangement import build, inject_terminal
from core.comparison import ComparisonParams, escape_time_partial_sum
from core.errors import UsageError
from core.experiments import (
    EXPERIMENTS,
    ExperimentReport,
    SEED,
    ball_pair_hitting_test,
    best_path_time,
    cost_density_validation,
    escape_dichotomy_test,
    fastest_line_law,
    forcing_fixture_test,
    line_count_means,
    optimality_oracle,
    perpetuity_mean_test,
    replicate_seeds,
    run_experiment,
    run_replicates,
    shared_prefix_time,
    tree_dominance_test,
    triangle_tie_test,
)
from core.geodesics import LINE, Route, RouteSegment, shortest_time_route
from core.geometry import Disk, cost_intensity_density, measure_lines_meeting_two_disks
from core.line_process import derive_seed, stream


def _report(**overrides) -> ExperimentReport:
    fields = dict(
        name="x", parameters={}, replicates=1, statistics={}, thresholds={},
        passed=True, seed=0,
    )
    fields.update(overrides)
    return ExperimentReport(**fields)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

class TestExperimentReport:
    def test_verdicts(self):
        assert _report(passed=True).verdict == "PASS"
        assert _report(passed=False).verdict == "FAIL"
        assert _report(passed=None).verdict == "REPORT ONLY"
        assert _report(passed=None, applicable=False).verdict == "NOT APPLICABLE"

    def test_to_dict_is_json_safe(self):
        report = _report(
            parameters={"window": Disk((0.0, 0.0), 1.0), "grid": ((3.0, 1.0),)},
            statistics={"count": np.int64(3), "values": np.array([0.5, 1.5]), 2: "int key"},
        )
        doc = json.loads(json.dumps(report.to_dict()))
        assert doc["statistics"]["count"] == 3
        assert doc["statistics"]["values"] == [0.5, 1.5]
        assert doc["statistics"]["2"] == "int key"
        assert doc["parameters"]["window"]["radius"] == 1.0


# ---------------------------------------------------------------------------
# Replicate loop
# ---------------------------------------------------------------------------

def _record(i: int, rs: int) -> dict:
    return {"i": i, "seed": rs}


class TestRunReplicates:
    def test_order_and_seeds(self):
        records = run_replicates(_record, 5, 42)
        assert [r["i"] for r in records] == list(range(5))
        assert [r["seed"] for r in records] == replicate_seeds(42, 5)

    def test_deterministic(self):
        assert run_replicates(_record, 4, 7) == run_replicates(_record, 4, 7)

    def test_resumes_from_checkpoint(self, tmp_path, mocker):
        path = tmp_path / "exp_checkpoint.json"
        ckpt.save(path, {"completed": [0, 1], "results": {0: {"i": 100}, 1: {"i": 101}}, "parameters": {"k": 1}})
        fn = mocker.Mock(side_effect=_record)
        records = run_replicates(fn, 3, 0, checkpoint=path, parameters={"k": 1})
        assert fn.call_count == 1
        assert records[0] == {"i": 100}
        assert records[2] == {"i": 2, "seed": derive_seed(0, 2)}
        assert not path.exists()

    def test_other_parameters_start_over(self, tmp_path, mocker):
        path = tmp_path / "exp_checkpoint.json"
        ckpt.save(path, {"completed": [0], "results": {0: {"i": 100}}, "parameters": {"k": 1}})
        fn = mocker.Mock(side_effect=_record)
        records = run_replicates(fn, 2, 0, checkpoint=path, parameters={"k": 2})
        assert fn.call_count == 2
        assert records[0]["i"] == 0

    def test_saves_every_interval(self, tmp_path, mocker):
        spy = mocker.spy(ckpt, "save")
        run_replicates(_record, 5, 0, checkpoint=tmp_path / "c.json", save_interval=2)
        assert spy.call_count == 2


# ---------------------------------------------------------------------------
# Route helpers
# ---------------------------------------------------------------------------

class TestRouteHelpers:
    def test_shared_prefix_time(self):
        a = RouteSegment(LINE, 0, (0.0, 0.0), (1.0, 0.0), 2.0, 1.0, 0.5)
        b = RouteSegment(LINE, 1, (1.0, 0.0), (1.0, 1.0), 1.0, 1.0, 1.0)
        c = RouteSegment(LINE, 2, (1.0, 0.0), (2.0, 1.0), 1.0, math.sqrt(2.0), math.sqrt(2.0))
        r1 = Route((0.0, 0.0), (1.0, 1.0), (a, b))
        r2 = Route((0.0, 0.0), (2.0, 1.0), (a, c))
        assert shared_prefix_time(r1, r2) == 0.5
        assert shared_prefix_time(r1, r1) == 1.5

    def test_best_path_time_matches_dijkstra(self, grid_sample):
        graph, t1 = inject_terminal(build(grid_sample), (0.6, 0.6), 0.1)
        graph, t2 = inject_terminal(graph, (-0.6, -0.1), 0.1)
        route = shortest_time_route(graph, t1, t2)
        found = best_path_time(graph, t1.vertex, t2.vertex, route.total_time * (1.0 + 1e-9))
        assert found == pytest.approx(route.total_time, rel=1e-12)

    def test_best_path_time_nothing_below_bound(self, grid_sample):
        graph, t1 = inject_terminal(build(grid_sample), (0.6, 0.6), 0.1)
        graph, t2 = inject_terminal(graph, (-0.6, -0.1), 0.1)
        route = shortest_time_route(graph, t1, t2)
        assert best_path_time(graph, t1.vertex, t2.vertex, 0.5 * route.total_time) == math.inf


# ---------------------------------------------------------------------------
# Experiments, small runs
# ---------------------------------------------------------------------------

class TestExperiments:
    def test_triangle_tie_passes(self):
        report = triangle_tie_test()
        assert report.verdict == "PASS"
        assert report.statistics["time"] == pytest.approx(1.5)
        assert report.statistics["distinct_routes"]
        assert not report.statistics["perturbed_tie"]

    def test_forcing_broken_chain_not_applicable(self):
        report = forcing_fixture_test(a=7.0, b=14.0, c=100.0, n_endpoint_pairs=1)
        assert not report.applicable
        assert report.passed is None
        assert report.verdict == "NOT APPLICABLE"
        assert report.notes
        assert 0.0 <= report.statistics["compliance"] <= 1.0

    def test_optimality_small(self):
        report = optimality_oracle(n_instances=3, max_lines=6)
        assert report.statistics["agree_networkx"] == 3
        assert report.passed

    def test_ball_pair_measure(self):
        report = ball_pair_hitting_test(n=50)
        assert report.statistics["measure"] == pytest.approx(
            measure_lines_meeting_two_disks((0.0, 0.0), (1.0, 0.0), 0.1)
        )
        assert 0.0 <= report.statistics["observed_miss"] <= 1.0
        assert len(report.seeds) == 50

    def test_fastest_line_small(self):
        report = fastest_line_law(n=200)
        assert report.statistics["expected_empty_fraction"] == pytest.approx(math.exp(-math.pi))
        assert 0.0 <= report.statistics["ks_pvalue"] <= 1.0

    def test_line_counts_table(self):
        report = line_count_means(grid=((3.0, 1.0),), n=100)
        assert len(report.table) == 1
        assert report.table[0]["expected"] == pytest.approx(math.pi)

    def test_line_counts_band_independence(self):
        report = line_count_means(grid=((3.0, 1.0),), n=2_000)
        row = report.table[0]
        assert row["low_band_expected"] == pytest.approx(0.75 * math.pi)
        assert row["high_band_expected"] == pytest.approx(0.1875 * math.pi)
        assert row["band_independence_pvalue"] > 0.01
        assert report.passed

    def test_perpetuity_expected_value(self):
        report = perpetuity_mean_test(n_steps=20_000, burn_in=100)
        assert report.statistics["expected"] == pytest.approx(1.0 / math.pi)
        assert math.isfinite(report.statistics["mean"])

    def test_perpetuity_report_has_plain_types(self):
        report = perpetuity_mean_test(n_steps=5_000, burn_in=10, trace_steps=20)
        assert type(report.passed) is bool
        assert all(type(v) is float for v in report.statistics.values())
        assert len(report.trace.n) == 21
        doc = report.to_dict()
        assert "trace" not in doc
        json.dumps(doc)

    def test_escape_trace_is_first_divergent_chain(self):
        report = escape_dichotomy_test(n_traj=2, checkpoints=(10, 100))
        sums = escape_time_partial_sum(
            ComparisonParams(gamma=2.0, d=2), 100, stream(derive_seed(SEED, 0), "divergent")
        )
        np.testing.assert_allclose(report.trace.partial_sum[1:], sums)

    @pytest.mark.parametrize("gamma", [3.0, 4.0])
    def test_cost_density_passes(self, gamma):
        report = cost_density_validation(gamma=gamma, n_lines=20_000)
        assert math.isfinite(report.statistics["chi2_pvalue"])
        assert report.statistics["cells_tested"] == 64
        assert report.statistics["observed_outside_support"] == 0
        assert report.statistics["density_cell_rel_error"] <= 1e-4
        assert report.passed

    def test_cost_density_catches_wrong_density(self, mocker):
        mocker.patch(
            "core.experiments.cost_intensity_density",
            side_effect=lambda c, th, w, g: 2.0 * cost_intensity_density(c, th, w, g),
        )
        report = cost_density_validation(gamma=3.0, n_lines=5_000)
        assert report.statistics["density_cell_rel_error"] == pytest.approx(1.0, rel=1e-3)
        assert not report.passed

    def test_tree_dominance_small(self):
        report = tree_dominance_test(n_instances=10, depth=2, alpha_factor=1.25, line_budget=25.0)
        stats = report.statistics
        assert stats["plain_dominated"] == stats["dominated"] == stats["valid"] == 10
        assert report.passed


class TestRunExperiment:
    def test_registry_names(self):
        assert {"triangle-tie", "optimality", "network-sharing", "perpetuity-mean"} <= set(EXPERIMENTS)

    def test_unknown_name(self):
        with pytest.raises(UsageError, match="available"):
            run_experiment("no-such-experiment")

    def test_passes_only_accepted_options(self, mocker):
        calls = []

        def fake(n: int = 10, seed: int = 0) -> ExperimentReport:
            calls.append((n, seed))
            return _report(name="fake")

        mocker.patch.dict(EXPERIMENTS, {"fake": fake})
        report = run_experiment("fake", n=3, seed=None, n_trials=99, checkpoint=None)
        assert report.name == "fake"
        assert calls == [(3, 0)]
