import os
import tempfile
import unittest
import xml.etree.ElementTree as ET

import numpy as np
import numpy.testing as npt

from src.core.config import build_config
from src.core.errors import ValidationError
from src.core.utils import derive_seed
from src.harness.evaluation import FixedPolicy, evaluate_add
from src.harness.presets import DELTA_GRID, PRESETS, get_preset, preset_config, run_preset
from src.harness.report import (ResultRow, read_curves_csv, read_results_csv, render_curves_svg, report,
                                write_results_csv)
from src.harness.trainer import CausalDQTrainer, RewardCurve, train
from src.qnet.network import init_params, network_layout

SVG_NS = "{http://www.w3.org/2000/svg}"

SMALL = {
    "p": 6, "m": 3, "k": 2, "edge_prob": 0.4, "horizon": 20, "episodes": 2, "replications": 3, "seed": 11,
    "hidden": "8,8", "warmup": 8, "batch_size": 8, "replay_capacity": 200, "sync_period": 5,
    "context_window": 30, "max_cond": 1,
}


def small_config(**overrides):
    flat = dict(SMALL)
    flat.update(overrides)
    return build_config().with_overrides(**flat)


def sample_rows():
    return [
        ResultRow(method="Causal DQ", p=10, m=6, delta=1.0, sigma=0.0, mean_add=10.8, stderr=0.123456789012345,
                  false_alarm_rate=0.01, seed_count=100),
        ResultRow(method="Non-Causal DQ", p=10, m=6, delta=1.0, sigma=0.0, mean_add=13.3, stderr=1 / 3,
                  false_alarm_rate=0.0, seed_count=100),
    ]


class TestTraining(unittest.TestCase):

    def test_zero_episodes_returns_initial_params(self):
        cfg = small_config(episodes=0)
        result = train(cfg)
        self.assertEqual(len(result.curve), 0)
        expected = init_params(network_layout(cfg.p, cfg.net.hidden), derive_seed(cfg.seed, "init"))
        for got, want in zip(result.params.tensors(), expected.tensors()):
            npt.assert_array_equal(got.numpy(), want.numpy())

    def test_curve_length_matches_episodes(self):
        result = train(small_config(mode="non_causal"))
        self.assertEqual(len(result.curve), 2)
        self.assertEqual(len(result.losses), 2)
        self.assertTrue(all(np.isfinite(result.curve.values)))

    def test_training_is_deterministic(self):
        cfg = small_config()
        first, second = train(cfg), train(cfg)
        self.assertEqual(first.curve.values, second.curve.values)
        for a, b in zip(first.params.tensors(), second.params.tensors()):
            npt.assert_array_equal(a.numpy(), b.numpy())

    def test_causal_run_records_graph_metrics(self):
        result = train(small_config(cpe_source="ground_truth"))
        self.assertIsNotNone(result.metrics[-1])

    def test_non_causal_run_has_no_graph_metrics(self):
        result = train(small_config(mode="non_causal"))
        self.assertEqual(result.metrics, [None, None])

    def test_training_updates_the_network(self):
        cfg = small_config(mode="non_causal")
        trainer = CausalDQTrainer(cfg)
        before = trainer.online.clone()
        trainer.train()
        self.assertGreater(trainer.optimizer_steps, 0)
        changed = any(not np.array_equal(a.numpy(), b.numpy())
                      for a, b in zip(before.tensors(), trainer.online.tensors()))
        self.assertTrue(changed)


class TestRewardCurve(unittest.TestCase):

    def test_plateau_without_smoothing(self):
        self.assertEqual(RewardCurve([0.0, 0.0, 10.0, 10.0, 10.0]).plateau_episode(window=1), 2)

    def test_plateau_with_smoothing(self):
        self.assertEqual(RewardCurve([0.0, 0.0, 10.0, 10.0, 10.0]).plateau_episode(window=2), 3)

    def test_plateau_of_negative_rewards(self):
        self.assertEqual(RewardCurve([-40.0, -30.0, -2.0, -1.0]).plateau_episode(window=1), 2)

    def test_empty_curve(self):
        self.assertIsNone(RewardCurve().plateau_episode())
        self.assertEqual(RewardCurve().smoothed().size, 0)

    def test_tail_mean(self):
        self.assertAlmostEqual(RewardCurve([1.0, 2.0, 3.0]).tail_mean(2), 2.5)


class TestEvaluation(unittest.TestCase):

    def test_zero_shift_is_censored_at_horizon(self):
        cfg = small_config(delta_test=0.0, noise_sigma=0.1, mode="non_causal", replications=5)
        add = evaluate_add(None, cfg, policy=FixedPolicy((0, 1, 2)))
        self.assertEqual(add.mean_add, cfg.horizon)
        self.assertEqual(add.stderr, 0.0)
        self.assertEqual(add.per_rep, (cfg.horizon,) * 5)

    def test_oracle_policy_detects_large_shift_quickly(self):
        cfg = build_config().with_overrides(p=10, m=5, k=5, delta_test=2.0, horizon=200, replications=10,
                                            mode="non_causal", seed=3)
        add = evaluate_add(None, cfg, policy=FixedPolicy(range(5)))
        self.assertLessEqual(add.mean_add, 10.0)
        self.assertTrue(all(0 <= d <= cfg.horizon for d in add.per_rep))

    def test_stderr_matches_two_pass_computation(self):
        cfg = small_config(delta_test=0.5, mode="non_causal", replications=8, horizon=40)
        add = evaluate_add(None, cfg, policy=FixedPolicy((0, 1, 2)))
        delays = np.array(add.per_rep, dtype=float)
        mean = delays.sum() / delays.size
        variance = ((delays - mean) ** 2).sum() / (delays.size - 1)
        self.assertAlmostEqual(add.mean_add, mean)
        self.assertAlmostEqual(add.stderr, np.sqrt(variance / delays.size))
        self.assertGreaterEqual(add.stderr, 0.0)

    def test_replications_do_not_depend_on_count(self):
        cfg = small_config(delta_test=0.5, mode="non_causal", horizon=40)
        short = evaluate_add(None, cfg, replications=3, policy=FixedPolicy((0, 3, 5)))
        long = evaluate_add(None, cfg, replications=6, policy=FixedPolicy((0, 3, 5)))
        self.assertEqual(long.per_rep[:3], short.per_rep)
        self.assertEqual(long.false_alarms[:3], short.false_alarms)

    def test_worker_count_does_not_change_results(self):
        cfg = small_config(delta_test=0.5, mode="non_causal", horizon=40, replications=4)
        serial = evaluate_add(None, cfg, policy=FixedPolicy((0, 1, 4)))
        parallel = evaluate_add(None, cfg.with_overrides(workers=2), policy=FixedPolicy((0, 1, 4)))
        self.assertEqual(serial.per_rep, parallel.per_rep)
        self.assertEqual(serial.false_alarms, parallel.false_alarms)

    def test_trained_policy_with_causal_source(self):
        cfg = small_config(cpe_source="ground_truth", episodes=1)
        add = evaluate_add(train(cfg).params, cfg)
        self.assertEqual(add.replications, cfg.replications)
        self.assertTrue(0 <= add.mean_add <= cfg.horizon)
        self.assertTrue(0.0 <= add.false_alarm_rate <= 1.0)

    def test_needs_params_or_policy(self):
        with self.assertRaises(ValidationError):
            evaluate_add(None, small_config())

    def test_rejects_zero_replications(self):
        with self.assertRaises(ValidationError):
            evaluate_add(None, small_config(), replications=0, policy=FixedPolicy((0, 1, 2)))


class TestReport(unittest.TestCase):

    def test_single_row_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "results.csv")
            write_results_csv(sample_rows()[:1], path)
            with open(path, encoding="utf-8") as handle:
                lines = handle.read().strip().splitlines()
            self.assertEqual(len(lines), 2)
            self.assertEqual(lines[0], "method,p,m,delta,sigma,mean_add,stderr,false_alarm_rate,seed_count")

    def test_results_reparse_to_full_precision(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "results.csv")
            write_results_csv(sample_rows(), path)
            self.assertEqual(read_results_csv(path), sample_rows())

    def test_empty_results_rejected(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ValidationError):
                write_results_csv([], os.path.join(tmp, "results.csv"))

    def test_report_writes_csv_and_svg(self):
        curves = {"Causal DQ": [-20.0, -5.0, 3.5], "Non-Causal DQ": [-20.0, -12.0, -1.0]}
        with tempfile.TemporaryDirectory() as tmp:
            paths = report(sample_rows(), curves, tmp, prefix="run")
            self.assertEqual([os.path.basename(p) for p in paths], ["run.csv", "run_curves.csv", "run_curves.svg"])
            self.assertEqual(read_curves_csv(paths[1]), curves)
            root = ET.parse(paths[2]).getroot()
            self.assertEqual(root.tag, f"{SVG_NS}svg")
            self.assertEqual(len(root.findall(f"{SVG_NS}polyline")), 2)

    def test_report_without_curves(self):
        with tempfile.TemporaryDirectory() as tmp:
            paths = report(sample_rows(), {}, tmp)
            self.assertEqual(paths, [os.path.join(tmp, "results.csv")])

    def test_svg_escapes_series_names(self):
        svg = render_curves_svg({"a < b & c": [1.0, 2.0]})
        root = ET.fromstring(svg)
        self.assertEqual(len(root.findall(f"{SVG_NS}polyline")), 1)
        self.assertIn("a < b & c", [t.text for t in root.iter(f"{SVG_NS}text")])

    def test_svg_of_constant_curve(self):
        ET.fromstring(render_curves_svg({"flat": [2.0, 2.0, 2.0]}))

    def test_unwritable_output_dir(self):
        with tempfile.TemporaryDirectory() as tmp:
            blocker = os.path.join(tmp, "file")
            with open(blocker, "w", encoding="utf-8") as handle:
                handle.write("x")
            with self.assertRaises(ValidationError):
                report(sample_rows(), {}, blocker)


class TestPresets(unittest.TestCase):

    def test_unknown_preset(self):
        with self.assertRaises(ValidationError) as ctx:
            get_preset("p7-case-z")
        self.assertIn("p10-case-a", str(ctx.exception))

    def test_case_a_delta_grid(self):
        self.assertEqual(get_preset("p10-case-a").deltas, DELTA_GRID)
        self.assertEqual(DELTA_GRID, (0.25, 0.5, 1.0, 1.5, 2.0))

    def test_extreme_p50_settings(self):
        cfg = preset_config("extreme-p50")
        self.assertEqual((cfg.p, cfg.k, cfg.m, cfg.horizon), (50, 3, 3, 300))

    def test_ablation_ground_truth_source(self):
        variants = get_preset("ablation-ground-truth").variants
        self.assertEqual([(v.mode, v.cpe_source) for v in variants], [("causal", "ground_truth")])

    def test_combined_ablation_covers_every_source(self):
        sources = {v.cpe_source for v in get_preset("ablation").variants if v.mode == "causal"}
        self.assertEqual(sources, {"none", "low_quality", "discovered", "ground_truth", "adversarial"})

    def test_every_preset_builds_a_valid_config(self):
        for name in PRESETS:
            preset_config(name)

    def test_precedence(self):
        file_sections = {"experiment": {"horizon": 50, "seed": 9}}
        self.assertEqual(preset_config("p10-case-a", file_sections).horizon, 50)
        self.assertEqual(preset_config("extreme-p50", file_sections).horizon, 300)
        cfg = preset_config("extreme-p50", file_sections, {"horizon": 120})
        self.assertEqual((cfg.horizon, cfg.seed), (120, 9))

    def test_grid_point_overrides_preset(self):
        cfg = preset_config("noise-p10", noise_sigma=0.15, mode="non_causal")
        self.assertEqual((cfg.noise_sigma, cfg.mode), (0.15, "non_causal"))

    def test_run_small_preset(self):
        overrides = dict(SMALL, episodes=1, replications=2)
        with tempfile.TemporaryDirectory() as tmp:
            paths = run_preset("ablation-standard", tmp, cli_overrides=overrides)
            self.assertEqual(len(paths), 3)
            rows = read_results_csv(paths[0])
            self.assertEqual(len(rows), 1)
            self.assertEqual((rows[0].method, rows[0].p, rows[0].sigma, rows[0].seed_count),
                             ("Causal DQ", 6, 0.1, 2))


if __name__ == "__main__":
    unittest.main()
