import os
import tempfile
import unittest

import numpy as np

from configs.default_config import DEFAULT_CONFIG
from src.core.config import (ExperimentConfig, NetConfig, build_config, default_key_index, load_config_file,
                             merge_overrides, parse_value)
from src.core.errors import ValidationError
from src.core.utils import as_index_tuple, derive_seed, mean_and_stderr


def write_ini(directory, text):
    path = os.path.join(directory, "run.ini")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    return path


class TestDefaults(unittest.TestCase):

    def test_defaults_build(self):
        cfg = build_config()
        self.assertEqual(cfg.p, DEFAULT_CONFIG["experiment"]["p"])
        self.assertEqual(cfg.net.hidden, (256, 256, 256))
        self.assertEqual(cfg.monitor.lam, DEFAULT_CONFIG["monitor"]["lam"])
        self.assertTrue(cfg.causal)

    def test_keys_are_unique_across_sections(self):
        index = default_key_index()
        self.assertEqual(len(index), sum(len(v) for v in DEFAULT_CONFIG.values()))
        self.assertEqual(index["lam"], "monitor")
        self.assertEqual(index["alpha_ent"], "net")

    def test_sections_round_trip(self):
        cfg = build_config().with_overrides(p=12, hidden="16,8", cpe_refresh="25")
        self.assertEqual(build_config(cfg.to_sections()), cfg)
        self.assertEqual(cfg.to_flat_dict()["hidden"], "16,8")


class TestParsing(unittest.TestCase):

    def test_typed_values(self):
        self.assertIs(parse_value("state_squash", "off", True), False)
        self.assertIs(parse_value("state_squash", "Yes", True), True)
        self.assertEqual(parse_value("p", " 12 ", 10), 12)
        self.assertEqual(parse_value("lr", "1e-3", 5e-3), 1e-3)
        self.assertEqual(parse_value("mode", "non_causal", "causal"), "non_causal")

    def test_unparsable_values(self):
        with self.assertRaises(ValidationError):
            parse_value("p", "ten", 10)
        with self.assertRaises(ValidationError):
            parse_value("state_squash", "maybe", True)

    def test_merge_skips_none_and_rejects_unknown(self):
        merged = merge_overrides({"experiment": {"p": 10}}, {"p": "20", "m": None})
        self.assertEqual(merged["experiment"], {"p": 20})
        with self.assertRaises(ValidationError):
            merge_overrides({}, {"sensors": 3})

    def test_with_overrides_leaves_original(self):
        cfg = build_config()
        changed = cfg.with_overrides(gamma=0.5, mode="non_causal")
        self.assertEqual((changed.net.gamma, changed.mode), (0.5, "non_causal"))
        self.assertEqual(cfg.net.gamma, DEFAULT_CONFIG["net"]["gamma"])
        self.assertFalse(changed.causal)


class TestConfigFile(unittest.TestCase):

    def test_reads_typed_sections(self):
        with tempfile.TemporaryDirectory() as tmp:
            loaded = load_config_file(write_ini(tmp, "[experiment]\np = 50\n\n[net]\nstate_squash = false\nlr = 0.001\n"))
        self.assertEqual(loaded, {"experiment": {"p": 50}, "net": {"state_squash": False, "lr": 0.001}})

    def test_unknown_section(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ValidationError):
                load_config_file(write_ini(tmp, "[sensors]\np = 5\n"))

    def test_unknown_key_is_named(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ValidationError) as ctx:
                load_config_file(write_ini(tmp, "[monitor]\nlambda = 0.1\n"))
        self.assertIn("lambda", str(ctx.exception))

    def test_missing_file(self):
        with self.assertRaises(ValidationError):
            load_config_file("/nonexistent/run.ini")


class TestValidation(unittest.TestCase):

    def assertInvalid(self, **overrides):
        with self.assertRaises(ValidationError):
            build_config().with_overrides(**overrides)

    def test_rejections(self):
        self.assertInvalid(m=11)
        self.assertInvalid(k=11)
        self.assertInvalid(gamma=1.0)
        self.assertInvalid(delta_test=-0.5)
        self.assertInvalid(pattern="c")
        self.assertInvalid(cpe_refresh="often")
        self.assertInvalid(cpe_refresh="0")
        self.assertInvalid(context_window=5)
        self.assertInvalid(penalty=0.0)
        self.assertInvalid(eval_onset=201)
        self.assertInvalid(hidden="8,0")
        self.assertInvalid(cpe_source="oracle")

    def test_zero_episodes_allowed(self):
        self.assertEqual(build_config().with_overrides(episodes=0).episodes, 0)


class TestSchedules(unittest.TestCase):

    def test_initial_temperature_reading(self):
        net = NetConfig(tau0=0.65, tau_decay=0.5, tau_floor=0.1)
        self.assertAlmostEqual(net.temperature(0), 0.65)
        self.assertAlmostEqual(net.temperature(1), 0.325)
        self.assertAlmostEqual(net.temperature(10), 0.1)

    def test_decay_temperature_reading(self):
        net = NetConfig(tau0=0.9, tau_reading="decay", tau_floor=0.01)
        self.assertAlmostEqual(net.temperature(0), 1.0)
        self.assertAlmostEqual(net.temperature(2), 0.81)

    def test_entropy_coefficient_decay(self):
        net = NetConfig(alpha_ent=0.1, alpha_decay=0.5)
        self.assertAlmostEqual(net.entropy_coefficient(2), 0.025)

    def test_refresh_steps(self):
        self.assertIsNone(build_config().discovery.refresh_steps)
        self.assertEqual(build_config().with_overrides(cpe_refresh="25").discovery.refresh_steps, 25)

    def test_alarm_dof(self):
        cfg = ExperimentConfig()
        self.assertEqual(cfg.monitor.dof(10), 10)
        self.assertEqual(build_config().with_overrides(alarm_dof=3).monitor.dof(10), 3)


class TestUtils(unittest.TestCase):

    def test_derive_seed(self):
        self.assertEqual(derive_seed(1, "eval", 3), derive_seed(1, "eval", 3))
        self.assertNotEqual(derive_seed(1, "eval", 3), derive_seed(1, "eval", 4))
        self.assertNotEqual(derive_seed(1, "eval", 3), derive_seed(2, "eval", 3))
        with self.assertRaises(ValidationError):
            derive_seed(1, -1)

    def test_mean_and_stderr(self):
        mean, stderr = mean_and_stderr([1.0, 2.0, 3.0, 4.0])
        self.assertAlmostEqual(mean, 2.5)
        self.assertAlmostEqual(stderr, np.std([1, 2, 3, 4], ddof=1) / 2)
        self.assertEqual(mean_and_stderr([7.0]), (7.0, 0.0))
        with self.assertRaises(ValidationError):
            mean_and_stderr([])

    def test_index_tuple(self):
        self.assertEqual(as_index_tuple([3, 0, 2], 4), (0, 2, 3))
        with self.assertRaises(ValidationError):
            as_index_tuple([0, 0], 4)
        with self.assertRaises(ValidationError):
            as_index_tuple([4], 4)


if __name__ == "__main__":
    unittest.main()
