import os
import sys
import tempfile
import unittest

# Ensure src is in path
sys.path.append(os.path.join(os.path.dirname(__file__), "../src"))

from errors import ParseError
from settings import ALL_METRICS, EvalSettings, parse_metrics


class TestParseMetrics(unittest.TestCase):
    def test_table_order(self):
        self.assertEqual(parse_metrics("kl, NSS,auc_judd"), ("auc_judd", "nss", "kl"))

    def test_presets(self):
        self.assertEqual(parse_metrics("all"), ALL_METRICS)
        self.assertEqual(parse_metrics("location"), ("auc_judd", "auc_borji", "sauc", "nss"))
        self.assertEqual(parse_metrics(["distribution", "nss"]), ("sim", "emd", "cc", "nss", "kl"))

    def test_unknown(self):
        with self.assertRaises(ValueError):
            parse_metrics("auc,kl")
        with self.assertRaises(ValueError):
            parse_metrics(" , ")


class TestEvalSettings(unittest.TestCase):
    def test_defaults(self):
        settings = EvalSettings()
        self.assertEqual(settings.seed, 0)
        self.assertEqual(settings.splits, 100)
        self.assertEqual(settings.emd_max_side, 32)
        self.assertEqual(settings.metrics, ALL_METRICS)
        self.assertGreaterEqual(settings.jobs, 1)

    def test_validation(self):
        with self.assertRaises(ValueError):
            EvalSettings(splits=0)
        with self.assertRaises(ValueError):
            EvalSettings(jobs=0)
        with self.assertRaises(ValueError):
            EvalSettings(map_format="png")

    def test_overrides(self):
        base = EvalSettings(seed=5, splits=10)
        settings = base.with_overrides(seed=None, splits=20, metrics="kl")
        self.assertEqual(settings.seed, 5)
        self.assertEqual(settings.splits, 20)
        self.assertEqual(settings.metrics, ("kl",))

    def test_derived_configs(self):
        settings = EvalSettings(seed=9, splits=7, emd_max_side=16, sigma_degrees=0.5)
        self.assertEqual(settings.auc_config.n_splits, 7)
        self.assertEqual(settings.auc_config.rng.master_seed, 9)
        self.assertEqual(settings.emd_config.max_side, 16)
        self.assertEqual(settings.blur_spec.sigma_degrees, 0.5)

    def test_echo_leaves_out_workers(self):
        echo = EvalSettings(jobs=4).echo()
        self.assertNotIn("jobs", echo)
        self.assertEqual(echo["metrics"], list(ALL_METRICS))
        self.assertEqual(echo["emd_unit"], "downsampled pixels")
        self.assertEqual(EvalSettings(jobs=1).echo(), EvalSettings(jobs=8).echo())

    def test_load_from_filename(self):
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, "settings.toml")
            with open(filename, "w", encoding="utf-8") as f:
                f.write('[eval]\nseed = 11\nmetrics = ["nss", "cc"]\ncolour = "blue"\n')
            with self.assertLogs("settings", level="WARNING") as logs:
                settings = EvalSettings.load_from_filename(filename)
            self.assertEqual(settings.seed, 11)
            self.assertEqual(settings.metrics, ("cc", "nss"))
            self.assertIn("colour", logs.output[0])

            with open(filename, "w", encoding="utf-8") as f:
                f.write("seed = = 1\n")
            with self.assertRaises(ParseError):
                EvalSettings.load_from_filename(filename)

    def test_dict_round_trip(self):
        settings = EvalSettings(seed=2, metrics="sim", jobs=1)
        self.assertEqual(EvalSettings.from_dict(settings.to_dict()), settings)


if __name__ == "__main__":
    unittest.main()
