import contextlib
import io
import os
import sys
import tempfile
import unittest
from unittest.mock import patch

# Ensure src is in path
sys.path.append(os.path.join(os.path.dirname(__file__), "../src"))

from analysis import EvalReport, ScoreRecord
from main import EXIT_FATAL, EXIT_OK, EXIT_PARTIAL, main
from map_file import read_map
from test_evaluator import make_dataset

DATA_DIR = os.path.join(os.path.dirname(__file__), "../data")


def run(*argv: str) -> tuple[int, str]:
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = main(list(argv))
    return code, out.getvalue()


class TestMainArgParsing(unittest.TestCase):
    def test_command_is_required(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                main([])

    @patch("main.ExportReport")
    @patch("main.run_eval")
    @patch("main.load_manifest")
    def test_eval_flags_reach_settings(self, mock_manifest, mock_run_eval, mock_export):
        mock_run_eval.return_value = EvalReport(())
        code = main(
            ["eval", "m.toml", "--seed", "7", "--splits", "9", "--metrics", "kl,cc", "-j", "1"]
        )
        self.assertEqual(code, EXIT_OK)
        mock_manifest.assert_called_once_with("m.toml")
        settings = mock_run_eval.call_args.args[1]
        self.assertEqual((settings.seed, settings.splits, settings.jobs), (7, 9, 1))
        self.assertEqual(settings.metrics, ("cc", "kl"))
        mock_export.assert_called_once_with("report")

    @patch("main.ExportReport")
    @patch("main.run_eval")
    @patch("main.load_manifest")
    def test_flagged_rows_exit_partial(self, mock_manifest, mock_run_eval, mock_export):
        mock_run_eval.return_value = EvalReport(
            (ScoreRecord("m", "i", "nss", 0.0, "degenerate_map"),)
        )
        self.assertEqual(main(["eval", "m.toml", "-j", "1"]), EXIT_PARTIAL)

    def test_config_file_and_override(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = os.path.join(tmp, "salbench.toml")
            with open(config, "w", encoding="utf-8") as f:
                f.write("[eval]\nseed = 4\nsplits = 3\n")
            with patch("main.run_eval", return_value=EvalReport(())) as mock_run_eval:
                with patch("main.load_manifest"), patch("main.ExportReport"):
                    main(["--config", config, "eval", "m.toml", "--splits", "6", "-j", "1"])
            settings = mock_run_eval.call_args.args[1]
            self.assertEqual((settings.seed, settings.splits), (4, 6))


class TestCommands(unittest.TestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.dir = tmp.name

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)

    def test_gtgen(self):
        manifest = make_dataset(self.dir)
        code, _ = run("gtgen", manifest, "-o", self.path("gt"), "--format", "csv")
        self.assertEqual(code, EXIT_OK)
        for i in range(3):
            gt = read_map(self.path(f"gt/img{i}.csv"))
            self.assertAlmostEqual(gt.total, 1.0, delta=1e-9)

    def test_gtgen_partial(self):
        manifest = make_dataset(self.dir, broken_fixations=True)
        code, _ = run("gtgen", manifest, "-o", self.path("gt"))
        self.assertEqual(code, EXIT_PARTIAL)
        self.assertFalse(os.path.exists(self.path("gt/img0.fbm")))
        self.assertTrue(os.path.exists(self.path("gt/img1.fbm")))

    def test_eval_and_compare(self):
        manifest = make_dataset(self.dir)
        stem = self.path("human")
        code, _ = run("eval", manifest, "--models", "human", "--splits", "5", "-j", "1", "-o", stem)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(os.path.exists(stem + ".md"))

        # the center model has no map for the last image
        code, _ = run("eval", manifest, "--splits", "5", "-j", "1", "-o", self.path("all"))
        self.assertEqual(code, EXIT_PARTIAL)

        code, out = run("compare", stem + ".csv", "--metrics", "sim,kl")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("| human | **1.000** |", out)

    def test_compare_mismatched_images(self):
        for name, image in (("a", "img1"), ("b", "img2")):
            with open(self.path(f"{name}.csv"), "w", encoding="utf-8") as f:
                f.write(f"model,image,metric,score,flags\n{name},{image},cc,0.5,\n")
        code, _ = run("compare", self.path("a.csv"), self.path("b.csv"))
        self.assertEqual(code, EXIT_FATAL)

    def test_compare_metric_not_in_report(self):
        with open(self.path("a.csv"), "w", encoding="utf-8") as f:
            f.write("model,image,metric,score,flags\na,img1,sim,0.5,\n")
        code, _ = run("compare", self.path("a.csv"), "--metrics", "kl")
        self.assertEqual(code, EXIT_FATAL)

    def test_eval_with_non_finite_fixation(self):
        manifest = make_dataset(self.dir)
        with open(self.path("fix/img0.csv"), "w", encoding="utf-8") as f:
            f.write("x,y,observer\ninf,1,o\n")
        code, _ = run("eval", manifest, "--models", "human", "-j", "1", "-o", self.path("r"))
        self.assertEqual(code, EXIT_PARTIAL)
        flagged = [r for r in EvalReport.from_csv(self.path("r.csv")).records if r.is_error]
        self.assertEqual({r.image for r in flagged}, {"img0"})

    def test_correlate(self):
        pairs = self.path("pairs.csv")
        with open(pairs, "w", encoding="utf-8") as f:
            f.write("model,top1,score\nA,60,1.3\nB,70,1.1\nC,80,0.6\n")
        code, out = run("correlate", pairs, "--scatter", self.path("points.csv"))
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(out.startswith("r = -0.9"))
        self.assertIn("n = 3", out)
        self.assertTrue(os.path.exists(self.path("points.csv")))

    def test_correlate_needs_input(self):
        self.assertEqual(run("correlate")[0], EXIT_FATAL)
        self.assertEqual(run("correlate", "--report", "r.csv")[0], EXIT_FATAL)

    def test_archplan(self):
        spec = os.path.join(DATA_DIR, "architectures", "densesal.toml")
        expect = os.path.join(DATA_DIR, "expectations", "densesal.toml")
        with self.assertLogs("main", level="WARNING"):
            code, out = run("archplan", spec, "--expect", expect)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("| Concatenation | 4416 |", out)
        self.assertIn("| known |", out)

    def test_archplan_mismatch(self):
        spec = os.path.join(DATA_DIR, "architectures", "dpnsal.toml")
        expect = os.path.join(DATA_DIR, "expectations", "densesal.toml")
        code, out = run("archplan", spec, "--expect", expect)
        self.assertEqual(code, EXIT_FATAL)
        self.assertIn("MISMATCH", out)

    def test_missing_manifest(self):
        self.assertEqual(run("eval", self.path("nope.toml"), "-j", "1")[0], EXIT_FATAL)


if __name__ == "__main__":
    unittest.main()
