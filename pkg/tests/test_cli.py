import io
import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from src import connections
from src.courant_kit import (CourantKitApp, KitConfig, config_from_env, format_summary, main, split_key)
from src.utils.errors import MalformedInputError
from src.utils.model_io import FIXTURE_DIR
from src.utils.reports import Verdict


def fixture(name):
    return str(FIXTURE_DIR / name)


@patch('src.courant_kit.load_dotenv')
class TestMain(unittest.TestCase):
    def run_main(self, argv):
        with patch('sys.stdout', new_callable=io.StringIO) as stdout:
            code = main(argv)
        return code, stdout.getvalue()

    def test_passing_check_exits_zero(self, mock_dotenv):
        code, out = self.run_main(["check-axioms", fixture("exact_t3_h.json"), "--json"])
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertEqual(payload["command"], "check-axioms")
        self.assertTrue(payload["passed"])
        mock_dotenv.assert_called_once()

    def test_failing_check_exits_one(self, mock_dotenv):
        code, out = self.run_main(["check-axioms", fixture("exact_t4_dHneq0.json")])
        self.assertEqual(code, 1)
        self.assertIn("FAIL", out)

    def test_malformed_input_exits_two(self, mock_dotenv):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "bad.json")
            with open(path, 'w', encoding='utf-8') as f:
                f.write("{not json")
            code, _ = self.run_main(["check-axioms", path])
        self.assertEqual(code, 2)
        code, _ = self.run_main(["standard-form", fixture("quadlie_so21.json")])
        self.assertEqual(code, 2)

    def test_targeted_command(self, mock_dotenv):
        code, out = self.run_main(["nijenhuis", fixture("gk_t4_flat.json"), "J", "--format", "yaml"])
        self.assertEqual(code, 0)
        self.assertIn("command: nijenhuis", out)
        code, _ = self.run_main(["nijenhuis", fixture("gk_t4_flat.json"), "missing"])
        self.assertEqual(code, 1)

    def test_prolongation(self, mock_dotenv):
        code, out = self.run_main(["prolongation", "--algebra", "delta-so:3", "--json"])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["data"]["prolongation"]["dimension"], 0)
        code, _ = self.run_main(["prolongation", "--algebra", "so:2,1"])
        self.assertEqual(code, 0)
        code, _ = self.run_main(["prolongation", "--algebra", "sp:4"])
        self.assertEqual(code, 2)

    def test_prolongation_from_file(self, mock_dotenv):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "so11.json")
            with open(path, 'w', encoding='utf-8') as f:
                json.dump({"name": "so11", "gram": [[1, 0], [0, -1]]}, f)
            code, out = self.run_main(["prolongation", "--algebra", path, "--json"])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["data"]["prolongation"]["dimension"], 2)


class TestConfig(unittest.TestCase):
    @patch.dict(os.environ, {"COURANT_KIT_DEGREE_SLACK": "4", "COURANT_KIT_WORKERS": "0",
                             "COURANT_KIT_SKIP": "trafo, born,", "COURANT_KIT_LOG_LEVEL": "DEBUG"})
    def test_config_from_env(self):
        config = config_from_env()
        self.assertEqual(config.degree_slack, 4)
        self.assertEqual(config.workers, 1)
        self.assertEqual(config.skip_commands, ["trafo", "born"])
        self.assertEqual(config.log_level, "DEBUG")

    @patch.dict(os.environ, {"COURANT_KIT_DEGREE_SLACK": "many", "COURANT_KIT_WORKERS": "-3"})
    def test_bad_values_fall_back(self):
        config = config_from_env()
        self.assertEqual(config.degree_slack, KitConfig().degree_slack)
        self.assertEqual(config.workers, 1)

    def test_split_key(self):
        self.assertEqual(split_key("gk-check:P"), ("gk-check", "P"))
        self.assertEqual(split_key("dirac-square"), ("dirac-square", None))


class TestApp(unittest.TestCase):
    def setUp(self):
        self.app = CourantKitApp(KitConfig(log_level="WARNING", skip_commands=["prolongation"]))

    def test_evaluate_rejects_bad_commands(self):
        mf = self.app.load(fixture("gk_t4_flat.json"))
        with self.assertRaises(MalformedInputError):
            self.app.evaluate(mf, "no-such-command")
        with self.assertRaises(MalformedInputError):
            self.app.evaluate(mf, "gk-check")
        self.assertIs(self.app.load(fixture("gk_t4_flat.json")), mf)

    def test_expectations_match(self):
        for name in ("quadlie_so21.json", "nonhyper_t4.json"):
            mf = self.app.load(fixture(name))
            for key, expected in mf.expected.items():
                with self.subTest(fixture=name, key=key):
                    self.assertEqual(self.app.evaluate(mf, *split_key(key)).passed, expected)

    @patch('src.courant_kit.discover_fixtures')
    def test_selftest_on_subset(self, mock_discover):
        mock_discover.return_value = [FIXTURE_DIR / "quadlie_so21.json", FIXTURE_DIR / "lie_double_aff.json"]
        verdict = self.app.selftest()
        self.assertTrue(verdict.passed, [c.to_dict() for c in verdict.failures])
        self.assertEqual(self.app.exit_code(verdict), 0)
        self.assertIsNotNone(verdict.check("quadlie_so21.json: dirac-square"))

    @patch('src.courant_kit.discover_fixtures')
    def test_selftest_reports_malformed_fixtures(self, mock_discover):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "broken.json")
            with open(path, 'w', encoding='utf-8') as f:
                json.dump({"name": "broken", "variant": "exact"}, f)
            mock_discover.return_value = [Path(path)]
            verdict = self.app.selftest()
        self.assertFalse(verdict.passed)
        self.assertEqual(verdict.data["malformed"], ["broken.json"])
        self.assertEqual(self.app.exit_code(verdict), 2)

    @patch('src.courant_kit.discover_fixtures')
    def test_selftest_catches_sign_flip_in_projector(self, mock_discover):
        original = connections.pi_J
        with tempfile.TemporaryDirectory() as temp_dir:
            with open(fixture("gk_t4_flat.json"), encoding='utf-8') as f:
                doc = json.load(f)
            doc["expected"] = {"intrinsic-torsion:J": True}
            path = Path(temp_dir) / "flat.json"
            path.write_text(json.dumps(doc), encoding='utf-8')
            mock_discover.return_value = [path]
            self.assertEqual(self.app.exit_code(self.app.selftest()), 0)
            self.app = CourantKitApp(KitConfig(log_level="WARNING", skip_commands=["prolongation"]))
            with patch('src.connections.pi_J', side_effect=lambda J, alpha: -original(J, alpha)):
                verdict = self.app.selftest()
        self.assertEqual(self.app.exit_code(verdict), 1)
        self.assertFalse(verdict.check("flat.json: intrinsic-torsion:J").passed)

    def test_fixture_listing(self):
        verdict = self.app.fixtures()
        self.assertTrue(verdict.passed)
        names = [entry["file"] for entry in verdict.data["fixtures"]]
        self.assertIn("born_t4.json", names)

    def test_format_summary(self):
        verdict = Verdict("demo")
        verdict.add("holds", True)
        verdict.add("breaks", False, {"frame": [1, 2]})
        summary = format_summary(verdict.finish())
        self.assertTrue(summary.startswith("demo: FAIL"))
        self.assertIn("[FAIL] breaks", summary)
        self.assertIn("witness", summary)


if __name__ == '__main__':
    unittest.main()
