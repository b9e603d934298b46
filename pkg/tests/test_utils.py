import json
import unittest
from fractions import Fraction

import yaml

from src.ring import TrigPoly
from src.utils.errors import (CourantKitError, DimensionMismatchError, InconsistentSystemError,
                              MalformedInputError, ModelValidationError, PreconditionError,
                              UnsupportedSignatureError)
from src.utils.reports import Verdict, to_plain


class TestUtils(unittest.TestCase):
    def test_to_plain(self):
        self.assertEqual(to_plain(Fraction(3, 4)), "3/4")
        self.assertEqual(to_plain(Fraction(2)), "2")
        self.assertEqual(to_plain({(0, 1): [Fraction(1, 2), True]}), {"(0, 1)": ["1/2", True]})
        self.assertEqual(to_plain(TrigPoly.cos_theta(1, 0)), TrigPoly.cos_theta(1, 0).to_json())

    def test_verdict_collects_checks(self):
        verdict = Verdict("demo")
        verdict.add("first", True)
        verdict.add("second", False, {"frame": [0, 1]})
        verdict.finish()
        self.assertFalse(verdict.passed)
        self.assertEqual(verdict.exit_code, 1)
        self.assertEqual([c.name for c in verdict.failures], ["second"])
        self.assertEqual(verdict.check("second").witness, {"frame": [0, 1]})
        self.assertIsNone(verdict.check("third"))

    def test_extend_with_prefix(self):
        inner = Verdict("inner", data={"degree": 3})
        inner.add("ok", True)
        outer = Verdict("outer")
        outer.extend(inner, prefix="J1: ")
        self.assertTrue(outer.passed)
        self.assertEqual(outer.exit_code, 0)
        self.assertIsNotNone(outer.check("J1: ok"))
        self.assertEqual(outer.data["J1: degree"], 3)

    def test_dump_formats(self):
        verdict = Verdict("demo", data={"square": Fraction(1, 16)})
        verdict.add("square is a function", True)
        payload = json.loads(verdict.finish().dump())
        self.assertEqual(payload["command"], "demo")
        self.assertTrue(payload["passed"])
        self.assertEqual(payload["data"]["square"], "1/16")
        self.assertEqual(yaml.safe_load(verdict.dump("yaml")), payload)

    def test_error_hierarchy(self):
        for error in (DimensionMismatchError, MalformedInputError, ModelValidationError, PreconditionError,
                      InconsistentSystemError, UnsupportedSignatureError):
            self.assertTrue(issubclass(error, CourantKitError))
        with self.assertRaises(CourantKitError):
            raise MalformedInputError("bad")


if __name__ == '__main__':
    unittest.main()
