import json
import os
import tempfile
import unittest
from fractions import Fraction

from src.courant import ExactModel, QuadLieModel
from src.ring import TrigPoly
from src.structures import GenComplex, GenMetric
from src.utils.errors import MalformedInputError, ModelValidationError, PreconditionError
from src.utils.model_io import (FIXTURE_DIR, discover_fixtures, load_document, load_model, parse_poly,
                                parse_value)


class TestValues(unittest.TestCase):
    def test_rationals_and_polynomials(self):
        self.assertEqual(parse_value("-3/4", 2), Fraction(-3, 4))
        self.assertEqual(parse_value(5, 2), Fraction(5))
        raw = {"terms": [{"kind": "sin", "k": [0, 2], "c": "1/2"}]}
        self.assertEqual(parse_value(raw, 2), TrigPoly.sin(2, (0, 2)).scale(Fraction(1, 2)))
        self.assertEqual(parse_poly(1, 3), TrigPoly.one(3))

    def test_torus_dimension_must_match(self):
        with self.assertRaises(MalformedInputError):
            parse_value({"m": 2, "terms": []}, 3)


class TestLoadModel(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.temp_dir.cleanup()

    def write(self, name, content):
        path = os.path.join(self.temp_dir.name, name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(content if isinstance(content, str) else json.dumps(content))
        return path

    def test_every_fixture_loads(self):
        paths = discover_fixtures()
        self.assertGreaterEqual(len(paths), 10)
        for path in paths:
            loaded = load_model(path)
            self.assertTrue(loaded.expected, path.name)
            self.assertEqual(loaded.path, path)

    def test_generalized_kahler_fixture(self):
        loaded = load_model(FIXTURE_DIR / "gk_t4_flat.json")
        self.assertIsInstance(loaded.model, ExactModel)
        self.assertIsInstance(loaded.structure("G", GenMetric), GenMetric)
        self.assertEqual(len(loaded.subbundle("one-zero")), 4)
        self.assertIs(loaded.pair("P").complex, loaded.structure("J", GenComplex))
        self.assertTrue(loaded.expectation("gk-check", "P"))
        self.assertIsNone(loaded.expectation("born"))
        with self.assertRaises(PreconditionError):
            loaded.structure("G", GenComplex)
        with self.assertRaises(PreconditionError):
            loaded.pair("Q")

    def test_born_fixture_has_no_courant_model(self):
        loaded = load_model(FIXTURE_DIR / "born_t4.json")
        self.assertIsNotNone(loaded.born)
        with self.assertRaises(PreconditionError):
            loaded.require_model()

    def test_quadratic_lie_document(self):
        doc = {"name": "abelian", "variant": "quadratic_lie", "gram": [[1, 0], [0, -1]]}
        loaded = load_document(doc)
        self.assertIsInstance(loaded.model, QuadLieModel)
        self.assertEqual(loaded.model.rank, 2)
        self.assertEqual(loaded.expected, {})

    def test_invalid_json(self):
        with self.assertRaises(MalformedInputError):
            load_model(self.write("broken.json", "{\"name\": "))
        with self.assertRaises(MalformedInputError):
            load_model(self.write("list.json", [1, 2, 3]))
        with self.assertRaises(MalformedInputError):
            load_model(os.path.join(self.temp_dir.name, "missing.json"))

    def test_schema_violations(self):
        bad = [
            {"name": "x", "variant": "symplectic", "m": 2},
            {"name": "x", "variant": "exact"},
            {"name": "x", "variant": "exact", "m": 2, "H": [{"index": [0], "value": "a/b"}]},
            {"name": "x", "variant": "quadratic_lie", "gram": [[1, 0], [0, -1]],
             "structures": {"G": {"kind": "metric", "g": [[1]]}}},
            {"name": "x", "variant": "exact", "m": 3, "H": [{"index": [0, 1, 5], "value": 1}]},
        ]
        for doc in bad:
            with self.assertRaises(MalformedInputError, msg=json.dumps(doc)):
                load_model(self.write("bad.json", doc))

    def test_non_closed_twist_needs_flag(self):
        doc = {"name": "open", "variant": "exact", "m": 4,
               "H": [{"index": [0, 1, 2], "value": {"terms": [{"kind": "cos", "k": [0, 0, 0, 1], "c": 1}]}}]}
        with self.assertRaises(ModelValidationError):
            load_model(self.write("open.json", doc))
        doc["allow_non_closed"] = True
        loaded = load_model(self.write("open.json", doc))
        self.assertFalse(loaded.model.dH().is_zero())

    def test_discover_fixtures(self):
        self.write("b.json", {"name": "b"})
        self.write("a.json", {"name": "a"})
        self.write("notes.txt", "not a fixture")
        names = [p.name for p in discover_fixtures(self.temp_dir.name)]
        self.assertEqual(names, ["a.json", "b.json"])
        with self.assertRaises(MalformedInputError):
            discover_fixtures(os.path.join(self.temp_dir.name, "nowhere"))


if __name__ == '__main__':
    unittest.main()
