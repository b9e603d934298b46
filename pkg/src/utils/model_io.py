"""
Model files: JSON documents describing a Courant model, structures on it,
subbundles to test and the verdicts the fixture corpus expects.
"""

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import jsonschema
from jsonschema import validate

from src.connections import BornStructure
from src.courant import CourantModel, DissectionModel, ExactModel, QuadLieModel, lie_double
from src.linalg import EndoField, FormField, QuadSpace, Section
from src.ring import ComplexPoly, TrigPoly, to_rat
from src.structures import (GenComplex, GenMetric, HermitianPair, HyperHermitian, HyperTriple, Structure,
                            b_transform_structure, complex_lift, metric_from_g, one_zero_bundle,
                            symplectic_lift)
from src.utils.errors import CourantKitError, MalformedInputError, PreconditionError

logger = logging.getLogger(__name__)

FIXTURE_DIR = Path(__file__).resolve().parents[2] / "fixtures"

VARIANTS = ("exact", "quadratic_lie", "lie_double", "dissection", "general", "born")

# ---------------------------------------------------------------------------
# schemas

_RATIONAL = {"oneOf": [{"type": "integer"}, {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]}
_TRIG = {
    "type": "object",
    "required": ["terms"],
    "properties": {
        "m": {"type": "integer"},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "k", "c"],
                "properties": {
                    "kind": {"enum": ["cos", "sin"]},
                    "k": {"type": "array", "items": {"type": "integer"}},
                    "c": _RATIONAL,
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}
_VALUE = {"oneOf": [_RATIONAL, _TRIG]}
_COMPLEX = {"oneOf": [_RATIONAL, _TRIG, {
    "type": "object",
    "required": ["re"],
    "properties": {"re": _VALUE, "im": _VALUE},
    "additionalProperties": False,
}]}
_INDEX = {"type": "array", "items": {"type": "integer", "minimum": 0}}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _VALUE}}
_RATIONAL_MATRIX = {"type": "array", "items": {"type": "array", "items": _RATIONAL}}
_FORM = {
    "type": "array",
    "items": {"type": "object", "required": ["index", "value"],
              "properties": {"index": _INDEX, "value": _VALUE}, "additionalProperties": False},
}
_PAIR_BRACKETS = {
    "type": "array",
    "items": {"type": "object", "required": ["i", "j", "value"],
              "properties": {"i": {"type": "integer", "minimum": 0}, "j": {"type": "integer", "minimum": 0},
                             "value": {"type": "array", "items": _VALUE}},
              "additionalProperties": False},
}
_LIE = {
    "type": "object",
    "required": ["gram"],
    "properties": {"gram": _RATIONAL_MATRIX, "brackets": _PAIR_BRACKETS, "name": {"type": "string"}},
}
_BLOCKS = {
    "type": "array",
    "items": {"type": "object", "required": ["rows", "matrix"],
              "properties": {"rows": _INDEX, "cols": _INDEX, "matrix": _MATRIX},
              "additionalProperties": False},
}
_STRUCTURE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["metric", "complex"]},
        "g": _RATIONAL_MATRIX,
        "lift": _MATRIX,
        "symplectic": _RATIONAL_MATRIX,
        "matrix": _MATRIX,
        "blocks": _BLOCKS,
        "b_transform": _FORM,
    },
    "oneOf": [{"required": [key]} for key in ("g", "lift", "symplectic", "matrix", "blocks")],
}
_SUBBUNDLE = {
    "type": "object",
    "properties": {
        "sections": {"type": "array", "items": {"type": "array", "items": _COMPLEX}},
        "structure": {"type": "string"},
        "graph": _FORM,
    },
    "oneOf": [{"required": [key]} for key in ("sections", "structure", "graph")],
}

BASE_SCHEMA = {
    "type": "object",
    "required": ["name", "variant"],
    "properties": {
        "name": {"type": "string"},
        "variant": {"enum": list(VARIANTS)},
        "description": {"type": "string"},
        "structures": {"type": "object", "additionalProperties": _STRUCTURE},
        "pairs": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["metric", "complex"],
            "properties": {"metric": {"type": "string"}, "complex": {"type": "string"}}}},
        "hyper": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["metric", "j1", "j2"],
            "properties": {"metric": {"type": "string"}, "j1": {"type": "string"}, "j2": {"type": "string"}}}},
        "subbundles": {"type": "object", "additionalProperties": _SUBBUNDLE},
        "spinor": {"type": "object", "required": ["p", "q"],
                   "properties": {"p": _RATIONAL_MATRIX, "q": _RATIONAL_MATRIX}},
        "expected": {"type": "object", "additionalProperties": {"type": "boolean"}},
    },
}

VARIANT_SCHEMAS: Dict[str, dict] = {
    "exact": {
        "required": ["m"],
        "properties": {"m": {"type": "integer", "minimum": 1}, "H": _FORM,
                       "allow_non_closed": {"type": "boolean"}},
    },
    "quadratic_lie": {
        "required": ["gram"],
        "properties": {"gram": _RATIONAL_MATRIX, "brackets": _PAIR_BRACKETS},
    },
    "lie_double": {
        "required": ["dimension"],
        "properties": {"dimension": {"type": "integer", "minimum": 1}, "brackets": _PAIR_BRACKETS},
    },
    "dissection": {
        "required": ["f", "lie"],
        "properties": {
            "f": {"type": "integer", "minimum": 1},
            "lie": _LIE,
            "nabla": {"type": "array", "items": _MATRIX},
            "R": _PAIR_BRACKETS,
            "H": _FORM,
            "frame_connection": _FORM,
        },
    },
    "general": {
        "required": ["m", "gram", "anchor"],
        "properties": {
            "m": {"type": "integer", "minimum": 0},
            "gram": _RATIONAL_MATRIX,
            "anchor": _RATIONAL_MATRIX,
            "brackets": {"type": "array", "items": {
                "type": "object", "required": ["a", "b", "value"],
                "properties": {"a": {"type": "integer"}, "b": {"type": "integer"},
                               "value": {"type": "array", "items": _VALUE}}}},
        },
    },
    "born": {
        "required": ["m", "eta", "eta_inverse", "g", "K"],
        "properties": {"m": {"type": "integer", "minimum": 1}, "eta": _MATRIX, "eta_inverse": _MATRIX,
                       "g": _MATRIX, "K": _MATRIX},
    },
}


# ---------------------------------------------------------------------------
# values


def parse_value(raw: Any, m: int) -> Union[Fraction, TrigPoly]:
    """A rational ("p/q" or int) or a TrigPoly object; m is implied by the model."""
    if isinstance(raw, dict):
        if raw.get("m", m) != m:
            raise MalformedInputError(f"Function on T^{raw['m']} used on T^{m}")
        return TrigPoly.from_json({"m": m, "terms": raw.get("terms", [])})
    return to_rat(raw)


def parse_poly(raw: Any, m: int) -> TrigPoly:
    value = parse_value(raw, m)
    return value if isinstance(value, TrigPoly) else TrigPoly.constant(m, value)


def parse_complex(raw: Any, m: int) -> ComplexPoly:
    if isinstance(raw, dict) and "re" in raw:
        return ComplexPoly(parse_poly(raw["re"], m), parse_poly(raw.get("im", 0), m))
    return ComplexPoly(parse_poly(raw, m))


def parse_matrix(rows: Sequence[Sequence[Any]], m: int) -> List[List]:
    return [[parse_value(x, m) for x in row] for row in rows]


def parse_form(entries: Sequence[dict], m: int, rank: int, degree: int) -> FormField:
    comps = {}
    for entry in entries:
        index = tuple(entry["index"])
        if len(index) != degree or any(i >= rank for i in index):
            raise MalformedInputError(f"Form index {list(index)} does not fit a {degree}-form of rank {rank}")
        comps[index] = parse_poly(entry["value"], m)
    return FormField(m, rank, degree, comps)


def _pair_brackets(entries: Sequence[dict]) -> Dict[tuple, List[Fraction]]:
    return {(e["i"], e["j"]): [to_rat(x) for x in e["value"]] for e in entries}


# ---------------------------------------------------------------------------
# loaded documents


@dataclass
class ModelFile:
    """A parsed model file."""
    name: str
    variant: str
    model: Optional[CourantModel] = None
    structures: Dict[str, Structure] = field(default_factory=dict)
    pairs: Dict[str, HermitianPair] = field(default_factory=dict)
    hyper: Dict[str, HyperHermitian] = field(default_factory=dict)
    subbundles: Dict[str, List[Section]] = field(default_factory=dict)
    born: Optional[BornStructure] = None
    expected: Dict[str, bool] = field(default_factory=dict)
    description: str = ""
    path: Optional[Path] = None

    def require_model(self) -> CourantModel:
        if self.model is None:
            raise PreconditionError(f"{self.name} does not describe a Courant model")
        return self.model

    def structure(self, name: str, kind: type = object) -> Structure:
        if name not in self.structures:
            raise PreconditionError(f"{self.name} has no structure named {name!r}")
        structure = self.structures[name]
        if not isinstance(structure, kind):
            raise PreconditionError(f"Structure {name!r} is not a {kind.__name__}")
        return structure

    def pair(self, name: str) -> HermitianPair:
        if name not in self.pairs:
            raise PreconditionError(f"{self.name} has no Hermitian pair named {name!r}")
        return self.pairs[name]

    def hyper_structure(self, name: str) -> HyperHermitian:
        if name not in self.hyper:
            raise PreconditionError(f"{self.name} has no hyper-Hermitian structure named {name!r}")
        return self.hyper[name]

    def subbundle(self, name: str) -> List[Section]:
        if name not in self.subbundles:
            raise PreconditionError(f"{self.name} has no subbundle named {name!r}")
        return self.subbundles[name]

    def expectation(self, command: str, target: Optional[str] = None) -> Optional[bool]:
        key = f"{command}:{target}" if target else command
        return self.expected.get(key)


def _build_model(doc: dict) -> Optional[CourantModel]:
    variant, name = doc["variant"], doc["name"]
    if variant == "exact":
        m = doc["m"]
        H = parse_form(doc.get("H", []), m, m, 3)
        return ExactModel(m, H, name, require_closed=not doc.get("allow_non_closed", False))
    if variant == "quadratic_lie":
        return QuadLieModel(doc["gram"], _pair_brackets(doc.get("brackets", [])), name)
    if variant == "lie_double":
        return lie_double(doc["dimension"], _pair_brackets(doc.get("brackets", [])), name)
    if variant == "dissection":
        f = doc["f"]
        lie_doc = doc["lie"]
        lie = QuadLieModel(lie_doc["gram"], _pair_brackets(lie_doc.get("brackets", [])),
                           lie_doc.get("name", f"{name}-lie"))
        nabla = [parse_matrix(matrix, f) for matrix in doc.get("nabla", [])] or None
        R = {(e["i"], e["j"]): [parse_value(x, f) for x in e["value"]] for e in doc.get("R", [])}
        H = parse_form(doc.get("H", []), f, f, 3)
        frame = {tuple(e["index"]): parse_value(e["value"], f) for e in doc.get("frame_connection", [])}
        return DissectionModel(f, lie, nabla, R, H, frame, name)
    if variant == "general":
        m = doc["m"]
        space = QuadSpace(doc["gram"])
        brackets: Dict[tuple, Dict[int, Any]] = {}
        for entry in doc.get("brackets", []):
            a, b = entry["a"], entry["b"]
            if len(entry["value"]) != space.rank:
                raise MalformedInputError(f"Bracket [e{a}, e{b}] needs {space.rank} components")
            value = {d: parse_value(x, m) for d, x in enumerate(entry["value"])}
            brackets[(a, b)] = value
            brackets.setdefault((b, a), {d: -x for d, x in value.items()})
        return CourantModel(m, space, doc["anchor"], brackets, name)
    return None


def _endo_from_blocks(blocks: Sequence[dict], rank: int, m: int) -> EndoField:
    matrix: List[List[Any]] = [[Fraction(0)] * rank for _ in range(rank)]
    for block in blocks:
        rows = block["rows"]
        cols = block.get("cols", rows)
        values = parse_matrix(block["matrix"], m)
        if len(values) != len(rows) or any(len(row) != len(cols) for row in values):
            raise MalformedInputError("Block matrix does not match its rows and cols")
        for r, i in enumerate(rows):
            for c, j in enumerate(cols):
                if i >= rank or j >= rank:
                    raise MalformedInputError(f"Block index ({i}, {j}) out of range for rank {rank}")
                matrix[i][j] = values[r][c]
    return EndoField(m, matrix)


def _build_structure(model: CourantModel, key: str, spec: dict) -> Structure:
    kind = spec["kind"]
    wrap = GenMetric if kind == "metric" else GenComplex
    exact_only = [source for source in ("g", "lift", "symplectic") if source in spec]
    if exact_only and not isinstance(model, ExactModel):
        raise MalformedInputError(f"Structure {key!r}: '{exact_only[0]}' needs an exact model")
    if "g" in spec:
        if kind != "metric":
            raise MalformedInputError(f"Structure {key!r}: 'g' builds a metric")
        structure: Structure = metric_from_g(model, [[to_rat(x) for x in row] for row in spec["g"]], key)
    elif "lift" in spec:
        if kind != "complex":
            raise MalformedInputError(f"Structure {key!r}: 'lift' builds a complex structure")
        structure = complex_lift(model, parse_matrix(spec["lift"], model.m), key)
    elif "symplectic" in spec:
        if kind != "complex":
            raise MalformedInputError(f"Structure {key!r}: 'symplectic' builds a complex structure")
        structure = symplectic_lift(model, [[to_rat(x) for x in row] for row in spec["symplectic"]], key)
    elif "blocks" in spec:
        structure = wrap(_endo_from_blocks(spec["blocks"], model.rank, model.m), key)
    else:
        matrix = parse_matrix(spec["matrix"], model.m)
        if len(matrix) != model.rank:
            raise MalformedInputError(f"Structure {key!r} needs a {model.rank} x {model.rank} matrix")
        structure = wrap(EndoField(model.m, matrix), key)
    if "b_transform" in spec:
        if not isinstance(model, ExactModel):
            raise MalformedInputError(f"Structure {key!r}: B-transforms need an exact model")
        B = parse_form(spec["b_transform"], model.m, model.m, 2)
        structure = b_transform_structure(model, B, structure)
    return structure


def _graph_sections(model: CourantModel, entries: Sequence[dict]) -> List[Section]:
    """d_i + i_{d_i} B for a 2-form B on the exact model."""
    if not isinstance(model, ExactModel):
        raise MalformedInputError("Graph subbundles need an exact model")
    m = model.m
    B = parse_form(entries, m, m, 2)
    sections = []
    for i in range(m):
        values = [ComplexPoly.zero(m) for _ in range(2 * m)]
        values[i] = ComplexPoly(TrigPoly.one(m))
        for (a, b), value in B.comps.items():
            if a == i:
                values[m + b] = values[m + b] + ComplexPoly(value)
            elif b == i:
                values[m + a] = values[m + a] - ComplexPoly(value)
        sections.append(tuple(values))
    return sections


def load_document(doc: dict, path: Optional[Path] = None) -> ModelFile:
    """Validate and build a parsed JSON document."""
    try:
        validate(instance=doc, schema=BASE_SCHEMA)
        validate(instance=doc, schema=VARIANT_SCHEMAS[doc["variant"]])
    except jsonschema.exceptions.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise MalformedInputError(f"{path or doc.get('name', 'model')}: {where}: {e.message}") from e

    loaded = ModelFile(doc["name"], doc["variant"], expected=dict(doc.get("expected", {})),
                       description=doc.get("description", ""), path=path)
    if doc["variant"] == "born":
        m = doc["m"]
        loaded.born = BornStructure(m, parse_matrix(doc["eta"], m), parse_matrix(doc["eta_inverse"], m),
                                    parse_matrix(doc["g"], m), EndoField(m, parse_matrix(doc["K"], m)))
        return loaded

    model = _build_model(doc)
    loaded.model = model
    if "spinor" in doc:
        model.planes = ([[to_rat(x) for x in v] for v in doc["spinor"]["p"]],
                        [[to_rat(x) for x in v] for v in doc["spinor"]["q"]])
        model._module = None
    for key, spec in doc.get("structures", {}).items():
        loaded.structures[key] = _build_structure(model, key, spec)
    for key, spec in doc.get("pairs", {}).items():
        loaded.pairs[key] = HermitianPair(loaded.structure(spec["metric"], GenMetric),
                                          loaded.structure(spec["complex"], GenComplex))
    for key, spec in doc.get("hyper", {}).items():
        triple = HyperTriple.from_pair(loaded.structure(spec["j1"], GenComplex),
                                       loaded.structure(spec["j2"], GenComplex))
        loaded.hyper[key] = HyperHermitian(loaded.structure(spec["metric"], GenMetric), triple)
    for key, spec in doc.get("subbundles", {}).items():
        if "structure" in spec:
            loaded.subbundles[key] = one_zero_bundle(model, loaded.structure(spec["structure"], GenComplex))
        elif "graph" in spec:
            loaded.subbundles[key] = _graph_sections(model, spec["graph"])
        else:
            sections = [tuple(parse_complex(x, model.m) for x in row) for row in spec["sections"]]
            if any(len(s) != model.rank for s in sections):
                raise MalformedInputError(f"Subbundle {key!r}: sections need {model.rank} components")
            loaded.subbundles[key] = sections
    logger.debug("Loaded %s (%s) with %d structures", loaded.name, loaded.variant, len(loaded.structures))
    return loaded


def load_model(path: Union[str, Path]) -> ModelFile:
    """Read, validate and build a model file."""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except (json.JSONDecodeError, FileNotFoundError, IsADirectoryError) as e:
        raise MalformedInputError(f"Cannot read model file {path}: {e}") from e
    if not isinstance(doc, dict):
        raise MalformedInputError(f"{path}: a model file holds a JSON object")
    try:
        return load_document(doc, path)
    except MalformedInputError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedInputError(f"{path}: {e}") from e
    except CourantKitError:
        logger.warning("Model file %s failed to build", path)
        raise


def discover_fixtures(directory: Optional[Union[str, Path]] = None) -> List[Path]:
    directory = Path(directory) if directory else FIXTURE_DIR
    if not directory.is_dir():
        raise MalformedInputError(f"Fixture directory {directory} does not exist")
    return sorted(directory.glob("*.json"))
