"""
courant-kit command line.

Every subcommand loads a model file, runs one family of exact checks and
prints a Verdict. Exit codes: 0 all checks pass, 1 a check failed (or a
precondition was not met), 2 malformed input.
"""

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import jsonschema
from dotenv import load_dotenv
from jsonschema import validate

from src.connections import (D1, GenConnection, adapted_algebra, eta_identities, gk_connection,
                             gk_connection_check, hk_connection, hk_connection_check, hypercomplex_connection,
                             hyper_projector_identities, intrinsic_torsion_J, kn_connection, levi_civita,
                             levi_civita_check, make_torsion_free, named_algebra, projector_identities,
                             prolongation, rank_two_shift, born_check, born_connection)
from src.dirac import (canonical_dgo, canonical_independence, dgo_check, square_check, standard_form_check,
                       trafo_check)
from src.spinint import DEFAULT_SLACK, dirac_structure_equiv, gk_spinor_check, hk_spinor_check
from src.structures import (GenComplex, GenMetric, gk_bracket_check, hk_bracket_check, is_generalized_kahler,
                            mixed_bracket_identity, nijenhuis, nijenhuis_identities)
from src.utils.errors import CourantKitError, MalformedInputError, ModelValidationError
from src.utils.model_io import FIXTURE_DIR, ModelFile, discover_fixtures, load_model
from src.utils.reports import Verdict

logger = logging.getLogger(__name__)

# commands that take a structure, pair, hyper or subbundle name
TARGETED = ("nijenhuis", "gk-check", "intrinsic-torsion", "levi-civita", "spinor-gk", "dirac-structure")

ALGEBRA_FILE_SCHEMA = {
    "type": "object",
    "required": ["gram"],
    "properties": {
        "name": {"type": "string"},
        "gram": {"type": "array", "items": {"type": "array"}},
        "tensors": {"type": "array", "items": {"type": "array", "items": {"type": "array"}}},
    },
}


@dataclass
class KitConfig:
    """Configuration for courant-kit runs."""
    degree_slack: int = DEFAULT_SLACK
    log_level: str = "INFO"
    log_file: Optional[str] = None
    workers: int = 1
    fixture_dir: str = str(FIXTURE_DIR)
    output_format: str = "json"
    skip_commands: List[str] = field(default_factory=list)


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r: not an integer", name, raw)
        return default
    if value < 0:
        logger.warning("Ignoring %s=%r: negative", name, raw)
        return default
    return value


def config_from_env() -> KitConfig:
    """Read COURANT_KIT_* variables; call after load_dotenv()."""
    skip = os.getenv("COURANT_KIT_SKIP", "")
    return KitConfig(
        degree_slack=_env_int("COURANT_KIT_DEGREE_SLACK", DEFAULT_SLACK),
        log_level=os.getenv("COURANT_KIT_LOG_LEVEL", "INFO"),
        log_file=os.getenv("COURANT_KIT_LOG_FILE") or None,
        workers=max(1, _env_int("COURANT_KIT_WORKERS", 1)),
        fixture_dir=os.getenv("COURANT_KIT_FIXTURES", str(FIXTURE_DIR)),
        skip_commands=[s.strip() for s in skip.split(",") if s.strip()],
    )


def split_key(key: str) -> Tuple[str, Optional[str]]:
    """'gk-check:P' -> ('gk-check', 'P')."""
    command, _, target = key.partition(":")
    return command, target or None


def format_summary(verdict: Verdict) -> str:
    lines = [f"{verdict.command}: {'PASS' if verdict.passed else 'FAIL'} ({verdict.elapsed:.2f}s)"]
    for check in verdict.checks:
        mark = "ok  " if check.passed else "FAIL"
        lines.append(f"  [{mark}] {check.name}")
        if not check.passed and check.witness is not None:
            lines.append(f"         witness: {json.dumps(check.to_dict()['witness'], ensure_ascii=False)}")
    return "\n".join(lines)


class CourantKitApp:
    """Runs courant-kit subcommands against model files."""

    def __init__(self, config: KitConfig):
        self.config = config
        self.setup_logging()
        self._models: Dict[str, ModelFile] = {}

    def setup_logging(self):
        """Set up logging configuration."""
        handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
        if self.config.log_file:
            handlers.append(logging.FileHandler(self.config.log_file))
        logging.basicConfig(
            level=getattr(logging, self.config.log_level.upper(), logging.INFO),
            format='%(asctime)s - %(levelname)s: %(message)s',
            handlers=handlers
        )
        self.logger = logging.getLogger(__name__)

    def load(self, path: str) -> ModelFile:
        if path not in self._models:
            start_time = time.time()
            self._models[path] = load_model(path)
            self.logger.info("Loaded %s in %.4f seconds", path, time.time() - start_time)
        return self._models[path]

    # -- model commands --------------------------------------------------

    def check_axioms(self, mf: ModelFile, target: Optional[str] = None) -> Verdict:
        return mf.require_model().axioms_check()

    def nijenhuis(self, mf: ModelFile, target: str) -> Verdict:
        model = mf.require_model()
        J = mf.structure(target, GenComplex)
        verdict = Verdict("nijenhuis", data={"model": model.name, "structure": J.name})
        verdict.extend(J.validate(model.space), prefix="J: ")
        N = nijenhuis(model, J, self.config.workers)
        verdict.extend(nijenhuis_identities(model, J, N))
        witness = None
        if not N.is_zero():
            key = min(N.comps)
            witness = {"frame": list(key), "value": N.comps[key]}
        verdict.add("N_J = 0", N.is_zero(), witness)
        return verdict.finish()

    def intrinsic_torsion(self, mf: ModelFile, target: str) -> Verdict:
        model = mf.require_model()
        J = mf.structure(target, GenComplex)
        verdict = Verdict("intrinsic-torsion", data={"model": model.name, "structure": J.name})
        verdict.extend(J.validate(model.space), prefix="J: ")
        verdict.extend(projector_identities(J, model.rank, model.m))
        D = make_torsion_free(model, GenConnection.flat(model))
        quarter = nijenhuis(model, J, self.config.workers).scale(Fraction(1, 4))
        first = D1(model, J, D)
        verdict.add("D^(1) preserves J", first.preserves(J.endo))
        intrinsic = intrinsic_torsion_J(model, J, first)
        verdict.add("Pi_J(T) = N/4", intrinsic == quarter)
        D_tilde = kn_connection(model, J, D)
        verdict.add("adapted connection preserves J", D_tilde.preserves(J.endo))
        verdict.add("adapted connection is metric", D_tilde.is_metric())
        verdict.add("adapted connection has torsion N/4", D_tilde.torsion() == quarter)
        verdict.add("independent of the adapted connection", intrinsic_torsion_J(model, J, D_tilde) == intrinsic)
        verdict.extend(eta_identities(model, J, D), prefix="eta: ")
        verdict.data.update({"integrable": quarter.is_zero(), "intrinsic_torsion": intrinsic})
        return verdict.finish()

    def levi_civita(self, mf: ModelFile, target: str) -> Verdict:
        model = mf.require_model()
        G = mf.structure(target, GenMetric)
        verdict = Verdict("levi-civita", data={"model": model.name, "structure": G.name})
        verdict.extend(G.validate(model.space), prefix="G: ")
        D = levi_civita(model, G)
        verdict.extend(levi_civita_check(model, G, D))
        return verdict.finish()

    def gk_check(self, mf: ModelFile, target: str) -> Verdict:
        model = mf.require_model()
        workers = self.config.workers
        if target in mf.hyper:
            hyper = mf.hyper_structure(target)
            verdict = Verdict("gk-check", data={"model": model.name, "hyper": target})
            verdict.extend(hyper.validate(model.space), prefix="validate: ")
            verdict.extend(hyper_projector_identities(hyper.triple, model.rank, model.m))
            D = make_torsion_free(model, GenConnection.flat(model))
            H = hypercomplex_connection(model, hyper.triple, D)
            total = None
            for j in hyper.triple.structures():
                N = nijenhuis(model, j, workers)
                total = N if total is None else total + N
            verdict.add("hypercomplex connection has torsion sum N / 6", H.torsion() == total.scale(Fraction(1, 6)))
            bracket = hk_bracket_check(model, hyper, workers)
            verdict.extend(bracket)
            if all(is_generalized_kahler(model, pair) for pair in hyper.pairs()):
                LC = levi_civita(model, hyper.metric)
                if not LC.preserves(hyper.triple.j1.endo):
                    LC = gk_connection(model, hyper.pairs()[0], LC)
                D_tilde = hk_connection(model, hyper, LC)
                verdict.extend(hk_connection_check(model, hyper, LC, D_tilde), prefix="connection: ")
            return verdict.finish()
        pair = mf.pair(target)
        verdict = Verdict("gk-check", data={"model": model.name, "pair": target})
        verdict.extend(pair.validate(model.space), prefix="validate: ")
        bracket = gk_bracket_check(model, pair, workers)
        verdict.extend(bracket)
        verdict.data.update(bracket.data)
        if bracket.check("generalized Kahler").passed:
            LC = levi_civita(model, pair.metric)
            D_tilde = gk_connection(model, pair, LC)
            verdict.extend(gk_connection_check(model, pair, LC, D_tilde), prefix="connection: ")
            verdict.extend(mixed_bracket_identity(model, pair))
        return verdict.finish()

    def spinor_gk(self, mf: ModelFile, target: str, cross_check: bool = True) -> Verdict:
        model = mf.require_model()
        slack = self.config.degree_slack
        if target in mf.hyper:
            return hk_spinor_check(model, mf.hyper_structure(target), slack=slack, workers=self.config.workers)
        return gk_spinor_check(model, mf.pair(target), slack=slack, cross_check=cross_check)

    def dirac_structure(self, mf: ModelFile, target: str) -> Verdict:
        model = mf.require_model()
        return dirac_structure_equiv(model, mf.subbundle(target), slack=self.config.degree_slack, name=target)

    def dirac_check(self, mf: ModelFile, target: Optional[str] = None) -> Verdict:
        model = mf.require_model()
        op = canonical_dgo(model)
        verdict = dgo_check(model, op)
        D0 = GenConnection.flat(model)
        other = D0.plus(rank_two_shift(model), name="D0+A")
        verdict.extend(canonical_independence(model, D0, other))
        return verdict.finish()

    def dirac_square(self, mf: ModelFile, target: Optional[str] = None) -> Verdict:
        return square_check(mf.require_model())

    def standard_form(self, mf: ModelFile, target: Optional[str] = None, compare_canonical: bool = True) -> Verdict:
        model = mf.require_model()
        if model.variant != "dissection":
            raise MalformedInputError(f"standard-form needs a dissection model, {mf.name} is {model.variant}")
        return standard_form_check(model, compare_nabla=compare_canonical)

    def trafo(self, mf: ModelFile, target: Optional[str] = None) -> Verdict:
        model = mf.require_model()
        D = make_torsion_free(model, GenConnection.flat(model))
        return trafo_check(model, D, rank_two_shift(model))

    def born(self, mf: ModelFile, target: Optional[str] = None) -> Verdict:
        if mf.born is None:
            raise MalformedInputError(f"{mf.name} is not a Born model file")
        verdict = Verdict("born", data={"model": mf.name})
        report = mf.born.validate()
        verdict.extend(report, prefix="validate: ")
        if report.passed:
            verdict.extend(born_check(mf.born, born_connection(mf.born)))
        return verdict.finish()

    # -- model-free commands ---------------------------------------------

    def prolongation(self, algebra_name: str) -> Verdict:
        if Path(algebra_name).is_file():
            algebra = self._algebra_from_file(Path(algebra_name))
        else:
            algebra = named_algebra(algebra_name)
        result = prolongation(algebra)
        verdict = Verdict("prolongation", data={"prolongation": result})
        kind = algebra_name.partition(":")[0]
        n = len(algebra.gram)
        if kind == "so":
            expected = n * n * (n - 1) // 2 - n * (n - 1) * (n - 2) // 6
            verdict.add("dimension n^2(n-1)/2 - n(n-1)(n-2)/6", result.dimension == expected,
                        None if result.dimension == expected else {"expected": expected, "got": result.dimension})
        elif kind == "delta-so":
            verdict.add("prolongation vanishes", result.dimension == 0)
        else:
            verdict.add("prolongation computed", True)
        return verdict.finish()

    def _algebra_from_file(self, path: Path):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                doc = json.load(f)
            validate(instance=doc, schema=ALGEBRA_FILE_SCHEMA)
        except (json.JSONDecodeError, FileNotFoundError) as e:
            raise MalformedInputError(f"Cannot read algebra file {path}: {e}") from e
        except jsonschema.exceptions.ValidationError as e:
            raise MalformedInputError(f"{path}: {e.message}") from e
        return adapted_algebra(doc["gram"], doc.get("tensors", []), name=doc.get("name", path.stem))

    def fixtures(self) -> Verdict:
        verdict = Verdict("fixtures", data={"directory": self.config.fixture_dir})
        listing = []
        for path in discover_fixtures(self.config.fixture_dir):
            try:
                with open(path, 'r', encoding='utf-8') as f:
                    doc = json.load(f)
                listing.append({"file": path.name, "name": doc.get("name"), "variant": doc.get("variant"),
                                "expected": doc.get("expected", {})})
            except json.JSONDecodeError as e:
                self.logger.warning("Unreadable fixture %s: %s", path, e)
                listing.append({"file": path.name, "error": str(e)})
                verdict.add(f"{path.name} readable", False)
        verdict.data["fixtures"] = listing
        return verdict.finish()

    # -- dispatch --------------------------------------------------------

    def handlers(self) -> Dict[str, Callable[..., Verdict]]:
        return {
            "check-axioms": self.check_axioms,
            "nijenhuis": self.nijenhuis,
            "gk-check": self.gk_check,
            "intrinsic-torsion": self.intrinsic_torsion,
            "levi-civita": self.levi_civita,
            "spinor-gk": self.spinor_gk,
            "dirac-structure": self.dirac_structure,
            "dirac-check": self.dirac_check,
            "dirac-square": self.dirac_square,
            "standard-form": self.standard_form,
            "trafo": self.trafo,
            "born": self.born,
        }

    def evaluate(self, mf: ModelFile, command: str, target: Optional[str] = None) -> Verdict:
        handler = self.handlers().get(command)
        if handler is None:
            raise MalformedInputError(f"Unknown command {command!r}")
        if command in TARGETED and not target:
            raise MalformedInputError(f"{command} needs a target name")
        return handler(mf, target)

    def _selftest_fixture(self, path: Path) -> Tuple[str, List[Tuple[str, bool, bool]], Optional[str]]:
        try:
            mf = load_model(path)
        except (MalformedInputError, ModelValidationError) as e:
            self.logger.error("Malformed fixture %s: %s", path, e)
            return path.name, [], str(e)
        results = []
        for key, expected in sorted(mf.expected.items()):
            command, target = split_key(key)
            if command in self.config.skip_commands:
                self.logger.info("Skipping %s on %s", key, path.name)
                continue
            start_time = time.time()
            try:
                passed = self.evaluate(mf, command, target).passed
            except CourantKitError as e:
                self.logger.error("%s on %s raised %s", key, path.name, e)
                passed = None
            self.logger.info("%s %s: %s in %.2f seconds", path.name, key, passed, time.time() - start_time)
            results.append((key, expected, passed))
        return path.name, results, None

    def selftest(self) -> Verdict:
        verdict = Verdict("selftest", data={"directory": self.config.fixture_dir})
        paths = discover_fixtures(self.config.fixture_dir)
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
                outcomes = list(executor.map(self._selftest_fixture, paths))
        else:
            outcomes = [self._selftest_fixture(path) for path in paths]
        malformed = []
        for name, results, error in outcomes:
            if error is not None:
                malformed.append(name)
                verdict.add(f"{name}: loads", False, {"error": error})
                continue
            for key, expected, passed in results:
                verdict.add(f"{name}: {key}", passed == expected,
                            None if passed == expected else {"expected": expected, "got": passed})
        if "prolongation" not in self.config.skip_commands:
            for n in range(2, 7):
                for k in range(n + 1):
                    result = self.prolongation(f"so:{k},{n - k}")
                    verdict.add(f"prolongation so:{k},{n - k}", result.passed)
            for n in range(2, 6):
                verdict.add(f"prolongation delta-so:{n}", self.prolongation(f"delta-so:{n}").passed)
        verdict.data["malformed"] = malformed
        return verdict.finish()

    def exit_code(self, verdict: Verdict) -> int:
        if verdict.data.get("malformed"):
            return 2
        return verdict.exit_code

    def run(self, args: argparse.Namespace) -> Verdict:
        command = args.command
        if command == "selftest":
            return self.selftest()
        if command == "fixtures":
            return self.fixtures()
        if command == "prolongation":
            return self.prolongation(args.algebra)
        mf = self.load(args.model)
        target = getattr(args, "target", None)
        if command == "standard-form":
            return self.standard_form(mf, compare_canonical=args.compare_canonical)
        if command == "spinor-gk":
            return self.spinor_gk(mf, target, cross_check=args.cross_check)
        return self.evaluate(mf, command, target)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable JSON output")
    common.add_argument("--format", choices=("json", "yaml"), default=None, help="report format")
    common.add_argument("--log-level", default=None, help="logging level (default from COURANT_KIT_LOG_LEVEL)")
    common.add_argument("--workers", type=int, default=None, help="threads for independent checks")
    common.add_argument("--slack", type=int, default=None, help="degree slack for spinor feasibility solves")

    parser = argparse.ArgumentParser(prog="courant-kit",
                                     description="Exact checks for Courant algebroids and generalized geometry.")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_command(name: str, help_text: str, target: Optional[str] = None):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("model", help="model JSON file")
        if target:
            p.add_argument("target", help=target)
        return p

    model_command("check-axioms", "check the Courant axioms")
    model_command("nijenhuis", "Nijenhuis tensor of a generalized almost complex structure", "structure name")
    model_command("gk-check", "generalized Kahler / hyper-Kahler check via brackets", "pair or hyper name")
    model_command("intrinsic-torsion", "intrinsic torsion of a generalized almost complex structure",
                  "structure name")
    model_command("levi-civita", "Levi-Civita connection of a generalized metric", "metric name")
    spinor = model_command("spinor-gk", "spinorial generalized Kahler criterion", "pair or hyper name")
    spinor.add_argument("--cross-check", dest="cross_check", action="store_true", default=True,
                        help="compare with the bracket criterion (default)")
    spinor.add_argument("--no-cross-check", dest="cross_check", action="store_false")
    model_command("dirac-structure", "bracket closure against projective closedness", "subbundle name")
    model_command("dirac-check", "generating-operator conditions of the canonical Dirac operator")
    model_command("dirac-square", "square of the Dirac operator against the torsion formula")
    standard = model_command("standard-form", "standard form on a dissection against the canonical operator")
    standard.add_argument("--compare-canonical", action="store_true",
                          help="also compare with the canonical operator built from nabla^E")
    model_command("trafo", "change of Dirac operator under D -> D + A")
    model_command("born", "canonical connection of a Born structure")
    prolong = sub.add_parser("prolongation", parents=[common], help="generalized first prolongation")
    prolong.add_argument("--algebra", required=True, help="so:k,l | delta-so:n | u:p,q | JSON file")
    fixtures = sub.add_parser("fixtures", parents=[common], help="list the fixture corpus")
    fixtures.add_argument("--dir", default=None, help="fixture directory")
    selftest = sub.add_parser("selftest", parents=[common], help="run every fixture against its expectations")
    selftest.add_argument("--dir", default=None, help="fixture directory")
    return parser


def apply_arguments(config: KitConfig, args: argparse.Namespace) -> KitConfig:
    if args.log_level:
        config.log_level = args.log_level
    if args.workers:
        config.workers = max(1, args.workers)
    if args.slack is not None:
        config.degree_slack = args.slack
    if getattr(args, "dir", None):
        config.fixture_dir = args.dir
    if args.format:
        config.output_format = args.format
    elif args.json:
        config.output_format = "json"
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    # Load environment variables
    load_dotenv()

    parser = build_parser()
    args = parser.parse_args(argv)
    config = apply_arguments(config_from_env(), args)
    app = CourantKitApp(config)
    try:
        verdict = app.run(args)
    except (MalformedInputError, ModelValidationError) as e:
        app.logger.error("Malformed input: %s", e)
        return 2
    except CourantKitError as e:
        app.logger.error("%s failed: %s", args.command, e)
        return 1
    if args.json or args.format:
        print(verdict.dump(config.output_format))
    else:
        print(format_summary(verdict))
    return app.exit_code(verdict)


if __name__ == "__main__":
    sys.exit(main())
