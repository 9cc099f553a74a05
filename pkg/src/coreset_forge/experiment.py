"""End-to-end runs: load or generate an instance, build a coreset, audit it, write a bundle."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .datasets import describe_mixture, gaussian_mixture
from .errors import InvalidParameter
from .evaluate import DistortionReport, SolutionSuite, audit
from .io import atomic_write_text, dumps_json, load_points, save_coreset
from .lower_bounds.basis import gen_basis_instance
from .metric import PointSet, PowerParams, check_power
from .projection import ProjectionMap, apply
from .randomness import derived_int
from .sampler import SamplerConfig, WeightedCoreset, build_coreset

EXIT_PASS, EXIT_ERROR, EXIT_CRITERION = 0, 1, 2
BUNDLE_SCHEMA = "coreset-forge/result-bundle/1"

GENERATORS = {
    "basis": {"k": int, "eps": Fraction, "z": int},
    "gmm": {"n": int, "d": int, "k": int, "separation": float, "std": float, "imbalance": float, "seed": int},
}
_REQUIRED = {"basis": ("k", "eps"), "gmm": ("n", "d", "k")}


def parse_number(text: str):
    """Accepts integers, decimals and fractions like ``1/12``."""
    return Fraction(text.strip())


def parse_generator(spec: str) -> tuple[str, dict]:
    """``"basis k=2 eps=1/12"`` -> ("basis", {"k": 2, "eps": 1/12})."""
    parts = spec.split()
    if not parts or parts[0] not in GENERATORS:
        raise InvalidParameter(f"unknown generator in {spec!r}; expected one of {sorted(GENERATORS)}")
    name, types = parts[0], GENERATORS[parts[0]]
    args = {}
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep or key not in types:
            raise InvalidParameter(f"bad generator argument {part!r} for {name}")
        try:
            number = parse_number(value)
        except (ValueError, ZeroDivisionError):
            raise InvalidParameter(f"{key}={value!r} is not a number") from None
        if types[key] is int:
            if number.denominator != 1:
                raise InvalidParameter(f"{key} must be an integer, got {value}")
            args[key] = int(number)
        else:
            args[key] = float(number)
    missing = [key for key in _REQUIRED[name] if key not in args]
    if missing:
        raise InvalidParameter(f"generator {name} needs {', '.join(missing)}")
    return name, args


def generate_instance(spec: str):
    """Build the PointSet a generator spec describes; returns (points, description)."""
    name, args = parse_generator(spec)
    if name == "basis":
        inst = gen_basis_instance(args["k"], args["eps"], args.get("z", 2))
        return inst.points, inst.describe()
    P, _, _ = gaussian_mixture(**args)
    full = {"separation": 20.0, "std": 1.0, "imbalance": 0.0, "seed": 0, **args}
    return P, describe_mixture(**full)


def is_generator_spec(source: str) -> bool:
    return source.split(maxsplit=1)[0] in GENERATORS if source.strip() else False


DEFAULT_SUITES = (
    SolutionSuite("RandomBox", 200),
    SolutionSuite("SubsetOfP", 100),
    SolutionSuite("DzSeeded", 100),
    SolutionSuite("LloydRefined", 50),
    SolutionSuite("CoresetAdversarial", 50),
)


@dataclass(frozen=True)
class RunConfig:
    """Everything a run consumes. ``source`` is a points file or a generator spec."""

    source: str
    k: int
    z: int = 2
    epsilon: float = 0.1
    seed: int = 0
    sampler: SamplerConfig = SamplerConfig()
    suites: tuple = DEFAULT_SUITES
    out_dir: str = "coreset-run"
    threads: int = 1
    max_distortion: float | None = None  # defaults to epsilon
    check_total_weight: bool = True

    def validate(self) -> "RunConfig":
        if self.k < 1:
            raise InvalidParameter(f"k must be >= 1, got {self.k}")
        PowerParams(check_power(self.z), self.epsilon)
        if not self.suites:
            raise InvalidParameter("at least one solution suite is required")
        if self.threads < 1:
            raise InvalidParameter("threads must be >= 1")
        if is_generator_spec(self.source):
            parse_generator(self.source)
        elif not Path(self.source).is_file():
            raise FileNotFoundError(f"input file not found: {self.source}")
        out = Path(self.out_dir)
        if out.exists() and not out.is_dir():
            raise InvalidParameter(f"output path {out} exists and is not a directory")
        return self

    @property
    def threshold(self) -> float:
        return self.epsilon if self.max_distortion is None else self.max_distortion

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["suites"] = [s.to_json() for s in self.suites]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise InvalidParameter(f"unknown config keys: {sorted(unknown)}")
        if "sampler" in data:
            data["sampler"] = SamplerConfig(**data["sampler"])
        if "suites" in data:
            data["suites"] = tuple(SolutionSuite(**s) for s in data["suites"])
        if "epsilon" in data:
            data["epsilon"] = float(parse_number(str(data["epsilon"])))
        return cls(**data)


@dataclass
class ResultBundle:
    config: dict
    instance: dict
    coreset_path: str
    report: DistortionReport
    checks: dict
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.passed else EXIT_CRITERION

    def to_json(self) -> dict:
        return {
            "schema": BUNDLE_SCHEMA,
            "config": self.config,
            "instance": self.instance,
            "coreset_path": self.coreset_path,
            "report": self.report.to_json(),
            "checks": self.checks,
            "passed": self.passed,
            "timing": self.timing,
        }


def load_source(cfg: RunConfig) -> tuple[PointSet, dict]:
    if is_generator_spec(cfg.source):
        return generate_instance(cfg.source)
    return load_points(cfg.source), {"kind": "file", "path": str(cfg.source)}


def suite_seeds(cfg: RunConfig) -> list:
    """Suites without an explicit seed get one derived from the master seed."""
    return [s if s.seed else dataclasses.replace(s, seed=derived_int(cfg.seed, "suite", s.kind)) for s in cfg.suites]


def run_experiment(cfg: RunConfig) -> ResultBundle:
    """Validate, build, audit and write ``coreset.csv``, its sidecar, ``report.json``, ``report.csv`` and ``bundle.json``."""
    cfg.validate()
    params = PowerParams(cfg.z, cfg.epsilon)
    sampler = dataclasses.replace(cfg.sampler, seed=cfg.seed)
    timing = {}

    t0 = time.perf_counter()
    P, instance = load_source(cfg)
    timing["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    coreset = build_coreset(P, cfg.k, params, sampler)
    timing["build"] = time.perf_counter() - t0

    # Audit happens in the space the coreset lives in.
    Q = _audit_space(P, coreset)
    t0 = time.perf_counter()
    report = audit(Q, coreset, suite_seeds(cfg), cfg.k, cfg.z, eps=cfg.epsilon, threads=cfg.threads)
    timing["audit"] = time.perf_counter() - t0

    checks = {
        "max_distortion": report.max <= cfg.threshold,
        "weights_positive": bool(np.all(coreset.weights > 0)),
        "offset_zero": coreset.offset == 0,
    }
    if cfg.check_total_weight:
        checks["total_weight"] = bool(report.total_weight_ok)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    coreset_path = out / "coreset.csv"
    save_coreset(coreset, coreset_path)
    bundle = ResultBundle(cfg.to_dict(), instance, str(coreset_path), report, checks, timing)
    atomic_write_text(out / "report.json", dumps_json(report.to_json()))
    atomic_write_text(out / "report.csv", report.to_csv())
    atomic_write_text(out / "bundle.json", dumps_json(bundle.to_json()))
    return bundle


def _audit_space(P: PointSet, coreset: WeightedCoreset) -> PointSet:
    """P mapped by the projection the build used (unchanged when projection is off)."""
    spec = coreset.info.get("preprocess", {}).get("projection")
    return P if spec is None else apply(ProjectionMap.from_dict(spec), P)
