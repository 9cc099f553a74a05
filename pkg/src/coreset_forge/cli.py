"""Command line entry point: ``coreset-forge <command> [options]``.

Exit codes: 0 success / criteria met, 2 a configured criterion failed, 1 any
operational error (bad input, missing file, invalid parameter).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io as cfio
from .errors import CoresetError, InvalidParameter
from .evaluate import SUITE_KINDS, SolutionSuite, audit, uniform_baseline
from .experiment import (
    EXIT_CRITERION,
    EXIT_ERROR,
    EXIT_PASS,
    RunConfig,
    generate_instance,
    is_generator_spec,
    run_experiment,
)
from .lower_bounds import anticoncentration_mc, fitted_rate, gen_basis_instance, gen_star_instance, gen_subinstance
from .metric import PointSet, PowerParams, Solution, cost_vector, total_cost, weighted_sum
from .partition import partition
from .randomness import derived_int, substream
from .sampler import SamplerConfig, build_coreset, preprocess, sample_group
from .seeding import build_clustering, reference_solution

THREADS_ENV = "CORESET_FORGE_THREADS"


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InvalidParameter(f"{THREADS_ENV}={env!r} is not an integer") from None
        if value < 1:
            raise InvalidParameter(f"{THREADS_ENV} must be >= 1")
        return value
    return 1


def load_input(source: str):
    if is_generator_spec(source):
        return generate_instance(source)[0]
    return cfio.load_points(source)


def parse_suite(text: str) -> SolutionSuite:
    """``Kind=count`` or ``Kind=count@seed``."""
    kind, sep, rest = text.partition("=")
    if not sep or kind not in SUITE_KINDS:
        raise InvalidParameter(f"suite must look like Kind=count with Kind in {SUITE_KINDS}")
    count, _, seed = rest.partition("@")
    return SolutionSuite(kind, int(count), int(seed) if seed else 0)


def _eps(text: str) -> float:
    return float(Fraction(text))


def _add_problem(p, need_eps=True):
    p.add_argument("--input", "-i", required=True, help="points file (csv or CSPS1 binary) or a generator spec")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-z", type=int, default=2)
    if need_eps:
        p.add_argument("--eps", type=_eps, default=0.1)


def _add_sampler(p):
    p.add_argument("--delta", type=int, default=None, help="draws per group (default: formula)")
    p.add_argument("--c-delta", type=float, default=200.0)
    p.add_argument("--min-factor", action="store_true", help="include the min(eps^-z, k) factor in delta")
    p.add_argument("--project-dim", type=int, default=None)
    p.add_argument("--max-distinct", type=int, default=None, help="pre-coreset pass above this many distinct points")
    p.add_argument("--weight-scale", type=float, default=None)
    p.add_argument("--exact-weights", action="store_true")


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        delta=args.delta,
        seed=args.seed,
        c_delta=args.c_delta,
        use_min_factor=args.min_factor,
        project_dim=args.project_dim,
        max_distinct=args.max_distinct,
        weight_scale=args.weight_scale,
        exact_weights=args.exact_weights,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coreset-forge", description="Coresets for (k, z)-clustering.")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    parser.add_argument("--json-out", default=None, help="write the command's JSON result here")
    parser.add_argument("--config", default=None, help="JSON file with option defaults (a RunConfig for 'run')")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a coreset from points")
    _add_problem(p)
    _add_sampler(p)
    p.add_argument("--out", "-o", required=True, help="coreset CSV path; a .json sidecar is written next to it")

    p = sub.add_parser("eval", help="audit a coreset against solution suites")
    _add_problem(p)
    p.add_argument("--coreset", "-c", default=None, help="coreset CSV (omit to audit a uniform baseline)")
    p.add_argument("--baseline-size", type=int, default=None, help="audit a uniform sample of this size instead")
    p.add_argument("--suite", type=parse_suite, action="append", default=None, help="Kind=count[@seed], repeatable")
    p.add_argument("--max-distortion", type=float, default=None, help="pass threshold (default: eps)")
    p.add_argument("--report-csv", default=None)

    p = sub.add_parser("lb-gen", help="emit a lower-bound instance")
    p.add_argument("kind", choices=("basis", "subinstance", "star"))
    p.add_argument("-k", type=int, default=2)
    p.add_argument("-z", type=int, default=2)
    p.add_argument("--eps", type=_eps, default=0.25)
    p.add_argument("--centers", type=int, default=16, help="centers per copy (discrete kinds)")
    p.add_argument("--clients", type=int, default=None, help="clients per copy (discrete kinds)")
    p.add_argument("--format", choices=("csv", "f64le-binary"), default="f64le-binary", help="basis points format")
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("approx", help="reference solution only (D^z seeding + local search)")
    _add_problem(p, need_eps=False)
    p.add_argument("--swaps", type=int, default=8)
    p.add_argument("--out", "-o", default=None, help="write the centers as a points CSV")

    p = sub.add_parser("mc", help="Monte Carlo checks")
    p.add_argument("kind", choices=("anticoncentration", "unbiasedness"))
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--eps", type=_eps, default=0.2)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--input", "-i", default=None, help="points for the unbiasedness check")
    p.add_argument("-k", type=int, default=3)
    p.add_argument("-z", type=int, default=2)
    p.add_argument("--delta", type=int, default=20)

    p = sub.add_parser("inspect", help="dump the group catalog")
    _add_problem(p)

    sub.add_parser("run", help="run a full experiment from --config")
    return parser


class UsageError(InvalidParameter):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    """Usage errors become exceptions so they map to exit code 1, not argparse's 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _apply_config_defaults(parser, argv):
    """Values in --config become defaults of the chosen subcommand; explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    command = next((t for t in rest if t in COMMANDS or t == "run"), None)
    if not known.config or command in (None, "run"):
        return known.config
    data = json.loads(Path(known.config).read_text())
    if not isinstance(data, dict):
        raise InvalidParameter("--config must hold a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = subparsers.choices[command]
    data = {key.replace("-", "_"): value for key, value in data.items()}
    global_keys = {"seed", "threads", "json_out"}
    unknown = set(data) - {a.dest for a in sub._actions} - global_keys
    if unknown:
        raise InvalidParameter(f"unknown config keys for {command}: {sorted(unknown)}")
    for action in sub._actions:
        if action.dest in data:
            action.required = False
    sub.set_defaults(**{k: v for k, v in data.items() if k not in global_keys})
    parser.set_defaults(**{k: v for k, v in data.items() if k in global_keys})
    return known.config


def cmd_build(args):
    P = load_input(args.input)
    coreset = build_coreset(P, args.k, PowerParams(args.z, args.eps), _sampler_config(args))
    cfio.save_coreset(coreset, args.out)
    summary = {key: coreset.info[key] for key in ("k", "z", "epsilon", "delta", "n_groups", "size", "total_weight")}
    summary["path"] = str(args.out)
    return EXIT_PASS, summary


def cmd_eval(args):
    P = load_input(args.input)
    if args.coreset:
        coreset = cfio.load_coreset(args.coreset)
    elif args.baseline_size:
        coreset = uniform_baseline(P, args.baseline_size, substream(args.seed, "baseline"))
    else:
        raise InvalidParameter("eval needs --coreset or --baseline-size")
    if coreset.d != P.d:
        raise InvalidParameter(f"coreset dimension {coreset.d} != points dimension {P.d}")
    suites = [parse_suite(s) if isinstance(s, str) else s for s in args.suite or []]
    if not suites:
        suites = [SolutionSuite("RandomBox", 50, args.seed), SolutionSuite("DzSeeded", 50, args.seed)]
    report = audit(P, coreset, suites, args.k, args.z, eps=args.eps, threads=args.threads)
    if args.report_csv:
        Path(args.report_csv).write_text(report.to_csv())
    threshold = args.eps if args.max_distortion is None else args.max_distortion
    result = report.to_json()
    result["threshold"] = threshold
    result["passed"] = report.max <= threshold and bool(report.total_weight_ok)
    return (EXIT_PASS if result["passed"] else EXIT_CRITERION), result


def cmd_lb_gen(args):
    out = Path(args.out)
    if args.kind == "basis":
        inst = gen_basis_instance(args.k, args.eps, args.z)
        cfio.save_points(inst.points, out, args.format)
        info = inst.describe()
    elif args.kind == "subinstance":
        inst = gen_subinstance(args.clients or 10, args.centers, args.z, derived_int(args.seed, "lb-gen"))
        cfio.save_discrete(inst, out)
        info = inst.describe()
    else:
        inst = gen_star_instance(
            args.k, args.eps, args.centers, args.z, derived_int(args.seed, "lb-gen"), n_clients_per_copy=args.clients
        )
        cfio.save_discrete(inst, out)
        info = inst.describe()
    info["path"] = str(out)
    return EXIT_PASS, info


def cmd_approx(args):
    P = load_input(args.input)
    S = reference_solution(P, args.k, args.z, args.seed, swaps=args.swaps)
    if args.out:
        cfio.save_points(PointSet(S.centers), args.out)
    return EXIT_PASS, {"k": S.k, "z": args.z, "cost": total_cost(P, S, args.z), "centers": S.centers.tolist()}


def cmd_mc(args):
    if args.kind == "anticoncentration":
        est = anticoncentration_mc(args.m, args.p, args.eps, trials=args.trials, seed=args.seed)
        out = {
            "m": args.m,
            "p": args.p,
            "eps": args.eps,
            "trials": est.trials,
            "estimate": est.estimate,
            "wilson_low": est.low,
            "wilson_high": est.high,
        }
        if est.successes:
            out["fitted_rate"] = fitted_rate(est.estimate, args.eps, args.m, args.p)
        return EXIT_PASS, out
    if not args.input:
        raise InvalidParameter("the unbiasedness check needs --input")
    P = load_input(args.input)
    params = PowerParams(args.z, args.eps)
    Q, _ = preprocess(P, params, SamplerConfig(seed=args.seed), k=args.k)
    A = reference_solution(Q, args.k, args.z, derived_int(args.seed, "reference"))
    clu = build_clustering(Q, A, args.z)
    cat = partition(clu, params)
    S = Solution(Q.coords[substream(args.seed, "mc-solution").choice(Q.n, args.k, replace=False)])
    f = cost_vector(Q, S, args.z)
    rows = []
    for G, members in cat.groups.items():
        truth = weighted_sum(Q.multiplicity[members], f[members])
        estimates = np.empty(args.trials)
        for t in range(args.trials):
            idx, w = sample_group(Q, clu, cat, G, args.delta, substream(args.seed, "mc", str(G), t))
            estimates[t] = weighted_sum(w, f[idx])
        rows.append({"group": str(G), "true_cost": truth, "mean_estimate": float(estimates.mean())})
    return EXIT_PASS, {"delta": args.delta, "trials": args.trials, "groups": rows}


def cmd_inspect(args):
    P = load_input(args.input)
    params = PowerParams(args.z, args.eps)
    Q, _ = preprocess(P, params, SamplerConfig(seed=args.seed), k=args.k)
    A = reference_solution(Q, args.k, args.z, derived_int(args.seed, "reference"))
    return EXIT_PASS, partition(build_clustering(Q, A, args.z), params).to_json()


def cmd_run(args, config_path):
    if not config_path:
        raise InvalidParameter("run needs --config")
    data = json.loads(Path(config_path).read_text())
    data.setdefault("seed", args.seed)
    data.setdefault("threads", args.threads)
    bundle = run_experiment(RunConfig.from_dict(data))
    return bundle.exit_code, bundle.to_json()


COMMANDS = {
    "build": cmd_build,
    "eval": cmd_eval,
    "lb-gen": cmd_lb_gen,
    "approx": cmd_approx,
    "mc": cmd_mc,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config_path = _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        args.threads = resolve_threads(args.threads)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "run":
                code, result = cmd_run(args, config_path)
            else:
                code, result = COMMANDS[args.command](args)
    except (CoresetError, OSError, ValueError, json.JSONDecodeError) as exc:
        code_name = getattr(exc, "code", type(exc).__name__)
        print(f"coreset-forge: error [{code_name}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = cfio.dumps_json(result)
    if args.json_out:
        Path(args.json_out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
