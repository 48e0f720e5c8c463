"""Command line entry point: ``nsgoldstein run|certify|validate|list-functions``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid, MissingTraces, NSGoldsteinError
from .goldstein import StationarityCertificate, verify_certificate
from .harness import certify_stationarity, load_config, run_experiment, validate_bounds
from .oracle import FUNCTION_DESCRIPTIONS, list_functions


def _err(exc: NSGoldsteinError) -> None:
    print(f"error [{exc.code}]: {exc}", file=sys.stderr)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.workers:
        cfg.workers = args.workers
    code, summaries = run_experiment(cfg)
    for s in summaries:
        cert = s.get("certificate")
        status = s["error"]["code"] if s["error"] else ("CERTIFIED" if cert else "COMPLETED")
        print(f"seed={s['seed']:<6d} {status:<20s} f={s.get('f_final', float('nan')):.6g} "
              f"evals={s.get('value_evals', 0)}+{s.get('grad_evals', 0)} wall={s['wall_time_s']:.2f}s")
    print(f"wrote {len(summaries)} runs to {cfg.resolved_output_dir()}")
    return code


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    oracle = cfg.oracle()
    params = cfg.params(oracle)
    if args.certificate:
        cert = StationarityCertificate.from_json(Path(args.certificate).read_text())
        ok = verify_certificate(oracle, cert)
        print(json.dumps(dict(verified=ok, norm_bound=cert.norm_bound, epsilon=cert.params.epsilon), indent=2))
        return 0 if ok else 3
    if args.point is None:
        raise ConfigInvalid("certify needs --point or --certificate", field="--point")
    x = np.array([float(t) for t in args.point.replace(",", " ").split()])
    if x.shape[0] != oracle.dimension:
        raise ConfigInvalid(f"--point has {x.shape[0]} entries, dimension is {oracle.dimension}", field="--point")
    M = args.samples or cfg.certify_samples or 32 * oracle.dimension
    report = certify_stationarity(oracle, x, params, M, np.random.default_rng(args.seed))
    out = json.dumps(report.to_dict(), indent=2)
    if args.output:
        Path(args.output).write_text(out)
    print(out)
    return 0 if report.certified else 3


def cmd_validate(args) -> int:
    report = validate_bounds(args.directory)
    print(report.table())
    return 0 if report.passed else 2


def cmd_list(args) -> int:
    for name in list_functions():
        print(f"{name:<28s} {FUNCTION_DESCRIPTIONS.get(name, '')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsgoldstein", description="Goldstein-stationarity solvers and harness")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a seeded experiment from a config file")
    r.add_argument("config")
    r.add_argument("--output-dir", help="override [run] output_dir")
    r.add_argument("--workers", type=int, help="override [run] workers")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", help="brute-force certify a point, or verify a saved certificate")
    c.add_argument("config")
    c.add_argument("--point", help="comma separated coordinates")
    c.add_argument("--certificate", help="certificate JSON file to verify")
    c.add_argument("--samples", type=int, help="number of sampled gradients (default 32*d)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output", help="also write the report JSON here")
    c.set_defaults(func=cmd_certify)

    v = sub.add_parser("validate", help="check a results directory against the complexity bounds")
    v.add_argument("directory")
    v.set_defaults(func=cmd_validate)

    lf = sub.add_parser("list-functions", help="list built-in test functions")
    lf.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, MissingTraces) as exc:
        _err(exc)
        return 1
    except NSGoldsteinError as exc:
        _err(exc)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
