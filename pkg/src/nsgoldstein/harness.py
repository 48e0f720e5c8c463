"""Seeded experiments, brute-force certification and bound validation.

Experiment configs are INI files (see ``README.md`` for the full grammar)::

    [function]
    name = abs_sum
    dimension = 2

    [algorithm]
    name = ingd
    delta = 0.25
    epsilon = 0.5

    [run]
    x0 = 1, 1
    seeds = 0-99
"""

from __future__ import annotations

import configparser
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .cutting_plane import cg_call_cap, cg_descent_run, lipschitz_oracle_samples
from .errors import ConfigInvalid, MissingTraces, NSGoldsteinError
from .goldstein import GoldsteinParams, StationarityCertificate, SubgradientEstimate, verify_certificate
from .ingd import MinNormConfig, inner_iteration_budget, ingd_evaluation_bound, ingd_run, outer_iterations
from .minnorm_poly import wolfe_min_norm
from .oracle import TestFunctionSpec, counted, eval_gradient_perturbed, make_test_function, uniform_ball
from .trace import DECAY_CHECKPOINTS, read_trace_csv

OUTPUT_DIR_ENV = "NSGOLDSTEIN_OUTPUT_DIR"
SUMMARY_SCHEMA_VERSION = 1
ALGORITHMS = ("ingd", "minnorm_cg_lipschitz", "minnorm_cg_weakly_convex")


# --------------------------------------------------------------------------
# certification


@dataclass
class CertifyReport:
    x: np.ndarray
    n_samples: int
    hull_norm: float
    certified: bool
    certificate: Optional[StationarityCertificate] = None

    def to_dict(self) -> dict:
        return dict(
            x=np.asarray(self.x).tolist(),
            samples=self.n_samples,
            hull_min_norm=self.hull_norm,
            certified=self.certified,
            one_sided=True,
            note="TRUE proves (delta, epsilon)-stationarity; FALSE does not disprove it",
            certificate=self.certificate.to_dict() if self.certificate is not None else None,
        )


def certify_stationarity(oracle, x, params: GoldsteinParams, M: int, rng: np.random.Generator) -> CertifyReport:
    """Inner-approximate the Goldstein subdifferential by ``M`` sampled gradients.

    The hull of gradients sampled in ``B_delta(x)`` lies inside the Goldstein
    subdifferential, so a hull min-norm within ``epsilon`` is a proof of
    stationarity; a larger value proves nothing.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    x = np.asarray(x, dtype=float)
    o = counted(oracle)
    pts, grads = [], []
    for _ in range(M):
        g, p = eval_gradient_perturbed(o, uniform_ball(rng, x, params.delta), rng, within=(x, params.delta))
        pts.append(p)
        grads.append(g)
    g_star, w = wolfe_min_norm(grads)
    hull_norm = float(np.linalg.norm(g_star))
    certified = hull_norm <= params.epsilon
    cert = None
    if certified:
        keep = w > 0
        est = SubgradientEstimate(
            vector=g_star, points=np.array(pts)[keep], gradients=np.array(grads)[keep],
            weights=w[keep] / w[keep].sum(), center=x.copy(),
        )
        cert = StationarityCertificate.from_estimate(est, params)
        certified = verify_certificate(oracle, cert)
    return CertifyReport(x=x, n_samples=M, hull_norm=hull_norm, certified=certified, certificate=cert)


# --------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    function: TestFunctionSpec
    algorithm: str
    delta: float
    epsilon: float
    x0: np.ndarray
    seeds: list
    gamma: float = 0.01
    lipschitz: Optional[float] = None
    rho: Optional[float] = None
    T: Optional[int] = None
    outer_factor: Optional[float] = None
    r_fraction: float = 0.5
    max_inner_iters: Optional[int] = None
    on_budget_exhausted: str = "abort"
    name: str = "run"
    output_dir: Optional[str] = None
    workers: int = 1
    certify_samples: Optional[int] = None
    sampling: dict = field(default_factory=dict)

    def oracle(self):
        return make_test_function(self.function)

    def params(self, oracle=None) -> GoldsteinParams:
        oracle = self.oracle() if oracle is None else oracle
        return GoldsteinParams.for_oracle(oracle, self.delta, self.epsilon, self.gamma, self.lipschitz, self.rho)

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "results")


def _vector(text: str, key: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigInvalid(f"{key}: expected a list of numbers, got {text!r}", field=key)
    if not vals:
        raise ConfigInvalid(f"{key}: empty vector", field=key)
    return np.array(vals)


def _matrix(text: str, key: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    if not rows:
        raise ConfigInvalid(f"{key}: empty matrix", field=key)
    mat = [_vector(r, key) for r in rows]
    if len({len(r) for r in mat}) != 1:
        raise ConfigInvalid(f"{key}: rows differ in length", field=key)
    return np.array(mat)


def _seeds(text: str) -> list:
    seeds = []
    for part in text.replace(",", " ").split():
        m = re.fullmatch(r"(\d+)-(\d+)", part)
        if m:
            seeds.extend(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            seeds.append(int(part))
    return seeds


def _get(section, key, conv, default=None, required=False, section_name=""):
    full = f"{section_name}.{key}"
    if section is None or key not in section or section[key].strip() == "":
        if required:
            raise ConfigInvalid(f"missing required field {full}", field=full)
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ConfigInvalid:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{full}: cannot parse {raw!r} ({exc})", field=full)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an experiment config; raises ``ConfigInvalid`` naming the field."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalid(f"unparseable config: {exc}", field="<file>")
    for sec in ("function", "algorithm", "run"):
        if sec not in cp:
            raise ConfigInvalid(f"missing section [{sec}]", field=sec)
    fn, alg, run = cp["function"], cp["algorithm"], cp["run"]
    cert = cp["certify"] if "certify" in cp else None

    params = {}
    if "c" in fn:
        params["c"] = _get(fn, "c", lambda s: _vector(s, "function.c"), section_name="function")
    if "slopes" in fn:
        params["slopes"] = _get(fn, "slopes", lambda s: _matrix(s, "function.slopes"), section_name="function")
    if "offsets" in fn:
        params["offsets"] = _get(fn, "offsets", lambda s: _vector(s, "function.offsets"), section_name="function")
    spec = TestFunctionSpec(
        name=_get(fn, "name", str, required=True, section_name="function"),
        dimension=_get(fn, "dimension", int, section_name="function"),
        parameters=params,
        domain_radius=_get(fn, "domain_radius", float, section_name="function"),
    )
    try:
        oracle = make_test_function(spec)
    except NSGoldsteinError as exc:
        raise ConfigInvalid(f"function: {exc}", field="function.name" if exc.code == "UNKNOWN_FUNCTION" else "function")
    if spec.dimension is None:
        spec.dimension = oracle.dimension

    algorithm = _get(alg, "name", lambda s: s.lower(), required=True, section_name="algorithm")
    if algorithm not in ALGORITHMS:
        raise ConfigInvalid(f"algorithm.name must be one of {ALGORITHMS}, got {algorithm!r}", field="algorithm.name")
    T_raw = _get(alg, "T", str, default="auto", section_name="algorithm")
    T = None if T_raw.lower() == "auto" else _get(alg, "T", int, section_name="algorithm")
    sampling = {}
    for key in ("n_samples", "burn_in", "thinning", "n_chains"):
        val = _get(alg, key, int, section_name="algorithm")
        if val is not None:
            sampling[key] = val

    cfg = ExperimentConfig(
        function=spec,
        algorithm=algorithm,
        delta=_get(alg, "delta", float, required=True, section_name="algorithm"),
        epsilon=_get(alg, "epsilon", float, required=True, section_name="algorithm"),
        gamma=_get(alg, "gamma", float, 0.01, section_name="algorithm"),
        lipschitz=_get(alg, "lipschitz", float, section_name="algorithm"),
        rho=_get(alg, "rho", float, section_name="algorithm"),
        T=T,
        outer_factor=_get(alg, "outer_factor", float, section_name="algorithm"),
        r_fraction=_get(alg, "r_fraction", float, 0.5, section_name="algorithm"),
        max_inner_iters=_get(alg, "max_inner_iters", int, section_name="algorithm"),
        on_budget_exhausted=_get(alg, "on_budget_exhausted", str, "abort", section_name="algorithm"),
        x0=_get(run, "x0", lambda s: _vector(s, "run.x0"), required=True, section_name="run"),
        seeds=_get(run, "seeds", _seeds, [0], section_name="run"),
        name=_get(run, "name", str, "run", section_name="run"),
        output_dir=_get(run, "output_dir", str, section_name="run"),
        workers=_get(run, "workers", int, 1, section_name="run"),
        certify_samples=_get(cert, "samples", int, section_name="certify"),
        sampling=sampling,
    )
    _validate(cfg, oracle)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}", field="<file>")
    return parse_config(text)


def _validate(cfg: ExperimentConfig, oracle):
    if cfg.x0.shape[0] != oracle.dimension:
        raise ConfigInvalid(f"run.x0 has {cfg.x0.shape[0]} entries, function dimension is {oracle.dimension}",
                            field="run.x0")
    if not cfg.seeds:
        raise ConfigInvalid("run.seeds is empty", field="run.seeds")
    if cfg.workers < 1:
        raise ConfigInvalid("run.workers must be >= 1", field="run.workers")
    if cfg.T is not None and cfg.T < 1:
        raise ConfigInvalid("algorithm.T must be >= 1", field="algorithm.T")
    if cfg.on_budget_exhausted not in ("abort", "continue"):
        raise ConfigInvalid("algorithm.on_budget_exhausted must be abort or continue",
                            field="algorithm.on_budget_exhausted")
    if not 0 < cfg.r_fraction < 1:
        raise ConfigInvalid("algorithm.r_fraction must lie in (0, 1)", field="algorithm.r_fraction")
    try:
        cfg.params(oracle)
    except ValueError as exc:
        raise ConfigInvalid(f"algorithm: {exc}", field="algorithm")
    if cfg.T is None and oracle.known_minimum is None:
        raise ConfigInvalid("algorithm.T is required: the function has no declared minimum", field="algorithm.T")


# --------------------------------------------------------------------------
# experiments


def cg_evaluation_bound(delta_gap: float, params: GoldsteinParams, d: int) -> int:
    """Evaluation bound for the cutting-plane method with the sampling oracle."""
    dl, e, L, g = params.delta, params.epsilon, params.lipschitz, params.gamma
    gap = max(delta_gap, dl * e / 4.0)
    return (math.ceil(4.0 * gap / (dl * e)) * max(1, math.ceil(8.0 * d * math.log(8.0 * L / e)))
            * math.ceil(36.0 * L / e) * max(1, math.ceil(2.0 * math.log(4.0 * gap / (g * dl * e)))))


def _outer_budget(cfg: ExperimentConfig, gap: float) -> int:
    if cfg.T is not None:
        return cfg.T
    factor = cfg.outer_factor or (4.0 if cfg.algorithm == "ingd" else 3.0)
    return outer_iterations(gap, cfg.delta, cfg.epsilon, factor)


def run_single(cfg: ExperimentConfig, seed: int, write: bool = True) -> dict:
    """Run one seed, write its CSV trace and JSON summary, and return the summary."""
    oracle = cfg.oracle()
    params = cfg.params(oracle)
    f0 = oracle.value(cfg.x0)
    gap = f0 - oracle.known_minimum if oracle.known_minimum is not None else None
    T = _outer_budget(cfg, gap if gap is not None else 0.0)
    rng = np.random.default_rng(seed)
    d = oracle.dimension

    summary = dict(
        schema_version=SUMMARY_SCHEMA_VERSION, kind="run_summary", name=cfg.name, seed=seed,
        function=dict(name=cfg.function.name, dimension=d,
                      parameters={k: np.asarray(v).tolist() for k, v in cfg.function.parameters.items()},
                      domain_radius=cfg.function.domain_radius),
        algorithm=cfg.algorithm, params=params.to_dict(), x0=cfg.x0.tolist(), T=T,
        bounds=dict(
            inner_budget=MinNormConfig(params, cfg.max_inner_iters).max_inner_iters,
            cg_call_cap=cg_call_cap(d, params.lipschitz, params.epsilon),
            cg_slack=2 * d,
            oracle_samples=lipschitz_oracle_samples(params.lipschitz, params.epsilon, params.gamma),
        ),
        error=None,
    )
    started = time.perf_counter()
    trace = None
    try:
        if cfg.algorithm == "ingd":
            mcfg = MinNormConfig(params, cfg.max_inner_iters, cfg.r_fraction, cfg.on_budget_exhausted)
            result = ingd_run(oracle, cfg.x0, mcfg, T, rng)
        else:
            variant = cfg.algorithm.replace("minnorm_cg_", "")
            result = cg_descent_run(oracle, cfg.x0, params, rng, variant, T, sampling=cfg.sampling)
        trace = result.trace
    except NSGoldsteinError as exc:
        summary["error"] = dict(code=exc.code, message=str(exc))
        trace = exc.context.get("trace")
        result = None
    summary["wall_time_s"] = time.perf_counter() - started

    if result is not None:
        best = min([r.f for r in trace.records] + [oracle.value(result.x)])
        if gap is None:
            gap_value, gap_kind = f0 - best, "ESTIMATED"
        else:
            gap_value, gap_kind = gap, "DECLARED"
        verified = None
        if result.certificate is not None:
            try:
                verified = verify_certificate(oracle, result.certificate)
            except NSGoldsteinError as exc:
                verified = False
                summary["error"] = dict(code=exc.code, message=str(exc))
        summary.update(
            delta_gap=gap_value, delta_gap_kind=gap_kind,
            x_final=result.x.tolist(), f_final=oracle.value(result.x),
            certificate=result.certificate.to_dict() if result.certificate is not None else None,
            certificate_verified=verified,
            budget_exhausted=trace.budget_exhausted,
            outer_steps=sum(1 for r in trace.records if r.outcome == "DESCENT"),
            value_evals=trace.total_value_evals, grad_evals=trace.total_grad_evals,
            k_total=trace.records[-1].k_total if trace.records else 0,
            warnings=trace.warnings,
        )
        if cfg.algorithm == "ingd":
            summary["bounds"]["evaluation_bound"] = ingd_evaluation_bound(gap_value, params)
        else:
            summary["bounds"]["evaluation_bound"] = cg_evaluation_bound(gap_value, params, d)
        if trace.budget_exhausted and summary["error"] is None:
            summary["error"] = dict(code="BUDGET_EXHAUSTED", message="a direction finder exhausted its budget")
    summary["trace_rows"] = len(trace) if trace is not None else 0
    summary["trace_file"] = f"{cfg.name}_seed{seed}.csv"

    if write:
        out = cfg.resolved_output_dir()
        out.mkdir(parents=True, exist_ok=True)
        if trace is not None:
            (out / summary["trace_file"]).write_text(trace.to_csv())
        (out / f"{cfg.name}_seed{seed}.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


def _run_seed(args):
    cfg, seed = args
    return run_single(cfg, seed)


def run_experiment(cfg: ExperimentConfig) -> tuple[int, list]:
    """Run every seed; exit code 0 iff no run surfaced an error, else 2."""
    jobs = [(cfg, s) for s in cfg.seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            summaries = list(pool.map(_run_seed, jobs))
    else:
        summaries = [_run_seed(j) for j in jobs]
    failed = [s for s in summaries if s["error"] is not None or s.get("certificate_verified") is False]
    return (2 if failed else 0), summaries


# --------------------------------------------------------------------------
# bound validation


@dataclass
class CheckResult:
    name: str
    status: str  # PASS, FAIL, UNDERPOWERED or SKIPPED
    detail: str


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.status != "FAIL" for c in self.checks)

    def table(self) -> str:
        width = max(len(c.name) for c in self.checks)
        return "\n".join(f"{c.name:<{width}}  {c.status:<12}  {c.detail}" for c in self.checks)


def _load_runs(directory) -> list:
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingTraces(f"{directory} is not a directory")
    runs = []
    for path in sorted(directory.glob("*.json")):
        try:
            summary = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError):
            continue
        if not isinstance(summary, dict) or summary.get("kind") != "run_summary":
            continue
        csv_path = directory / summary.get("trace_file", "")
        if not csv_path.is_file():
            raise MissingTraces(f"trace file missing for {path.name}")
        _, rows = read_trace_csv(csv_path)
        if len(rows) != summary.get("trace_rows"):
            raise MissingTraces(f"{csv_path.name} has {len(rows)} rows, summary records {summary.get('trace_rows')}")
        runs.append((summary, rows))
    if not runs:
        raise MissingTraces(f"no run summaries found in {directory}")
    return runs


def validate_bounds(directory) -> ValidationReport:
    """Check traces in ``directory`` against the MinNorm, decay, call-cap and evaluation bounds."""
    runs = _load_runs(directory)
    ingd = [(s, rows) for s, rows in runs if s["algorithm"] == "ingd"]
    cg = [(s, rows) for s, rows in runs if s["algorithm"] != "ingd"]
    checks = []

    # (a) MinNorm terminates within its budget with probability >= 1 - gamma
    name = "a_minnorm_termination"
    if not ingd:
        checks.append(CheckResult(name, "SKIPPED", "no INGD runs"))
    else:
        within, total, gammas = 0, 0, []
        for s, rows in ingd:
            budget = s["bounds"]["inner_budget"]
            prev = 0
            for r in rows:
                k = int(r["k_total"])
                inner, prev = k - prev, k
                total += 1
                within += int(r["outcome"] != "BUDGET_EXHAUSTED" and inner <= budget)
            gammas.append(s["params"]["gamma"])
        gamma = max(gammas)
        frac = within / total
        se = math.sqrt(gamma * (1 - gamma) / total)
        target = 1 - gamma - 3 * se
        detail = f"{within}/{total} calls within budget ({frac:.4f}; need >= {target:.4f})"
        if len(ingd) < 2:
            checks.append(CheckResult(name, "UNDERPOWERED", detail + "; single run"))
        else:
            checks.append(CheckResult(name, "PASS" if frac >= target else "FAIL", detail))

    # (b) E ||g_k||^2 1{running} <= 16 L^2 / (16 + k)
    name = "b_inner_decay"
    if not ingd:
        checks.append(CheckResult(name, "SKIPPED", "no INGD runs"))
    else:
        parts, ok = [], True
        for k in DECAY_CHECKPOINTS:
            vals = np.array([float(r[f"g2_k{k}"]) / s["params"]["lipschitz"] ** 2 for s, rows in ingd for r in rows])
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            bound = 16.0 / (16.0 + k) + 3 * se
            ok &= mean <= bound
            parts.append(f"k={k}: {mean:.4f} <= {bound:.4f}")
        detail = "; ".join(parts) + " (normalized by L^2)"
        if len(ingd) < 2:
            checks.append(CheckResult(name, "UNDERPOWERED", detail + "; single run"))
        else:
            checks.append(CheckResult(name, "PASS" if ok else "FAIL", detail))

    # (c) cutting-plane oracle calls <= ceil(8 d ln(8L/eps)) + 2d
    name = "c_cg_call_cap"
    if not cg:
        checks.append(CheckResult(name, "SKIPPED", "no cutting-plane runs"))
    else:
        worst, ok, slack = 0, True, 0
        for s, rows in cg:
            cap = s["bounds"]["cg_call_cap"] + s["bounds"]["cg_slack"]
            for r in rows:
                calls = int(r["oracle_calls"])
                worst = max(worst, calls)
                ok &= calls <= cap
                slack += int(r["slack_used"])
        checks.append(CheckResult(name, "PASS" if ok else "FAIL",
                                  f"max oracle calls {worst}; slack used in {slack} calls"))

    # (d) total evaluations <= the end-to-end product bound
    name = "d_total_evaluations"
    done = [s for s, _ in runs if "value_evals" in s]
    if not done:
        checks.append(CheckResult(name, "SKIPPED", "no completed runs"))
    else:
        over = [s for s in done if s["value_evals"] + s["grad_evals"] > s["bounds"]["evaluation_bound"]]
        worst = max((s["value_evals"] + s["grad_evals"]) / s["bounds"]["evaluation_bound"] for s in done)
        checks.append(CheckResult(name, "FAIL" if over else "PASS",
                                  f"{len(done) - len(over)}/{len(done)} runs within bound; worst ratio {worst:.3g}"))
    return ValidationReport(checks)
