"""Simulation scenarios and the replicate harness behind ``haarsel scenario``."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import re
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .metrics import EvaluationReport, evaluate
from .select import Criterion, Method, MethodConfig, MuConvention, run_method
from .simulate import (
    N_TRUE_PREDICTORS,
    THOMAS_HIGH,
    THOMAS_MODERATE,
    GridImage,
    ThomasSpec,
    GrfSpec,
    PointPattern,
    Window,
    calibrate_intercept,
    replicate_seed,
    simulate_grfs,
    simulate_ipp,
    simulate_thomas,
    true_beta_matrix,
)
from .solver import SolverOptions

log = logging.getLogger(__name__)

SCENARIOS = ("poisson", "thomas_moderate", "thomas_high")
WORKERS_ENV = "HAARSEL_WORKERS"
TRUE_PREDICTORS = frozenset(range(N_TRUE_PREDICTORS))

REPLICATE_COLUMNS = (
    "scenario", "mu", "method", "seed", "rmspe", "tpr_global", "tpr_local", "runtime_s",
    "n_events", "df", "false_positives", "converged", "error",
)
SUMMARY_COLUMNS = (
    "scenario", "mu", "method", "replicates", "rmspe", "tpr_global", "tpr_local",
    "mean_events", "mean_df", "nonconverged", "failed",
)


class ScenarioData(NamedTuple):
    pattern: PointPattern
    covariates: list
    intercept: float
    parents: PointPattern | None
    bound_violations: int


def log_intensity_field(covariates: list[GridImage]) -> GridImage:
    """``sum_p beta_p(s) X_p(s)`` over the active predictors, on the covariate grid."""
    template = covariates[0]
    win = template.window
    centers = template.center_points()
    unit = np.column_stack([(centers[:, 0] - win.xmin) / win.width, (centers[:, 1] - win.ymin) / win.height])
    beta = true_beta_matrix(unit, N_TRUE_PREDICTORS)
    field_ = np.zeros(centers.shape[0])
    for p, img in enumerate(covariates[:N_TRUE_PREDICTORS]):
        field_ += beta[:, p] * img.values.ravel()
    return GridImage(field_.reshape(template.values.shape), win)


def simulate_scenario(scenario: str, mu: float, P: int, seed: int, resolution: int = 64) -> ScenarioData:
    """Covariates and one pattern for replicate ``seed``.

    Covariates depend on ``seed`` only, so every ``mu`` of a replicate
    shares them; the pattern stream depends on ``(seed, mu)``.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; valid: {', '.join(SCENARIOS)}")
    if P < N_TRUE_PREDICTORS:
        raise ValueError(f"need at least {N_TRUE_PREDICTORS} predictors, got {P}")
    grf = GrfSpec(resolution=(resolution, resolution))
    covariates = simulate_grfs(grf, P, seed=np.random.default_rng([seed, 0]))
    base = log_intensity_field(covariates)
    b0 = calibrate_intercept(mu, base)
    rng = np.random.default_rng([seed, 1, int(round(mu))])
    if scenario == "poisson":
        pattern = simulate_ipp(base.map(lambda v: np.exp(b0 + v)), seed=rng)
        return ScenarioData(pattern, covariates, b0, None, 0)
    spec = ThomasSpec(**(THOMAS_MODERATE if scenario == "thomas_moderate" else THOMAS_HIGH))
    sample = simulate_thomas(base.map(lambda v: b0 + v), spec, seed=rng)
    return ScenarioData(sample.pattern, covariates, b0, sample.parents, sample.bound_violations)


def truth_surfaces(P: int):
    return lambda pts: true_beta_matrix(pts, P)


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "poisson"
    mu: tuple = (100.0, 500.0)
    P: int = 50
    J: int = 2
    j0: int = 0
    dummies: int = 256
    replicates: int = 20
    seed: int = 2024
    methods: tuple = tuple(m.value for m in Method)
    solver: dict = field(default_factory=dict)
    mu_convention: str = MuConvention.OBSERVED_COUNT.value
    criterion: str = Criterion.WQBIC.value
    tau: float = 3.7
    gamma: float = 1.0
    grf_resolution: int = 64
    rmspe_grid: int = 64
    output: str = "runs/scenario"

    def method_configs(self) -> list[MethodConfig]:
        opts = SolverOptions(**self.solver)
        return [
            MethodConfig(Method.parse(m), J=self.J, j0=self.j0, dummies=self.dummies, tau=self.tau,
                         gamma=self.gamma, mu_convention=MuConvention(self.mu_convention),
                         criterion=Criterion(self.criterion), options=opts)
            for m in self.methods
        ]


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    """Validate a JSON scenario document; errors name the offending line."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1: top level must be an object")

    def fail(key, msg):
        raise ConfigError(f"{source}:{_line_of(text, key)}: {key}: {msg}")

    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    for key in raw:
        if key not in known:
            fail(key, f"unknown key; expected one of {', '.join(sorted(known))}")
    kw = dict(raw)
    if "scenario" in kw and kw["scenario"] not in SCENARIOS:
        fail("scenario", f"must be one of {', '.join(SCENARIOS)}")
    if "mu" in kw:
        mus = kw["mu"] if isinstance(kw["mu"], list) else [kw["mu"]]
        if not mus or not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in mus):
            fail("mu", "targets must be positive numbers")
        kw["mu"] = tuple(float(v) for v in mus)
    for key, low in (("P", N_TRUE_PREDICTORS), ("J", 0), ("j0", 0), ("dummies", 1), ("replicates", 1),
                     ("grf_resolution", 2), ("rmspe_grid", 2)):
        if key in kw and (not isinstance(kw[key], int) or isinstance(kw[key], bool) or kw[key] < low):
            fail(key, f"must be an integer >= {low}")
    if "J" in kw or "j0" in kw:
        if kw.get("j0", 0) > kw.get("J", 2):
            fail("j0", "must not exceed J")
    if "seed" in kw and (not isinstance(kw["seed"], int) or kw["seed"] < 0):
        fail("seed", "must be a non-negative integer")
    if "methods" in kw:
        if not isinstance(kw["methods"], list) or not kw["methods"]:
            fail("methods", "must be a non-empty list")
        try:
            kw["methods"] = tuple(Method.parse(m).value for m in kw["methods"])
        except ValueError as exc:
            fail("methods", str(exc))
    if "solver" in kw:
        opts = {f.name for f in dataclasses.fields(SolverOptions)}
        if not isinstance(kw["solver"], dict):
            fail("solver", "must be an object")
        bad = sorted(set(kw["solver"]) - opts)
        if bad:
            fail("solver", f"unknown option(s) {', '.join(bad)}; valid: {', '.join(sorted(opts))}")
    if "mu_convention" in kw:
        try:
            MuConvention(kw["mu_convention"])
        except ValueError:
            fail("mu_convention", f"must be one of {', '.join(c.value for c in MuConvention)}")
    if "criterion" in kw:
        try:
            Criterion(kw["criterion"])
        except ValueError:
            fail("criterion", f"must be one of {', '.join(c.value for c in Criterion)}")
    if "tau" in kw and not (isinstance(kw["tau"], (int, float)) and kw["tau"] > 2):
        fail("tau", "must exceed 2")
    return ScenarioConfig(**kw)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))


def bundled_config(name: str) -> Path:
    """Path of a config shipped inside the package, e.g. ``scenario1_desk``."""
    path = Path(__file__).parent / "configs" / f"{name.removesuffix('.json')}.json"
    if not path.exists():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return path


# --------------------------------------------------------------------------
# harness


class RunRecord(NamedTuple):
    report: EvaluationReport
    error: str
    selection: dict


def _failed_report(cfg: ScenarioConfig, mu, method, seed, n_events) -> EvaluationReport:
    return EvaluationReport(cfg.scenario, float(mu), method, int(seed), math.nan, math.nan,
                            math.nan if Method(method).localized else None, math.nan, n_events, 0, 0, 0, False)


def run_replicate(cfg: ScenarioConfig, mu: float, index: int) -> list[RunRecord]:
    """Simulate one dataset and run every configured method on it.

    A failing method yields an error record; the others still run.
    """
    seed = replicate_seed(cfg.seed, index)
    data = simulate_scenario(cfg.scenario, mu, cfg.P, seed, cfg.grf_resolution)
    truth = truth_surfaces(cfg.P)
    out = []
    for mcfg in cfg.method_configs():
        try:
            res = run_method(data.pattern, data.covariates, mcfg)
            rep = evaluate(res, truth, TRUE_PREDICTORS, data.pattern.points, scenario=cfg.scenario, mu=mu,
                           seed=seed, grid=cfg.rmspe_grid)
            sel = res.to_dict()
            sel["bound_violations"] = data.bound_violations
            out.append(RunRecord(rep, "", sel))
        except Exception as exc:  # crash isolation: record and continue
            log.warning("%s mu=%g seed=%d failed: %s", mcfg.method.value, mu, seed, exc)
            msg = f"{type(exc).__name__}: {exc}"
            out.append(RunRecord(_failed_report(cfg, mu, mcfg.method.value, seed, data.pattern.n), msg,
                                 {"method": mcfg.method.value, "traceback": traceback.format_exc()}))
    return out


def _task(args):
    cfg, mu, index = args
    return run_replicate(cfg, mu, index)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".12g")
    return str(v)


def _mean(values) -> float:
    vals = [v for v in values if v is not None and not math.isnan(v)]
    return float(np.mean(vals)) if vals else math.nan


def summarize(records: list[RunRecord], cfg: ScenarioConfig) -> list[dict]:
    rows = []
    for mu in cfg.mu:
        for method in cfg.methods:
            group = [r for r in records if r.report.mu == mu and r.report.method == method]
            reps = [r.report for r in group]
            ok = [r.report for r in group if not r.error]
            localized = Method(method).localized
            rows.append({
                "scenario": cfg.scenario,
                "mu": mu,
                "method": method,
                "replicates": len(reps),
                "rmspe": _mean(r.rmspe for r in ok),
                "tpr_global": _mean(r.tpr_global for r in ok),
                "tpr_local": _mean(r.tpr_local for r in ok) if localized else None,
                "mean_events": _mean(float(r.n_events) for r in reps),
                "mean_df": _mean(float(r.df) for r in ok),
                "nonconverged": sum(1 for r in ok if not r.converged),
                "failed": len(reps) - len(ok),
            })
    return rows


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


class ScenarioRun(NamedTuple):
    records: list
    summary: list
    out_dir: Path

    @property
    def complete(self) -> bool:
        return all(not r.error and r.report.converged for r in self.records)


def run_scenario(cfg: ScenarioConfig, out_dir=None, workers: int | None = None) -> ScenarioRun:
    """Run every (mu, replicate) task and write the CSV/JSON outputs.

    Outputs are sorted by (mu, method, replicate) before writing, so they
    do not depend on worker scheduling.
    """
    out = Path(out_dir if out_dir is not None else cfg.output)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    workers = worker_count() if workers is None else max(1, int(workers))
    tasks = [(cfg, mu, i) for mu in cfg.mu for i in range(cfg.replicates)]
    if workers == 1 or len(tasks) == 1:
        batches = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            batches = list(pool.map(_task, tasks))

    order = {m: k for k, m in enumerate(cfg.methods)}
    rank = {(mu, replicate_seed(cfg.seed, i)): (a, i) for a, mu in enumerate(cfg.mu) for i in range(cfg.replicates)}
    records = [r for batch in batches for r in batch]
    records.sort(key=lambda r: (rank[(r.report.mu, r.report.seed)][0], order[r.report.method],
                                rank[(r.report.mu, r.report.seed)][1]))

    rep_rows = [dict(r.report.as_dict(), error=r.error) for r in records]
    _write_csv(out / "replicates.csv", REPLICATE_COLUMNS, rep_rows)
    summary = summarize(records, cfg)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    runtime_rows = [
        {"scenario": cfg.scenario, "mu": mu, "method": m,
         "runtime_s": _mean(r.report.runtime_s for r in records if r.report.mu == mu and r.report.method == m)}
        for mu in cfg.mu for m in cfg.methods
    ]
    _write_csv(out / "runtime_summary.csv", ("scenario", "mu", "method", "runtime_s"), runtime_rows)
    for r in records:
        name = f"mu{_fmt(r.report.mu)}_{r.report.method}_seed{r.report.seed}.json"
        doc = {"report": r.report.as_dict(), "error": r.error, "selection": r.selection}
        (out / "runs" / name).write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")
    (out / "config.json").write_text(json.dumps(dataclasses.asdict(cfg), indent=2) + "\n")
    return ScenarioRun(records, summary, out)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
