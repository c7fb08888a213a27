"""Monte Carlo experiments: sample, solve, check a bound, aggregate coverage.

A trial is fully determined by the experiment config and its index (noise
stream keyed by base_seed XOR index), so trials can run in any order on any
number of worker processes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.stats import beta

from cpd import bounds
from cpd.core.config import bounds_settings, settings
from cpd.core.csv_io import read_rows, write_rows
from cpd.core.errors import ConfigError, CPDError, InputError, PreconditionError, SolverError
from cpd.core.serialize import fmt_float, parse_float
from cpd.detect import detect_pipeline
from cpd.schemes import ExperimentConfig, NoiseSpec, PiecewiseSignal, TrialRecord
from cpd.signals import (
    SignalStats,
    draw_noise,
    make_signal,
    max_partial_sum_stat,
    read_signal,
    signal_stats,
)
from cpd.solver1d import solve_fused_lasso
from cpd.solvernd import solve_group_fused_lasso

logger = logging.getLogger("cpd.harness")

MODE_FLAG: Dict[str, str] = {
    "elementwise": "elementwise_ok",
    "sos": "sos_ok",
    "detection": "dH_ok",
    "partial_sum_event": "event_ok",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


# ---------------------------------------------------------------- config


def _parse_levels(raw: str):
    segments = [s for s in (part.strip() for part in raw.split(";")) if s]
    if len(segments) > 1 or ";" in raw:
        return [[float(c) for c in seg.split(",")] for seg in segments]
    return [[float(c)] for c in raw.split(",")]


def _parse_value(key: str, raw: str):
    if key == "changepoints":
        return [int(c) for c in raw.replace(";", ",").split(",") if c.strip()]
    if key == "levels":
        return _parse_levels(raw)
    if key == "group":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    return raw


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a flat `key = value` file (`#` starts a comment)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}", path=str(path)) from exc

    known = set(ExperimentConfig.model_fields) | {"lambda"}
    data: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`", path=str(path), line=lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key == "lam" or key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}", path=str(path), line=lineno)
        if key in data:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}", path=str(path), line=lineno)
        try:
            data[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}", path=str(path), line=lineno) from exc

    if isinstance(data.get("signal"), str) and not Path(data["signal"]).is_absolute():
        data["signal"] = str((path.parent / data["signal"]).resolve())

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(x) for x in first.get("loc", ())) or "config"
        raise ConfigError(f"{path}: {where}: {first['msg']}", path=str(path)) from exc


def build_signal(cfg: ExperimentConfig) -> PiecewiseSignal:
    if cfg.signal is not None:
        sig = read_signal(cfg.signal)
    else:
        vector = cfg.group or any(len(lv) > 1 for lv in cfg.levels)
        levels = cfg.levels if vector else [lv[0] for lv in cfg.levels]
        try:
            sig = make_signal(cfg.n, cfg.changepoints, levels, vector=vector)
        except ValidationError as exc:
            raise ConfigError(f"invalid inline signal: {exc.errors()[0]['msg']}") from exc

    if cfg.group and not sig.vector:
        sig = make_signal(sig.n, sig.changepoints, [list(lv) for lv in sig.levels], vector=True)
    if not cfg.group and sig.vector:
        raise ConfigError("vector-valued signal needs group = true")
    if cfg.p is not None and sig.p != cfg.p:
        raise ConfigError(f"p = {cfg.p} does not match the signal dimension {sig.p}")
    return sig


# ---------------------------------------------------------------- planning


@dataclass(frozen=True)
class TrialPlan:
    """Everything a trial needs, computed once before any trial runs."""

    cfg: ExperimentConfig
    signal: PiecewiseSignal
    stats: SignalStats
    My: float
    lam: Optional[float]
    per_index: Optional[np.ndarray] = None
    sos_bound: Optional[float] = None
    dH_guarantee: Optional[float] = None


def _resolve_my(cfg: ExperimentConfig, sig: PiecewiseSignal) -> float:
    if cfg.group:
        return bounds.compute_My_group(cfg.sigma, sig.n, cfg.t, sig.p)
    return bounds.compute_My_scalar(cfg.sigma, sig.n, cfg.t, cfg.family)


def plan_experiment(cfg: ExperimentConfig) -> TrialPlan:
    """Build the signal, resolve lambda and check the preconditions of the bound being tested."""
    sig = build_signal(cfg)
    stats = signal_stats(sig)
    My = _resolve_my(cfg, sig)

    if cfg.mode == "partial_sum_event":
        return TrialPlan(cfg=cfg, signal=sig, stats=stats, My=My, lam=None)

    if cfg.mode == "detection":
        if stats.K < 2:
            raise PreconditionError("detection mode needs a signal with at least one change point")
        if cfg.group:
            C = stats.H_n * stats.W_n ** (2.0 / 3.0) / (96.0 * My) if My > 0 else math.inf
            params = bounds.detection_params_group(stats.W_n, My, C)
        else:
            params = bounds.detection_params_scalar(stats.H_n, stats.W_n, My)
        return TrialPlan(cfg=cfg, signal=sig, stats=stats, My=My, lam=params.lam, dH_guarantee=params.dH_guarantee)

    lam = cfg.lam if cfg.lam is not None else bounds.lambda_rule(cfg.lambda_rule, My, sig.n, stats.W_n)
    if lam <= 0:
        raise PreconditionError(f"mode {cfg.mode} needs lambda > 0, got {lam}")
    profile = bounds.bound_profile(stats, lam, My, cfg.t, "group" if cfg.group else "scalar")
    return TrialPlan(
        cfg=cfg, signal=sig, stats=stats, My=My, lam=lam,
        per_index=profile.per_index if cfg.mode == "elementwise" else None,
        sos_bound=profile.sos_bound if cfg.mode == "sos" else None,
    )


def trial_seed(base_seed: int, trial_index: int) -> int:
    return base_seed ^ trial_index


def run_trial(plan: TrialPlan, trial_index: int) -> TrialRecord:
    cfg = plan.cfg
    seed = trial_seed(cfg.base_seed, trial_index)
    spec = NoiseSpec(sigma=cfg.sigma, family=cfg.family, seed=seed, trial_index=trial_index)
    x = plan.signal.materialize()
    eps = draw_noise(spec, x.shape)
    y = x + eps

    if cfg.mode == "partial_sum_event":
        stat = max_partial_sum_stat(eps)
        return TrialRecord(trial_index=trial_index, seed=seed, partial_sum_stat=stat, event_ok=stat <= plan.My)

    if cfg.mode == "detection":
        res = detect_pipeline(y, cfg.sigma, cfg.t, plan.stats, family=cfg.family, group=cfg.group, tol=cfg.tol)
        ok = res.dH_to_truth is not None and res.dH_to_truth <= plan.dH_guarantee
        return TrialRecord(
            trial_index=trial_index, seed=seed,
            dH=res.dH_to_truth, dH_ok=ok, solver_diag=res.solver_diag,
        )

    if cfg.group:
        sol = solve_group_fused_lasso(y, plan.lam, tol=cfg.tol)
        if not sol.converged:
            raise SolverError(
                f"group solver did not converge in trial {trial_index} (gap={sol.duality_gap:.3e})",
                trial_index=trial_index,
            )
        err = np.linalg.norm(sol.Xhat - x, axis=1)
        diag = sol.duality_gap
    else:
        sol = solve_fused_lasso(y, plan.lam)
        err = np.abs(sol.xhat - x)
        diag = sol.kkt_residual

    if cfg.mode == "elementwise":
        return TrialRecord(
            trial_index=trial_index, seed=seed,
            max_abs_error=float(err.max()),
            elementwise_ok=bool(np.all(err <= plan.per_index)),
            solver_diag=diag,
        )

    # sos: normalised mean for the scalar estimator, plain sum for the group one
    sq = float(np.sum(err * err))
    value = sq if cfg.group else sq / plan.signal.n
    return TrialRecord(
        trial_index=trial_index, seed=seed,
        sos_value=value, sos_ok=value <= plan.sos_bound, solver_diag=diag,
    )


# ---------------------------------------------------------------- summary


@dataclass(frozen=True)
class Coverage:
    successes: int
    trials: int
    fraction: float
    ci_low: float
    ci_high: float


def clopper_pearson(k: int, n: int, level: float) -> Tuple[float, float]:
    alpha = 1.0 - level
    lo = 0.0 if k == 0 else float(beta.ppf(alpha / 2.0, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1.0 - alpha / 2.0, k + 1, n - k))
    return lo, hi


@dataclass(frozen=True)
class ExperimentSummary:
    mode: str
    n_trials: int
    floor: float
    threshold: float
    coverage: Dict[str, Coverage] = field(default_factory=dict)
    passed: bool = False


def summarize(cfg: ExperimentConfig, records: Sequence[TrialRecord]) -> ExperimentSummary:
    N = len(records)
    q = 1.0 / (cfg.t * cfg.t)
    floor = 1.0 - q
    threshold = floor - bounds_settings.MC_SLACK_SIGMAS * math.sqrt(q * (1.0 - q) / N)

    coverage: Dict[str, Coverage] = {}
    flag = MODE_FLAG[cfg.mode]
    k = sum(1 for r in records if getattr(r, flag))
    lo, hi = clopper_pearson(k, N, bounds_settings.CI_LEVEL)
    coverage[flag] = Coverage(successes=k, trials=N, fraction=k / N, ci_low=lo, ci_high=hi)
    passed = all(c.fraction >= threshold for c in coverage.values())
    return ExperimentSummary(
        mode=cfg.mode, n_trials=N, floor=floor, threshold=threshold, coverage=coverage, passed=passed,
    )


# ---------------------------------------------------------------- running


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> Tuple[List[TrialRecord], ExperimentSummary]:
    plan = plan_experiment(cfg)
    workers = settings.WORKERS if workers is None else int(workers)
    if workers < 1:
        raise InputError(f"workers must be >= 1, got {workers}")
    logger.info(
        "experiment mode=%s n=%d K=%d trials=%d lam=%s My=%.6g workers=%d",
        cfg.mode, plan.signal.n, plan.stats.K, cfg.n_trials, plan.lam, plan.My, workers,
    )

    indices = range(cfg.n_trials)
    records: List[TrialRecord] = []
    if workers == 1:
        for i in indices:
            records.append(_guarded(plan, i))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(i, pool.submit(run_trial, plan, i)) for i in indices]
            for i, fut in futures:
                try:
                    records.append(fut.result())
                except Exception as exc:
                    for _, other in futures:
                        other.cancel()
                    raise _trial_failure(i, exc) from exc

    records.sort(key=lambda r: r.trial_index)
    summary = summarize(cfg, records)
    logger.info(
        "experiment done: %s",
        ", ".join(f"{k}={c.fraction:.4f} [{c.ci_low:.4f}, {c.ci_high:.4f}]" for k, c in summary.coverage.items()),
    )
    return records, summary


def _guarded(plan: TrialPlan, i: int) -> TrialRecord:
    try:
        return run_trial(plan, i)
    except Exception as exc:
        raise _trial_failure(i, exc) from exc


def _trial_failure(i: int, exc: Exception) -> CPDError:
    if isinstance(exc, CPDError) and not isinstance(exc, SolverError):
        return exc
    msg = exc.msg if isinstance(exc, CPDError) else str(exc)
    return SolverError(f"trial {i} failed: {msg}", trial_index=i)


# ---------------------------------------------------------------- records CSV

RECORD_FIELDS: Tuple[str, ...] = tuple(TrialRecord.model_fields)
_INT_FIELDS = {"trial_index", "seed"}
_BOOL_FIELDS = {"elementwise_ok", "sos_ok", "dH_ok", "event_ok"}


def _cell(name: str, v) -> str:
    if v is None:
        return ""
    if name in _BOOL_FIELDS:
        return "true" if v else "false"
    if name in _INT_FIELDS:
        return str(int(v))
    return fmt_float(v)


def _uncell(name: str, s: str):
    if s == "":
        return None
    if name in _BOOL_FIELDS:
        if s not in ("true", "false"):
            raise ValueError(f"{name}: expected true/false, got {s!r}")
        return s == "true"
    if name in _INT_FIELDS:
        return int(s)
    return parse_float(s)


def write_records(path: str | Path, records: Sequence[TrialRecord]) -> Path:
    rows = ([_cell(f, getattr(r, f)) for f in RECORD_FIELDS] for r in records)
    return write_rows(path, RECORD_FIELDS, rows)


def read_records(path: str | Path) -> List[TrialRecord]:
    header, rows = read_rows(path)
    if tuple(header) != RECORD_FIELDS:
        raise InputError(f"{path}:1: unexpected header", path=str(path), line=1)
    out: List[TrialRecord] = []
    for lineno, cells in rows:
        try:
            out.append(TrialRecord(**{f: _uncell(f, c) for f, c in zip(RECORD_FIELDS, cells)}))
        except (ValueError, ValidationError) as exc:
            raise InputError(f"{path}:{lineno}: malformed record: {exc}", path=str(path), line=lineno) from exc
    return out
