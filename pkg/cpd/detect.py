"""Screening detectors and the Hausdorff set distance.

Detected sets are 1-based indices. A screen with offset d marks index i when
the estimate differs by more than the threshold between positions i-d and
i+d, so every jump shows up as a band of indices around it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from cpd import bounds
from cpd.core.errors import EmptySetError, InputError, PreconditionError, SolverError
from cpd.signals import SignalStats
from cpd.solver1d import solve_fused_lasso
from cpd.solvernd import solve_group_fused_lasso

logger = logging.getLogger("cpd.detect")


@dataclass(frozen=True)
class DetectionResult:
    Shat: Tuple[int, ...]
    offset_used: int
    threshold_used: float
    dH_to_truth: Optional[float] = None
    lam: Optional[float] = None
    params: Optional[bounds.DetectionParams] = None
    solver_diag: Optional[float] = None


def hausdorff_distance(A: Iterable[int], B: Iterable[int]) -> float:
    a = np.unique(np.asarray(list(A), dtype=np.int64))
    b = np.unique(np.asarray(list(B), dtype=np.int64))
    if a.size == 0 or b.size == 0:
        raise EmptySetError("Hausdorff distance is undefined for an empty set")
    diff = np.abs(a[:, None] - b[None, :])
    return float(max(diff.min(axis=0).max(), diff.min(axis=1).max()))


def _check_screen(n: int, offset: int, threshold: float) -> None:
    if int(offset) != offset:
        raise InputError(f"offset must be an integer, got {offset}")
    if not 1 <= offset <= (n - 1) // 2:
        raise InputError(f"offset must lie in [1, {(n - 1) // 2}] for n={n}, got {offset}")
    if not math.isfinite(threshold) or threshold <= 0:
        raise InputError(f"threshold must be positive, got {threshold}")


def _screen(diffs: np.ndarray, offset: int, threshold: float) -> DetectionResult:
    # diffs[j] compares positions j and j + 2*offset, i.e. 1-based i = j + 1 + offset
    hits = np.flatnonzero(diffs > threshold) + 1 + offset
    return DetectionResult(Shat=tuple(int(i) for i in hits), offset_used=int(offset), threshold_used=float(threshold))


def screen_scalar(xhat, offset: int, threshold: float) -> DetectionResult:
    x = np.asarray(xhat, dtype=float)
    if x.ndim != 1:
        raise InputError("xhat must be a 1-D series")
    _check_screen(x.size, offset, threshold)
    d = 2 * int(offset)
    return _screen(np.abs(x[d:] - x[:-d]), int(offset), threshold)


def screen_group(Xhat, offset: int, threshold: float) -> DetectionResult:
    X = np.asarray(Xhat, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError("Xhat must be an n x p matrix")
    _check_screen(X.shape[0], offset, threshold)
    d = 2 * int(offset)
    return _screen(np.linalg.norm(X[d:] - X[:-d], axis=1), int(offset), threshold)


def naive_jump_set(xhat, tol: float = 0.0) -> Tuple[int, ...]:
    if tol < 0:
        raise InputError(f"tol must be >= 0, got {tol}")
    x = np.asarray(xhat, dtype=float)
    gaps = np.abs(np.diff(x, axis=0)) if x.ndim == 1 else np.linalg.norm(np.diff(x, axis=0), axis=1)
    return tuple(int(i) + 1 for i in np.flatnonzero(gaps > tol))


def cluster_runs(Shat: Iterable[int]) -> Tuple[int, ...]:
    """Collapse runs of consecutive indices to their (lower) midpoints."""
    s = np.unique(np.asarray(list(Shat), dtype=np.int64))
    if s.size == 0:
        return ()
    runs: List[np.ndarray] = np.split(s, np.flatnonzero(np.diff(s) > 1) + 1)
    return tuple(int(r[(r.size - 1) // 2]) for r in runs)


def detect_pipeline(
    y,
    sigma: float,
    t: float,
    stats: SignalStats,
    family: str = "gaussian",
    group: bool = False,
    tol: Optional[float] = None,
) -> DetectionResult:
    """Choose lambda from the signal strength, solve, screen, and score against the true change points."""
    if stats.K < 2:
        raise PreconditionError("detection needs at least one change point (K >= 2)")
    arr = np.asarray(y, dtype=float)
    n = arr.shape[0]
    if n != stats.n:
        raise InputError(f"series has {n} rows, ground truth has n={stats.n}")

    if group:
        Y = arr if arr.ndim == 2 else arr[:, None]
        My = bounds.compute_My_group(sigma, n, t, Y.shape[1])
        if My <= 0:
            raise PreconditionError("detection needs sigma > 0")
        C = stats.H_n * stats.W_n ** (2.0 / 3.0) / (96.0 * My)
        params = bounds.detection_params_group(stats.W_n, My, C)
        sol = solve_group_fused_lasso(Y, params.lam, tol=tol)
        if not sol.converged:
            raise SolverError(
                f"group solve for detection did not converge (gap={sol.duality_gap:.3e})",
                duality_gap=sol.duality_gap,
                iterations=sol.iterations,
            )
        xhat, diag = sol.Xhat, sol.duality_gap
    else:
        if arr.ndim != 1:
            raise InputError("scalar detection expects a 1-D series")
        My = bounds.compute_My_scalar(sigma, n, t, family)
        params = bounds.detection_params_scalar(stats.H_n, stats.W_n, My)
        sol = solve_fused_lasso(arr, params.lam)
        xhat, diag = sol.xhat, sol.kkt_residual

    offset = max(1, int(round(params.offset)))
    threshold = stats.H_n / 2.0
    res = screen_group(xhat, offset, threshold) if group else screen_scalar(xhat, offset, threshold)

    dH = hausdorff_distance(res.Shat, stats.S) if res.Shat else None
    logger.debug("detect n=%d lam=%g offset=%d found=%d dH=%s", n, params.lam, offset, len(res.Shat), dH)
    return DetectionResult(
        Shat=res.Shat,
        offset_used=offset,
        threshold_used=threshold,
        dH_to_truth=dH,
        lam=params.lam,
        params=params,
        solver_diag=diag,
    )
