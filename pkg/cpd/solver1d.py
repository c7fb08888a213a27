"""Exact scalar fused lasso.

Objective (no 1/2 on the quadratic term):

    sum_i (x_i - y_i)^2 + lam * sum_i |x_i - x_{i+1}|

The solver is a forward dynamic program over the derivative of the message
function, which is piecewise linear and stored as a list of knots. Each step
clips the derivative to [-lam, lam], records where the clip happens, and adds
the next quadratic term. The backward pass clips x_{i+1} into the recorded
window.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from cpd.core.config import solver_settings
from cpd.core.errors import InputError, SolverError
from cpd.schemes import AnchoredProblem

logger = logging.getLogger("cpd.solver1d")


@dataclass(frozen=True)
class FusedSolution:
    xhat: np.ndarray
    lam: float
    objective: float
    kkt_residual: float
    jump_set: Tuple[int, ...]


def _check_series(y, lam: float) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("y must be a non-empty 1-D series")
    if not np.all(np.isfinite(arr)):
        raise InputError("y must be finite")
    if not math.isfinite(lam) or lam < 0:
        raise InputError(f"lambda must be a finite non-negative number, got {lam}")
    return arr


def fusion_tol(x: np.ndarray) -> float:
    return solver_settings.FUSION_RTOL * (1.0 + float(np.max(np.abs(x), initial=0.0)))


def jump_positions(x: np.ndarray) -> Tuple[int, ...]:
    """0-based positions i with |x_i - x_{i+1}| above the fusion tolerance."""
    return tuple(int(i) for i in np.flatnonzero(np.abs(np.diff(x)) > fusion_tol(x)))


def fused_objective(y, lam: float, x) -> float:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.sum((x - y) ** 2) + lam * np.sum(np.abs(np.diff(x))))


def anchored_objective(prob: AnchoredProblem, x) -> float:
    x = np.asarray(x, dtype=float)
    val = fused_objective(prob.y, prob.lam, x)
    if prob.a is not None:
        val += prob.lam * abs(x[0] - prob.a)
    if prob.b is not None:
        val += prob.lam * abs(x[-1] - prob.b)
    return val


def _dp(y: List[float], lam: float, left: Optional[float], right: Optional[float]) -> np.ndarray:
    n = len(y)
    size = 2 * n + 2
    knot = [0.0] * size
    da = [0.0] * size
    db = [0.0] * size
    tm = [0.0] * n
    tp = [0.0] * n

    # Derivative is AL*x + BL left of knot[l], AR*x + BR right of knot[r];
    # crossing knot j to the right adds (da[j], db[j]).
    l, r = n + 1, n
    AL = BL = AR = BR = 0.0
    if left is not None:
        l = r = n
        knot[n], da[n], db[n] = left, 0.0, 2.0 * lam
        BL, BR = -lam, lam

    for k in range(n):
        AL += 2.0
        BL -= 2.0 * y[k]
        AR += 2.0
        BR -= 2.0 * y[k]
        if k == n - 1 and right is None:
            break

        lo = l
        while lo <= r and AL * knot[lo] + BL < -lam:
            AL += da[lo]
            BL += db[lo]
            lo += 1
        hi = r
        while hi >= lo and AR * knot[hi] + BR > lam:
            AR -= da[hi]
            BR -= db[hi]
            hi -= 1

        m = (-lam - BL) / AL
        if lo - 1 >= l:
            m = max(m, knot[lo - 1])
        if lo <= r:
            m = min(m, knot[lo])
        p = (lam - BR) / AR
        if hi >= l:
            p = max(p, knot[hi])
        if hi + 1 <= r:
            p = min(p, knot[hi + 1])
        tm[k], tp[k] = m, p

        l, r = lo - 1, hi + 1
        knot[l], da[l], db[l] = m, AL, BL + lam
        knot[r], da[r], db[r] = p, -AR, lam - BR
        AL, BL, AR, BR = 0.0, -lam, 0.0, lam

    x = np.empty(n)
    if right is None:
        lo = l
        while lo <= r and AL * knot[lo] + BL < 0.0:
            AL += da[lo]
            BL += db[lo]
            lo += 1
        z = -BL / AL
        if lo - 1 >= l:
            z = max(z, knot[lo - 1])
        x[n - 1] = z
    else:
        x[n - 1] = min(max(right, tm[n - 1]), tp[n - 1])

    for k in range(n - 2, -1, -1):
        x[k] = min(max(x[k + 1], tm[k]), tp[k])
    return x


def solve_fused_lasso(y, lam: float) -> FusedSolution:
    arr = _check_series(y, lam)
    if lam == 0.0 or arr.size == 1:
        xhat = arr.copy()
    else:
        xhat = _dp(arr.tolist(), float(lam), None, None)
    res = kkt_residual(arr, lam, xhat)
    logger.debug("fused lasso n=%d lam=%g kkt=%.3e", arr.size, lam, res)
    return FusedSolution(
        xhat=xhat,
        lam=float(lam),
        objective=fused_objective(arr, lam, xhat),
        kkt_residual=res,
        jump_set=jump_positions(xhat),
    )


def solve_anchored(prob: AnchoredProblem) -> FusedSolution:
    """Minimise G = sum (x-y)^2 + lam(|x_1-a| + |x_m-b| + TV(x)); a missing anchor drops its term."""
    arr = np.asarray(prob.y, dtype=float)
    lam = prob.lam
    if lam == 0.0:
        xhat = arr.copy()
    elif prob.a is None and prob.b is None:
        return solve_fused_lasso(arr, lam)
    else:
        xhat = _dp(arr.tolist(), lam, prob.a, prob.b)
    return FusedSolution(
        xhat=xhat,
        lam=float(lam),
        objective=anchored_objective(prob, xhat),
        kkt_residual=kkt_residual(arr, lam, xhat, left=prob.a, right=prob.b),
        jump_set=jump_positions(xhat),
    )


def _sign_box(dz: float, tol: float) -> Tuple[float, float]:
    if dz > tol:
        return 1.0, 1.0
    if dz < -tol:
        return -1.0, -1.0
    return -1.0, 1.0


def _subgradient_boxes(x: np.ndarray, left: Optional[float], right: Optional[float]):
    """Allowed ranges of s_0..s_n; s_0 and s_n carry the anchor terms (0 when absent)."""
    tol = fusion_tol(x)
    z = x[:-1] - x[1:]
    lo = np.where(z > tol, 1.0, -1.0)
    hi = np.where(z < -tol, -1.0, 1.0)

    first = (0.0, 0.0)
    if left is not None:
        a_lo, a_hi = _sign_box(x[0] - left, tol)
        first = (-a_hi, -a_lo)
    last = (0.0, 0.0) if right is None else _sign_box(x[-1] - right, tol)

    return np.concatenate([[first[0]], lo, [last[0]]]), np.concatenate([[first[1]], hi, [last[1]]])


def _feasible(g: List[float], lam: float, eps: float, lo: List[float], hi: List[float]) -> bool:
    # row i: g_i + lam*(s_i - s_{i-1}) in [-eps, eps]
    p, q = lo[0], hi[0]
    for i in range(len(g)):
        p = max(p + (-eps - g[i]) / lam, lo[i + 1])
        q = min(q + (eps - g[i]) / lam, hi[i + 1])
        if p > q:
            return False
    return True


def kkt_residual(y, lam: float, x, left: Optional[float] = None, right: Optional[float] = None) -> float:
    """min over valid subgradients s of ||2(x - y) + lam * D^T s||_inf.

    Computed by bisection on the residual level; feasibility of a level is an
    interval propagation over s. The optional anchors add the boundary terms
    of the anchored subproblem.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape:
        raise InputError(f"length mismatch: y has {y.size} entries, x has {x.size}")
    g = 2.0 * (x - y)
    if lam == 0.0 or x.size == 0:
        return float(np.max(np.abs(g), initial=0.0))

    lo, hi = (b.tolist() for b in _subgradient_boxes(x, left, right))
    g_list = g.tolist()
    if _feasible(g_list, lam, 0.0, lo, hi):
        return 0.0

    lower, upper = 0.0, float(np.max(np.abs(g))) + 2.0 * lam
    resolution = 1e-13 * upper
    while upper - lower > resolution:
        mid = 0.5 * (lower + upper)
        if _feasible(g_list, lam, mid, lo, hi):
            upper = mid
        else:
            lower = mid
    return upper


def oracle_fused_lasso(y, lam: float, tol: Optional[float] = None, max_sweeps: Optional[int] = None) -> np.ndarray:
    """Independent check: cyclic coordinate descent on the box-constrained dual.

    min_u ||y - D^T u||^2 subject to |u_j| <= lam/2, x = y - D^T u, stopped when
    the duality gap sum_j (lam*|z_j| - 2*u_j*z_j), z = Dx, drops below
    tol * (1 + primal objective).
    """
    arr = _check_series(y, lam)
    tol = solver_settings.ORACLE_TOL if tol is None else tol
    max_sweeps = solver_settings.ORACLE_MAX_SWEEPS if max_sweeps is None else max_sweeps
    if tol <= 0:
        raise InputError(f"tol must be positive, got {tol}")
    if arr.size > solver_settings.ORACLE_MAX_N:
        raise InputError(f"oracle is limited to n <= {solver_settings.ORACLE_MAX_N}, got {arr.size}")
    if lam == 0.0 or arr.size == 1:
        return arr.copy()

    n = arr.size
    half = lam / 2.0
    u = [0.0] * (n - 1)
    x = arr.tolist()
    for sweep in range(1, max_sweeps + 1):
        for j in range(n - 1):
            c1 = x[j] - u[j]
            c2 = x[j + 1] + u[j]
            uj = min(max(0.5 * (c2 - c1), -half), half)
            u[j] = uj
            x[j] = c1 + uj
            x[j + 1] = c2 - uj
        if sweep % 8 == 0:
            xa = np.asarray(x)
            z = np.diff(xa)
            gap = float(np.sum(lam * np.abs(z) - 2.0 * np.asarray(u) * z))
            primal = float(np.sum((xa - arr) ** 2) + lam * np.sum(np.abs(z)))
            if gap <= tol * (1.0 + primal):
                logger.debug("oracle converged after %d sweeps, gap=%.2e", sweep, gap)
                return arr - _dt(np.asarray(u), n)
    raise SolverError(f"oracle did not reach relative gap {tol} within {max_sweeps} sweeps")


def _dt(u: np.ndarray, n: int) -> np.ndarray:
    """D^T u for (Dx)_j = x_{j+1} - x_j: (D^T u)_i = u_{i-1} - u_i."""
    out = np.zeros(n)
    out[1:] += u
    out[:-1] -= u
    return out
