"""Noise envelopes and error bounds as concrete numbers.

All logarithms are natural. Every function is pure. A precondition that
does not hold raises PreconditionError instead of returning a value that
would not mean anything.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from cpd.core.config import bounds_settings
from cpd.core.errors import InputError, PreconditionError
from cpd.signals import SignalStats

logger = logging.getLogger("cpd.bounds")

Regime = Literal["scalar", "group"]


@dataclass(frozen=True)
class BoundProfile:
    My: float
    per_index: np.ndarray
    sos_bound: float
    confidence: float
    t: float
    lam: float
    regime: Regime


@dataclass(frozen=True)
class DetectionParams:
    C: float
    lam: float
    offset: float
    dH_guarantee: float
    H_n: float
    in_window: Optional[bool] = None


def _check_common(sigma: float, n: int, t: float) -> None:
    if not math.isfinite(sigma) or sigma < 0:
        raise InputError(f"sigma must be >= 0, got {sigma}")
    if int(n) != n or n < 1:
        raise InputError(f"n must be a positive integer, got {n}")
    if not math.isfinite(t) or t <= 1:
        raise InputError(f"t must be > 1, got {t}")


def compute_My_scalar(sigma: float, n: int, t: float, family: str = "gaussian") -> float:
    _check_common(sigma, n, t)
    L = math.log(n) + math.log(t)
    if family == "gaussian":
        return 2.0 * sigma * math.sqrt(L)
    if family == "sub_gaussian_bounded":
        # uniform on [-s*sqrt(3), s*sqrt(3)] is sub-Gaussian with parameter s*sqrt(3)
        return 2.0 * sigma * math.sqrt(3.0) * math.sqrt(L)
    if family == "sub_exponential":
        return bounds_settings.SUB_EXP_CONSTANT * sigma * L
    raise InputError(f"unknown noise family {family!r}")


def compute_My_group(sigma: float, n: int, t: float, p: int) -> float:
    _check_common(sigma, n, t)
    if int(p) != p or p < 1:
        raise InputError(f"p must be a positive integer, got {p}")
    L = math.log(n) + math.log(t)
    return sigma * max(math.sqrt(8.0 * L + p), 2.0 * math.sqrt(p))


def _check_lam(lam: float) -> None:
    if not math.isfinite(lam) or lam <= 0:
        raise InputError(f"lambda must be > 0 for the error bounds, got {lam}")


def _check_my(My: float) -> None:
    if not math.isfinite(My) or My < 0:
        raise InputError(f"My must be >= 0, got {My}")


def _segment_of(stats: SignalStats) -> np.ndarray:
    return stats.segment_lengths[stats.k_of].astype(float)


def elementwise_bound_scalar(stats: SignalStats, lam: float, My: float) -> np.ndarray:
    _check_lam(lam)
    _check_my(My)
    m = _segment_of(stats)
    d = stats.d.astype(float)
    return np.maximum.reduce([
        My / np.sqrt(d),
        np.full_like(d, My * My / (4.0 * lam)),
        2.0 * lam / m + 2.0 * My / np.sqrt(m),
    ])


def sos_bound_scalar(stats: SignalStats, lam: float, My: float, n: int) -> float:
    _check_lam(lam)
    _check_my(My)
    m = stats.segment_lengths.astype(float)
    return float(
        My**4 / (16.0 * lam * lam)
        + (8.0 * lam * lam / n) * np.sum(1.0 / m)
        + (2.0 / n) * My * My * (4.0 + stats.K + np.sum(np.log(m)))
    )


def group_window(stats: SignalStats, My: float):
    """Admissible lambda range [625 My, min_k (7 m_k - sqrt(m_k)) My)."""
    m = stats.segment_lengths.astype(float)
    return 625.0 * My, float(np.min(7.0 * m - np.sqrt(m))) * My


def _check_group_window(stats: SignalStats, lam: float, My: float) -> None:
    lo, hi = group_window(stats, My)
    if not (lo <= lam < hi):
        raise PreconditionError(
            f"lambda={lam:g} outside the admissible window [{lo:g}, {hi:g})",
            lam=lam, lower=lo, upper=hi,
        )


def elementwise_bound_group(stats: SignalStats, lam: float, My: float) -> np.ndarray:
    _check_lam(lam)
    _check_my(My)
    _check_group_window(stats, lam, My)
    m = _segment_of(stats)
    d = stats.d.astype(float)
    return np.maximum.reduce([
        4.0 * (My * np.sqrt(m / 2.0) + lam) / m,
        50.0 * My / np.sqrt(m),
        25.0 * math.sqrt(5.0) * My / np.sqrt(d),
        np.full_like(d, 125.0 * math.sqrt(My**3 / lam)),
    ])


def sos_bound_group(stats: SignalStats, lam: float, My: float, n: int) -> float:
    """Bound on the unnormalised sum of squared errors."""
    _check_lam(lam)
    _check_my(My)
    _check_group_window(stats, lam, My)
    m = stats.segment_lengths.astype(float)
    return float(
        6250.0 * My * My * np.sum(np.log(m))
        + 6000.0 * stats.K * My * My
        + 32.0 * lam * lam * stats.K / stats.m_H
        + 125.0**2 * My**6 * n / lam
    )


def detection_params_scalar(H_n: float, W_n: int, My: float) -> DetectionParams:
    if not math.isfinite(H_n) or H_n <= 0:
        raise PreconditionError(f"H_n must be positive and finite, got {H_n}")
    if W_n < 1:
        raise InputError(f"W_n must be >= 1, got {W_n}")
    if not math.isfinite(My) or My <= 0:
        raise PreconditionError(f"detection needs My > 0, got {My}")
    strength = H_n * math.sqrt(W_n)
    if not strength > 16.0 * My:
        raise PreconditionError(
            "signal too weak for the scalar detection regime",
            strength=strength, required=16.0 * My,
        )
    C = strength / (8.0 * My)
    return DetectionParams(
        C=C,
        lam=(C - 1.0) * My * math.sqrt(W_n),
        offset=W_n / (4.0 * C * C),
        dH_guarantee=W_n / (2.0 * C * C),
        H_n=H_n,
    )


def detection_params_group(W_n: int, My: float, C: float) -> DetectionParams:
    if not math.isfinite(C) or C <= 1:
        raise PreconditionError(f"C must be > 1, got {C}")
    if W_n < 1:
        raise InputError(f"W_n must be >= 1, got {W_n}")
    if not math.isfinite(My) or My <= 0:
        raise PreconditionError(f"detection needs My > 0, got {My}")
    w23 = W_n ** (2.0 / 3.0)
    w13 = W_n ** (1.0 / 3.0)
    lam = (6.0 * C - 2.0) * My * w23
    in_window = 625.0 * My <= lam < (7.0 * W_n - math.sqrt(W_n)) * My
    if not in_window:
        logger.warning("group detection lambda=%g is outside the elementwise window (W_n=%d)", lam, W_n)
    return DetectionParams(
        C=C,
        lam=lam,
        offset=5.0 * w13 / (24.0 * C),
        dH_guarantee=5.0 * w13 / (12.0 * C),
        H_n=96.0 * C * My / w23,
        in_window=in_window,
    )


def bound_profile(stats: SignalStats, lam: float, My: float, t: float, regime: Regime = "scalar") -> BoundProfile:
    if regime == "scalar":
        per_index = elementwise_bound_scalar(stats, lam, My)
        sos = sos_bound_scalar(stats, lam, My, stats.n)
    elif regime == "group":
        per_index = elementwise_bound_group(stats, lam, My)
        sos = sos_bound_group(stats, lam, My, stats.n)
    else:
        raise InputError(f"unknown regime {regime!r}")
    return BoundProfile(
        My=My,
        per_index=per_index,
        sos_bound=sos,
        confidence=1.0 - 1.0 / (t * t),
        t=t,
        lam=lam,
        regime=regime,
    )


def anchored_bound(m: int, lam: float, My: float, opposite_signs: bool = False) -> np.ndarray:
    """Per-position bound for a segment of length m solved with boundary anchors.

    Dropping the last term is valid when the anchors sit on opposite sides of
    the segment level.
    """
    if m < 1:
        raise InputError(f"segment length must be >= 1, got {m}")
    _check_lam(lam)
    _check_my(My)
    i = np.arange(1, m + 1, dtype=float)
    terms = [My / np.sqrt(i), My / np.sqrt(m + 1 - i), np.full(m, My * My / (4.0 * lam))]
    if not opposite_signs:
        terms.append(np.full(m, 2.0 * lam / m + 2.0 * My / math.sqrt(m)))
    return np.maximum.reduce(terms)


def lambda_rule(rule: str, My: float, n: int, W_n: Optional[int] = None) -> float:
    if rule == "my_sqrt_n":
        return My * math.sqrt(n)
    if rule == "my_root4_nw":
        if W_n is None:
            raise InputError("lambda rule my_root4_nw needs W_n")
        return (n * W_n) ** 0.25 * My
    raise InputError(f"unknown lambda rule {rule!r}")
