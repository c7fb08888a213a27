"""Ground-truth signals, structural statistics, noise and signal CSV files.

Public functions take and return 1-based change points (as in the CSV files);
arrays such as `SignalStats.d` are indexed by 0-based position.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from cpd.core.csv_io import read_rows, write_rows
from cpd.core.errors import InputError
from cpd.core.serialize import fmt_float, parse_float
from cpd.schemes import NoiseSpec, PiecewiseSignal

logger = logging.getLogger("cpd.signals")


@dataclass(frozen=True)
class SignalStats:
    n: int
    K: int
    changepoints: Tuple[int, ...]
    segment_lengths: np.ndarray
    W_n: int
    H_n: float
    m_H: float
    d: np.ndarray
    k_of: np.ndarray

    @property
    def S(self) -> Tuple[int, ...]:
        return self.changepoints[1:]


@dataclass(frozen=True)
class Observation:
    y: np.ndarray
    signal: Optional[PiecewiseSignal] = None
    noise: Optional[NoiseSpec] = None

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return 1 if self.y.ndim == 1 else int(self.y.shape[1])

    def noise_values(self) -> np.ndarray:
        if self.signal is None:
            raise InputError("observation has no ground-truth signal attached")
        return self.y - self.signal.materialize()


def make_signal(n: int, changepoints: Sequence[int], levels, vector: bool = False) -> PiecewiseSignal:
    """Validated signal; raises pydantic's ValidationError (a ValueError) on bad structure."""
    return PiecewiseSignal(n=n, changepoints=changepoints, levels=levels, vector=vector)


def signal_stats(sig: PiecewiseSignal) -> SignalStats:
    m = sig.segment_lengths()
    starts = np.asarray(sig.changepoints, dtype=np.int64)
    k_of = np.repeat(np.arange(sig.K), m)

    i = np.arange(1, sig.n + 1)
    seg_start = starts[k_of]
    seg_next = np.append(starts, sig.n + 1)[k_of + 1]
    d = np.minimum(i + 1 - seg_start, seg_next - i)

    if sig.K == 1:
        H_n = math.inf
    else:
        lv = np.asarray(sig.levels, dtype=float)
        H_n = float(np.linalg.norm(np.diff(lv, axis=0), axis=1).min())

    return SignalStats(
        n=sig.n,
        K=sig.K,
        changepoints=tuple(sig.changepoints),
        segment_lengths=m,
        W_n=int(m.min()),
        H_n=H_n,
        m_H=float(sig.K / np.sum(1.0 / m)),
        d=d,
        k_of=k_of,
    )


def noise_generator(spec: NoiseSpec) -> np.random.Generator:
    # Philox is counter based: the key (seed, trial_index) fixes the stream,
    # element j of a series is always the j-th draw of that stream.
    key = (spec.seed << 64) | spec.trial_index
    return np.random.Generator(np.random.Philox(key=key))


def draw_noise(spec: NoiseSpec, shape: Tuple[int, ...]) -> np.ndarray:
    if spec.sigma == 0.0:
        return np.zeros(shape)
    rng = noise_generator(spec)
    s = spec.sigma
    if spec.family == "gaussian":
        return rng.normal(0.0, s, size=shape)
    if spec.family == "sub_gaussian_bounded":
        half = s * math.sqrt(3.0)
        return rng.uniform(-half, half, size=shape)
    if spec.family == "sub_exponential":
        return rng.laplace(0.0, s / math.sqrt(2.0), size=shape)
    raise InputError(f"unknown noise family {spec.family!r}")


def sample_observation(sig: PiecewiseSignal, spec: NoiseSpec) -> Observation:
    x = sig.materialize()
    eps = draw_noise(spec, x.shape)
    return Observation(y=x + eps, signal=sig, noise=spec)


def max_partial_sum_stat(eps) -> float:
    """max over windows k..l of ||sum eps[k..l]|| / sqrt(l-k+1); vector rows use the Euclidean norm."""
    e = np.asarray(eps, dtype=float)
    if e.ndim == 0 or e.shape[0] == 0:
        raise InputError("max_partial_sum_stat: empty input")
    if e.ndim > 2:
        raise InputError("max_partial_sum_stat: expected a series of scalars or vectors")

    n = e.shape[0]
    S = np.concatenate([np.zeros((1,) + e.shape[1:]), np.cumsum(e, axis=0)])
    best = 0.0
    for L in range(1, n + 1):
        w = S[L:] - S[:-L]
        if w.ndim == 1:
            top = float(np.abs(w).max())
        else:
            top = float(np.sqrt(np.einsum("ij,ij->i", w, w)).max())
        best = max(best, top / math.sqrt(L))
    return best


def signal_from_series(values) -> PiecewiseSignal:
    """Recover the change point structure of a materialized piecewise-constant series."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim not in (1, 2) or arr.shape[0] == 0:
        raise InputError("series must be a non-empty list of scalars or vectors")
    rows = arr if arr.ndim == 2 else arr[:, None]
    changed = np.any(rows[1:] != rows[:-1], axis=1)
    starts = np.concatenate([[0], np.flatnonzero(changed) + 1])
    levels = arr[starts]
    return make_signal(arr.shape[0], (starts + 1).tolist(), levels.tolist(), vector=arr.ndim == 2)


def _sidecar(path: Path) -> Path:
    return path.with_name(f"{path.stem}.changepoints.csv")


def write_series(path: str | Path, y) -> Path:
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        header = ["index", "value"]
        rows = ([i + 1, fmt_float(v)] for i, v in enumerate(arr))
    elif arr.ndim == 2:
        header = ["index"] + [f"v{j + 1}" for j in range(arr.shape[1])]
        rows = ([i + 1] + [fmt_float(v) for v in row] for i, row in enumerate(arr))
    else:
        raise InputError("series must be 1-D or 2-D")
    return write_rows(path, header, rows)


def read_series(path: str | Path) -> np.ndarray:
    header, rows = read_rows(path)
    if not header or header[0] != "index":
        raise InputError(f"{path}:1: header must start with 'index'", path=str(path), line=1)
    scalar = header[1:] == ["value"]
    if not scalar and header[1:] != [f"v{j + 1}" for j in range(len(header) - 1)]:
        raise InputError(f"{path}:1: expected 'index,value' or 'index,v1,...,vp'", path=str(path), line=1)

    values = []
    for lineno, cells in rows:
        try:
            idx = int(cells[0])
            vals = [parse_float(c) for c in cells[1:]]
        except ValueError:
            raise InputError(f"{path}:{lineno}: malformed number", path=str(path), line=lineno)
        if idx != len(values) + 1:
            raise InputError(f"{path}:{lineno}: expected index {len(values) + 1}, got {idx}", path=str(path), line=lineno)
        values.append(vals[0] if scalar else vals)

    if not values:
        raise InputError(f"{path}: no data rows", path=str(path))
    return np.asarray(values, dtype=float)


def write_signal(path: str | Path, sig: PiecewiseSignal) -> Path:
    path = Path(path)
    write_series(path, sig.materialize())
    if sig.vector:
        header = ["k", "n_k"] + [f"level{j + 1}" for j in range(sig.p)]
    else:
        header = ["k", "n_k", "level"]
    rows = (
        [k, n_k] + [fmt_float(c) for c in level]
        for k, (n_k, level) in enumerate(zip(sig.changepoints, sig.levels), start=1)
    )
    write_rows(_sidecar(path), header, rows)
    logger.debug("signal written to %s (n=%d, K=%d)", path, sig.n, sig.K)
    return path


def read_signal(path: str | Path) -> PiecewiseSignal:
    path = Path(path)
    y = read_series(path)
    side = _sidecar(path)
    if not side.exists():
        return signal_from_series(y)

    header, rows = read_rows(side)
    if header[:2] != ["k", "n_k"] or len(header) < 3:
        raise InputError(f"{side}:1: expected header 'k,n_k,level...'", path=str(side), line=1)
    cps, levels = [], []
    for lineno, cells in rows:
        try:
            cps.append(int(cells[1]))
            levels.append([parse_float(c) for c in cells[2:]])
        except ValueError:
            raise InputError(f"{side}:{lineno}: malformed row", path=str(side), line=lineno)

    vector = y.ndim == 2
    try:
        sig = make_signal(y.shape[0], cps, levels if vector else [lv[0] for lv in levels], vector=vector)
    except ValidationError as exc:
        raise InputError(f"{side}: invalid change point table: {exc.errors()[0]['msg']}", path=str(side)) from exc
    if not np.array_equal(sig.materialize(), y):
        raise InputError(f"{side}: change point table does not match {path.name}", path=str(side))
    return sig
