from __future__ import annotations

import math
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cpd.core.config import solver_settings


NoiseFamily = Literal["gaussian", "sub_gaussian_bounded", "sub_exponential"]
LambdaRule = Literal["my_sqrt_n", "my_root4_nw", "detection"]
Mode = Literal["elementwise", "sos", "detection", "partial_sum_event"]

UINT64_MAX = 2**64 - 1


def _validate_int(v, *, field: str, ge: int | None = None, le: int | None = None):
    if v is None:
        raise ValueError(f"{field}: required")
    if isinstance(v, bool):
        raise ValueError(f"{field}: must be an integer")
    try:
        iv = int(v)
    except Exception:
        raise ValueError(f"{field}: must be an integer")
    if isinstance(v, float) and iv != v:
        raise ValueError(f"{field}: must be an integer")

    if ge is not None and iv < ge:
        raise ValueError(f"{field}: must be >= {ge}")

    if le is not None and iv > le:
        raise ValueError(f"{field}: must be <= {le}")

    return iv


def _validate_float(v, *, field: str, ge: float | None = None, gt: float | None = None):
    if v is None:
        raise ValueError(f"{field}: required")
    try:
        fv = float(v)
    except Exception:
        raise ValueError(f"{field}: must be a real number")
    if not math.isfinite(fv):
        raise ValueError(f"{field}: must be finite")

    if ge is not None and fv < ge:
        raise ValueError(f"{field}: must be >= {ge}")

    if gt is not None and fv <= gt:
        raise ValueError(f"{field}: must be > {gt}")

    return fv


def _as_level(v) -> Tuple[Tuple[float, ...], bool]:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return (float(arr),), False
    if arr.ndim == 1 and arr.size >= 1:
        return tuple(float(c) for c in arr), True
    raise ValueError("levels: each level must be a number or a non-empty vector")


class PiecewiseSignal(BaseModel):
    """Ground-truth piecewise-constant signal.

    `changepoints` are 1-based segment starts (n_1 = 1). Levels are stored as
    p-tuples; `vector` tells whether the series is scalar (shape (n,)) or
    vector-valued (shape (n, p)).
    """

    model_config = ConfigDict(frozen=True)

    n: int
    changepoints: Tuple[int, ...]
    levels: Tuple[Tuple[float, ...], ...]
    vector: bool = False

    @model_validator(mode="before")
    @classmethod
    def v_levels_shape(cls, data):
        if not isinstance(data, dict) or "levels" not in data:
            return data
        raw = data["levels"]
        if isinstance(raw, np.ndarray) and raw.ndim == 1 and not data.get("vector"):
            raw = raw.tolist()
        levels, kinds = [], set()
        for lv in raw:
            level, is_vec = _as_level(lv)
            levels.append(level)
            kinds.add(is_vec)
        if len(kinds) > 1:
            raise ValueError("levels: cannot mix scalar and vector levels")
        out = dict(data)
        out["levels"] = tuple(levels)
        out["vector"] = bool(data.get("vector", False)) or (kinds == {True})
        return out

    @field_validator("n")
    @classmethod
    def v_n(cls, v):
        return _validate_int(v, field="n", ge=1)

    @field_validator("changepoints", mode="before")
    @classmethod
    def v_changepoints(cls, v):
        if v is None:
            raise ValueError("changepoints: required")
        out = tuple(_validate_int(c, field="changepoints") for c in np.asarray(v).ravel().tolist())
        if not out:
            raise ValueError("changepoints: at least one segment start is required")
        return out

    @model_validator(mode="after")
    def v_structure(self):
        cps = self.changepoints
        if cps[0] != 1:
            raise ValueError(f"changepoints: first element must be 1, got {cps[0]}")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("changepoints: must be strictly increasing")
        if cps[-1] > self.n:
            raise ValueError(f"changepoints: last element {cps[-1]} exceeds n={self.n}")
        if len(self.levels) != len(cps):
            raise ValueError(
                f"levels: expected {len(cps)} levels (one per segment), got {len(self.levels)}"
            )
        dims = {len(lv) for lv in self.levels}
        if len(dims) != 1:
            raise ValueError("levels: all level vectors must share one dimension")
        if not self.vector and dims != {1}:
            raise ValueError("levels: scalar signal with vector levels")
        for lv in self.levels:
            if not all(math.isfinite(c) for c in lv):
                raise ValueError("levels: must be finite")
        for k, (a, b) in enumerate(zip(self.levels, self.levels[1:]), start=1):
            if a == b:
                raise ValueError(f"levels: segments {k} and {k + 1} have equal levels")
        return self

    @property
    def K(self) -> int:
        return len(self.changepoints)

    @property
    def p(self) -> int:
        return len(self.levels[0])

    @property
    def S(self) -> Tuple[int, ...]:
        """Detectable change points {n_2, ..., n_K}, 1-based."""
        return self.changepoints[1:]

    def segment_lengths(self) -> np.ndarray:
        bounds = np.append(np.asarray(self.changepoints, dtype=np.int64), self.n + 1)
        return np.diff(bounds)

    def materialize(self) -> np.ndarray:
        lv = np.asarray(self.levels, dtype=float)
        x = np.repeat(lv, self.segment_lengths(), axis=0)
        return x if self.vector else x[:, 0]


class NoiseSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: float
    family: NoiseFamily = "gaussian"
    seed: int = 0
    trial_index: int = 0

    @field_validator("sigma")
    @classmethod
    def v_sigma(cls, v):
        return _validate_float(v, field="sigma", ge=0.0)

    @field_validator("seed", "trial_index")
    @classmethod
    def v_seed(cls, v, info):
        return _validate_int(v, field=info.field_name, ge=0, le=UINT64_MAX)


class AnchoredProblem(BaseModel):
    """Segment subproblem with optional boundary anchors a (left) and b (right)."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    y: Tuple[float, ...]
    a: Optional[float] = None
    b: Optional[float] = None
    lam: float = Field(..., alias="lambda")

    @field_validator("y", mode="before")
    @classmethod
    def v_y(cls, v):
        arr = np.asarray(v, dtype=float).ravel()
        if arr.size < 1:
            raise ValueError("y: at least one observation is required")
        if not np.all(np.isfinite(arr)):
            raise ValueError("y: must be finite")
        return tuple(arr.tolist())

    @field_validator("a", "b")
    @classmethod
    def v_anchor(cls, v, info):
        if v is None:
            return None
        return _validate_float(v, field=info.field_name)

    @field_validator("lam")
    @classmethod
    def v_lam(cls, v):
        return _validate_float(v, field="lambda", ge=0.0)


class ExperimentConfig(BaseModel):
    """Monte Carlo experiment description, usually read from a flat `key = value` file."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    signal: Optional[str] = None
    n: Optional[int] = None
    changepoints: Optional[Tuple[int, ...]] = None
    levels: Optional[Tuple[Tuple[float, ...], ...]] = None

    sigma: float
    family: NoiseFamily = "gaussian"
    t: float
    lam: Optional[float] = Field(None, alias="lambda")
    lambda_rule: Optional[LambdaRule] = None
    n_trials: int = 1
    base_seed: int = 0
    mode: Mode = "elementwise"
    group: bool = False
    p: Optional[int] = None
    tol: float = Field(default_factory=lambda: solver_settings.GROUP_TOL)

    @field_validator("sigma")
    @classmethod
    def v_sigma(cls, v):
        return _validate_float(v, field="sigma", ge=0.0)

    @field_validator("t")
    @classmethod
    def v_t(cls, v):
        return _validate_float(v, field="t", gt=1.0)

    @field_validator("lam")
    @classmethod
    def v_lam(cls, v):
        if v is None:
            return None
        return _validate_float(v, field="lambda", ge=0.0)

    @field_validator("n_trials")
    @classmethod
    def v_n_trials(cls, v):
        return _validate_int(v, field="n_trials", ge=1)

    @field_validator("base_seed")
    @classmethod
    def v_base_seed(cls, v):
        return _validate_int(v, field="base_seed", ge=0, le=UINT64_MAX)

    @field_validator("p")
    @classmethod
    def v_p(cls, v):
        if v is None:
            return None
        return _validate_int(v, field="p", ge=1)

    @field_validator("tol")
    @classmethod
    def v_tol(cls, v):
        return _validate_float(v, field="tol", gt=0.0)

    @model_validator(mode="after")
    def v_rules(self):
        if (self.lam is None) == (self.lambda_rule is None):
            raise ValueError("exactly one of `lambda` and `lambda_rule` must be given")

        inline = (self.n, self.changepoints, self.levels)
        if self.signal is None and any(v is None for v in inline):
            raise ValueError("signal: give a signal file or all of n, changepoints, levels")
        if self.signal is not None and any(v is not None for v in inline):
            raise ValueError("signal: give either a signal file or an inline signal, not both")

        if self.mode == "detection" and self.lambda_rule != "detection":
            raise ValueError("mode=detection requires lambda_rule = detection")
        if self.lambda_rule == "detection" and self.mode != "detection":
            raise ValueError("lambda_rule = detection is only valid with mode = detection")
        if self.lambda_rule == "my_root4_nw" and self.group:
            raise ValueError("lambda_rule = my_root4_nw is defined for the scalar estimator only")
        return self


class TrialRecord(BaseModel):
    """One Monte Carlo trial. Fields a mode does not evaluate stay None."""

    model_config = ConfigDict(frozen=True)

    trial_index: int
    seed: int
    max_abs_error: Optional[float] = None
    elementwise_ok: Optional[bool] = None
    sos_value: Optional[float] = None
    sos_ok: Optional[bool] = None
    dH: Optional[float] = None
    dH_ok: Optional[bool] = None
    partial_sum_stat: Optional[float] = None
    event_ok: Optional[bool] = None
    solver_diag: Optional[float] = None

    @model_validator(mode="after")
    def v_flags(self):
        if (self.max_abs_error is None) != (self.elementwise_ok is None):
            raise ValueError("max_abs_error and elementwise_ok must be set together")
        if (self.sos_value is None) != (self.sos_ok is None):
            raise ValueError("sos_value and sos_ok must be set together")
        if (self.partial_sum_stat is None) != (self.event_ok is None):
            raise ValueError("partial_sum_stat and event_ok must be set together")
        if self.dH_ok and self.dH is None:
            raise ValueError("dH_ok cannot be true without a dH value")
        for name in ("max_abs_error", "sos_value", "dH", "partial_sum_stat"):
            v = getattr(self, name)
            if v is not None and not v >= 0.0:
                raise ValueError(f"{name} must be a non-negative number, got {v}")
        return self
