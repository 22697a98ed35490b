"""Least-squares fitting of per-event constants via Householder QR."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..analysis.metrics import GIUNIF, GOUNIF, NARGS, VIUNIF, VOUNIF, CostModel

PIVOT_TOL = 1e-12
NEAR_SINGULAR = 1e-8


class FitError(Exception):
    pass


class RankDeficiencyError(FitError):
    """A near-zero pivot: the named column is (nearly) a combination of earlier ones."""

    def __init__(self, column: int, name: str | None = None) -> None:
        self.column = column
        self.name = name
        label = name if name is not None else f"column {column}"
        super().__init__(f"near-singular system: {label} is linearly dependent on the preceding columns")


class QtApplier:
    """Householder reflectors ``H_k = I - beta_k v_k v_k^T`` stored compactly.

    ``apply(y)`` computes ``Q^T y = H_{v-1} ... H_0 y``.
    """

    def __init__(self, m: int, reflectors: list) -> None:
        self.m = m
        self.reflectors = reflectors

    def apply(self, y) -> np.ndarray:
        y = np.array(y, dtype=np.float64)
        for k, v, beta in self.reflectors:
            y[k:] -= beta * v * (v @ y[k:])
        return y

    def apply_q(self, y) -> np.ndarray:
        y = np.array(y, dtype=np.float64)
        for k, v, beta in reversed(self.reflectors):
            y[k:] -= beta * v * (v @ y[k:])
        return y

    def q(self) -> np.ndarray:
        """The full ``m x m`` orthogonal factor."""
        return np.column_stack([self.apply_q(e) for e in np.eye(self.m)])

    def __call__(self, y) -> np.ndarray:
        return self.apply(y)


def householder_qr(C) -> tuple[QtApplier, np.ndarray]:
    """Factor ``C = Q U`` with ``U`` upper-triangular (``m x v``)."""
    A = np.array(C, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("C must be a matrix")
    m, n = A.shape
    if m < n:
        raise ValueError(f"need at least as many rows as columns, got {m}x{n}")
    reflectors = []
    for k in range(n):
        x = A[k:, k]
        below = np.linalg.norm(x[1:])
        if below == 0.0:
            continue
        alpha = -math.copysign(np.linalg.norm(x), x[0])
        v = x.copy()
        v[0] -= alpha
        beta = 2.0 / (v @ v)
        A[k:, k:] -= beta * np.outer(v, v @ A[k:, k:])
        A[k + 1 :, k] = 0.0
        reflectors.append((k, v, beta))
    return QtApplier(m, reflectors), np.triu(A)


def _back_substitute(V: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = V.shape[0]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - V[i, i + 1 :] @ x[i + 1 :]) / V[i, i]
    return x


def pivot_ratios(C, U: np.ndarray) -> np.ndarray:
    """``|U_jj| / ||C_j||`` for every column (0 for an all-zero column)."""
    C = np.asarray(C, dtype=np.float64)
    norms = np.linalg.norm(C, axis=0)
    diag = np.abs(np.diag(U[: C.shape[1]]))
    return np.divide(diag, norms, out=np.zeros_like(diag), where=norms > 0)


def least_squares(C, T, names: Sequence[str] | None = None) -> np.ndarray:
    """Minimizer of ``||C K - T||_2`` by QR and back-substitution."""
    C = np.asarray(C, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    m, n = C.shape
    if T.shape != (m,):
        raise ValueError("T must have one entry per row of C")
    qt, U = householder_qr(C)
    ratios = pivot_ratios(C, U)
    for j, r in enumerate(ratios):
        if r <= PIVOT_TOL:
            raise RankDeficiencyError(j, names[j] if names is not None else None)
    b = qt.apply(T)
    return _back_substitute(U[:n], b[:n])


@dataclass(frozen=True)
class ResidualStats:
    R: np.ndarray
    RSS: float
    MRSS: float
    S: float


def residual_stats(C, T, K) -> ResidualStats:
    C = np.asarray(C, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    m, v = C.shape
    if T.shape != (m,) or K.shape != (v,):
        raise ValueError("dimension mismatch between C, T and K")
    if m <= v:
        raise FitError(f"residual statistics need m > v (got m={m}, v={v})")
    R = T - C @ K
    rss = float(R @ R)
    mrss = rss / (m - v)
    return ResidualStats(R, rss, mrss, math.sqrt(mrss))


@dataclass
class ModelFit:
    model: CostModel
    K: np.ndarray
    RSS: float
    MRSS: float
    S: float
    m: int
    v: int
    warnings: list[str] = field(default_factory=list)
    builtins: dict[str, float] = field(default_factory=dict)

    def constant(self, metric) -> float:
        key = str(metric)
        if metric in self.model.components:
            return float(self.K[self.model.index(metric)])
        if key in self.builtins:
            return self.builtins[key]
        raise KeyError(f"no constant for {key}")

    def to_dict(self) -> dict:
        return {
            "model": self.model.signature,
            "K": [float(k) for k in self.K],
            "RSS": self.RSS,
            "MRSS": self.MRSS,
            "S": self.S,
            "m": self.m,
            "v": self.v,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict, builtins: dict | None = None) -> ModelFit:
        model = CostModel.parse(d["model"])
        return cls(
            model,
            np.array(d["K"], dtype=np.float64),
            d["RSS"],
            d["MRSS"],
            d["S"],
            d["m"],
            d["v"],
            list(d.get("warnings", [])),
            dict(builtins or {}),
        )


def _structural_warnings(model: CostModel) -> list[str]:
    comps = set(model.components)
    if NARGS in comps and {GIUNIF, GOUNIF, VIUNIF, VOUNIF} <= comps:
        return [
            "nargs is largely explained by the four unification components; "
            "expect a less precise fit with this model"
        ]
    return []


def fit_model(samples, model: CostModel) -> ModelFit:
    """Fit ``model`` to the columns of ``samples`` it names."""
    C = samples.columns_for(model)
    T = samples.T
    names = [str(c) for c in model.components]
    m, v = C.shape
    if m <= v:
        raise FitError(f"overdetermined system needed: m={m} rows for v={v} constants")
    K = least_squares(C, T, names)
    stats = residual_stats(C, T, K)
    warnings = _structural_warnings(model)
    _, U = householder_qr(C)
    for j, r in enumerate(pivot_ratios(C, U)):
        if r < NEAR_SINGULAR:
            warnings.append(f"{names[j]} is nearly collinear with earlier components (pivot ratio {r:.2e})")
    for name, k in zip(names, K):
        if k < 0:
            warnings.append(f"negative constant for {name} ({k:.3g} ns) suggests model misspecification")
    return ModelFit(model, K, stats.RSS, stats.MRSS, stats.S, m, v, warnings)


__all__ = [
    "FitError",
    "ModelFit",
    "QtApplier",
    "RankDeficiencyError",
    "ResidualStats",
    "fit_model",
    "householder_qr",
    "least_squares",
    "pivot_ratios",
    "residual_stats",
]
