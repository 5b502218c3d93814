"""Closed-form ridge/OLS and reduced-rank regression on lagged features."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .lagmatrix import LagDataset


class SingularSystemError(np.linalg.LinAlgError):
    """Normal equations are not positive definite at the requested lambda."""


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Coefficients ``W`` of shape ``(1 + d*p, d)``; predictions are ``X @ W``."""

    W: np.ndarray
    p: int
    d: int
    lam: float
    rank: int

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.shape != (1 + self.d * self.p, self.d):
            raise ValueError(f"W has shape {W.shape}, expected {(1 + self.d * self.p, self.d)}")
        if not np.all(np.isfinite(W)):
            raise ValueError("W has non-finite entries")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def intercept(self) -> np.ndarray:
        return self.W[0]

    def lag_coefficients(self, lag: int) -> np.ndarray:
        """``d x d`` block mapping ``y[t-lag]`` to ``y[t]`` (rows: inputs)."""
        start = 1 + (lag - 1) * self.d
        return self.W[start:start + self.d]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.W

    def to_dict(self) -> dict:
        return {"p": self.p, "d": self.d, "lambda": self.lam, "rank": self.rank, "W": self.W.tolist()}

    def to_json(self, **extra) -> str:
        obj = self.to_dict()
        obj.update(extra)
        return _dumps17(obj)

    @classmethod
    def from_dict(cls, obj: dict) -> "LinearModel":
        return cls(np.array(obj["W"], dtype=float), int(obj["p"]), int(obj["d"]),
                   float(obj["lambda"]), int(obj["rank"]))

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        return cls.from_dict(json.loads(text))


def _dumps17(obj) -> str:
    # 17 significant digits round-trip every double exactly
    def enc(x):
        if isinstance(x, float):
            return format(x, ".17g")
        if isinstance(x, (list, tuple)):
            return "[" + ",".join(enc(v) for v in x) + "]"
        if isinstance(x, dict):
            return "{" + ",".join(f"{json.dumps(k)}:{enc(v)}" for k, v in x.items()) + "}"
        return json.dumps(x)
    return enc(obj)


def default_lambda(X: np.ndarray) -> float:
    """Relative ridge: ``1e-6 * trace(X'X) / n_features``."""
    return 1e-6 * float(np.einsum("ij,ij->", X, X)) / X.shape[1]


def _solve_normal(X: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite inputs")
    G = X.T @ X
    G[np.diag_indices_from(G)] += lam
    try:
        cf = linalg.cho_factor(G, lower=False, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations not positive definite at lambda={lam}") from exc
    diag = np.abs(np.diag(cf[0]))
    if lam == 0 and diag.min() <= np.finfo(float).eps * G.shape[0] * diag.max():
        raise SingularSystemError("X'X is numerically singular; use lambda > 0")
    return linalg.cho_solve(cf, X.T @ Y, check_finite=False)


def ridge_fit(data: LagDataset, lam: Optional[float] = None) -> LinearModel:
    """``W = (X'X + lam I)^-1 X'Y`` via Cholesky; ``lam=None`` uses :func:`default_lambda`.

    The intercept column is penalised like the rest.
    """
    lam = default_lambda(data.X) if lam is None else float(lam)
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    W = _solve_normal(data.X, data.Y, lam)
    return LinearModel(W, data.p, data.d, lam, min(data.X.shape[1], data.d))


def truncated_projection(M: np.ndarray, r: int) -> np.ndarray:
    """``V_r V_r'`` from the SVD of ``M`` (n x d): projector onto the top-r right singular space."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("M must be 2-D")
    d = M.shape[1]
    if int(r) != r or not 1 <= r <= d:
        raise ValueError(f"rank r={r} out of range [1, {d}]")
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite input to SVD")
    _, _, Vt = np.linalg.svd(M, full_matrices=M.shape[0] < d)
    Vr = Vt[: int(r)].T
    return Vr @ Vr.T


def rrr_fit(data: LagDataset, r: int, lam: Optional[float] = None) -> LinearModel:
    """Reduced-rank regression: project the ridge solution onto the top-r
    right singular subspace of the fitted responses ``X W_ridge``."""
    if int(r) != r or not 1 <= r <= data.d:
        raise ValueError(f"rank r={r} out of range [1, {data.d}]")
    full = ridge_fit(data, lam)
    P = truncated_projection(data.X @ full.W, int(r))
    return LinearModel(full.W @ P, data.p, data.d, full.lam, int(r))


def fit(data: LagDataset, lam: Optional[float] = None, rank: Optional[int] = None) -> LinearModel:
    return ridge_fit(data, lam) if rank is None else rrr_fit(data, rank, lam)


def training_loss(data: LagDataset, W: np.ndarray) -> float:
    R = data.Y - data.X @ W
    return float(np.einsum("ij,ij->", R, R))
