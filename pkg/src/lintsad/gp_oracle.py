"""Stationary Gaussian-process conditioning on a uniform integer grid.

Used as an independent reference for the linear detector: the finite-history
conditional mean of a stationary GP is linear in the last ``h`` observations,
so its coefficients are what least squares on lagged features estimates.

Observation noise enters every covariance of *observed* values as
``noise * I``; :func:`lmc_covariance` and :func:`kernel_matrix` are the
noise-free latent covariances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

FAMILIES = ("squared-exponential", "matern-3/2", "white-noise")


@dataclass(frozen=True)
class Kernel:
    family: str = "squared-exponential"
    lengthscale: float = 1.0
    variance: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.variance <= 0:
            raise ValueError("kernel variance must be > 0")
        if self.family != "white-noise" and not self.lengthscale > 0:
            raise ValueError("lengthscale must be > 0")

    def __call__(self, tau) -> np.ndarray:
        """Covariance at lag(s) ``tau``."""
        r = np.abs(np.asarray(tau, dtype=float))
        if self.family == "squared-exponential":
            return self.variance * np.exp(-0.5 * (r / self.lengthscale) ** 2)
        if self.family == "matern-3/2":
            a = np.sqrt(3.0) * r / self.lengthscale
            return self.variance * (1.0 + a) * np.exp(-a)
        return np.where(r == 0, self.variance, 0.0)


@dataclass(frozen=True, eq=False)
class GpModel:
    """LMC model ``sum_q k_q(t, t') B_q`` plus i.i.d. observation noise."""

    kernels: Sequence[Kernel]
    coreg: Sequence[np.ndarray]
    noise: float = 0.0

    def __post_init__(self):
        ks = tuple(self.kernels)
        Bs = tuple(np.atleast_2d(np.array(B, dtype=float)) for B in self.coreg)
        if not ks or len(ks) != len(Bs):
            raise ValueError("need Q >= 1 kernels and one coregionalization matrix per kernel")
        d = Bs[0].shape[0]
        for B in Bs:
            if B.shape != (d, d):
                raise ValueError("coregionalization matrices must all be d x d")
            if not np.allclose(B, B.T, atol=1e-12):
                raise ValueError("coregionalization matrix not symmetric")
            if np.linalg.eigvalsh(B).min() < -1e-10:
                raise ValueError("coregionalization matrix not PSD")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        object.__setattr__(self, "kernels", ks)
        object.__setattr__(self, "coreg", Bs)

    @classmethod
    def univariate(cls, kernel: Kernel, noise: float = 0.0) -> "GpModel":
        return cls([kernel], [np.ones((1, 1))], noise)

    @property
    def d(self) -> int:
        return self.coreg[0].shape[0]

    @property
    def Q(self) -> int:
        return len(self.kernels)

    def cross_cov(self, tau: float) -> np.ndarray:
        """``d x d`` latent covariance between ``f(t+tau)`` and ``f(t)``."""
        return sum(float(k(tau)) * B for k, B in zip(self.kernels, self.coreg))


@dataclass(frozen=True, eq=False)
class ConditionalLaw:
    """Law of ``y[t]`` given ``y[t-1], ..., y[t-h]``.

    ``coef`` is ``(h*d) x d`` with the same row layout as the lag part of a
    fitted ``W``; ``cov`` is the ``d x d`` conditional covariance.
    """

    coef: np.ndarray
    cov: np.ndarray
    h: int
    d: int

    @property
    def alpha(self) -> np.ndarray:
        """Univariate lag coefficients, most recent first."""
        return self.coef[:, 0] if self.d == 1 else self.coef

    @property
    def variance(self) -> float:
        return float(self.cov[0, 0])

    @property
    def W(self) -> np.ndarray:
        """Coefficients with a zero intercept row prepended (zero-mean GP)."""
        return np.vstack([np.zeros((1, self.d)), self.coef])

    def mean(self, history: np.ndarray) -> np.ndarray:
        """``history`` rows ordered most recent first, shape ``(h, d)``."""
        return np.asarray(history, dtype=float).reshape(-1) @ self.coef

    def to_json(self) -> str:
        return json.dumps({"h": self.h, "d": self.d, "coef": self.coef.tolist(), "cov": self.cov.tolist()})


def _check_grid(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("empty grid")
    if np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly increasing")
    return t


def kernel_matrix(kernel: Kernel, times) -> np.ndarray:
    t = _check_grid(times)
    return kernel(t[:, None] - t[None, :])


def lmc_covariance(gp: GpModel, times) -> np.ndarray:
    """Time-major block matrix; block ``(i, j)`` is ``sum_q k_q(t_i, t_j) B_q``."""
    t = _check_grid(times)
    return sum(np.kron(kernel_matrix(k, t), B) for k, B in zip(gp.kernels, gp.coreg))


def observation_covariance(gp: GpModel, times) -> np.ndarray:
    C = lmc_covariance(gp, times)
    C[np.diag_indices_from(C)] += gp.noise
    return C


def _cho(C: np.ndarray, what: str):
    try:
        return linalg.cho_factor(C, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"{what} is singular or not positive definite") from exc


def full_conditional(series, i: int, gp: GpModel) -> tuple[float, float]:
    """Leave-one-out conditional ``(mean, variance)`` of ``y[i]`` given all other points."""
    if gp.d != 1:
        raise ValueError("full_conditional is the univariate path (d=1)")
    y = np.asarray(getattr(series, "values", series), dtype=float).ravel()
    T = len(y)
    if T < 2:
        raise ValueError("need at least two observations")
    if not 0 <= i < T:
        raise IndexError(f"index {i} out of range for T={T}")
    C = observation_covariance(gp, np.arange(T))
    rest = np.arange(T) != i
    k_i = C[rest, i]
    cf = _cho(C[np.ix_(rest, rest)], "K_{-i}")
    a = linalg.cho_solve(cf, k_i, check_finite=False)
    return float(a @ y[rest]), float(C[i, i] - k_i @ a)


def finite_history_law(gp: GpModel, h: int) -> ConditionalLaw:
    """Gaussian law of the next observation given the previous ``h`` ones."""
    if int(h) != h or h < 1:
        raise ValueError(f"h must be a positive integer, got {h}")
    h, d = int(h), gp.d
    # history ordered most recent first: lag 1..h, each a d-block
    C_hist = np.empty((h * d, h * d))
    for a in range(h):
        for b in range(h):
            C_hist[a * d:(a + 1) * d, b * d:(b + 1) * d] = gp.cross_cov(b - a)
    C_hist[np.diag_indices_from(C_hist)] += gp.noise
    # rows: history lag l, cols: target; cov(y[t-l], y[t]) = K(-l) = K(l)'
    C_cross = np.vstack([gp.cross_cov(lag).T for lag in range(1, h + 1)])
    C_tt = gp.cross_cov(0) + gp.noise * np.eye(d)
    cf = _cho(C_hist, "K_h")
    coef = linalg.cho_solve(cf, C_cross, check_finite=False)
    cov = C_tt - C_cross.T @ coef
    return ConditionalLaw(coef, 0.5 * (cov + cov.T), h, d)


def gp_nll_score(y, law_mean, law_var) -> float:
    """Gaussian negative log-likelihood ``0.5 [log((2 pi)^d det S) + r' S^-1 r]``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m = np.atleast_1d(np.asarray(law_mean, dtype=float))
    S = np.atleast_2d(np.asarray(law_var, dtype=float))
    d = y.size
    if S.shape != (d, d) or m.size != d:
        raise ValueError("shape mismatch between observation, mean and covariance")
    cf = _cho(S, "conditional covariance")
    r = y - m
    logdet = 2.0 * np.log(np.diag(cf[0])).sum()
    maha = float(r @ linalg.cho_solve(cf, r, check_finite=False))
    return 0.5 * (d * np.log(2 * np.pi) + logdet + maha)


def numerical_rank(M: np.ndarray, rtol: float = 1e-8) -> int:
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def rank_bound_check(gp: GpModel, h: int) -> tuple[np.ndarray, int, bool]:
    """Finite-history coefficient matrix, ``sum_q rank(B_q)``, and whether ``rank(W) <= bound``."""
    W = finite_history_law(gp, h).coef
    bound = sum(numerical_rank(B, 1e-10) for B in gp.coreg)
    return W, bound, numerical_rank(W, 1e-8) <= bound


def _psd_factor(B: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(B)
    return V * np.sqrt(np.clip(w, 0.0, None))


def _circulant_paths(kernel: Kernel, T: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent stationary paths of length ``T`` by circulant embedding."""
    m = 1 << int(np.ceil(np.log2(2 * max(T - 1, 1))))
    while True:
        lags = np.minimum(np.arange(m), m - np.arange(m))
        lam = np.fft.fft(kernel(lags)).real
        if lam.min() >= -1e-10 * lam.max():
            break
        m *= 2
        if m > 64 * T:
            raise np.linalg.LinAlgError("circulant embedding is not non-negative definite")
    sq = np.sqrt(np.clip(lam, 0.0, None) / m)
    z = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    f = np.fft.fft(sq * z, axis=1)
    # real and imaginary parts are two independent draws
    out = np.concatenate([f.real, f.imag])[:n, :T]
    return out


def sample_path(gp: GpModel, T: int, rng: np.random.Generator, method: str = "auto") -> np.ndarray:
    """Draw one ``T x d`` noisy realisation.

    ``cholesky`` factors the full observation covariance (jitter ``1e-9`` times
    the largest kernel variance); ``circulant`` draws each latent pattern by
    FFT embedding and mixes channels with a factor of ``B_q``. ``auto`` picks
    Cholesky while ``T*d <= 2000``.
    """
    d = gp.d
    if method == "auto":
        method = "cholesky" if T * d <= 2000 else "circulant"
    if method == "cholesky":
        C = lmc_covariance(gp, np.arange(T))
        jitter = 1e-9 * max(k.variance for k in gp.kernels)
        C[np.diag_indices_from(C)] += gp.noise + jitter
        L = np.linalg.cholesky(C)
        return (L @ rng.standard_normal(T * d)).reshape(T, d)
    if method != "circulant":
        raise ValueError(f"unknown sampling method {method!r}")
    out = np.zeros((T, d))
    for k, B in zip(gp.kernels, gp.coreg):
        u = _circulant_paths(k, T, d, rng)  # d x T
        out += u.T @ _psd_factor(B).T
    return out + np.sqrt(gp.noise) * rng.standard_normal((T, d))
