"""Gaussian-process regression over encoded configurations.

The probabilistic surrogate read by the acquisition functions: a constant
prior mean (the observed-target average), a squared-exponential or
Matern-5/2 covariance with per-column length scales, and a Cholesky-based
posterior.  Kernel hyperparameters come from a small multi-start
log-marginal-likelihood optimization with one shared scale multiplier on
per-column bases derived from the data spread.

Fitted models are never mutated, so concurrent posterior queries against
one model are safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.optimize import minimize

from .errors import DlrecError, ValidationFailure

JITTER_START = 1e-10
JITTER_MAX = 1e-4
SIGMA_FLOOR = 1e-12

_SQRT5 = math.sqrt(5.0)


class IllConditionedError(DlrecError):
    """Covariance factorization failed even at maximum jitter."""


class KernelKind(str, Enum):
    SQUARED_EXPONENTIAL = "squared_exponential"
    MATERN52 = "matern52"


@dataclass(frozen=True)
class Kernel:
    kind: KernelKind
    length_scales: np.ndarray  # positive, one per column
    signal_variance: float

    def __post_init__(self) -> None:
        scales = np.asarray(self.length_scales, dtype=np.float64)
        object.__setattr__(self, "length_scales", scales)
        if scales.ndim != 1 or not np.all(scales > 0):
            raise ValidationFailure("length scales must be a vector of positive reals")
        if not self.signal_variance > 0:
            raise ValidationFailure("signal variance must be positive")


def _scaled_sqdist(A: np.ndarray, B: np.ndarray, scales: np.ndarray) -> np.ndarray:
    As = A / scales
    Bs = B / scales
    d2 = (
        np.sum(As**2, axis=1)[:, None]
        + np.sum(Bs**2, axis=1)[None, :]
        - 2.0 * As @ Bs.T
    )
    return np.maximum(d2, 0.0)


def _apply_kernel(kind: KernelKind, signal_variance: float, d2: np.ndarray) -> np.ndarray:
    if kind is KernelKind.SQUARED_EXPONENTIAL:
        return signal_variance * np.exp(-0.5 * d2)
    r = np.sqrt(d2)
    return signal_variance * (1.0 + _SQRT5 * r + (5.0 / 3.0) * d2) * np.exp(-_SQRT5 * r)


def kernel_matrix(kernel: Kernel, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    return _apply_kernel(kernel.kind, kernel.signal_variance, _scaled_sqdist(A, B, kernel.length_scales))


def kernel_eval(kernel: Kernel, x: np.ndarray, x2: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    if x.shape != x2.shape or x.shape[0] != kernel.length_scales.shape[0]:
        raise ValidationFailure("kernel inputs must share the kernel's width")
    return float(kernel_matrix(kernel, x[None, :], x2[None, :])[0, 0])


@dataclass
class GpModel:
    X_obs: np.ndarray
    y_obs: np.ndarray
    kernel: Kernel
    noise_variance: float
    y_mean: float
    chol: np.ndarray  # lower-triangular factor of K + (noise + jitter) I
    alpha_vec: np.ndarray
    jitter: float

    @property
    def n_obs(self) -> int:
        return len(self.X_obs)


def _merge_duplicates(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # identical inputs with conflicting targets break interpolation;
    # average them (this also canonicalizes the row order)
    unique, inverse = np.unique(X, axis=0, return_inverse=True)
    sums = np.bincount(inverse, weights=y, minlength=len(unique))
    counts = np.bincount(inverse, minlength=len(unique))
    return unique, sums / counts


def _factorize(K: np.ndarray) -> tuple[np.ndarray, float]:
    jitter = 0.0
    while True:
        try:
            L = cholesky(K + jitter * np.eye(len(K)), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            pass
        jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
        if jitter > JITTER_MAX:
            raise IllConditionedError(
                f"covariance not positive definite at maximum jitter {JITTER_MAX:g}"
            )


def fit(
    X_obs: np.ndarray, y_obs: np.ndarray, kernel: Kernel, noise_variance: float = 1e-6
) -> GpModel:
    """Condition the GP on observations.

    Targets are centered on their mean (the prior mean).  Duplicate rows
    merge by averaging targets.  Factorization failures escalate jitter
    from 1e-10 by decades up to 1e-4 before giving up.
    """
    X = np.atleast_2d(np.asarray(X_obs, dtype=np.float64))
    y = np.asarray(y_obs, dtype=np.float64).ravel()
    if len(X) == 0 or len(X) != len(y):
        raise ValidationFailure(f"bad observation shapes: X {X.shape}, y {y.shape}")
    if noise_variance <= 0:
        raise ValidationFailure("noise variance must be positive")
    X, y = _merge_duplicates(X, y)
    y_mean = float(np.mean(y))
    K = kernel_matrix(kernel, X, X) + noise_variance * np.eye(len(X))
    L, jitter = _factorize(K)
    centered = y - y_mean
    alpha = solve_triangular(L.T, solve_triangular(L, centered, lower=True), lower=False)
    return GpModel(
        X_obs=X,
        y_obs=y,
        kernel=kernel,
        noise_variance=noise_variance,
        y_mean=y_mean,
        chol=L,
        alpha_vec=alpha,
        jitter=jitter,
    )


def posterior_batch(model: GpModel, X_query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and predictive standard deviation per query row."""
    Xq = np.atleast_2d(np.asarray(X_query, dtype=np.float64))
    if Xq.shape[1] != model.X_obs.shape[1]:
        raise ValidationFailure(
            f"query width {Xq.shape[1]} does not match observations ({model.X_obs.shape[1]})"
        )
    K_star = kernel_matrix(model.kernel, model.X_obs, Xq)
    mean = model.y_mean + K_star.T @ model.alpha_vec
    V = solve_triangular(model.chol, K_star, lower=True)
    var = model.kernel.signal_variance + model.noise_variance - np.sum(V**2, axis=0)
    sigma = np.maximum(np.sqrt(np.maximum(var, 0.0)), SIGMA_FLOOR)
    return mean, sigma


def posterior(model: GpModel, x: np.ndarray) -> tuple[float, float]:
    mean, sigma = posterior_batch(model, np.asarray(x, dtype=np.float64).reshape(1, -1))
    return float(mean[0]), float(sigma[0])


# --- kernel hyperparameter selection ------------------------------------------


def _column_bases(X: np.ndarray) -> np.ndarray:
    bases = np.std(X, axis=0)
    bases[bases < 1e-12] = 1.0
    return bases


def _neg_lml_and_grad(
    theta: np.ndarray,
    d2_base: np.ndarray,
    centered_y: np.ndarray,
    noise_variance: float,
    kind: KernelKind,
) -> tuple[float, np.ndarray]:
    log_scale, log_var = theta
    lam2 = math.exp(2.0 * log_scale)
    s2 = math.exp(log_var)
    n = len(centered_y)
    if kind is KernelKind.SQUARED_EXPONENTIAL:
        Kf = s2 * np.exp(-0.5 * d2_base / lam2)
        dK_dlogscale = Kf * (d2_base / lam2)
    else:
        r = np.sqrt(d2_base) / math.exp(log_scale)
        e = np.exp(-_SQRT5 * r)
        Kf = s2 * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r * r) * e
        dK_dlogscale = s2 * (5.0 / 3.0) * r * r * (1.0 + _SQRT5 * r) * e
    K = Kf + noise_variance * np.eye(n)
    try:
        L, _ = _factorize(K)
    except IllConditionedError:
        return 1e25, np.zeros(2)
    alpha = solve_triangular(L.T, solve_triangular(L, centered_y, lower=True), lower=False)
    lml = (
        -0.5 * float(centered_y @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    K_inv = solve_triangular(L.T, solve_triangular(L, np.eye(n), lower=True), lower=False)
    inner = np.outer(alpha, alpha) - K_inv
    grad = 0.5 * np.array(
        [np.sum(inner * dK_dlogscale), np.sum(inner * Kf)]
    )
    return -lml, -grad


def optimize_kernel(
    X: np.ndarray,
    y: np.ndarray,
    kind: KernelKind = KernelKind.SQUARED_EXPONENTIAL,
    noise_variance: float = 1e-6,
    n_restarts: int = 5,
    seed: int = 0,
) -> Kernel:
    """Pick length scales and signal variance by maximum marginal likelihood.

    One shared multiplier scales per-column bases (the column standard
    deviations), keeping the search two-dimensional regardless of width;
    the first start is the unit multiplier at the target variance, the
    rest are seeded draws across the bounded log-space box.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    X, y = _merge_duplicates(X, y)
    bases = _column_bases(X)
    centered = y - np.mean(y)
    var_y = max(float(np.var(centered)), 1e-12)
    d2_base = _scaled_sqdist(X, X, bases)

    bounds = [
        (math.log(0.05), math.log(100.0)),
        (math.log(var_y) - 4.0 * math.log(10.0), math.log(var_y) + 4.0 * math.log(10.0)),
    ]
    rng = np.random.default_rng(seed)
    starts = [np.array([0.0, math.log(var_y)])]
    for _ in range(max(n_restarts - 1, 0)):
        starts.append(np.array([rng.uniform(*bounds[0]), rng.uniform(*bounds[1])]))

    best_theta = starts[0]
    best_obj = math.inf
    for start in starts:
        res = minimize(
            _neg_lml_and_grad,
            start,
            args=(d2_base, centered, noise_variance, kind),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
        )
        if res.fun < best_obj:
            best_obj = float(res.fun)
            best_theta = res.x
    lam = math.exp(best_theta[0])
    s2 = math.exp(best_theta[1])
    return Kernel(kind=kind, length_scales=lam * bases, signal_variance=s2)
