"""Exact Gaussian process regression with an RBF kernel.

Zero-mean prior, closed-form posterior via Cholesky factorization, and
marginal-likelihood hyperparameter selection in log space. The default
configuration keeps the output and length scales fixed at 1, so the
kernel is exactly exp(-||x - x'||^2 / 2), and tunes only the observation
noise; both scales can be freed through ``GpOptions``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, eigh, solve_triangular
from scipy.optimize import minimize

from .errors import (
    DegenerateSeries,
    DimensionMismatch,
    ModelFormatError,
    NotPositiveDefinite,
)

_LOG_2PI = float(np.log(2.0 * np.pi))

# Jitter ladder: relative to mean(diag(K + noise I)), escalating tenfold.
_JITTER_START = 1e-9
_JITTER_LIMIT = 1e-3


@dataclass(frozen=True)
class Hyperparameters:
    """Kernel and noise parameters, stored on their natural (positive)
    scale; the optimizer works on their logs."""

    output_scale: float = 1.0
    length_scale: float = 1.0
    noise_variance: float = 1.0

    def __post_init__(self):
        for name in ("output_scale", "length_scale", "noise_variance"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be finite and positive, got {v}")

    def log_array(self) -> np.ndarray:
        """(log output_scale, log length_scale, log noise_variance)."""
        return np.log(
            [self.output_scale, self.length_scale, self.noise_variance]
        )

    @staticmethod
    def from_log_array(theta: np.ndarray) -> "Hyperparameters":
        s, ell, v = np.exp(np.asarray(theta, dtype=np.float64))
        return Hyperparameters(
            output_scale=float(s), length_scale=float(ell), noise_variance=float(v)
        )


@dataclass(frozen=True)
class GpOptions:
    """Controls for marginal-likelihood optimization.

    Noise is always free; the two kernel scales join the search only when
    the corresponding flag is set. ``restarts`` counts total starts, the
    first of which is the initial hyperparameter value; the remaining
    starts draw log parameters uniformly from ``init_log_bounds`` with a
    fixed seed, so the search is deterministic.
    """

    restarts: int = 5
    max_iterations: int = 200
    gradient_tolerance: float = 1e-8
    optimize_output_scale: bool = False
    optimize_length_scale: bool = False
    init_log_bounds: tuple[float, float] = (-4.0, 1.0)
    seed: int = 0

    def free_mask(self) -> np.ndarray:
        return np.array(
            [self.optimize_output_scale, self.optimize_length_scale, True]
        )


@dataclass
class GprModel:
    """A fitted regressor: training set, factorization, and dual weights.

    Immutable in use; every prediction is a pure function of the stored
    arrays. ``weights`` solves (K + noise I) w = y.
    """

    inputs: np.ndarray
    targets: np.ndarray
    hyper: Hyperparameters
    cholesky_lower: np.ndarray
    weights: np.ndarray
    log_marginal: float
    jitter: float = 0.0

    @property
    def n_train(self) -> int:
        return self.inputs.shape[0]


def _as_points(x: np.ndarray, what: str = "inputs") -> np.ndarray:
    """Coerce to an (n, d) float64 matrix; 1-D means n points in 1-D."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"{what} must be 1-D or 2-D, got shape {arr.shape}")
    return arr


def _sq_dists(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    # ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b, clamped against rounding.
    aa = np.sum(xa * xa, axis=1)[:, None]
    bb = np.sum(xb * xb, axis=1)[None, :]
    d2 = aa + bb - 2.0 * (xa @ xb.T)
    return np.maximum(d2, 0.0)


def _cross_covariance(
    xa: np.ndarray, xb: np.ndarray, hyper: Hyperparameters
) -> np.ndarray:
    if xa.shape[1] != xb.shape[1]:
        raise DimensionMismatch(
            f"input dimensions differ: {xa.shape[1]} vs {xb.shape[1]}"
        )
    d2 = _sq_dists(xa, xb)
    return hyper.output_scale**2 * np.exp(-0.5 * d2 / hyper.length_scale**2)


def kernel_rbf(
    x: np.ndarray, x_prime: np.ndarray, hyper: Hyperparameters | None = None
) -> float:
    """RBF covariance between two points.

    k(x, x') = s^2 exp(-||x - x'||^2 / (2 l^2)); with default
    hyperparameters this is exactly exp(-||x - x'||^2 / 2).
    """
    if hyper is None:
        hyper = Hyperparameters()
    a = np.atleast_1d(np.asarray(x, dtype=np.float64))
    b = np.atleast_1d(np.asarray(x_prime, dtype=np.float64))
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatch(
            f"kernel_rbf wants two equal-length vectors, got {a.shape} and {b.shape}"
        )
    d2 = float(np.sum((a - b) ** 2))
    return float(hyper.output_scale**2 * np.exp(-0.5 * d2 / hyper.length_scale**2))


def gram_matrix(x: np.ndarray, hyper: Hyperparameters | None = None) -> np.ndarray:
    """Symmetric noise-free covariance matrix of one input set (n x d)."""
    if hyper is None:
        hyper = Hyperparameters()
    pts = _as_points(x)
    k = _cross_covariance(pts, pts, hyper)
    return 0.5 * (k + k.T)


def _factor(k_noisy: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter until it succeeds."""
    scale = float(np.mean(np.diag(k_noisy)))
    jitter = 0.0
    while True:
        try:
            bumped = k_noisy if jitter == 0.0 else k_noisy + jitter * np.eye(len(k_noisy))
            return cholesky(bumped, lower=True), jitter
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = _JITTER_START * scale
            else:
                jitter *= 10.0
            if jitter > _JITTER_LIMIT * scale:
                raise NotPositiveDefinite(
                    "covariance matrix is not positive definite even with "
                    f"jitter up to {_JITTER_LIMIT:g} x mean diagonal"
                ) from None


def fit(
    inputs: np.ndarray, targets: np.ndarray, hyper: Hyperparameters
) -> GprModel:
    """Exact fit: factor K + noise I and solve for the dual weights."""
    x = _as_points(inputs)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(
            f"{x.shape[0]} input rows but {y.shape[0]} targets"
        )
    if x.shape[0] == 0:
        raise DegenerateSeries("cannot fit a model on zero rows")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")

    n = x.shape[0]
    k_noisy = gram_matrix(x, hyper) + hyper.noise_variance * np.eye(n)
    lower, jitter = _factor(k_noisy)
    alpha = cho_solve((lower, True), y)
    model = GprModel(
        inputs=x,
        targets=y,
        hyper=hyper,
        cholesky_lower=lower,
        weights=alpha,
        log_marginal=0.0,
        jitter=jitter,
    )
    model.log_marginal = log_marginal_likelihood(model)
    return model


def log_marginal_likelihood(model: GprModel) -> float:
    """log p(y | X, hyper): -y'w/2 - sum(log L_ii) - (n/2) log 2 pi."""
    return (
        -0.5 * float(model.targets @ model.weights)
        - float(np.sum(np.log(np.diag(model.cholesky_lower))))
        - 0.5 * model.n_train * _LOG_2PI
    )


def lml_gradient(model: GprModel, active: np.ndarray | None = None) -> np.ndarray:
    """Marginal-likelihood gradient w.r.t. the log hyperparameters.

    Components are ordered (log output_scale, log length_scale,
    log noise_variance); ``active`` selects a subset. Uses
    tr((ww' - (K + noise I)^-1) dK/dt) / 2 with w the dual weights.
    """
    n = model.n_train
    alpha = model.weights
    k_inv = cho_solve((model.cholesky_lower, True), np.eye(n))
    inner = np.outer(alpha, alpha) - k_inv

    hyper = model.hyper
    k_f = gram_matrix(model.inputs, hyper)
    d2 = _sq_dists(model.inputs, model.inputs)
    grads = np.empty(3)
    grads[0] = 0.5 * float(np.sum(inner * (2.0 * k_f)))
    grads[1] = 0.5 * float(np.sum(inner * (k_f * d2 / hyper.length_scale**2)))
    grads[2] = 0.5 * hyper.noise_variance * float(np.trace(inner))
    if active is not None:
        return grads[np.asarray(active, dtype=bool)]
    return grads


def _eigen_lml_and_grad(
    lam: np.ndarray, y_hat: np.ndarray, log_noise: float
) -> tuple[float, float]:
    """Noise-only objective from a precomputed eigendecomposition.

    With K = Q diag(lam) Q' and y_hat = Q' y, the quadratic and
    determinant terms decouple per eigenvalue, so each noise evaluation
    is O(n) instead of a fresh factorization.
    """
    v = np.exp(log_noise)
    denom = lam + v
    n = lam.shape[0]
    lml = (
        -0.5 * float(np.sum(y_hat**2 / denom))
        - 0.5 * float(np.sum(np.log(denom)))
        - 0.5 * n * _LOG_2PI
    )
    grad = v * (
        0.5 * float(np.sum(y_hat**2 / denom**2)) - 0.5 * float(np.sum(1.0 / denom))
    )
    return lml, grad


def optimize_hyperparameters(
    inputs: np.ndarray,
    targets: np.ndarray,
    initial: Hyperparameters | None = None,
    options: GpOptions = GpOptions(),
) -> Hyperparameters:
    """Maximize the log marginal likelihood over the free log parameters.

    Multi-start quasi-Newton ascent (L-BFGS-B on the negated objective),
    returning the best candidate across starts, which is never worse than
    any start's own objective value. When only the noise is free, the
    covariance matrix is eigendecomposed once and every line-search
    evaluation reuses it.
    """
    x = _as_points(inputs)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if initial is None:
        initial = Hyperparameters()
    free = options.free_mask()
    theta0 = initial.log_array()
    noise_only = not (options.optimize_output_scale or options.optimize_length_scale)

    eig_cache: tuple[np.ndarray, np.ndarray] | None = None
    if noise_only:
        lam, q = eigh(gram_matrix(x, initial))
        eig_cache = (np.maximum(lam, 0.0), q.T @ y)

    def negative(theta_free: np.ndarray) -> tuple[float, np.ndarray]:
        if noise_only:
            lam, y_hat = eig_cache
            lml, g = _eigen_lml_and_grad(lam, y_hat, float(theta_free[0]))
            return -lml, np.array([-g])
        theta = theta0.copy()
        theta[free] = theta_free
        try:
            model = fit(x, y, Hyperparameters.from_log_array(theta))
        except NotPositiveDefinite:
            return 1e25, np.zeros(int(free.sum()))
        return -model.log_marginal, -lml_gradient(model, active=free)

    rng = np.random.default_rng(options.seed)
    lo, hi = options.init_log_bounds
    n_free = int(free.sum())
    starts = [theta0[free]]
    for _ in range(max(0, options.restarts - 1)):
        starts.append(rng.uniform(lo, hi, size=n_free))

    best_theta, best_value = None, np.inf
    for start in starts:
        result = minimize(
            negative,
            start,
            jac=True,
            method="L-BFGS-B",
            bounds=[(-16.0, 8.0)] * n_free,
            options={
                "maxiter": options.max_iterations,
                "gtol": options.gradient_tolerance,
            },
        )
        if result.fun < best_value:
            best_value, best_theta = result.fun, result.x
    if best_theta is None or not np.isfinite(best_value):
        raise NotPositiveDefinite("hyperparameter search found no usable optimum")

    theta = theta0.copy()
    theta[free] = best_theta
    return Hyperparameters.from_log_array(theta)


def predict(
    model: GprModel, x_star: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at the query points.

    mean = K*' w; variance = k(x*, x*) - ||L^-1 K*||^2 per point, clamped
    at zero. The variance is the latent-function variance; observation
    noise is not added.
    """
    xq = _as_points(x_star, "query points")
    if xq.shape[1] != model.inputs.shape[1]:
        raise DimensionMismatch(
            f"model has {model.inputs.shape[1]} features, query has {xq.shape[1]}"
        )
    k_star = _cross_covariance(model.inputs, xq, model.hyper)
    mean = k_star.T @ model.weights
    v = solve_triangular(model.cholesky_lower, k_star, lower=True)
    prior_var = model.hyper.output_scale**2
    var = np.maximum(prior_var - np.sum(v * v, axis=0), 0.0)
    return mean, var


def predict_mean(model: GprModel, x_star: np.ndarray) -> np.ndarray:
    """Posterior mean only; skips the triangular solve for the variance."""
    xq = _as_points(x_star, "query points")
    if xq.shape[1] != model.inputs.shape[1]:
        raise DimensionMismatch(
            f"model has {model.inputs.shape[1]} features, query has {xq.shape[1]}"
        )
    k_star = _cross_covariance(model.inputs, xq, model.hyper)
    return k_star.T @ model.weights


_FORMAT_VERSION = 1
_MODEL_KIND = "gpr-rbf"


def save_model(model: GprModel, path, metadata: dict | None = None) -> None:
    """Serialize a fitted model (and free-form metadata) to an npz file.

    All float64 arrays round-trip bit-exactly, so a reloaded model makes
    identical predictions.
    """
    np.savez(
        path,
        format_version=np.int64(_FORMAT_VERSION),
        model_kind=np.str_(_MODEL_KIND),
        inputs=model.inputs,
        targets=model.targets,
        cholesky_lower=model.cholesky_lower,
        weights=model.weights,
        hyper=np.array(
            [
                model.hyper.output_scale,
                model.hyper.length_scale,
                model.hyper.noise_variance,
            ]
        ),
        log_marginal=np.float64(model.log_marginal),
        jitter=np.float64(model.jitter),
        metadata_json=np.str_(json.dumps(metadata or {})),
    )


def load_model(path) -> tuple[GprModel, dict]:
    """Inverse of :func:`save_model`; validates the container first."""
    try:
        with np.load(path, allow_pickle=False) as data:
            if "format_version" not in data or "model_kind" not in data:
                raise ModelFormatError(f"{path} is not a saved model")
            if str(data["model_kind"]) != _MODEL_KIND:
                raise ModelFormatError(
                    f"unsupported model kind {str(data['model_kind'])!r}"
                )
            version = int(data["format_version"])
            if version != _FORMAT_VERSION:
                raise ModelFormatError(
                    f"unsupported model format version {version}"
                )
            s, ell, v = (float(h) for h in data["hyper"])
            model = GprModel(
                inputs=data["inputs"],
                targets=data["targets"],
                hyper=Hyperparameters(s, ell, v),
                cholesky_lower=data["cholesky_lower"],
                weights=data["weights"],
                log_marginal=float(data["log_marginal"]),
                jitter=float(data["jitter"]),
            )
            metadata = json.loads(str(data["metadata_json"]))
    except (OSError, ValueError, KeyError) as exc:
        raise ModelFormatError(f"cannot load model from {path}: {exc}") from exc
    return model, metadata
