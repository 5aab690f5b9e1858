from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np
from scipy import linalg as spla
from scipy.optimize import minimize

from .errors import InsufficientData, NumericalFailure
from .models import Dataset, GPHyperparams, PosteriorPrediction, SurrogateSettings

logger = logging.getLogger(__name__)

SQRT5 = np.sqrt(5.0)
_LOG_2PI = np.log(2.0 * np.pi)

# restart points are drawn from this box (clipped to the hyperparameter bounds)
_RESTART_LENGTHSCALES = (1e-2, 2.0)
_RESTART_SIGNAL = (1e-1, 10.0)
_RESTART_NOISE = (1e-6, 1.0)


def _scaled_sq_diffs(X: np.ndarray, Y: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    """Per-coordinate squared differences divided by squared lengthscales, shape n x m x d."""
    diff = (X[:, None, :] - Y[None, :, :]) / lengthscales
    return diff * diff


def _matern52_from_r(r: np.ndarray, signal_variance: float) -> np.ndarray:
    return signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)


def matern52_matrix(X: np.ndarray, Y: np.ndarray, hp: GPHyperparams) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    r = np.sqrt(_scaled_sq_diffs(X, Y, np.asarray(hp.lengthscales, dtype=float)).sum(axis=-1))
    return _matern52_from_r(r, hp.signal_variance)


def matern52_cov(x: np.ndarray, y: np.ndarray, hp: GPHyperparams) -> float:
    """k(x, y) = s^2 (1 + sqrt5 r + 5r^2/3) exp(-sqrt5 r) with ARD-scaled distance r."""
    return float(matern52_matrix(np.reshape(x, (1, -1)), np.reshape(y, (1, -1)), hp)[0, 0])


def cholesky_with_jitter(A: np.ndarray, settings: SurrogateSettings = SurrogateSettings()) -> Tuple[np.ndarray, float]:
    """Lower Cholesky factor of A, adding diagonal jitter x10 per failure up to the cap."""
    jitter = 0.0
    eye = np.eye(A.shape[0])
    while True:
        try:
            return spla.cholesky(A + jitter * eye, lower=True, check_finite=True), jitter
        except (np.linalg.LinAlgError, ValueError):
            jitter = settings.jitter_start if jitter == 0.0 else jitter * 10.0
            if jitter > settings.jitter_max * (1.0 + 1e-9):
                raise NumericalFailure(
                    f"matrix of size {A.shape[0]} not positive definite with jitter {settings.jitter_max:g}"
                )


def standardize(values: np.ndarray, enabled: bool = True) -> Tuple[np.ndarray, float, float]:
    """Zero-mean unit-variance outputs; a degenerate spread keeps scale 1."""
    values = np.asarray(values, dtype=float)
    if not enabled or values.size == 0:
        return values.copy(), 0.0, 1.0
    mean = float(np.mean(values))
    scale = float(np.std(values))
    if not np.isfinite(scale) or scale < 1e-12:
        scale = 1.0
    return (values - mean) / scale, mean, scale


def _neg_lml_and_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray,
                      settings: SurrogateSettings) -> Tuple[float, np.ndarray]:
    """Negative log marginal likelihood and its gradient in log-hyperparameter space."""
    n, d = X.shape
    lengthscales = np.exp(theta[:d])
    signal_variance = np.exp(theta[d])
    noise_variance = np.exp(theta[d + 1])

    sq = _scaled_sq_diffs(X, X, lengthscales)
    r = np.sqrt(sq.sum(axis=-1))
    decay = np.exp(-SQRT5 * r)
    K = signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * decay
    A = K + noise_variance * np.eye(n)
    try:
        L, _ = cholesky_with_jitter(A, settings)
    except NumericalFailure:
        return 1e25, np.zeros_like(theta)

    alpha = spla.cho_solve((L, True), y)
    lml = -0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * n * _LOG_2PI

    W = np.outer(alpha, alpha) - spla.cho_solve((L, True), np.eye(n))
    radial = signal_variance * (5.0 / 3.0) * (1.0 + SQRT5 * r) * decay
    grad = np.empty_like(theta)
    grad[:d] = 0.5 * np.einsum("ij,ijk->k", W * radial, sq)
    grad[d] = 0.5 * float(np.sum(W * K))
    grad[d + 1] = 0.5 * noise_variance * float(np.trace(W))
    return -lml, -grad


def log_marginal_likelihood(hp: GPHyperparams, data: Dataset, standardize_outputs: bool = True,
                            settings: SurrogateSettings = SurrogateSettings()) -> float:
    """-1/2 y'A^-1 y - 1/2 log|A| - n/2 log 2pi with A = K + tau^2 I."""
    if data.size < 1:
        raise InsufficientData("log marginal likelihood needs at least one observation")
    y, _, _ = standardize(data.values, standardize_outputs)
    A = matern52_matrix(data.points, data.points, hp) + hp.noise_variance * np.eye(data.size)
    L, _ = cholesky_with_jitter(A, settings)
    alpha = spla.cho_solve((L, True), y)
    return -0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * data.size * _LOG_2PI


def _log_bounds(d: int, settings: SurrogateSettings) -> list:
    return (
        [tuple(np.log(settings.lengthscale_bounds))] * d
        + [tuple(np.log(settings.signal_variance_bounds)), tuple(np.log(settings.noise_variance_bounds))]
    )


def _restart_points(d: int, count: int, bounds: list, rng: np.random.Generator) -> np.ndarray:
    low = np.log([_RESTART_LENGTHSCALES[0]] * d + [_RESTART_SIGNAL[0], _RESTART_NOISE[0]])
    high = np.log([_RESTART_LENGTHSCALES[1]] * d + [_RESTART_SIGNAL[1], _RESTART_NOISE[1]])
    starts = rng.uniform(low, high, size=(count, d + 2))
    b = np.array(bounds)
    return np.clip(starts, b[:, 0], b[:, 1])


@dataclass(frozen=True)
class GPModel:
    """Zero-mean GP conditioned on a dataset; all caches are read-only after construction."""
    hyperparams: GPHyperparams
    dataset: Dataset
    cholesky_factor: np.ndarray
    alpha: np.ndarray
    output_mean: float
    output_scale: float
    settings: SurrogateSettings = SurrogateSettings()

    @classmethod
    def condition(cls, data: Dataset, hp: GPHyperparams, standardize_outputs: bool = True,
                  settings: SurrogateSettings = SurrogateSettings()) -> 'GPModel':
        if data.size < 1:
            raise InsufficientData("cannot condition a GP on an empty dataset")
        y, mean, scale = standardize(data.values, standardize_outputs)
        A = matern52_matrix(data.points, data.points, hp) + hp.noise_variance * np.eye(data.size)
        L, jitter = cholesky_with_jitter(A, settings)
        if jitter:
            logger.debug(f"GP conditioning needed jitter {jitter:g} for n={data.size}")
        alpha = spla.cho_solve((L, True), y)
        return cls(hyperparams=hp, dataset=data, cholesky_factor=L, alpha=alpha,
                   output_mean=mean, output_scale=scale, settings=settings)

    @property
    def observation_noise(self) -> float:
        """tau^2 in original output units."""
        return self.hyperparams.noise_variance * self.output_scale ** 2

    def cross_solve(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """k(train, X) and L^-1 k(train, X)."""
        k_star = matern52_matrix(self.dataset.points, X, self.hyperparams)
        v = spla.solve_triangular(self.cholesky_factor, k_star, lower=True)
        return k_star, v

    def latent_standardized(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean vector and marginal variances of f at X, standardized units."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k_star, v = self.cross_solve(X)
        mean = k_star.T @ self.alpha
        var = self.hyperparams.signal_variance - np.sum(v * v, axis=0)
        return mean, np.clip(var, 0.0, self.hyperparams.signal_variance)

    def joint_standardized(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and full covariance of f at X, standardized units."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k_star, v = self.cross_solve(X)
        mean = k_star.T @ self.alpha
        cov = matern52_matrix(X, X, self.hyperparams) - v.T @ v
        return mean, 0.5 * (cov + cov.T)

    def predict_batch(self, X: np.ndarray, with_noise: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        mean, var = self.latent_standardized(X)
        if with_noise:
            var = var + self.hyperparams.noise_variance
        return self.output_mean + self.output_scale * mean, var * self.output_scale ** 2

    def predict(self, x: np.ndarray, with_noise: bool = False) -> PosteriorPrediction:
        mean, var = self.predict_batch(np.reshape(x, (1, -1)), with_noise)
        return PosteriorPrediction(mean=float(mean[0]), variance=float(var[0]),
                                   includes_observation_noise=with_noise)


def predict(model: GPModel, x: np.ndarray, with_noise: bool = False) -> PosteriorPrediction:
    return model.predict(x, with_noise)


def fit_gp(data: Dataset, settings: SurrogateSettings = SurrogateSettings(), seed: int = 0) -> GPModel:
    """Maximize the marginal likelihood from several restarts and keep the best optimum."""
    if data.size < 2:
        raise InsufficientData(f"fitting a GP needs at least 2 observations, got {data.size}")
    y, _, _ = standardize(data.values, settings.standardize)
    d = data.dimension
    bounds = _log_bounds(d, settings)
    rng = np.random.default_rng(seed)

    best_theta: Optional[np.ndarray] = None
    best_value = np.inf
    for start in _restart_points(d, max(1, settings.restarts), bounds, rng):
        result = minimize(_neg_lml_and_grad, start, args=(data.points, y, settings),
                          jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(result.fun) and result.fun < 1e24 and result.fun < best_value:
            best_value = float(result.fun)
            best_theta = np.asarray(result.x, dtype=float)

    if best_theta is None:
        raise NumericalFailure(f"no restart produced a finite marginal likelihood (n={data.size})")
    hp = GPHyperparams.from_log(best_theta)
    logger.debug(
        f"GP fit n={data.size}: lengthscales={np.round(hp.lengthscales, 4).tolist()} "
        f"signal={hp.signal_variance:.4g} noise={hp.noise_variance:.4g} lml={-best_value:.4f}"
    )
    return GPModel.condition(data, hp, settings.standardize, settings)


def sample_joint(model: GPModel, points: np.ndarray, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of the latent f at `points` from the joint posterior, original units."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = points.shape[0]
    if n_samples <= 0:
        return np.empty((0, m))
    # identical rows are perfectly correlated, so sample each distinct point once
    unique, inverse = np.unique(points, axis=0, return_inverse=True)
    mean, cov = model.joint_standardized(unique)
    L, _ = cholesky_with_jitter(cov, model.settings)
    z = rng.standard_normal((n_samples, unique.shape[0]))
    draws = mean + z @ L.T
    return model.output_mean + model.output_scale * draws[:, np.asarray(inverse).reshape(-1)]
