from dataclasses import dataclass
from typing import Callable, Optional
import warnings

import numpy as np
from scipy import linalg as spla
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from .gp import GPModel, cholesky_with_jitter, matern52_matrix
from .models import AcqKind, AcqSpec, AcquisitionSettings, Config, Incumbent, ParamSpace
from .search_space import from_unit

# a scorer maps an m x d array of unit-cube points to m acquisition values
Scorer = Callable[[np.ndarray], np.ndarray]

_MIN_SIGMA = 1e-12


def _ei_from_moments(mean: np.ndarray, sigma: np.ndarray, best: float) -> np.ndarray:
    improvement = best - mean
    safe_sigma = np.where(sigma < _MIN_SIGMA, 1.0, sigma)
    z = improvement / safe_sigma
    ei = safe_sigma * (z * norm.cdf(z) + norm.pdf(z))
    return np.where(sigma < _MIN_SIGMA, np.maximum(0.0, improvement), np.maximum(ei, 0.0))


def expected_improvement_batch(model: GPModel, X: np.ndarray, incumbent: Incumbent) -> np.ndarray:
    mean, var = model.predict_batch(X, with_noise=False)
    return _ei_from_moments(mean, np.sqrt(var), incumbent.value)


def expected_improvement(model: GPModel, x: np.ndarray, incumbent: Incumbent) -> float:
    """Closed-form E[max(0, psi_min - f(x))] under the latent posterior."""
    return float(expected_improvement_batch(model, np.reshape(x, (1, -1)), incumbent)[0])


def lcb_batch(model: GPModel, X: np.ndarray, beta: float) -> np.ndarray:
    mean, var = model.predict_batch(X, with_noise=False)
    return mean - beta * np.sqrt(var)


def lcb_score(model: GPModel, x: np.ndarray, beta: float) -> float:
    """Optimistic bound mu - beta*sigma; lower is more promising."""
    return float(lcb_batch(model, np.reshape(x, (1, -1)), beta)[0])


def normal_base_samples(n_samples: int, dimension: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points pushed through the normal inverse CDF."""
    sampler = qmc.Sobol(d=dimension, scramble=True, seed=np.random.default_rng(seed))
    with warnings.catch_warnings():
        # Sobol balance warning for sample sizes that are not powers of two
        warnings.simplefilter("ignore", UserWarning)
        u = sampler.random(n_samples)
    return norm.ppf(np.clip(u, 1e-10, 1.0 - 1e-10))


@dataclass(frozen=True)
class NoisyEIContext:
    """Joint posterior draws at the observed points, shared by every candidate of one iteration.

    Candidate draws are completed with the block Cholesky of the joint covariance over
    (observed points, candidate), so each candidate sees an exact joint sample that reuses
    the same base normals.
    """
    model: GPModel
    baseline: np.ndarray
    baseline_mean: np.ndarray
    baseline_factor: np.ndarray
    baseline_cross: np.ndarray
    base_observed: np.ndarray
    base_candidate: np.ndarray
    baseline_min: np.ndarray

    @classmethod
    def build(cls, model: GPModel, spec: AcqSpec) -> 'NoisyEIContext':
        points = model.dataset.points
        # canonical order so the estimate does not depend on observation order
        order = np.lexsort(points.T[::-1])
        baseline = points[order]
        mean, cov = model.joint_standardized(baseline)
        factor, _ = cholesky_with_jitter(cov, model.settings)
        base = normal_base_samples(spec.mc_samples, baseline.shape[0] + 1, spec.mc_seed)
        base_observed = base[:, :-1]
        draws = mean + base_observed @ factor.T
        _, cross = model.cross_solve(baseline)
        return cls(
            model=model,
            baseline=baseline,
            baseline_mean=mean,
            baseline_factor=factor,
            baseline_cross=cross,
            base_observed=base_observed,
            base_candidate=base[:, -1],
            baseline_min=draws.min(axis=1),
        )

    def improvement_samples(self, X: np.ndarray) -> np.ndarray:
        """Per-sample improvements, shape n_samples x m, original output units."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        model = self.model
        mean, var = model.latent_standardized(X)
        _, v = model.cross_solve(X)
        cov_bx = matern52_matrix(self.baseline, X, model.hyperparams) - self.baseline_cross.T @ v
        w = spla.solve_triangular(self.baseline_factor, cov_bx, lower=True)
        cond_var = np.maximum(var - np.sum(w * w, axis=0), 0.0)
        draws = mean + self.base_observed @ w + np.outer(self.base_candidate, np.sqrt(cond_var))
        improvement = np.maximum(self.baseline_min[:, None] - draws, 0.0)
        return model.output_scale * improvement

    def score(self, X: np.ndarray) -> np.ndarray:
        return self.improvement_samples(X).mean(axis=0)


def qnei_score(model: GPModel, x: np.ndarray, spec: AcqSpec) -> float:
    """MC estimate of E[max(0, min f(observed) - f(x))] over the joint posterior."""
    return float(NoisyEIContext.build(model, spec).score(np.reshape(x, (1, -1)))[0])


def make_scorer(model: GPModel, spec: AcqSpec, incumbent: Optional[Incumbent] = None) -> Scorer:
    """Acquisition as a utility to maximize (LCB is negated)."""
    if spec.kind is AcqKind.EI:
        best = incumbent or Incumbent.from_dataset(model.dataset)
        return lambda X: expected_improvement_batch(model, X, best)
    if spec.kind is AcqKind.LCB:
        return lambda X: -lcb_batch(model, X, spec.beta)
    context = NoisyEIContext.build(model, spec)
    return context.score


def maximize_acquisition(model: GPModel, space: ParamSpace, spec: AcqSpec, rng: np.random.Generator,
                         settings: AcquisitionSettings = AcquisitionSettings(),
                         incumbent: Optional[Incumbent] = None) -> Config:
    """Random candidate screen followed by bounded L-BFGS-B refinement of the best few."""
    utility = make_scorer(model, spec, incumbent)
    d = space.dimension
    candidates = rng.uniform(size=(settings.n_candidates, d))
    values = utility(candidates)
    # stable sort keeps ties in candidate order, so the choice is reproducible
    starts = np.argsort(-values, kind="stable")[:max(0, settings.n_refine)]

    best_index = int(starts[0]) if len(starts) else int(np.argmax(values))
    best_x, best_value = candidates[best_index], float(values[best_index])
    bounds = [(0.0, 1.0)] * d
    for index in starts:
        result = minimize(lambda u: -float(utility(u[None, :])[0]), candidates[index],
                          method="L-BFGS-B", bounds=bounds)
        x = np.clip(np.asarray(result.x, dtype=float), 0.0, 1.0)
        value = float(utility(x[None, :])[0])
        if value > best_value:
            best_x, best_value = x, value
    return from_unit(space, best_x)


def recommend_best_predicted(model: GPModel, space: ParamSpace, rng: Optional[np.random.Generator] = None,
                             settings: AcquisitionSettings = AcquisitionSettings()) -> Config:
    """Minimizer of the posterior mean, i.e. LCB with beta = 0."""
    rng = rng if rng is not None else np.random.default_rng(0)
    return maximize_acquisition(model, space, AcqSpec(kind=AcqKind.LCB, beta=0.0), rng, settings)
