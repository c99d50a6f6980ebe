"""Fixed-effects Poisson regression with log link and log-exposure offset.

Fitting is Newton/IRLS on the exact Poisson log-likelihood (including the
log C! terms, so mixed-model likelihoods are directly LRT-comparable).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammaln

from .dataset import Corpus, GroupFactor
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    NonIdentifiableDesignError,
)

GRAD_TOL = 1e-8
LOGLIK_RELTOL = 1e-10
MAX_ITER = 100
# keep polishing past the convergence thresholds while progress is cheap,
# so closed-form cases are reproduced to ~1e-12
POLISH_GRAD_TOL = 1e-11


@dataclass(frozen=True)
class ModelSpec:
    use_factor: bool = True
    covariates: tuple[str, ...] = ()
    include_intercept: bool = True


@dataclass(frozen=True)
class FittedGLM:
    coefficients: np.ndarray
    coef_names: tuple[str, ...]
    log_likelihood: float
    covariance: np.ndarray
    iterations: int
    converged: bool
    spec: ModelSpec
    factor: GroupFactor
    data_snapshot: tuple

    @property
    def n_fixed_params(self) -> int:
        return len(self.coefficients)

    def coef(self, name: str) -> float:
        try:
            return float(self.coefficients[self.coef_names.index(name)])
        except ValueError:
            raise DimensionMismatchError(f"no coefficient named {name!r}") from None


def build_design(corpus: Corpus, spec: ModelSpec):
    """Design matrix, offset, response, and column names in canonical order."""
    n = len(corpus)
    cols = []
    names = []
    if spec.include_intercept:
        cols.append(np.ones(n))
        names.append("intercept")
    if spec.use_factor:
        for idx, label in enumerate(corpus.factor.levels):
            if spec.include_intercept and idx == corpus.factor.reference_level:
                continue
            cols.append((corpus.levels == idx).astype(np.float64))
            names.append(f"level:{label}")
    for name in spec.covariates:
        try:
            j = corpus.covariate_names.index(name)
        except ValueError:
            raise DimensionMismatchError(
                f"covariate {name!r} not in corpus columns {list(corpus.covariate_names)}"
            ) from None
        cols.append(corpus.cov[:, j].copy())
        names.append(f"cov:{name}")
    if not cols:
        raise DimensionMismatchError("model spec selects no columns")
    X = np.column_stack(cols)
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise NonIdentifiableDesignError(
            "non-identifiable design: rank-deficient model matrix"
        )
    offset = np.log(corpus.words)
    return X, offset, corpus.errors, tuple(names)


def _loglik(C, offset, eta, lam):
    return float(np.sum(C * (offset + eta) - lam - gammaln(C + 1.0)))


def fit_glm(corpus: Corpus, spec: ModelSpec = ModelSpec()) -> FittedGLM:
    X, offset, C, names = build_design(corpus, spec)
    p = X.shape[1]
    beta = np.zeros(p)
    rate0 = np.log(C.sum() / corpus.words.sum()) if C.sum() > 0 else -2.0
    if spec.include_intercept:
        beta[0] = rate0
    elif spec.use_factor:
        beta[: len(corpus.factor.levels)] = rate0

    eta = X @ beta
    lam = np.exp(offset + eta)
    ll = _loglik(C, offset, eta, lam)
    it = 0
    converged = False
    for it in range(1, MAX_ITER + 1):
        grad = X.T @ (C - lam)
        gmax = np.max(np.abs(grad))
        if gmax <= POLISH_GRAD_TOL:
            break
        H = X.T @ (X * lam[:, None])
        try:
            step = cho_solve(cho_factor(H), grad)
        except np.linalg.LinAlgError:
            raise NonIdentifiableDesignError(
                "non-identifiable design: singular information matrix"
            ) from None
        # step-halving guard against overshoot at extreme iterates
        scale = 1.0
        for _ in range(40):
            beta_new = beta + scale * step
            eta_new = X @ beta_new
            lam_new = np.exp(offset + eta_new)
            ll_new = _loglik(C, offset, eta_new, lam_new)
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12:
                break
            scale *= 0.5
        else:
            raise ConvergenceError("failed to converge: no ascent step", last=beta)
        improved = ll_new - ll
        beta, eta, lam, ll = beta_new, eta_new, lam_new, ll_new
        if gmax <= GRAD_TOL and abs(improved) <= LOGLIK_RELTOL * (1.0 + abs(ll)):
            break
    grad = X.T @ (C - lam)
    gmax = float(np.max(np.abs(grad)))
    converged = gmax <= GRAD_TOL
    if not converged:
        raise ConvergenceError(
            f"failed to converge in {it} iterations (grad max {gmax:.3g})", last=beta
        )
    H = X.T @ (X * lam[:, None])
    cov = cho_solve(cho_factor(H), np.eye(p))
    cov = 0.5 * (cov + cov.T)
    return FittedGLM(
        coefficients=beta,
        coef_names=names,
        log_likelihood=ll,
        covariance=cov,
        iterations=it,
        converged=converged,
        spec=spec,
        factor=corpus.factor,
        data_snapshot=corpus.snapshot(),
    )


def linear_predictor(fit: FittedGLM, corpus: Corpus) -> np.ndarray:
    """Offset-free linear predictor X @ beta in canonical corpus order."""
    X, _, _, names = build_design(corpus, fit.spec)
    if names != fit.coef_names:
        raise DimensionMismatchError(
            f"design columns {names} do not match fit columns {fit.coef_names}"
        )
    return X @ fit.coefficients


def log_likelihood(fit: FittedGLM, corpus: Corpus) -> float:
    """Exact Poisson log-likelihood of the fit on a compatible corpus."""
    eta = linear_predictor(fit, corpus)
    offset = np.log(corpus.words)
    lam = np.exp(offset + eta)
    return _loglik(corpus.errors, offset, eta, lam)


def fitted_rates(fit: FittedGLM, corpus: Corpus) -> np.ndarray:
    eta = linear_predictor(fit, corpus)
    return np.exp(np.log(corpus.words) + eta)


def dispersion(fit: FittedGLM, corpus: Corpus) -> float:
    """Pearson statistic over residual degrees of freedom; >> 1 flags
    overdispersion (omitted covariates or clustering)."""
    lam = fitted_rates(fit, corpus)
    if np.any(lam <= 0.0):
        raise DimensionMismatchError("zero fitted rate")
    pearson = float(np.sum((corpus.errors - lam) ** 2 / lam))
    dof = len(corpus) - fit.n_fixed_params
    if dof <= 0:
        raise DimensionMismatchError("no residual degrees of freedom")
    return pearson / dof


def poisson_block_loglik(
    errors: np.ndarray, words: np.ndarray, eta: Optional[np.ndarray] = None
) -> float:
    """Plain Poisson log-likelihood of one utterance block.

    `eta` is the offset-free linear predictor per utterance (default 0).
    """
    errors = np.asarray(errors, dtype=np.float64)
    words = np.asarray(words, dtype=np.float64)
    if eta is None:
        eta = np.zeros_like(errors)
    offset = np.log(words)
    lam = np.exp(offset + eta)
    return _loglik(errors, offset, np.asarray(eta, dtype=np.float64), lam)
