"""Mixed-effects Poisson regression: Gaussian random intercept per speaker.

The marginal likelihood integrates the per-speaker random intercept out of
the joint density with adaptive Gauss-Hermite quadrature (nodes recentered
at each block's conditional mode and rescaled by the curvature there; one
node is the Laplace approximation).  Within a block the intercept r enters
the joint log-density as a + b*r - d*exp(r) with sufficient statistics

    a = sum_j [C_j * (log N_j + eta_j) - log C_j!]
    b = sum_j C_j
    d = sum_j N_j * exp(eta_j)

so the inner mode problem is one-dimensional per speaker.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import glm
from .backend import get_kernels
from .dataset import Corpus, GroupFactor
from .errors import ConvergenceError, DimensionMismatchError
from .glm import ModelSpec

DEFAULT_NODES = 15
SIGMA_BOUNDARY = 1e-6
LOG_SIGMA_MIN = math.log(1e-7)
MAX_OUTER_EVALS = 200


@dataclass(frozen=True)
class MixedModelSpec:
    base: ModelSpec = ModelSpec()
    # the random intercept always groups by speaker


@dataclass(frozen=True)
class FittedGLMM:
    fixed_coefficients: np.ndarray
    coef_names: tuple[str, ...]
    sigma: float
    log_marginal_likelihood: float
    fixed_covariance: np.ndarray
    conditional_modes: dict
    quadrature_nodes: int
    converged: bool
    boundary: bool
    n_evals: int
    spec: MixedModelSpec
    factor: GroupFactor
    data_snapshot: tuple

    @property
    def n_fixed_params(self) -> int:
        return len(self.fixed_coefficients)


def gauss_hermite(nodes: int):
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    t, w = np.polynomial.hermite.hermgauss(nodes)
    return t, np.log(w) + t * t


class _AGQProblem:
    """Marginal log-likelihood of (beta, log sigma) on one corpus."""

    def __init__(self, corpus: Corpus, spec: MixedModelSpec, nodes: int):
        self.X, self.offset, self.C, self.names = glm.build_design(corpus, spec.base)
        self.words = corpus.words
        self.codes = corpus.speaker_codes
        self.n_speakers = corpus.n_speakers
        self.gh_t, self.gh_logw = gauss_hermite(nodes)
        from scipy.special import gammaln

        self.a_const = np.bincount(
            self.codes,
            weights=self.C * self.offset - gammaln(self.C + 1.0),
            minlength=self.n_speakers,
        )
        self.b = np.bincount(self.codes, weights=self.C, minlength=self.n_speakers)
        self.CtX = self.X.T @ self.C
        self.n_evals = 0

    def _block_stats(self, beta):
        eta = self.X @ beta
        a = self.a_const + np.bincount(
            self.codes, weights=self.C * eta, minlength=self.n_speakers
        )
        w = self.words * np.exp(eta)
        d = np.bincount(self.codes, weights=w, minlength=self.n_speakers)
        return a, d, w

    def speaker_stats(self, beta, sigma):
        a, d, _ = self._block_stats(beta)
        return get_kernels().agq_speaker_stats(
            a, self.b, d, sigma, self.gh_t, self.gh_logw
        )

    def loglik(self, params):
        self.n_evals += 1
        if not np.all(np.isfinite(params)) or params[-1] > 50.0:
            return -math.inf
        beta, sigma = params[:-1], math.exp(params[-1])
        ll_i, _, _, _ = self.speaker_stats(beta, sigma)
        total = float(np.sum(ll_i))
        return total if math.isfinite(total) else -math.inf

    def loglik_and_grad(self, params):
        """Value and analytic gradient wrt (beta, log sigma).

        Quadrature nodes are held fixed while differentiating; with enough
        nodes the node-motion terms are below the quadrature error.
        """
        self.n_evals += 1
        beta, sigma = params[:-1], math.exp(params[-1])
        a, d, w = self._block_stats(beta)
        ll_i, _, mean_er, mean_r2 = get_kernels().agq_speaker_stats(
            a, self.b, d, sigma, self.gh_t, self.gh_logw
        )
        wx = self.X * w[:, None]
        dvec = np.empty((self.n_speakers, self.X.shape[1]))
        for j in range(self.X.shape[1]):
            dvec[:, j] = np.bincount(
                self.codes, weights=wx[:, j], minlength=self.n_speakers
            )
        grad_beta = self.CtX - dvec.T @ mean_er
        grad_logsig = float(np.sum(mean_r2) / (sigma * sigma) - self.n_speakers)
        return float(np.sum(ll_i)), np.append(grad_beta, grad_logsig)


def speaker_marginal_loglik(errors, words, eta, sigma: float, nodes: int) -> float:
    """Marginal log-likelihood of one speaker block.

    `eta` is the offset-free fixed-effect predictor per utterance; sigma = 0
    short-circuits to the plain Poisson log-likelihood of the block.
    """
    errors = np.asarray(errors, dtype=np.float64)
    words = np.asarray(words, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return glm.poisson_block_loglik(errors, words, eta)
    from scipy.special import gammaln

    offset = np.log(words)
    a = np.array([np.sum(errors * (offset + eta) - gammaln(errors + 1.0))])
    b = np.array([np.sum(errors)])
    d = np.array([np.sum(words * np.exp(eta))])
    gh_t, gh_logw = gauss_hermite(nodes)
    ll, _, _, _ = get_kernels().agq_speaker_stats(a, b, d, sigma, gh_t, gh_logw)
    return float(ll[0])


def _fd_hessian(f, x, rel_step=1e-4):
    p = len(x)
    h = rel_step * (1.0 + np.abs(x))
    hess = np.empty((p, p))
    f0 = f(x)
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / (h[i] * h[i])
        for j in range(i + 1, p):
            ej = np.zeros(p)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return hess


def fit_glmm(
    corpus: Corpus, spec: MixedModelSpec = MixedModelSpec(), nodes: int = DEFAULT_NODES
) -> FittedGLMM:
    if corpus.n_speakers < 2:
        raise DimensionMismatchError("mixed model needs at least two speakers")
    glm_fit = glm.fit_glm(corpus, spec.base)
    problem = _AGQProblem(corpus, spec, nodes)

    disp = glm.dispersion(glm_fit, corpus)
    sigma0 = max(math.sqrt(max(disp - 1.0, 0.0)), 0.05)
    x0 = np.append(glm_fit.coefficients, math.log(sigma0))
    p = len(glm_fit.coefficients)

    def neg(params):
        ll, g = problem.loglik_and_grad(params)
        return -ll, -g

    bounds = [(None, None)] * p + [(LOG_SIGMA_MIN, 3.0)]
    res = minimize(
        neg,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxfun": MAX_OUTER_EVALS, "ftol": 1e-13, "gtol": 1e-7},
    )
    x = res.x
    sigma_hat = math.exp(x[-1])

    def boundary_fit():
        # exact reduction to the plain GLM at the sigma = 0 boundary
        modes = {label: 0.0 for label in corpus.speaker_labels}
        return FittedGLMM(
            fixed_coefficients=glm_fit.coefficients,
            coef_names=glm_fit.coef_names,
            sigma=0.0,
            log_marginal_likelihood=glm_fit.log_likelihood,
            fixed_covariance=glm_fit.covariance,
            conditional_modes=modes,
            quadrature_nodes=nodes,
            converged=True,
            boundary=True,
            n_evals=problem.n_evals,
            spec=spec,
            factor=corpus.factor,
            data_snapshot=corpus.snapshot(),
        )

    if sigma_hat < SIGMA_BOUNDARY:
        return boundary_fit()

    # Newton polish: analytic gradient, finite-difference Hessian
    def negf(params):
        return -problem.loglik(params)

    fx = negf(x)
    for _ in range(3):
        _, gneg = neg(x)
        if np.max(np.abs(gneg)) < 1e-7:
            break
        hess_iter = _fd_hessian(negf, x)
        try:
            step = np.linalg.solve(hess_iter, -gneg)
        except np.linalg.LinAlgError:
            break
        norm = np.max(np.abs(step))
        if not np.isfinite(norm):
            break
        if norm > 1.0:
            step = step / norm
        scale = 1.0
        for _ in range(10):
            x_try = x + scale * step
            f_try = negf(x_try)
            if np.isfinite(f_try) and f_try <= fx + 1e-10:
                break
            scale *= 0.5
        else:
            break
        x, fx = x_try, f_try
    # the log-sigma gradient vanishes quadratically toward sigma = 0, so the
    # optimizer can stall at a tiny interior sigma; if the variance buys no
    # likelihood over the nested GLM the optimum is the boundary
    if math.exp(x[-1]) < SIGMA_BOUNDARY or -fx <= glm_fit.log_likelihood + 1e-7:
        return boundary_fit()
    hess = _fd_hessian(negf, x)

    _, gneg = neg(x)
    gmax = float(np.max(np.abs(gneg)))
    converged = gmax <= 0.05
    if problem.n_evals > 10 * MAX_OUTER_EVALS and not converged:
        raise ConvergenceError(
            f"mixed model failed to converge (grad max {gmax:.3g})", last=x
        )

    try:
        cov_all = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov_all = np.linalg.pinv(hess)
    fixed_cov = 0.5 * (cov_all[:p, :p] + cov_all[:p, :p].T)

    beta = x[:p]
    sigma_hat = math.exp(x[-1])
    _, mode_i, _, _ = problem.speaker_stats(beta, sigma_hat)
    modes = {
        label: float(mode_i[i]) for i, label in enumerate(corpus.speaker_labels)
    }
    return FittedGLMM(
        fixed_coefficients=beta,
        coef_names=problem.names,
        sigma=sigma_hat,
        log_marginal_likelihood=-fx,
        fixed_covariance=fixed_cov,
        conditional_modes=modes,
        quadrature_nodes=nodes,
        converged=converged,
        boundary=False,
        n_evals=problem.n_evals,
        spec=spec,
        factor=corpus.factor,
        data_snapshot=corpus.snapshot(),
    )


def marginal_loglik(
    corpus: Corpus, spec: MixedModelSpec, beta, sigma: float, nodes: int = DEFAULT_NODES
) -> float:
    """Marginal log-likelihood at explicit parameter values."""
    problem = _AGQProblem(corpus, spec, nodes)
    if sigma == 0.0:
        eta = problem.X @ np.asarray(beta, dtype=np.float64)
        return glm.poisson_block_loglik(problem.C, corpus.words, eta)
    ll_i, _, _, _ = problem.speaker_stats(np.asarray(beta, dtype=np.float64), sigma)
    return float(np.sum(ll_i))


def marginal_loglik_grad(
    corpus: Corpus, spec: MixedModelSpec, beta, log_sigma: float, nodes: int = DEFAULT_NODES
):
    """Value and analytic gradient wrt (beta, log sigma)."""
    problem = _AGQProblem(corpus, spec, nodes)
    params = np.append(np.asarray(beta, dtype=np.float64), log_sigma)
    return problem.loglik_and_grad(params)


def conditional_modes(fit: FittedGLMM, corpus: Corpus) -> dict:
    """Per-speaker empirical Bayes modes at the fitted parameters."""
    if fit.sigma == 0.0:
        return {label: 0.0 for label in corpus.speaker_labels}
    problem = _AGQProblem(corpus, fit.spec, fit.quadrature_nodes)
    if problem.names != fit.coef_names:
        raise DimensionMismatchError("corpus incompatible with fitted model")
    _, mode_i, _, _ = problem.speaker_stats(fit.fixed_coefficients, fit.sigma)
    return {label: float(mode_i[i]) for i, label in enumerate(corpus.speaker_labels)}
