"""Statistical decisions: bootstrap baseline, Wald ratios, likelihood ratio tests.

The baseline deliberately reproduces the naive analysis: empirical WER
ratio with a percentile bootstrap resampling utterances with replacement
independently within each group, ignoring speaker clustering.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import chi2, norm

from .dataset import Corpus
from .errors import (
    ConvergenceError,
    InfiniteRatioError,
    NonNestedModelError,
)
from .glm import FittedGLM, ModelSpec
from .glmm import FittedGLMM

DEFAULT_REPLICATES = 1000


@dataclass(frozen=True)
class RatioEstimate:
    ratio: float
    ci_low: float
    ci_high: float
    level: float = 0.95
    method: str = "wald-log-scale"
    # percentile bootstrap can, pathologically, exclude its own point
    # estimate; that is flagged rather than failed
    flagged: bool = False

    @property
    def significant(self) -> bool:
        """CI excludes the null ratio of 1.0."""
        return self.ci_low > 1.0 or self.ci_high < 1.0


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_value: float

    @property
    def significant_at_05(self) -> bool:
        return self.p_value < 0.05


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _child_stream(ss: np.random.SeedSequence, *key) -> np.random.Generator:
    child = np.random.SeedSequence(
        entropy=ss.entropy, spawn_key=tuple(ss.spawn_key) + key
    )
    return np.random.Generator(np.random.Philox(child))


def _group_rows(corpus: Corpus, level_idx: int):
    mask = corpus.levels == level_idx
    rows = np.column_stack((corpus.errors[mask], corpus.words[mask]))
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    n = int(mask.sum())
    return uniq[:, 0], uniq[:, 1], counts / n, n


def baseline_ratio(
    corpus: Corpus,
    case_level,
    control_level,
    replicates: int = DEFAULT_REPLICATES,
    seed: Union[int, np.random.SeedSequence] = 0,
    level: float = 0.95,
) -> RatioEstimate:
    """Empirical WER ratio with a percentile-bootstrap confidence interval.

    Replicate b resamples utterances with replacement within each group,
    with one counter-based RNG stream per (replicate, group level) so the
    result is reproducible and symmetric under case/control swap.
    """
    if replicates < 100:
        raise ValueError("replicates must be >= 100")
    ci = corpus.factor.index(case_level)
    ki = corpus.factor.index(control_level)
    e_case, w_case = corpus.errors[corpus.levels == ci], corpus.words[corpus.levels == ci]
    e_ctrl, w_ctrl = corpus.errors[corpus.levels == ki], corpus.words[corpus.levels == ki]
    if e_ctrl.sum() == 0:
        raise InfiniteRatioError("zero control-group errors: infinite WER ratio")
    point = (e_case.sum() / w_case.sum()) / (e_ctrl.sum() / w_ctrl.sum())

    ue_case, uw_case, p_case, n_case = _group_rows(corpus, ci)
    ue_ctrl, uw_ctrl, p_ctrl, n_ctrl = _group_rows(corpus, ki)
    ss = _seed_sequence(seed)
    ratios = np.empty(replicates)
    redraws = 0
    for b in range(replicates):
        rng_case = _child_stream(ss, b, ci)
        rng_ctrl = _child_stream(ss, b, ki)
        for _ in range(100):
            m_case = rng_case.multinomial(n_case, p_case)
            m_ctrl = rng_ctrl.multinomial(n_ctrl, p_ctrl)
            words_case = float(m_case @ uw_case)
            words_ctrl = float(m_ctrl @ uw_ctrl)
            if words_case > 0 and words_ctrl > 0:
                break
            redraws += 1
        wer_case = float(m_case @ ue_case) / words_case
        wer_ctrl = float(m_ctrl @ ue_ctrl) / words_ctrl
        with np.errstate(divide="ignore"):
            ratios[b] = np.float64(wer_case) / np.float64(wer_ctrl)
    alpha = 1.0 - level
    # percentiles of the log-ratios (then exponentiated) so the interval
    # inverts exactly under a case/control swap: percentile interpolation
    # commutes with negation but not with reciprocals
    with np.errstate(divide="ignore"):
        log_lo, log_hi = np.percentile(
            np.log(ratios), [100 * alpha / 2.0, 100 * (1.0 - alpha / 2.0)]
        )
    lo, hi = np.exp(log_lo), np.exp(log_hi)
    return RatioEstimate(
        ratio=float(point),
        ci_low=float(lo),
        ci_high=float(hi),
        level=level,
        method="bootstrap-percentile",
        flagged=not (lo <= point <= hi),
    )


def _level_coef_var(fit, label: str):
    """Coefficient and covariance row for one factor level; the reference
    level is pinned at 0 with zero variance."""
    coefs = (
        fit.coefficients if isinstance(fit, FittedGLM) else fit.fixed_coefficients
    )
    cov = fit.covariance if isinstance(fit, FittedGLM) else fit.fixed_covariance
    name = f"level:{label}"
    if name in fit.coef_names:
        j = fit.coef_names.index(name)
        return float(coefs[j]), j
    if label == fit.factor.levels[fit.factor.reference_level]:
        return 0.0, None
    raise NonNestedModelError(f"fit has no coefficient for level {label!r}")


def model_ratio(
    fit: Union[FittedGLM, FittedGLMM], case_level, control_level, level: float = 0.95
) -> RatioEstimate:
    """exp of the coefficient difference with a Wald interval on the log scale."""
    if not fit.converged:
        raise ConvergenceError("cannot form Wald interval from a non-converged fit")
    factor = fit.factor
    case_label = factor.levels[factor.index(case_level)]
    ctrl_label = factor.levels[factor.index(control_level)]
    c_case, j_case = _level_coef_var(fit, case_label)
    c_ctrl, j_ctrl = _level_coef_var(fit, ctrl_label)
    cov = fit.covariance if isinstance(fit, FittedGLM) else fit.fixed_covariance
    var = 0.0
    if j_case is not None:
        var += cov[j_case, j_case]
    if j_ctrl is not None:
        var += cov[j_ctrl, j_ctrl]
    if j_case is not None and j_ctrl is not None:
        var -= 2.0 * cov[j_case, j_ctrl]
    if j_case == j_ctrl:
        var = 0.0
    diff = c_case - c_ctrl
    se = float(np.sqrt(max(var, 0.0)))
    z = float(norm.ppf(0.5 + level / 2.0))
    return RatioEstimate(
        ratio=float(np.exp(diff)),
        ci_low=float(np.exp(diff - z * se)),
        ci_high=float(np.exp(diff + z * se)),
        level=level,
        method="wald-log-scale",
    )


def chi_square_sf(statistic: float, df: int) -> float:
    """Upper-tail chi-square probability (regularized incomplete gamma)."""
    if df == 0:
        return 1.0 if statistic <= 0.0 else 0.0
    return float(chi2.sf(statistic, df))


def _spec_terms(spec: ModelSpec):
    terms = set(spec.covariates)
    if spec.use_factor:
        terms.add("__factor__")
    if spec.include_intercept:
        terms.add("__intercept__")
    return terms


def lrt(full, reduced) -> TestResult:
    """Likelihood ratio test of nested fits from the same corpus and family."""
    same_family = type(full) is type(reduced)
    if not same_family:
        raise NonNestedModelError(
            "LRT requires two fits of the same family (GLM vs GLM, GLMM vs GLMM)"
        )
    if isinstance(full, FittedGLMM):
        if full.quadrature_nodes != reduced.quadrature_nodes:
            raise NonNestedModelError("LRT requires the same quadrature settings")
        spec_full, spec_red = full.spec.base, reduced.spec.base
        ll_full, ll_red = (
            full.log_marginal_likelihood,
            reduced.log_marginal_likelihood,
        )
    else:
        spec_full, spec_red = full.spec, reduced.spec
        ll_full, ll_red = full.log_likelihood, reduced.log_likelihood
    if full.data_snapshot != reduced.data_snapshot:
        raise NonNestedModelError("LRT requires fits on the same corpus")
    if not _spec_terms(spec_red) <= _spec_terms(spec_full):
        raise NonNestedModelError("reduced model terms are not a subset of the full")
    df = full.n_fixed_params - reduced.n_fixed_params
    if df < 0:
        raise NonNestedModelError("reduced model has more parameters than the full")
    stat = 2.0 * (ll_full - ll_red)
    stat = 0.0 if stat < 0.0 else float(stat)
    return TestResult(statistic=stat, df=df, p_value=chi_square_sf(stat, df))
