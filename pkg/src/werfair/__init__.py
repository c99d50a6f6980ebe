"""werfair: measuring fairness in ASR evaluation.

Word-error scoring, Poisson regression with offset, mixed-effects Poisson
regression with a per-speaker random intercept, bootstrap and model-based
inference on WER ratios, and the synthetic false-positive studies.
"""

__version__ = "0.1.0"

from .alignment import ErrorCounts, align, corpus_wer, tokenize
from .backend import backend_name
from .dataset import Corpus, GroupFactor, LoadOptions, Utterance, load_corpus, summarize
from .glm import FittedGLM, ModelSpec, dispersion, fit_glm, log_likelihood
from .glmm import (
    FittedGLMM,
    MixedModelSpec,
    conditional_modes,
    fit_glmm,
    speaker_marginal_loglik,
)
from .inference import RatioEstimate, TestResult, baseline_ratio, lrt, model_ratio
from .simulation import (
    ConfoundingConfig,
    SimReport,
    SpeakerEffectConfig,
    gen_confounding,
    gen_speaker_effect,
    run_experiment,
)

__all__ = [
    "__version__",
    "ErrorCounts",
    "align",
    "corpus_wer",
    "tokenize",
    "backend_name",
    "Corpus",
    "GroupFactor",
    "LoadOptions",
    "Utterance",
    "load_corpus",
    "summarize",
    "FittedGLM",
    "ModelSpec",
    "dispersion",
    "fit_glm",
    "log_likelihood",
    "FittedGLMM",
    "MixedModelSpec",
    "conditional_modes",
    "fit_glmm",
    "speaker_marginal_loglik",
    "RatioEstimate",
    "TestResult",
    "baseline_ratio",
    "lrt",
    "model_ratio",
    "ConfoundingConfig",
    "SimReport",
    "SpeakerEffectConfig",
    "gen_confounding",
    "gen_speaker_effect",
    "run_experiment",
]
