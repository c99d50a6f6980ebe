"""Synthetic experiments: confounding factor and speaker effect.

Both generators draw from counter-based Philox streams; every replication
derives its streams from (master seed, replication index), so reports are
bit-identical regardless of worker count.
"""

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import glm, glmm, inference
from .dataset import Corpus, GroupFactor, Utterance
from .errors import WerfairError

CONTROL, CASE = "control", "case"
_FACTOR = GroupFactor("group", (CONTROL, CASE), reference_level=0)


@dataclass(frozen=True)
class ConfoundingConfig:
    n_per_group: int = 5000
    words_per_utt: int = 10
    base_mu: float = math.log(0.05)
    theta: float = 0.1
    p_case: float = 0.5
    p_control: float = 0.5

    def __post_init__(self):
        if self.n_per_group < 1:
            raise ValueError("n_per_group must be >= 1")
        for p in (self.p_case, self.p_control):
            if not 0.0 <= p <= 1.0:
                raise ValueError("confounding probabilities must be in [0, 1]")


@dataclass(frozen=True)
class SpeakerEffectConfig:
    n_speakers_per_group: int = 100
    n_per_group: int = 5000
    words_per_utt: int = 10
    base_mu: float = math.log(0.05)
    sigma: float = 0.4

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.n_per_group % self.n_speakers_per_group != 0:
            raise ValueError(
                "n_per_group must be divisible by n_speakers_per_group "
                "(each speaker has an equal number of utterances)"
            )


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def gen_confounding(config: ConfoundingConfig, seed) -> Corpus:
    """Independent utterances with a Bernoulli confounder recorded as a
    covariate; every utterance gets its own synthetic speaker."""
    rng = _rng(seed)
    utterances = []
    n = config.n_per_group
    width = len(str(2 * n))
    for label, p in ((CONTROL, config.p_control), (CASE, config.p_case)):
        z = (rng.random(n) < p).astype(np.float64)
        lam = config.words_per_utt * np.exp(config.base_mu + config.theta * z)
        errors = rng.poisson(lam)
        lvl = _FACTOR.index(label)
        for i in range(n):
            uid = f"{label}_{i:0{width}d}"
            utterances.append(
                Utterance(uid, uid, lvl, int(errors[i]), config.words_per_utt, (z[i],))
            )
    return Corpus(_FACTOR, utterances, covariate_names=("confounder",))


def gen_speaker_effect(config: SpeakerEffectConfig, seed):
    """Clustered utterances with one Gaussian log-rate intercept per speaker.

    Returns (corpus, true_effects) where true_effects maps speaker id to
    the simulated intercept, for parameter-recovery checks.
    """
    rng = _rng(seed)
    utterances = []
    true_effects = {}
    n_spk = config.n_speakers_per_group
    per_spk = config.n_per_group // n_spk
    width = len(str(2 * n_spk))
    for label in (CONTROL, CASE):
        r = rng.normal(0.0, config.sigma, n_spk)
        lam = config.words_per_utt * np.exp(config.base_mu + r)
        errors = rng.poisson(np.repeat(lam, per_spk))
        lvl = _FACTOR.index(label)
        for i in range(n_spk):
            spk = f"{label}_s{i:0{width}d}"
            true_effects[spk] = float(r[i])
            for j in range(per_spk):
                utterances.append(
                    Utterance(
                        f"{spk}_u{j:04d}",
                        spk,
                        lvl,
                        int(errors[i * per_spk + j]),
                        config.words_per_utt,
                    )
                )
    return Corpus(_FACTOR, utterances), true_effects


@dataclass(frozen=True)
class MethodResult:
    ratio: float
    ci_low: float
    ci_high: float
    significant: bool


@dataclass(frozen=True)
class SimReport:
    experiment: str
    config: dict
    methods: tuple[str, ...]
    replications: int
    seed: int
    mean_ratio_baseline: Optional[float]
    fp_rate_baseline: Optional[float]
    mean_ratio_model: Optional[float]
    fp_rate_model: Optional[float]
    model_method: Optional[str]
    failures: dict
    per_replication: tuple = field(repr=False, default=())

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["per_replication"] = [
            {m: dataclasses.asdict(r) if r is not None else None for m, r in rec.items()}
            for rec in self.per_replication
        ]
        return d


def _run_one(config, methods, seed, rep, bootstrap_replicates, nodes):
    gen_seed = np.random.SeedSequence(entropy=seed, spawn_key=(rep, 0))
    boot_seed = np.random.SeedSequence(entropy=seed, spawn_key=(rep, 1))
    if isinstance(config, ConfoundingConfig):
        corpus = gen_confounding(config, gen_seed)
        covariates = ("confounder",)
    else:
        corpus, _ = gen_speaker_effect(config, gen_seed)
        covariates = ()
    record = {}
    for method in methods:
        try:
            if method == "baseline":
                est = inference.baseline_ratio(
                    corpus, CASE, CONTROL, replicates=bootstrap_replicates, seed=boot_seed
                )
            elif method == "glm":
                fit = glm.fit_glm(corpus, glm.ModelSpec(covariates=covariates))
                est = inference.model_ratio(fit, CASE, CONTROL)
            elif method == "glmm":
                fit = glmm.fit_glmm(
                    corpus, glmm.MixedModelSpec(glm.ModelSpec(covariates=covariates)),
                    nodes=nodes,
                )
                est = inference.model_ratio(fit, CASE, CONTROL)
            else:
                raise ValueError(f"unknown method {method!r}")
            record[method] = MethodResult(
                est.ratio, est.ci_low, est.ci_high, est.significant
            )
        except WerfairError:
            record[method] = None
    return record


def run_experiment(
    config,
    methods: Sequence[str] = ("baseline",),
    replications: int = 1000,
    seed: int = 0,
    bootstrap_replicates: int = inference.DEFAULT_REPLICATES,
    nodes: int = glmm.DEFAULT_NODES,
    threads: int = 1,
) -> SimReport:
    """Repeat generate-and-test `replications` times and aggregate.

    Per-replication fit failures are recorded in the failure counts, not
    fatal.  At most one model-based method may be combined with the
    baseline per run.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    methods = tuple(methods)
    model_methods = [m for m in methods if m in ("glm", "glmm")]
    if len(model_methods) > 1:
        raise ValueError("choose at most one model-based method per run")
    model_method = model_methods[0] if model_methods else None

    def worker(rep):
        return _run_one(config, methods, seed, rep, bootstrap_replicates, nodes)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(worker, range(replications)))
    else:
        records = [worker(rep) for rep in range(replications)]

    failures = {m: sum(1 for rec in records if rec.get(m) is None) for m in methods}

    def aggregate(method):
        if method is None or method not in methods:
            return None, None
        ok = [rec[method] for rec in records if rec.get(method) is not None]
        if not ok:
            return None, None
        mean_ratio = float(np.mean([r.ratio for r in ok]))
        fp = float(np.mean([1.0 if r.significant else 0.0 for r in ok]))
        return mean_ratio, fp

    mean_b, fp_b = aggregate("baseline")
    mean_m, fp_m = aggregate(model_method)
    if isinstance(config, ConfoundingConfig):
        experiment = "confounding"
    else:
        experiment = "speaker"
    return SimReport(
        experiment=experiment,
        config=dataclasses.asdict(config),
        methods=methods,
        replications=replications,
        seed=seed,
        mean_ratio_baseline=mean_b,
        fp_rate_baseline=fp_b,
        mean_ratio_model=mean_m,
        fp_rate_model=fp_m,
        model_method=model_method,
        failures=failures,
        per_replication=tuple(records),
    )
