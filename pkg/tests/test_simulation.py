import dataclasses
import math

import numpy as np
import pytest

from werfair.simulation import (
    ConfoundingConfig,
    SpeakerEffectConfig,
    gen_confounding,
    gen_speaker_effect,
    run_experiment,
)


def test_confounding_marginal_rate_matches_closed_form():
    # E[errors per word] = exp(mu) * (1-p + p*exp(theta)); checked to 3 SE
    cfg = ConfoundingConfig(n_per_group=4000, p_case=0.9, p_control=0.1)
    corpus = gen_confounding(cfg, 123)
    for label, p in (("case", 0.9), ("control", 0.1)):
        idx = corpus.factor.index(label)
        mask = corpus.levels == idx
        rate = corpus.errors[mask].sum() / corpus.words[mask].sum()
        expected = math.exp(cfg.base_mu) * (1 - p + p * math.exp(cfg.theta))
        mean_lam = cfg.words_per_utt * expected
        se = math.sqrt(mean_lam * (1 + 0.0)) / math.sqrt(cfg.n_per_group)
        se_rate = se / cfg.words_per_utt
        assert abs(rate - expected) <= 3 * se_rate


def test_confounder_covariate_frequency():
    cfg = ConfoundingConfig(n_per_group=4000, p_case=0.7, p_control=0.2)
    corpus = gen_confounding(cfg, 5)
    for label, p in (("case", 0.7), ("control", 0.2)):
        idx = corpus.factor.index(label)
        z = corpus.cov[corpus.levels == idx, 0]
        se = math.sqrt(p * (1 - p) / cfg.n_per_group)
        assert abs(z.mean() - p) <= 4 * se


def test_speaker_effect_structure():
    cfg = SpeakerEffectConfig(n_speakers_per_group=20, n_per_group=200, sigma=0.3)
    corpus, truth = gen_speaker_effect(cfg, 9)
    assert len(corpus) == 400
    assert len(truth) == 40
    per_spk = {}
    for u in corpus.utterances:
        per_spk[u.speaker] = per_spk.get(u.speaker, 0) + 1
        assert u.ref_words == cfg.words_per_utt
    assert set(per_spk.values()) == {10}
    assert set(per_spk) == set(truth)


def test_speaker_effect_marginal_mean():
    # marginal E[errors per word] = exp(mu + sigma^2/2)
    cfg = SpeakerEffectConfig(n_speakers_per_group=200, n_per_group=5000, sigma=0.4)
    corpus, truth = gen_speaker_effect(cfg, 31)
    rate = corpus.errors.sum() / corpus.words.sum()
    expected = math.exp(cfg.base_mu + cfg.sigma**2 / 2)
    # dominant variance term comes from the 400 speaker draws
    var_spk = math.exp(2 * cfg.base_mu) * (
        math.exp(2 * cfg.sigma**2) - math.exp(cfg.sigma**2)
    )
    se = math.sqrt(var_spk / 400)
    assert abs(rate - expected) <= 4 * se
    effects = np.array(list(truth.values()))
    assert abs(effects.std() - cfg.sigma) <= 4 * cfg.sigma / math.sqrt(2 * 400)


def test_generators_seed_deterministic():
    cfg = ConfoundingConfig(n_per_group=50)
    a = gen_confounding(cfg, 7)
    b = gen_confounding(cfg, 7)
    c = gen_confounding(cfg, 8)
    assert a.utterances == b.utterances
    assert a.utterances != c.utterances
    scfg = SpeakerEffectConfig(n_speakers_per_group=5, n_per_group=50)
    (ca, ta) = gen_speaker_effect(scfg, 7)
    (cb, tb) = gen_speaker_effect(scfg, 7)
    assert ca.utterances == cb.utterances and ta == tb


def test_config_validation():
    with pytest.raises(ValueError):
        ConfoundingConfig(p_case=1.5)
    with pytest.raises(ValueError):
        ConfoundingConfig(n_per_group=0)
    with pytest.raises(ValueError):
        SpeakerEffectConfig(sigma=-0.1)
    with pytest.raises(ValueError):
        SpeakerEffectConfig(n_speakers_per_group=7, n_per_group=100)


def test_run_experiment_single_replication():
    cfg = ConfoundingConfig(n_per_group=200)
    report = run_experiment(cfg, methods=("baseline", "glm"), replications=1,
                            seed=4, bootstrap_replicates=100)
    assert report.replications == 1
    assert report.experiment == "confounding"
    assert report.model_method == "glm"
    assert 0.0 <= report.fp_rate_baseline <= 1.0
    assert 0.0 <= report.fp_rate_model <= 1.0
    assert report.mean_ratio_baseline > 0
    assert len(report.per_replication) == 1
    assert report.failures == {"baseline": 0, "glm": 0}


def test_run_experiment_rejects_two_model_methods():
    with pytest.raises(ValueError):
        run_experiment(ConfoundingConfig(n_per_group=10), methods=("glm", "glmm"))
    with pytest.raises(ValueError):
        run_experiment(ConfoundingConfig(n_per_group=10), replications=0)


def test_run_experiment_thread_count_invariant():
    cfg = ConfoundingConfig(n_per_group=120)
    kwargs = dict(methods=("baseline", "glm"), replications=6, seed=11,
                  bootstrap_replicates=100)
    r1 = run_experiment(cfg, threads=1, **kwargs)
    r4 = run_experiment(cfg, threads=4, **kwargs)
    assert r1.to_dict() == r4.to_dict()


def test_report_round_trips_to_dict():
    cfg = SpeakerEffectConfig(n_speakers_per_group=5, n_per_group=50)
    report = run_experiment(cfg, methods=("glmm",), replications=2, seed=3)
    d = report.to_dict()
    assert d["experiment"] == "speaker"
    assert d["config"] == dataclasses.asdict(cfg)
    assert d["mean_ratio_baseline"] is None
    assert len(d["per_replication"]) == 2
    for rec in d["per_replication"]:
        assert set(rec) == {"glmm"}
        assert rec["glmm"] is None or set(rec["glmm"]) == {
            "ratio", "ci_low", "ci_high", "significant"
        }
