"""Small corpus builders shared by the test modules."""

import numpy as np

from werfair import Corpus, GroupFactor, Utterance


def counts_corpus(errors, words, levels, speakers=None, cov=None, cov_names=(),
                  level_labels=("g0", "g1"), reference=0):
    n = len(errors)
    if speakers is None:
        speakers = [f"spk{levels[i]}_{i}" for i in range(n)]
    factor = GroupFactor("group", tuple(level_labels), reference)
    utts = []
    for i in range(n):
        covariates = tuple(cov[i]) if cov is not None else ()
        utts.append(
            Utterance(f"u{i:05d}", speakers[i], int(levels[i]), int(errors[i]),
                      int(words[i]), covariates)
        )
    return Corpus(factor, utts, covariate_names=tuple(cov_names))


def random_counts_corpus(rng, n=60, n_levels=2, max_words=20, rate=0.2,
                         n_cov=0, clustered=False, cluster_size=5):
    words = rng.integers(1, max_words + 1, size=n)
    levels = rng.integers(0, n_levels, size=n)
    cov = rng.normal(size=(n, n_cov)) if n_cov else None
    eta = np.log(rate) + (cov @ rng.normal(scale=0.2, size=n_cov) if n_cov else 0.0)
    errors = rng.poisson(words * np.exp(eta + 0.1 * levels))
    # ensure at least one utterance per level
    levels[:n_levels] = np.arange(n_levels)
    if clustered:
        speakers = [f"s{levels[i]}_{i // cluster_size}" for i in range(n)]
        # speakers must not straddle levels
        levels = np.array([levels[(i // cluster_size) * cluster_size] for i in range(n)])
        levels[: n_levels * cluster_size] = np.repeat(np.arange(n_levels), cluster_size)
        speakers = [f"s{levels[i]}_{i // cluster_size}" for i in range(n)]
    else:
        speakers = None
    labels = tuple(f"g{i}" for i in range(n_levels))
    return counts_corpus(errors, words, levels, speakers=speakers,
                         cov=cov, cov_names=tuple(f"x{j}" for j in range(n_cov)),
                         level_labels=labels)
