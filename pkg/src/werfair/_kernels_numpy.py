"""Pure-numpy kernel implementations (fallback backend).

Semantics must match _kernels_numba; the equivalence is covered by tests
and the benchmark in benchmarks/bench_backends.py.
"""

import numpy as np

_SQRT2 = 1.4142135623730951
_LOG_SQRT_2PI = 0.9189385332046727
_HALF_LOG2 = 0.5 * np.log(2.0)


def levenshtein_counts(ref, hyp):
    """Minimum-edit alignment counts for integer-coded token sequences.

    Unit costs; traceback prefers match/substitution, then insertion,
    then deletion among equal-cost moves.  Returns (ins, dels, subs).
    """
    n = ref.shape[0]
    m = hyp.shape[0]
    cost = np.empty((n + 1, m + 1), dtype=np.int64)
    cost[:, 0] = np.arange(n + 1)
    cost[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        ri = ref[i - 1]
        for j in range(1, m + 1):
            c = cost[i - 1, j - 1] + (0 if ri == hyp[j - 1] else 1)
            ins = cost[i, j - 1] + 1
            if ins < c:
                c = ins
            dele = cost[i - 1, j] + 1
            if dele < c:
                c = dele
            cost[i, j] = c
    i, j = n, m
    ins = dels = subs = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            match = ref[i - 1] == hyp[j - 1]
            if cost[i, j] == cost[i - 1, j - 1] + (0 if match else 1):
                if not match:
                    subs += 1
                i -= 1
                j -= 1
                continue
        if j > 0 and cost[i, j] == cost[i, j - 1] + 1:
            ins += 1
            j -= 1
            continue
        dels += 1
        i -= 1
    return ins, dels, subs


def agq_speaker_stats(a, b, d, sigma, gh_t, gh_logw):
    """Adaptive Gauss-Hermite statistics for every speaker block at once.

    Within one block the random intercept r enters the joint log-density as
    a + b*r - d*exp(r) - r^2/(2 sigma^2) up to the prior normalizer, where
    a, b, d are per-speaker sufficient statistics (see glmm module).

    Returns (loglik, mode, post_mean_exp_r, post_mean_r_sq), each length-I.
    """
    inv_s2 = 1.0 / (sigma * sigma)
    r = np.zeros_like(b)
    for _ in range(100):
        er = np.exp(r)
        g = b - d * er - r * inv_s2
        h = -d * er - inv_s2
        delta = np.clip(-g / h, -5.0, 5.0)
        r = r + delta
        if np.all(np.abs(delta) <= 1e-14 * (1.0 + np.abs(r))):
            break
    mode = r
    s = 1.0 / np.sqrt(d * np.exp(mode) + inv_s2)
    rk = mode[:, None] + _SQRT2 * s[:, None] * gh_t[None, :]
    gk = (
        b[:, None] * rk
        - d[:, None] * np.exp(rk)
        - 0.5 * inv_s2 * rk * rk
        + gh_logw[None, :]
    )
    top = gk.max(axis=1)
    e = np.exp(gk - top[:, None])
    tot = e.sum(axis=1)
    loglik = (
        a - np.log(sigma) - _LOG_SQRT_2PI + _HALF_LOG2 + np.log(s) + top + np.log(tot)
    )
    p = e / tot[:, None]
    mean_er = (p * np.exp(rk)).sum(axis=1)
    mean_r2 = (p * rk * rk).sum(axis=1)
    return loglik, mode, mean_er, mean_r2
