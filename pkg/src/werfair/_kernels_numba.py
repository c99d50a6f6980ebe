"""Numba @njit kernel implementations (default backend).

Loop-structured twins of _kernels_numpy; same tolerances and tie-breaking.
"""

import numpy as np
from numba import njit

_SQRT2 = 1.4142135623730951
_LOG_SQRT_2PI = 0.9189385332046727


@njit(cache=True, nogil=True)
def levenshtein_counts(ref, hyp):
    n = ref.shape[0]
    m = hyp.shape[0]
    cost = np.empty((n + 1, m + 1), dtype=np.int64)
    for i in range(n + 1):
        cost[i, 0] = i
    for j in range(m + 1):
        cost[0, j] = j
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
    i = n
    j = m
    ins = 0
    dels = 0
    subs = 0
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


@njit(cache=True, nogil=True)
def agq_speaker_stats(a, b, d, sigma, gh_t, gh_logw):
    n_spk = a.shape[0]
    n_nodes = gh_t.shape[0]
    loglik = np.empty(n_spk)
    mode = np.empty(n_spk)
    mean_er = np.empty(n_spk)
    mean_r2 = np.empty(n_spk)
    inv_s2 = 1.0 / (sigma * sigma)
    log_sigma = np.log(sigma)
    half_log2 = 0.5 * np.log(2.0)
    rk = np.empty(n_nodes)
    gk = np.empty(n_nodes)
    for i in range(n_spk):
        bi = b[i]
        di = d[i]
        r = 0.0
        for _ in range(100):
            er = np.exp(r)
            g = bi - di * er - r * inv_s2
            h = -di * er - inv_s2
            delta = -g / h
            if delta > 5.0:
                delta = 5.0
            elif delta < -5.0:
                delta = -5.0
            r += delta
            if abs(delta) <= 1e-14 * (1.0 + abs(r)):
                break
        m = r
        s = 1.0 / np.sqrt(di * np.exp(m) + inv_s2)
        top = -1.0e308
        for k in range(n_nodes):
            rr = m + _SQRT2 * s * gh_t[k]
            rk[k] = rr
            val = bi * rr - di * np.exp(rr) - 0.5 * inv_s2 * rr * rr + gh_logw[k]
            gk[k] = val
            if val > top:
                top = val
        tot = 0.0
        tot_er = 0.0
        tot_r2 = 0.0
        for k in range(n_nodes):
            e = np.exp(gk[k] - top)
            tot += e
            tot_er += e * np.exp(rk[k])
            tot_r2 += e * rk[k] * rk[k]
        loglik[i] = (
            a[i] - log_sigma - _LOG_SQRT_2PI + half_log2 + np.log(s) + top + np.log(tot)
        )
        mode[i] = m
        mean_er[i] = tot_er / tot
        mean_r2[i] = tot_r2 / tot
    return loglik, mode, mean_er, mean_r2
