"""Compare the numba and numpy kernel backends on the two hot paths.

Run with:  python3 benchmarks/bench_backends.py

Times the word-level alignment kernel and the per-speaker adaptive
quadrature kernel through both implementations, after a warm-up pass so
JIT compilation is excluded from the numba numbers.
"""

import time

import numpy as np

from werfair import _kernels_numpy
from werfair.glmm import gauss_hermite

try:
    from werfair import _kernels_numba
except ImportError:
    _kernels_numba = None


def make_alignment_workload(rng, n_pairs=2000, max_len=30, alphabet=50):
    pairs = []
    for _ in range(n_pairs):
        ref = rng.integers(0, alphabet, size=rng.integers(1, max_len + 1))
        hyp = ref.copy()
        for i in range(len(hyp)):
            if rng.random() < 0.15:
                hyp[i] = rng.integers(0, alphabet)
        pairs.append((ref.astype(np.int64), hyp.astype(np.int64)))
    return pairs


def make_agq_workload(rng, n_calls=200, n_speakers=1000):
    calls = []
    for _ in range(n_calls):
        b = rng.poisson(8.0, size=n_speakers).astype(np.float64)
        d = rng.uniform(0.5, 40.0, size=n_speakers)
        a = rng.normal(size=n_speakers)
        calls.append((a, b, d))
    return calls


def bench(label, fn, repeats=3):
    best = min(timeit(fn) for _ in range(repeats))
    print(f"  {label:<28} {best * 1e3:9.1f} ms")
    return best


def timeit(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def run_alignment(kernels, pairs):
    for ref, hyp in pairs:
        kernels.levenshtein_counts(ref, hyp)


def run_agq(kernels, calls, gh_t, gh_logw):
    for a, b, d in calls:
        kernels.agq_speaker_stats(a, b, d, 0.4, gh_t, gh_logw)


def main():
    rng = np.random.default_rng(0)
    pairs = make_alignment_workload(rng)
    calls = make_agq_workload(rng)
    gh_t, gh_logw = gauss_hermite(15)

    backends = [("numpy", _kernels_numpy)]
    if _kernels_numba is not None:
        # warm up so the numba numbers exclude compilation
        run_alignment(_kernels_numba, pairs[:2])
        run_agq(_kernels_numba, calls[:2], gh_t, gh_logw)
        backends.append(("numba", _kernels_numba))
    else:
        print("numba not importable; timing the numpy backend only")

    results = {}
    print(f"alignment: {len(pairs)} sentence pairs")
    for name, kernels in backends:
        results[("align", name)] = bench(name, lambda k=kernels: run_alignment(k, pairs))
    print(f"adaptive quadrature: {len(calls)} calls x {len(calls[0][0])} speakers, 15 nodes")
    for name, kernels in backends:
        results[("agq", name)] = bench(
            name, lambda k=kernels: run_agq(k, calls, gh_t, gh_logw)
        )

    if _kernels_numba is not None:
        for task in ("align", "agq"):
            speedup = results[(task, "numpy")] / results[(task, "numba")]
            print(f"{task}: numba is {speedup:.1f}x faster than numpy")


if __name__ == "__main__":
    main()
