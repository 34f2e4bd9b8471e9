"""Wall-clock benchmarks of the two CWT paths."""

import time

import numpy as np

from .timefreq import cwt_fft, cwt_naive, make_scale_grid, wavelet_spectra

__all__ = ["time_cwt", "time_cwts", "run_benchmark", "IMPLS"]

IMPLS = {"naive": cwt_naive, "fft": cwt_fft}


def _grid(scales, sample_rate):
    return make_scale_grid(200.0, min(4000.0, sample_rate / 2), scales, sample_rate)


def time_cwts(cases, scales=64, repeats=5, sample_rate=8000.0, seed=0, grid=None,
              min_repeat=0.2):
    """Median wall time (seconds, monotonic clock) of one CWT per ``(impl, n)`` case.

    Each case gets an untimed run that warms the wavelet spectrum cache and a
    second that sizes its loop: like ``timeit``, every measurement runs
    enough back-to-back calls to last about ``min_repeat`` seconds and
    reports the time per call.  The ``repeats`` rounds visit the cases in
    turn, so drifting machine load affects all of them alike, which keeps
    their ratios meaningful.  Keep to at most two fft padded lengths per
    call, or the spectrum cache will be rebuilt inside the timed loops.
    """
    grid = grid or _grid(scales, sample_rate)
    prepared = []
    for impl, n in cases:
        fn = IMPLS[impl]
        x = np.random.default_rng(seed).standard_normal(n)
        fn(x, grid)
        t0 = time.perf_counter()
        fn(x, grid)
        loops = max(1, int(np.ceil(min_repeat / max(time.perf_counter() - t0, 1e-9))))
        prepared.append((fn, x, loops))
    times = [[] for _ in prepared]
    for _ in range(repeats):
        for (fn, x, loops), out in zip(prepared, times):
            t0 = time.perf_counter()
            for _ in range(loops):
                fn(x, grid)
            out.append((time.perf_counter() - t0) / loops)
    return [float(np.median(t)) for t in times]


def time_cwt(impl, n, scales=64, repeats=5, sample_rate=8000.0, seed=0, grid=None,
             min_repeat=0.2):
    """Median wall time of one CWT of ``n`` samples (see :func:`time_cwts`)."""
    return time_cwts([(impl, n)], scales, repeats, sample_rate, seed, grid, min_repeat)[0]


def run_benchmark(impls, sizes, scales=64, repeats=5, sample_rate=8000.0):
    """Rows of ``(impl, n, scales, seconds)``, one size at a time."""
    rows = []
    grid = _grid(scales, sample_rate)
    for impl in impls:
        if impl not in IMPLS:
            raise ValueError(f"unknown implementation {impl!r}")
        for n in sizes:
            rows.append((impl, int(n), scales, time_cwt(impl, n, scales, repeats, sample_rate, grid=grid)))
    wavelet_spectra.clear()
    return rows
