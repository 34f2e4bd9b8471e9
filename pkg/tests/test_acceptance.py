"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (repeated in the terminal summary) and
then asserts, so a failing criterion also fails the run.
"""

import gc
import time

import numpy as np
import pytest

from reelprint.abc_parser import encode_semitones, normalize_to_grid, parse_abc
from reelprint.bench import time_cwts
from reelprint.coherence import calibrate, coherence_matrix, smoothed_power, xwt
from reelprint.fourier import fft, ifft
from reelprint.identify import IdentifyConfig, build_cache, decisiveness, identify
from reelprint.signals import Signal
from reelprint.synthesis import control_signal, render_tune, semitone_to_freq
from reelprint.timefreq import (
    TRUNCATION_RADIUS,
    cwt_fft,
    cwt_naive,
    make_scale_grid,
    morlet,
)
from reelprint.tunebase import TuneBase, setting_semitones

SR = 8000.0
DESK_TUNES = 10
DESK_SCALES = 64
SNR_DB = 20.0
# Relative spread (max - min) / mean of the uncalibrated band-noise control
# scores against the desk base.  Measured at 0.0721 (seed 0; 0.0716-0.0730
# over seeds 0-3) and pinned with headroom as a regression bound.
NOISE_SPREAD_BOUND = 0.08


def elapsed(t0):
    return time.perf_counter() - t0


# 1. pitch formula

def test_criterion_1_pitch_formula(verdict):
    t0 = time.perf_counter()
    err = abs(semitone_to_freq(9) - 440.0)
    octave = max(
        abs(semitone_to_freq(n + 12) - 2 * semitone_to_freq(n)) / semitone_to_freq(n)
        for n in range(-24, 37)
    )
    ok = err < 1e-6 and octave < 1e-12
    verdict(1, ok, f"|f(9) - 440| = {err:.2e}, worst octave rel error {octave:.1e}, "
                   f"{elapsed(t0):.3f} s")
    assert ok


# 2. pipeline dimensions

def test_criterion_2_pipeline_dimensions(verdict, galway_abc):
    t0 = time.perf_counter()
    score = parse_abc(galway_abc)
    grid = normalize_to_grid(score)
    seq = encode_semitones(grid, score.key)
    sig = render_tune(seq, "piano", 100.0, SR, seed=0)
    runtime = elapsed(t0)
    bar = grid.letters()[:8]
    ok = (
        len(grid) == 128
        and sig.samples.size == 153600
        and abs(sig.duration - 19.2) < 1e-12
        and bar == ["G", "G", "d", "G", "e", "G", "d", "G"]
        and runtime < 1.0
    )
    verdict(2, ok, f"{len(grid)} slots, {sig.samples.size} samples, {sig.duration:.2f} s, "
                   f"first bar {','.join(bar)}, {runtime:.2f} s")
    assert ok


# 3. transform equivalence

def direct_cwt(x, scales, f0):
    n = len(x)
    t = np.arange(n)
    out = np.empty((len(scales), n), complex)
    for i, a in enumerate(scales):
        for b in range(n):
            out[i, b] = np.sum(x * np.conj(morlet((t - b) / a, f0))) / np.sqrt(a)
    return out


def rel_frobenius(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_criterion_3_transform_equivalence(verdict):
    t0 = time.perf_counter()
    g = np.random.default_rng(2024)
    x = g.normal(size=1024)
    grid = make_scale_grid(200.0, 1200.0, 32, SR)
    # interior: columns farther than the widest wavelet support from either end
    r = int(np.ceil(TRUNCATION_RADIUS * grid.scales.max()))
    d_paths = rel_frobenius(cwt_fft(x, grid).coefficients[:, r:-r],
                            cwt_naive(x, grid).coefficients[:, r:-r])

    y = g.normal(size=256)
    small = make_scale_grid(1000.0, 4000.0, 3, SR)
    ref = direct_cwt(y, small.scales, small.f0)
    rs = int(np.ceil(TRUNCATION_RADIUS * small.scales.max()))
    d_naive = rel_frobenius(cwt_naive(y, small).coefficients, ref)
    d_fft = rel_frobenius(cwt_fft(y, small).coefficients[:, rs:-rs], ref[:, rs:-rs])
    runtime = elapsed(t0)
    ok = max(d_paths, d_naive, d_fft) < 1e-6 and runtime < 30
    verdict(3, ok, f"fft vs naive {d_paths:.1e} (columns {r}..{1023 - r}); oracle: naive "
                   f"{d_naive:.1e}, fft {d_fft:.1e}; {runtime:.1f} s")
    assert ok


# 4. FFT correctness

def test_criterion_4_fft(verdict):
    t0 = time.perf_counter()
    g = np.random.default_rng(4)
    trip = par = 0.0
    for n in list(range(1, 65)) + [100, 255, 256, 1000, 1023, 1024, 4095, 4096]:
        x = g.normal(size=n)
        spec = fft(x)
        trip = max(trip, np.max(np.abs(ifft(spec)[:n] - x)))
        energy = np.sum(x * x)
        par = max(par, abs(energy - np.sum(np.abs(spec.coefficients) ** 2) / len(spec)) / energy)

    t = np.arange(1000) / 1000.0
    tones = (24.0, 40.0, 60.0, 80.0)
    x = sum(np.sin(2 * np.pi * f * t) for f in tones)
    spec = fft(Signal(x, 1000.0))
    mag = spec.magnitudes()
    local = np.nonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] > mag[2:]))[0] + 1
    top = sorted(int(k) for k in local[np.argsort(mag[local])[::-1][:4]])
    expected = [int(round(f / spec.bin_hz)) for f in tones]
    runtime = elapsed(t0)
    ok = trip < 1e-9 and par < 1e-9 and top == expected and runtime < 1.0
    verdict(4, ok, f"round trip {trip:.1e}, Parseval {par:.1e}, peaks at bins {top} "
                   f"(nearest to 24/40/60/80 Hz: {expected}), {runtime:.2f} s")
    assert ok


# 5. self-coherence

def test_criterion_5_self_coherence(verdict, galway_abc):
    t0 = time.perf_counter()
    grid = make_scale_grid(200.0, 1200.0, DESK_SCALES, SR)
    tune = render_tune(encode_semitones(normalize_to_grid(parse_abc(galway_abc)),
                                        parse_abc(galway_abc).key), "piano").samples[:16384]
    noise = control_signal("white_noise", 16384 / SR, SR, (200.0, 3000.0), seed=5).samples
    worst = []
    for x in (tune, noise):
        w = cwt_fft(x, grid)
        p = smoothed_power(w)
        c = coherence_matrix(w, w, power_x=p, power_y=p)
        valid = p * p > 1e-12
        worst.append(float(np.max(np.abs(c[valid] - 1.0))))
    runtime = elapsed(t0)
    ok = max(worst) < 1e-6 and runtime < 60
    verdict(5, ok, f"max |C - 1|: tune {worst[0]:.1e}, band noise {worst[1]:.1e}; "
                   f"{runtime:.1f} s")
    assert ok


# 6. phase convention

def test_criterion_6_phase(verdict):
    t0 = time.perf_counter()
    sr = 1000.0
    t = np.arange(4096) / sr
    grid = make_scale_grid(5.0, 100.0, 64, sr)
    row = grid.nearest_row(25.0)
    ws = cwt_fft(np.sin(2 * np.pi * 25.0 * t), grid)
    wc = cwt_fft(np.cos(2 * np.pi * 25.0 * t), grid)
    inside = ws.coi_mask()[row]
    forward = float(np.median(np.angle(xwt(ws, wc))[row, inside]))
    swapped = float(np.median(np.angle(xwt(wc, ws))[row, inside]))
    runtime = elapsed(t0)
    ok = (abs(forward + np.pi / 2) <= 0.1 and abs(swapped - np.pi / 2) <= 0.1
          and runtime < 10)
    verdict(6, ok, f"median arg at {grid.frequencies[row]:.2f} Hz: sin vs cos {forward:+.4f}, "
                   f"cos vs sin {swapped:+.4f} rad; {runtime:.2f} s")
    assert ok


# 7, 8, 10. desk-scale identification

def noisy_piano(record, seed):
    """Piano render of a tune's first setting plus white noise at 20 dB SNR."""
    x = render_tune(setting_semitones(record), "piano", 100.0, SR, seed=seed).samples
    noise = np.random.default_rng(10_000 + seed).standard_normal(x.size)
    noise *= np.sqrt(np.mean(x * x) / np.mean(noise * noise) / 10 ** (SNR_DB / 10))
    return Signal(x + noise, SR)


class DeskRun:
    pass


@pytest.fixture(scope="module")
def desk(tunebase):
    """Both bands of the cross-timbre experiment, run once.

    The 4000 Hz band is run first and its cache dropped, so only one set of
    fingerprints is held at a time; the 1200 Hz cache is kept for the
    control and amplitude checks.
    """
    run = DeskRun()
    run.base = TuneBase(tunebase.records[:DESK_TUNES])
    run.recordings = [noisy_piano(rec, seed=i) for i, rec in enumerate(run.base)]
    run.cfg = IdentifyConfig(n_scales=DESK_SCALES, timbre="sine")
    run.ranked = {}
    run.seconds = {}
    for f_max in (4000.0, 1200.0):
        t0 = time.perf_counter()
        cfg = run.cfg.with_(f_max=f_max)
        cache, report = build_cache(run.base, cfg)
        assert not report.skipped
        run.ranked[f_max] = [identify(x, run.base, cache, cfg) for x in run.recordings]
        run.seconds[f_max] = elapsed(t0)
        if f_max == 1200.0:
            run.cache = cache
        del cache
        gc.collect()
    yield run
    del run.cache
    gc.collect()


def test_criterion_7_identification(verdict, desk):
    ids = [rec.tune_id for rec in desk.base]
    focused, wide = desk.ranked[1200.0], desk.ranked[4000.0]
    hits = sum(r.top.tune_id == i for r, i in zip(focused, ids))
    d_focused = [decisiveness(r) for r in focused]
    d_wide = [decisiveness(r) for r in wide]
    at_least = sum(a >= b for a, b in zip(d_focused, d_wide))
    runtime = sum(desk.seconds.values())
    ok = hits == DESK_TUNES and at_least >= 8 and runtime < 300
    verdict(7, ok, f"top-1 {hits}/{DESK_TUNES} at 1200 Hz "
                   f"({sum(r.top.tune_id == i for r, i in zip(wide, ids))}/{DESK_TUNES} at 4000 Hz); "
                   f"decisiveness 1200 >= 4000 on {at_least}/10 (need 8); "
                   f"median {np.median(d_focused):.3f} vs {np.median(d_wide):.3f}; {runtime:.0f} s")
    assert hits == DESK_TUNES
    assert at_least >= 8
    assert runtime < 300


def relative_spread(scores):
    s = np.asarray(scores, dtype=float)
    # all-zero scores (the blank control) have no spread
    return 0.0 if s.mean() == 0 else float((s.max() - s.min()) / s.mean())


def test_criterion_8_controls(verdict, desk):
    t0 = time.perf_counter()
    cfg = desk.cfg.with_(calibrate=False)
    blank = identify(control_signal("blank", 19.2, SR), desk.base, desk.cache, cfg)
    noise = identify(control_signal("white_noise", 19.2, SR, (200.0, 3000.0), seed=0),
                     desk.base, desk.cache, cfg)
    runtime = elapsed(t0)
    matched = []
    for rec, ranked in zip(desk.base, desk.ranked[1200.0]):
        matched.append(next(m.score for m in ranked if m.tune_id == rec.tune_id))
    worst_control = max(max(blank.scores), max(noise.scores))
    spreads = relative_spread(blank.scores), relative_spread(noise.scores)
    ok = (worst_control < min(matched) and max(spreads) < NOISE_SPREAD_BOUND
          and runtime < 120)
    verdict(8, ok, f"max control score {worst_control:.4g} < min matched {min(matched):.4g}; "
                   f"spread blank {spreads[0]:.4f}, noise {spreads[1]:.4f} "
                   f"(bound {NOISE_SPREAD_BOUND}); {runtime:.1f} s")
    assert ok


# 9. scaling behavior

def test_criterion_9_scaling(verdict):
    t0 = time.perf_counter()
    # each compared pair is timed in interleaved rounds, medians of 5
    n4096, n8192 = time_cwts([("naive", 4096), ("naive", 8192)], scales=64, repeats=5)
    f32k, f64k = time_cwts([("fft", 32768), ("fft", 65536)], scales=64, repeats=5)
    f4097, f8192 = time_cwts([("fft", 4097), ("fft", 8192)], scales=64, repeats=5)
    naive = n8192 / n4096
    fast = f64k / f32k
    step = abs(f4097 / f8192 - 1.0)
    runtime = elapsed(t0)
    ok = naive >= 3.0 and fast <= 2.8 and step <= 0.25 and runtime < 300
    verdict(9, ok, f"naive 8192/4096 = {naive:.2f} (>= 3.0), fft 65536/32768 = {fast:.2f} "
                   f"(<= 2.8), fft 4097 vs 8192 differ by {100 * step:.0f}% (<= 25%); "
                   f"{runtime:.0f} s")
    assert ok


# 10. ranking invariants

def test_criterion_10_ranking_invariants(verdict, desk):
    t0 = time.perf_counter()
    g = np.random.default_rng(10)
    kept = 0
    for _ in range(1000):
        scores = g.normal(size=int(g.integers(2, 50))) * 10 ** g.uniform(-3, 6)
        cal = np.asarray(calibrate(list(scores)))
        kept += np.array_equal(np.argsort(cal, kind="stable"), np.argsort(scores, kind="stable"))
    x = desk.recordings[0]
    rankings = [identify(Signal(c * x.samples, SR), desk.base, desk.cache, desk.cfg).names
                for c in (0.1, 1.0, 10.0)]
    same = rankings[0] == rankings[1] == rankings[2]
    runtime = elapsed(t0)
    ok = kept == 1000 and same and runtime < 60
    verdict(10, ok, f"calibrate kept order on {kept}/1000 vectors; ranking identical for "
                    f"c in (0.1, 1, 10): {same}; {runtime:.1f} s")
    assert ok
