import numpy as np
import pytest
from scipy.signal import resample

import reelprint
from reelprint import identify as ident_mod
from reelprint import timefreq
from reelprint.errors import ConfigMismatch, EmptySignal, InvalidRange, TooFewCandidates
from reelprint.identify import IdentifyConfig, build_cache, decisiveness, identify, prepare_recording
from reelprint.signals import Signal
from reelprint.tunebase import TuneBase, parse_tunebase, render_setting

CFG = IdentifyConfig(n_scales=6, timbre="sine")


@pytest.fixture(scope="module")
def small_base(tunebase):
    return TuneBase(tunebase.records[:3])


@pytest.fixture(scope="module")
def small_cache(small_base):
    return build_cache(small_base, CFG)[0]


def test_config_nyquist():
    with pytest.raises(InvalidRange):
        IdentifyConfig(f_max=5000.0)
    assert IdentifyConfig().length == 153600


def test_prepare_conforming_input_only_normalized():
    x = np.random.default_rng(0).normal(size=153600) * 0.3
    out = prepare_recording(Signal(x, 8000.0))
    assert np.allclose(out.samples, x / np.max(np.abs(x)))


def test_prepare_stereo_resample_and_trim():
    sr = 44100.0
    t = np.arange(int(25 * sr)) / sr
    tone = np.sin(2 * np.pi * 440.0 * t)
    out = prepare_recording(Signal(np.stack([tone, 0.5 * tone], axis=1), sr))
    assert out.sample_rate == 8000.0 and out.samples.size == 153600
    mag = np.abs(np.fft.rfft(out.samples))
    assert abs(np.argmax(mag) * 8000.0 / 153600 - 440.0) <= 8000.0 / 153600


def test_prepare_pads_short_input():
    out = prepare_recording(Signal(np.ones(1000), 8000.0))
    assert out.samples.size == 153600 and not out.samples[1000:].any()
    with pytest.raises(EmptySignal):
        prepare_recording(Signal(np.zeros(0), 8000.0))


def test_decisiveness():
    assert decisiveness([8, 3, 2]) == pytest.approx(5 / 6)
    assert decisiveness([4, 4, 4]) == 0.0
    with pytest.raises(TooFewCandidates):
        decisiveness([1.0])


def test_self_identification(small_base, small_cache):
    target = small_base.records[1]
    rec = render_setting(target, CFG.fingerprint_config())
    ranked = identify(rec, small_base, small_cache, CFG, keep_top=1)
    assert ranked.top.tune_id == target.tune_id
    assert ranked.scores == sorted(ranked.scores, reverse=True)
    assert ranked.matches[-1].calibrated == 0.0
    assert set(ranked.results) == {target.tune_id}
    res = ranked.results[target.tune_id]
    assert np.allclose(res.coherence, 1.0)


def test_streaming_matches_cache(small_base, small_cache):
    rec = render_setting(small_base.records[0], CFG.fingerprint_config())
    a = identify(rec, small_base, small_cache, CFG)
    b = identify(rec, small_base, None, CFG)
    assert a.names == b.names
    assert np.allclose(a.scores, b.scores, rtol=1e-12)


def test_uncalibrated_and_coi(small_base, small_cache):
    rec = render_setting(small_base.records[0], CFG.fingerprint_config())
    plain = identify(rec, small_base, small_cache, CFG.with_(calibrate=False))
    assert all(m.calibrated is None for m in plain)
    cone_cfg = CFG.with_(restrict_to_coi=True)
    cone = identify(rec, small_base, build_cache(small_base, cone_cfg)[0], cone_cfg)
    assert cone.top.score < plain.top.score


def test_cache_config_mismatch(small_base, small_cache):
    with pytest.raises(ConfigMismatch):
        identify(np.zeros(153600), small_base, small_cache, CFG.with_(f_max=1000.0))


def test_recording_transformed_once(small_base, small_cache, monkeypatch):
    calls = []
    real = timefreq.cwt_fft

    def counting(x, grid, workers=1):
        calls.append(1)
        return real(x, grid, workers)

    monkeypatch.setattr(timefreq, "cwt_fft", counting)
    identify(np.random.default_rng(1).normal(size=153600), small_base, small_cache, CFG)
    assert len(calls) == 1


def test_empty_base_gives_empty_ranking():
    ranked = identify(np.ones(100), parse_tunebase([]), None, CFG)
    assert len(ranked) == 0 and ranked.top is None


def test_resample_oracle_is_frequency_domain():
    # prepare_recording resamples the way scipy's FFT resampler does
    x = np.random.default_rng(2).normal(size=16000)
    out = prepare_recording(Signal(x, 16000.0), CFG)
    ref = resample(x, 8000)
    ref = np.concatenate([ref, np.zeros(153600 - 8000)])
    assert np.allclose(out.samples, ref / np.max(np.abs(ref)))


def test_module_exports():
    # the package attribute is the submodule, not the function of the same name
    assert ident_mod is reelprint.identify and callable(ident_mod.identify)
