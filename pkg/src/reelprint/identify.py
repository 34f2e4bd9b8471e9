"""Identify a recorded reel by coherence against synthetic fingerprints.

The recording is conformed to the fingerprint format (mono, 8000 Hz, 128
slots at 100 BPM = 153600 samples, peak 1), transformed once, and scored
against every fingerprint by gross coherence: the sum of the coherence
matrix.  Higher is a better match.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import resample

from . import timefreq
from .abc_parser import SLOTS
from .coherence import (
    CoherenceResult,
    SmoothingConfig,
    calibrate,
    coherence_matrix,
    coherence_sum,
    smoothed_power,
)
from .errors import ConfigMismatch, EmptySignal, InvalidRange, ReelprintError, TooFewCandidates
from .signals import Signal
from .synthesis import slot_samples
from .tunebase import FingerprintCache, FingerprintConfig, build_fingerprints, render_setting

__all__ = [
    "IdentifyConfig",
    "Match",
    "RankedMatches",
    "prepare_recording",
    "identify",
    "decisiveness",
    "build_cache",
]


@dataclass(frozen=True)
class IdentifyConfig:
    f_min: float = 200.0
    f_max: float = 1200.0
    n_scales: int = 200
    f0: float = 5.0
    bpm: float = 100.0
    sample_rate: float = 8000.0
    timbre: str = "piano"  # fingerprint timbre
    calibrate: bool = True
    restrict_to_coi: bool = False
    smoothing: SmoothingConfig = SmoothingConfig()
    seed: int = 0
    setting: int = 1

    def __post_init__(self):
        if self.f_max > self.sample_rate / 2:
            raise InvalidRange(f"f_max {self.f_max} Hz is above Nyquist for {self.sample_rate} Hz")

    @property
    def length(self):
        """Samples in a conforming recording."""
        return SLOTS * slot_samples(self.bpm, self.sample_rate)

    def fingerprint_config(self):
        return FingerprintConfig(
            f_min=self.f_min, f_max=self.f_max, n_scales=self.n_scales, f0=self.f0,
            bpm=self.bpm, sample_rate=self.sample_rate, timbre=self.timbre,
            seed=self.seed, setting=self.setting,
        )

    def with_(self, **changes):
        return replace(self, **changes)


def prepare_recording(signal, cfg=None):
    """Mono, resampled, trimmed or zero padded to the fingerprint length, peak 1."""
    cfg = cfg or IdentifyConfig()
    if not isinstance(signal, Signal):
        signal = Signal(np.asarray(signal, dtype=float), cfg.sample_rate)
    x = np.asarray(signal.samples, dtype=float)
    if x.size == 0:
        raise EmptySignal("recording has no samples")
    if x.ndim == 2:
        x = x.mean(axis=1)
    if float(signal.sample_rate) != float(cfg.sample_rate):
        n_out = int(round(x.size * cfg.sample_rate / signal.sample_rate))
        if n_out < 1:
            raise EmptySignal("recording is too short to resample")
        x = resample(x, n_out)
    n = cfg.length
    if x.size >= n:
        x = x[:n].copy()
    else:
        x = np.concatenate([x, np.zeros(n - x.size)])
    peak = np.max(np.abs(x))
    if peak > 0:
        x /= peak
    return Signal(x, cfg.sample_rate)


@dataclass
class Match:
    tune_id: int
    name: str
    score: float
    calibrated: float = None


@dataclass
class RankedMatches:
    matches: list = field(default_factory=list)  # Match, best first
    results: dict = field(default_factory=dict)  # tune_id -> CoherenceResult (top k)
    skipped: list = field(default_factory=list)  # (tune_id, name, reason)

    def __len__(self):
        return len(self.matches)

    def __iter__(self):
        return iter(self.matches)

    def __getitem__(self, i):
        return self.matches[i]

    @property
    def names(self):
        return [m.name for m in self.matches]

    @property
    def scores(self):
        return [m.score for m in self.matches]

    @property
    def top(self):
        return self.matches[0] if self.matches else None


def identify(recording, base, cache=None, cfg=None, keep_top=0):
    """Rank every tune in ``base`` against ``recording``.

    ``cache`` must have been built under ``cfg.fingerprint_config()``
    (ConfigMismatch otherwise).  Without a cache each fingerprint is rendered,
    scored and dropped in turn, which keeps memory flat.  ``keep_top`` keeps
    the full CoherenceResult of that many best matches.
    """
    cfg = cfg or IdentifyConfig()
    fp_cfg = cfg.fingerprint_config()
    if cache is not None and cache.digest != fp_cfg.digest():
        raise ConfigMismatch("fingerprint cache was built with different parameters")
    grid = cache.grid if cache is not None else fp_cfg.grid()

    x = prepare_recording(recording, cfg)
    Wx = timefreq.cwt_fft(x, grid)  # the only transform of the recording
    power_x = smoothed_power(Wx, cfg.smoothing)
    mask = Wx.coi_mask() if cfg.restrict_to_coi else None

    ranked = RankedMatches()
    for rec in base:
        if cache is not None:
            fp = cache.get(rec.tune_id)
            if fp is None:
                ranked.skipped.append((rec.tune_id, rec.name, "not in fingerprint cache"))
                continue
            power = cache.power(rec.tune_id, cfg.smoothing)
        else:
            try:
                fp = timefreq.cwt_fft(render_setting(rec, fp_cfg), grid)
            except ReelprintError as exc:
                ranked.skipped.append((rec.tune_id, rec.name, str(exc)))
                continue
            power = smoothed_power(fp, cfg.smoothing)
        score = coherence_sum(Wx, fp, power_x, power, cfg.smoothing, mask)
        ranked.matches.append(Match(rec.tune_id, rec.name, score))

    # stable sort: ties keep tunebase order
    ranked.matches.sort(key=lambda m: -m.score)
    if cfg.calibrate and ranked.matches:
        for m, c in zip(ranked.matches, calibrate(ranked.scores)):
            m.calibrated = c

    for m in ranked.matches[:keep_top]:
        if cache is not None:
            fp = cache.get(m.tune_id)
        else:
            fp = timefreq.cwt_fft(render_setting(base.by_id(m.tune_id), fp_cfg), grid)
        coh = coherence_matrix(Wx, fp, cfg.smoothing, power_x=power_x)
        phase = np.angle(Wx.coefficients * np.conj(fp.coefficients))
        ranked.results[m.tune_id] = CoherenceResult(coh, phase, grid, Wx.coi)
    return ranked


def decisiveness(matches):
    """(best - runner-up) / (best - worst), in [0, 1]; 0 when all scores tie."""
    scores = matches.scores if isinstance(matches, RankedMatches) else list(matches)
    if len(scores) < 2:
        raise TooFewCandidates(f"need at least 2 scores, got {len(scores)}")
    s = np.sort(np.asarray(scores, dtype=float))[::-1]
    spread = s[0] - s[-1]
    if spread <= 0:
        return 0.0
    return float((s[0] - s[1]) / spread)


def build_cache(base, cfg=None, directory=None):
    """Fingerprint cache matching an IdentifyConfig; returns (cache, report)."""
    cfg = cfg or IdentifyConfig()
    cache = FingerprintCache(cfg.fingerprint_config(), directory)
    return build_fingerprints(base, cfg.fingerprint_config(), cache)
