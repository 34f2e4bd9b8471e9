"""Additive note synthesis, ADSR envelopes, tune rendering and control signals.

Note generators follow a fixed recipe per timbre: a fundamental sine, weighted
harmonics, optional detuned partials, a cubic nonlinearity, an ADSR envelope,
optional noise, and a final peak normalization.  ADSR lists are given as an
absolute attack (seconds) followed by decay/sustain/release ratios; the ratios
are stretched to fill whatever is left of the note after the attack.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidBand
from .signals import Signal

__all__ = [
    "MIDDLE_C",
    "semitone_to_freq",
    "AdsrParams",
    "adsr_envelope",
    "Timbre",
    "TimbreProfile",
    "render_note",
    "render_tune",
    "slot_duration",
    "slot_samples",
    "control_signal",
]

# Middle C in equal temperament relative to A4 = 440 Hz (261.6256 Hz; the
# usual 261.63 is this value rounded to two decimals).
MIDDLE_C = 440.0 * 2.0 ** (-9.0 / 12.0)


def semitone_to_freq(n):
    """Frequency in Hz of the note ``n`` semitones above middle C."""
    if np.ndim(n):
        return MIDDLE_C * 2.0 ** (np.asarray(n, dtype=float) / 12.0)
    return MIDDLE_C * 2.0 ** (n / 12.0)


@dataclass(frozen=True)
class AdsrParams:
    attack: float
    decay: float
    sustain: float
    release: float
    sustain_level: float

    def __post_init__(self):
        if not 0.0 <= self.sustain_level <= 1.0:
            raise ValueError(f"sustain_level must lie in [0, 1], got {self.sustain_level}")

    @classmethod
    def fitted(cls, ratios, sustain_level, duration):
        """Absolute attack plus decay/sustain/release shares of the remainder."""
        attack, rest = ratios[0], ratios[1:]
        total = sum(rest)
        scaled = [(duration - attack) * (x / total) for x in rest]
        return cls(attack, *scaled, sustain_level)


def _count(x):
    return int(round(x))


def adsr_envelope(params, sample_rate, duration):
    """Piecewise-linear gain curve of exactly ``round(sample_rate * duration)`` samples.

    Every phase gets at least one sample (shorter phases are clamped up), the
    sustain phase absorbs whatever the other three leave over, and anything
    beyond the note length is cut off.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    total = max(1, _count(sample_rate * duration))
    a = max(1, int(sample_rate * params.attack))
    d = max(1, int(sample_rate * params.decay))
    r = max(1, int(sample_rate * params.release))
    s = max(1, total - a - d - r)
    level = params.sustain_level
    env = np.concatenate([
        np.linspace(0.0, 1.0, a),
        np.linspace(1.0, level, d),
        np.full(s, level),
        np.linspace(level, 0.0, r),
    ])
    return env[:total]


@dataclass(frozen=True)
class TimbreProfile:
    harmonics: tuple  # weights of harmonics 2, 3, ...
    detune: tuple  # (frequency ratio, weight) pairs
    cubic: float  # wave += cubic * wave**3
    noise: float  # amplitude of added Gaussian noise, after the envelope
    adsr: tuple  # (attack seconds, decay, sustain, release ratios)
    sustain_level: float


class Timbre(Enum):
    SINE = "sine"
    PIANO = "piano"
    BANJO = "banjo"

    @property
    def profile(self):
        return _PROFILES[self]

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown timbre {value!r}; choose sine, piano or banjo") from None


_PROFILES = {
    Timbre.SINE: TimbreProfile((), (), 0.0, 0.0, (0.01, 0.2, 0.2, 0.7), 0.7),
    Timbre.PIANO: TimbreProfile((0.6, 0.4, 0.2), (), 0.05, 0.001, (0.01, 0.2, 0.2, 0.7), 0.7),
    Timbre.BANJO: TimbreProfile(
        (0.7, 0.5, 0.3, 0.2, 0.1), ((1.01, 0.1), (0.99, 0.08)), 0.2, 0.0,
        (0.003, 0.08, 0.02, 0.1), 0.2,
    ),
}


def _normalize(wave):
    peak = np.max(np.abs(wave)) if wave.size else 0.0
    return wave / peak if peak > 0 else wave


def render_note(freq, duration, sample_rate, timbre=Timbre.SINE, rng=None, envelope=True):
    """One note as a Signal of ``round(sample_rate * duration)`` samples, peak 1.

    ``rng`` is a ``numpy.random.Generator`` for the piano's noise floor; when
    omitted a generator seeded with 0 is used so renders are reproducible.
    ``envelope=False`` skips the ADSR stage (the sine timbre then yields a
    plain ``sin(2 pi f t)``).
    """
    if freq <= 0 or duration <= 0:
        raise ValueError("freq and duration must be positive")
    prof = Timbre.parse(timbre).profile
    n = max(1, _count(sample_rate * duration))
    t = np.arange(n) / sample_rate
    phase = 2.0 * np.pi * freq * t
    wave = np.sin(phase)
    for k, w in enumerate(prof.harmonics, start=2):
        wave += w * np.sin(k * phase)
    for ratio, w in prof.detune:
        wave += w * np.sin(ratio * phase)
    if prof.cubic:
        wave += prof.cubic * wave**3
    if envelope:
        params = AdsrParams.fitted(prof.adsr, prof.sustain_level, duration)
        wave *= adsr_envelope(params, sample_rate, duration)
    if prof.noise:
        rng = np.random.default_rng(0) if rng is None else rng
        # normal with mean -1 and sd 1: a faint hiss on a tiny DC offset
        wave += prof.noise * rng.normal(-1.0, 1.0, n)
    return Signal(_normalize(wave), sample_rate)


def slot_duration(bpm):
    """Seconds per grid slot; a beat holds four slots (100 BPM gives 0.15 s)."""
    if bpm <= 0:
        raise ValueError("bpm must be positive")
    return 60.0 / bpm / 4.0


def slot_samples(bpm, sample_rate):
    return _count(sample_rate * slot_duration(bpm))


def render_tune(seq, timbre=Timbre.SINE, bpm=100.0, sample_rate=8000.0, seed=0):
    """Concatenate one rendered note per slot; rests are silent slots.

    All noise comes from one generator seeded with ``seed``, drawn slot by
    slot, so a given seed always reproduces the same waveform.
    """
    values = list(getattr(seq, "values", seq))
    timbre = Timbre.parse(timbre)
    dur = slot_duration(bpm)
    n = slot_samples(bpm, sample_rate)
    rng = np.random.default_rng(seed)
    out = np.zeros(n * len(values))
    for i, v in enumerate(values):
        if v is None:
            continue
        note = render_note(semitone_to_freq(v), dur, sample_rate, timbre, rng=rng)
        out[i * n : (i + 1) * n] = note.samples[:n]
    return Signal(out, sample_rate)


def control_signal(kind, duration, sample_rate, band=None, seed=0):
    """Reference inputs for probing scoring bias.

    ``blank`` is silence; ``white_noise`` (alias ``noise``) has a flat
    magnitude spectrum with uniform random phase inside ``band`` and nothing
    outside it, peak-normalized.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = _count(sample_rate * duration)
    if kind == "blank":
        return Signal(np.zeros(n), sample_rate)
    if kind not in ("white_noise", "noise"):
        raise ValueError(f"unknown control kind {kind!r}")
    if band is None:
        raise InvalidBand("white noise needs a band (f_lo, f_hi)")
    lo, hi = band
    if not 0 < lo < hi <= sample_rate / 2:
        raise InvalidBand(f"band ({lo}, {hi}) must satisfy 0 < lo < hi <= {sample_rate / 2}")
    rng = np.random.default_rng(seed)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    inside = (freqs >= lo) & (freqs <= hi)
    spectrum = np.zeros(freqs.size, dtype=complex)
    spectrum[inside] = np.exp(2j * np.pi * rng.random(int(inside.sum())))
    wave = np.fft.irfft(spectrum, n)
    return Signal(_normalize(wave), sample_rate)
