from dataclasses import dataclass

import numpy as np

from .errors import SampleRateMismatch


@dataclass
class Signal:
    """Sampled waveform.

    ``samples`` is 1-D for mono audio; multichannel audio read from disk is
    stored as ``(frames, channels)``.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate

    @property
    def channels(self):
        return 1 if self.samples.ndim == 1 else self.samples.shape[1]

    @property
    def times(self):
        return np.arange(len(self)) / self.sample_rate


def as_samples(x, sample_rate=None):
    """Return ``(samples, sample_rate)`` for a Signal or a bare array."""
    if isinstance(x, Signal):
        if sample_rate is not None and float(x.sample_rate) != float(sample_rate):
            raise SampleRateMismatch(
                f"signal sampled at {x.sample_rate} Hz, expected {sample_rate} Hz"
            )
        return np.asarray(x.samples), float(x.sample_rate)
    return np.asarray(x), sample_rate
