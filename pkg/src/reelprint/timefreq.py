"""Time-frequency decompositions: Gabor transform and Morlet CWT.

Conventions
-----------
Scales are measured in samples.  A Morlet wavelet at scale ``a`` has pseudo
frequency ``f = f0 * sample_rate / (2 * pi * a)``.  The transform of a signal
``x`` is the discretised

    W[a, b] = a**-0.5 * sum_t x[t] * conj(psi((t - b) / a))

with the signal treated as zero outside its support.  ``ScaleGrid`` stores
frequencies in descending order (row 0 is the highest frequency), which is
also the top row of every heatmap.
"""

from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import threading

import numpy as np

from .errors import InvalidRange, WindowTooLong
from .fourier import bit_reversal, butterflies, next_pow2, transform
from .signals import Signal, as_samples

PI_QUARTER = np.pi ** -0.25
SQRT_2PI = np.sqrt(2.0 * np.pi)
# Gaussian envelope values below this are dropped from the direct-sum kernel.
TRUNCATION = 1e-8
TRUNCATION_RADIUS = float(np.sqrt(-2.0 * np.log(TRUNCATION)))  # in units of scale


@dataclass(frozen=True)
class MorletParams:
    f0: float = 5.0

    def __post_init__(self):
        if not self.f0 >= 4:
            raise ValueError(f"Morlet f0 must be >= 4, got {self.f0}")


def morlet(t, f0=5.0):
    """Mother wavelet psi(t) = pi**-0.25 * exp(1j*f0*t) * exp(-t**2/2)."""
    t = np.asarray(t, dtype=float)
    return PI_QUARTER * np.exp(1j * f0 * t) * np.exp(-0.5 * t * t)


def morlet_spectrum(omega, f0=5.0):
    """Continuous Fourier transform of the Morlet wavelet (a real Gaussian)."""
    omega = np.asarray(omega, dtype=float)
    return PI_QUARTER * SQRT_2PI * np.exp(-0.5 * (omega - f0) ** 2)


def frequency_to_scale(freq, sample_rate, f0=5.0):
    return f0 * sample_rate / (2.0 * np.pi * np.asarray(freq, dtype=float))


def scale_to_frequency(scale, sample_rate, f0=5.0):
    return f0 * sample_rate / (2.0 * np.pi * np.asarray(scale, dtype=float))


@dataclass(frozen=True, eq=False)
class ScaleGrid:
    frequencies: np.ndarray
    scales: np.ndarray
    sample_rate: float
    morlet: MorletParams = MorletParams()

    @property
    def count(self):
        return len(self.frequencies)

    @property
    def f0(self):
        return self.morlet.f0

    def __len__(self):
        return self.count

    def same_as(self, other):
        return (
            isinstance(other, ScaleGrid)
            and self.sample_rate == other.sample_rate
            and self.morlet == other.morlet
            and np.array_equal(self.scales, other.scales)
        )

    def nearest_row(self, freq):
        return int(np.argmin(np.abs(np.log(self.frequencies / freq))))


def make_scale_grid(f_min, f_max, count, sample_rate, morlet=None, spacing="log"):
    """Pseudo-frequencies from ``f_max`` down to ``f_min``, both included."""
    morlet = morlet or MorletParams()
    if not 0 < f_min < f_max:
        raise InvalidRange(f"need 0 < f_min < f_max, got {f_min}, {f_max}")
    if f_max > sample_rate / 2:
        raise InvalidRange(f"f_max {f_max} Hz above Nyquist ({sample_rate / 2} Hz)")
    if count < 2:
        raise InvalidRange(f"need at least 2 scales, got {count}")
    if spacing == "log":
        freqs = np.geomspace(f_max, f_min, int(count))
    elif spacing == "linear":
        freqs = np.linspace(f_max, f_min, int(count))
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    freqs[0], freqs[-1] = f_max, f_min
    scales = frequency_to_scale(freqs, sample_rate, morlet.f0)
    freqs.setflags(write=False)
    scales.setflags(write=False)
    return ScaleGrid(freqs, scales, float(sample_rate), morlet)


def cone_of_influence(signal_len, grid=None):
    """Largest scale (in samples) unaffected by the edges, per timestep.

    Timestep ``t`` is inside the cone at scale ``a`` iff
    ``min(t, signal_len - 1 - t) >= sqrt(2) * a``.
    """
    t = np.arange(signal_len)
    dist = np.minimum(t, signal_len - 1 - t)
    return dist / np.sqrt(2.0)


def coi_mask(signal_len, grid):
    """Boolean [scales x timesteps] mask, True inside the cone."""
    boundary = cone_of_influence(signal_len, grid)
    return grid.scales[:, None] <= boundary[None, :]


@dataclass
class Scalogram:
    coefficients: np.ndarray
    grid: ScaleGrid
    sample_rate: float
    coi: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.coi is None:
            self.coi = cone_of_influence(self.coefficients.shape[1], self.grid)

    @property
    def shape(self):
        return self.coefficients.shape

    @property
    def times(self):
        return np.arange(self.coefficients.shape[1]) / self.sample_rate

    def magnitude(self):
        return np.abs(self.coefficients)

    def coi_mask(self):
        return self.grid.scales[:, None] <= self.coi[None, :]


def _prepare(x, grid):
    samples, rate = as_samples(x, grid.sample_rate)
    samples = np.asarray(samples)
    if samples.ndim != 1:
        raise ValueError("CWT expects a mono 1-D signal")
    if samples.size == 0:
        raise ValueError("CWT of an empty signal")
    if not np.iscomplexobj(samples):
        samples = samples.astype(np.float64, copy=False)
    return samples


def cwt_naive(x, grid):
    """Direct time-domain CWT: the full O(S * N**2) sum, one scale at a time.

    Each kernel is sampled over every lag the signal can reach, -(N-1)..N-1,
    with samples whose Gaussian envelope falls below ``TRUNCATION`` set to 0.
    """
    samples = _prepare(x, grid)
    n = samples.size
    lags = np.arange(-(n - 1), n, dtype=float)
    out = np.empty((grid.count, n), dtype=np.complex128)
    f0 = grid.f0
    for i, a in enumerate(grid.scales):
        u = lags / a
        env = np.exp(-0.5 * u * u)
        kernel = PI_QUARTER * np.exp(-1j * f0 * u) * env / np.sqrt(a)  # conj(psi)
        kernel[env < TRUNCATION] = 0.0
        # full[j] = sum_t x[t] kernel[(2n-2) - j + t]; j = n-1+b picks lag t-b
        rev = kernel[::-1]
        if np.iscomplexobj(samples):
            full = np.convolve(samples, rev)[n - 1 : 2 * n - 1]
        else:
            # two real convolutions beat one complex one for a real signal
            full = np.convolve(samples, rev.real)[n - 1 : 2 * n - 1]
            full = full + 1j * np.convolve(samples, rev.imag)[n - 1 : 2 * n - 1]
        out[i] = full
    return Scalogram(out, grid, grid.sample_rate)


class _SpectrumCache:
    """Small thread-safe LRU of per-scale wavelet spectra (read-only arrays)."""

    def __init__(self, maxsize=2):
        self.maxsize = maxsize
        self._items = OrderedDict()
        self._lock = threading.Lock()

    def get(self, grid, n_pad):
        key = (grid.scales.tobytes(), grid.f0, n_pad)
        with self._lock:
            if key in self._items:
                self._items.move_to_end(key)
                return self._items[key]
        value = _wavelet_spectra(grid, n_pad)
        with self._lock:
            self._items[key] = value
            while len(self._items) > self.maxsize:
                self._items.popitem(last=False)
        return value

    def clear(self):
        with self._lock:
            self._items.clear()


def _wavelet_spectra(grid, n_pad):
    """Per-scale kernel spectra, stored in bit-reversed order with 1/N folded in.

    The DFT of the sampled kernel a**-0.5 * psi(m / a) is, by Poisson
    summation, sqrt(a) * sum_j psihat(a * (omega + 2 pi j)).  Terms with
    |j| <= 1 are exact to double precision for any scale whose
    pseudo-frequency is below Nyquist.
    """
    k = np.arange(n_pad)
    omega = 2.0 * np.pi * np.where(k < n_pad // 2, k, k - n_pad) / n_pad
    omega = omega[bit_reversal(n_pad)]
    spectra = np.empty((grid.count, n_pad))
    for i, a in enumerate(grid.scales):
        row = morlet_spectrum(a * omega, grid.f0)
        row += morlet_spectrum(a * (omega + 2.0 * np.pi), grid.f0)
        row += morlet_spectrum(a * (omega - 2.0 * np.pi), grid.f0)
        spectra[i] = row * (np.sqrt(a) / n_pad)
    spectra.setflags(write=False)
    return spectra


wavelet_spectra = _SpectrumCache()


def cwt_fft(x, grid, workers=1):
    """FFT-based CWT: one forward FFT, then one inverse FFT per scale.

    Equivalent to :func:`cwt_naive` except within a wavelet support of the
    ends when the padded length leaves no room for the zero padding (the
    product of spectra is a circular correlation on the padded length).
    Rows are independent; ``workers > 1`` spreads them over threads with
    identical output.
    """
    samples = _prepare(x, grid)
    n = samples.size
    n_pad = next_pow2(n)
    padded = np.zeros(n_pad, dtype=np.result_type(samples.dtype, np.float64))
    padded[:n] = samples
    # the kernel spectra are cached in bit-reversed order, so permuting the
    # signal spectrum once lets every row go straight to the butterflies
    spectrum = transform(padded)[bit_reversal(n_pad)]
    psi_hat = wavelet_spectra.get(grid, n_pad)
    out = np.empty((grid.count, n), dtype=np.complex128)

    def one_row(i):
        out[i] = butterflies(spectrum * psi_hat[i], inverse=True)[:n]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one_row, range(grid.count)))
    else:
        for i in range(grid.count):
            one_row(i)
    return Scalogram(out, grid, grid.sample_rate)


def cwt(x, grid, impl="fft", workers=1):
    if impl == "fft":
        return cwt_fft(x, grid, workers=workers)
    if impl == "naive":
        return cwt_naive(x, grid)
    raise ValueError(f"unknown CWT implementation {impl!r}")


# Gabor transform

def gaussian_window(N, sigma):
    """g[n] = exp(-0.5 * ((n - N/2) / sigma)**2) for 0 <= n < N."""
    if N < 1:
        raise ValueError("window length must be >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = np.arange(N)
    return np.exp(-0.5 * ((n - N / 2.0) / sigma) ** 2)


@dataclass
class Spectrogram:
    magnitudes: np.ndarray  # [freq_bins x frames]
    frequencies: np.ndarray  # ascending, 0 .. sample_rate/2
    times: np.ndarray  # window centres, seconds


def gabor_transform(x, window, sigma, hop, freq_bins=None, sample_rate=None):
    """Short-time Fourier magnitudes with a Gaussian window.

    Frames start at 0, hop, 2*hop, ... while the window fits inside the
    signal.  Each windowed frame is zero padded to ``n_fft``, the next power
    of two holding both the window and ``2 * (freq_bins - 1)`` bins; output
    rows are the bins nearest to ``freq_bins`` evenly spaced frequencies from
    0 to Nyquist (exact bins when ``freq_bins - 1`` is a power of two).
    """
    samples, rate = as_samples(x, sample_rate)
    if rate is None:
        raise ValueError("sample_rate is required for a bare array")
    samples = np.asarray(samples, dtype=float)
    if hop < 1:
        raise ValueError("hop must be >= 1")
    if window > samples.size:
        raise WindowTooLong(f"window of {window} samples exceeds signal of {samples.size}")
    g = gaussian_window(window, sigma)
    if freq_bins is None:
        n_fft = next_pow2(window)
        freq_bins = n_fft // 2 + 1
    else:
        if freq_bins < 2:
            raise ValueError("freq_bins must be >= 2")
        n_fft = next_pow2(max(window, 2 * (freq_bins - 1)))
    bins = np.rint(np.arange(freq_bins) * (n_fft // 2) / (freq_bins - 1)).astype(int)

    starts = np.arange(0, samples.size - window + 1, hop)
    mags = np.empty((freq_bins, starts.size))
    frame = np.zeros(n_fft)
    for j, s in enumerate(starts):
        frame[:window] = samples[s : s + window] * g
        mags[:, j] = np.abs(transform(frame)[bins])
    freqs = bins * rate / n_fft
    times = (starts + window / 2.0) / rate
    return Spectrogram(mags, freqs, times)
