"""Radix-2 FFT / IFFT with power-of-two zero padding.

Forward transform is unnormalized, the inverse carries 1/N:

    X[k] = sum_n x[n] exp(-2j pi k n / N)
    x[n] = (1/N) sum_k X[k] exp(+2j pi k n / N)

The transform is an iterative decimation-in-time radix-2 algorithm: one
bit-reversal gather, a batch of 16-point DFTs standing in for the first four
passes, then the remaining butterfly passes, each a handful of whole-array
numpy operations on ping-pong buffers.  Bit-reversal indices
and twiddle tables are built once per length and cached read-only, so they
can be shared between threads.
"""

from dataclasses import dataclass
import functools

import numpy as np

from .errors import NonPowerOfTwoLength
from .signals import Signal

__all__ = ["Spectrum", "fft", "ifft", "next_pow2", "is_pow2", "transform", "butterflies"]


def is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


def next_pow2(n):
    """Smallest power of two >= n (1 for n <= 1)."""
    if n <= 1:
        return 1
    return 1 << (int(n) - 1).bit_length()


@dataclass(frozen=True)
class _Plan:
    n: int
    perm: np.ndarray
    twiddles: np.ndarray  # exp(-2j pi k / n), k < n/2


@functools.lru_cache(maxsize=64)
def _plan(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    perm = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        perm |= ((idx >> b) & 1) << (bits - 1 - b)
    twiddles = np.exp(-2j * np.pi * np.arange(max(n // 2, 1)) / n)
    perm.setflags(write=False)
    twiddles.setflags(write=False)
    return _Plan(n, perm, twiddles)


def transform(a, inverse=False):
    """Raw radix-2 DFT of a 1-D power-of-two-length array.

    No padding, no Spectrum wrapper.  ``inverse=True`` conjugates the twiddles
    and divides by N.
    """
    a = np.asarray(a)
    if a.ndim != 1:
        raise ValueError("transform expects a 1-D array")
    n = a.shape[0]
    if not is_pow2(n):
        raise NonPowerOfTwoLength(f"length {n} is not a power of two")
    y = a[_plan(n).perm].astype(np.complex128, copy=False)
    y = butterflies(y, inverse)
    if inverse:
        y /= n
    return y


def bit_reversal(n):
    """Read-only bit-reversal permutation for a power-of-two ``n``."""
    return _plan(n).perm


# Leaf size: the first log2(LEAF) passes are done at once as small DFTs.
LEAF = 16


@functools.lru_cache(maxsize=None)
def _leaf_matrix(r, inverse):
    """Maps a bit-reversed block of ``r`` samples to its r-point DFT.

    Stored transposed, ready for ``blocks @ matrix``.
    """
    bits = r.bit_length() - 1
    rev = [int(format(j, f"0{bits}b")[::-1], 2) if bits else 0 for j in range(r)]
    sign = 1.0 if inverse else -1.0
    k = np.arange(r)
    F = np.exp(sign * 2j * np.pi * (np.outer(k, k) % r) / r)
    m = np.ascontiguousarray(F[:, rev].T)
    m.setflags(write=False)
    return m


# Longest run that is transformed in one piece; larger transforms first finish
# every BLOCK-sized run separately so each stays in cache while it is worked on.
BLOCK = 8192


def butterflies(y, inverse=False):
    """DFT of data already in bit-reversed order (no 1/N scaling).

    On bit-reversed input the first k passes act independently on each run of
    2**k consecutive samples, computing that run's own DFT.  So the first
    log2(LEAF) passes are done as small matrix products, and for long inputs
    the passes below BLOCK are finished one cache-sized run at a time before
    the remaining radix-2 passes sweep the whole array.  ``y`` may be
    overwritten; the returned array holds the result.
    """
    n = y.shape[0]
    if n > BLOCK:
        runs = y.reshape(n // BLOCK, BLOCK)
        for j in range(runs.shape[0]):
            runs[j] = butterflies(runs[j], inverse)
        return _passes(y, BLOCK, inverse)
    r = min(n, LEAF)
    y = (y.reshape(n // r, r) @ _leaf_matrix(r, inverse)).reshape(n)
    return _passes(y, r, inverse)


def _passes(y, h, inverse):
    """Radix-2 passes merging runs of length h, 2h, ... up to the full length."""
    n = y.shape[0]
    if h >= n:
        return y
    plan = _plan(n)
    tw = np.conj(plan.twiddles) if inverse else plan.twiddles
    z = np.empty_like(y)
    tmp = np.empty(n // 2, dtype=np.complex128)
    while h < n:
        m = n // (2 * h)
        yv = y.reshape(m, 2, h)
        zv = z.reshape(m, 2, h)
        tv = tmp.reshape(m, h)
        np.multiply(yv[:, 1, :], tw[::m], out=tv)
        np.add(yv[:, 0, :], tv, out=zv[:, 0, :])
        np.subtract(yv[:, 0, :], tv, out=zv[:, 1, :])
        y, z = z, y
        h *= 2
    return y


@dataclass
class Spectrum:
    """DFT coefficients on a power-of-two length.

    ``length`` is the number of samples before zero padding; ``sample_rate``
    sets the physical frequency scale (1.0 means cycles per sample).
    """

    coefficients: np.ndarray
    sample_rate: float = 1.0
    length: int = None

    def __post_init__(self):
        if self.length is None:
            self.length = len(self.coefficients)

    def __len__(self):
        return len(self.coefficients)

    @property
    def bin_hz(self):
        return self.sample_rate / len(self.coefficients)

    @property
    def frequencies(self):
        """Frequency of every bin, 0 .. (N-1)*bin_hz (no negative wrap)."""
        return np.arange(len(self.coefficients)) * self.bin_hz

    def magnitudes(self, one_sided=True):
        mags = np.abs(self.coefficients)
        if one_sided:
            return mags[: len(mags) // 2 + 1]
        return mags


def fft(x, sample_rate=None):
    """Zero-pad ``x`` to the next power of two and return its Spectrum."""
    if isinstance(x, Signal):
        sample_rate = x.sample_rate if sample_rate is None else sample_rate
        x = x.samples
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("fft expects a 1-D sequence")
    if x.size == 0:
        raise ValueError("fft of an empty sequence")
    length = x.size
    n = next_pow2(length)
    if n != length:
        padded = np.zeros(n, dtype=np.result_type(x.dtype, np.float64))
        padded[:length] = x
        x = padded
    rate = 1.0 if sample_rate is None else float(sample_rate)
    return Spectrum(transform(x), rate, length)


def ifft(X):
    """Inverse transform; returns the full padded-length complex sequence.

    Callers truncate to ``Spectrum.length`` when they want the original span.
    """
    coeffs = X.coefficients if isinstance(X, Spectrum) else np.asarray(X)
    if coeffs.ndim != 1:
        raise ValueError("ifft expects a 1-D sequence")
    if not is_pow2(coeffs.size):
        raise NonPowerOfTwoLength(f"length {coeffs.size} is not a power of two")
    return transform(coeffs, inverse=True)
