"""Cross-wavelet transform, smoothed wavelet coherence and coherence scores.

For scalograms ``Wx`` and ``Wy`` on the same grid

    Wxy = Wx * conj(Wy)
    C   = |S(Wxy)|**2 / (S(|Wx|**2) * S(|Wy|**2))

where ``S`` is a fixed separable Gaussian (sigma of 2 rows by 2 timesteps by
default, edges replicated).  ``C`` lies in [0, 1] by Cauchy-Schwarz, and the
argument of ``Wxy`` is the local phase of x relative to y (positive when x
leads).
"""

from dataclasses import dataclass
import functools

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import GridMismatch, LengthMismatch, SampleRateMismatch
from .signals import as_samples
from .timefreq import Scalogram, coi_mask, cone_of_influence, cwt, make_scale_grid

__all__ = [
    "SmoothingConfig",
    "CoherenceResult",
    "smooth",
    "xwt",
    "wavelet_coherence",
    "coherence_matrix",
    "coherence_sum",
    "smoothed_power",
    "gross_coherence",
    "calibrate",
    "DENOMINATOR_FLOOR",
]

# Cells whose smoothed power product is at or below this are set to 0.
DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class SmoothingConfig:
    sigma_scale: float = 2.0
    sigma_time: float = 2.0
    truncate: float = 4.0  # kernel radius in sigmas
    mode: str = "nearest"

    def __post_init__(self):
        if not (self.sigma_scale > 0 and self.sigma_time > 0):
            raise ValueError("smoothing sigmas must be positive")

    @property
    def time_radius(self):
        # same radius rule as scipy.ndimage
        return int(self.truncate * self.sigma_time + 0.5)


DEFAULT_SMOOTHING = SmoothingConfig()


def smooth(m, cfg=None):
    """2-D Gaussian smoothing: a pass along scales, then a pass along time.

    Complex matrices are smoothed as their real and imaginary parts.
    """
    cfg = cfg or DEFAULT_SMOOTHING
    m = np.asarray(m)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("smooth expects a non-empty 2-D matrix")
    if np.iscomplexobj(m):
        re, im = _smooth_planes(m.real, m.imag, cfg)
        out = np.empty(m.shape, dtype=np.complex128)
        out.real, out.imag = re, im
        return out
    return _smooth_planes(np.asarray(m, dtype=np.float64), None, cfg)[0]


@functools.lru_cache(maxsize=32)
def _scale_operator(rows, cfg):
    """The scale-axis pass as a (rows x rows) matrix: column j is the
    smoothed unit impulse at row j, boundary handling included."""
    k = gaussian_filter1d(np.eye(rows), cfg.sigma_scale, axis=0, mode=cfg.mode,
                          truncate=cfg.truncate)
    k.setflags(write=False)
    return k


def _smooth_planes(re, im, cfg):
    # Few rows, many columns: the scale pass is a small dense matrix product,
    # far cheaper than a strided 1-D filter down every column.
    k = _scale_operator(re.shape[0], cfg)
    out = []
    for plane in (re, im):
        if plane is None:
            out.append(None)
            continue
        plane = k @ np.ascontiguousarray(plane)
        out.append(gaussian_filter1d(plane, cfg.sigma_time, axis=1, mode=cfg.mode,
                                     truncate=cfg.truncate, output=plane))
    return out


def _coefficients(w):
    return w.coefficients if isinstance(w, Scalogram) else np.asarray(w)


def xwt(Wx, Wy):
    """Cross-wavelet transform ``Wx * conj(Wy)``."""
    if isinstance(Wx, Scalogram) and isinstance(Wy, Scalogram):
        if not Wx.grid.same_as(Wy.grid):
            raise GridMismatch("scalograms are on different scale grids")
    a, b = _coefficients(Wx), _coefficients(Wy)
    if a.shape != b.shape:
        raise GridMismatch(f"scalogram shapes differ: {a.shape} vs {b.shape}")
    return a * np.conj(b)


def smoothed_power(W, cfg=None):
    """``S(|W|**2)``, reusable across every pairing of the same scalogram."""
    c = _coefficients(W)
    return _smooth_planes(c.real**2 + c.imag**2, None, cfg or DEFAULT_SMOOTHING)[0]


def _ratio(num, den):
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > DENOMINATOR_FLOOR)
    return np.clip(out, 0.0, 1.0, out=out)


def coherence_matrix(Wx, Wy, cfg=None, power_x=None, power_y=None):
    """Coherence of two scalograms; precomputed smoothed powers are optional."""
    cross = xwt(Wx, Wy)
    power_x = smoothed_power(Wx, cfg) if power_x is None else power_x
    power_y = smoothed_power(Wy, cfg) if power_y is None else power_y
    re, im = _smooth_planes(cross.real, cross.imag, cfg or DEFAULT_SMOOTHING)
    return _ratio(re * re + im * im, power_x * power_y)


def coherence_sum(Wx, Wy, power_x, power_y, cfg=None, mask=None, block=1024):
    """Sum of the coherence matrix without materializing it.

    Works through the time axis in blocks, each widened by the time kernel
    radius so the smoothing sees the same neighbours as a whole-matrix pass.
    ``mask`` (boolean, True = counted) restricts the sum, e.g. to the cone of
    influence.  Equal to ``coherence_matrix(...)[mask].sum()`` up to float
    summation order.
    """
    cfg = cfg or DEFAULT_SMOOTHING
    a, b = _coefficients(Wx), _coefficients(Wy)
    if a.shape != b.shape:
        raise GridMismatch(f"scalogram shapes differ: {a.shape} vs {b.shape}")
    n = a.shape[1]
    halo = cfg.time_radius
    total = 0.0
    for t0 in range(0, n, block):
        t1 = min(n, t0 + block)
        lo, hi = max(0, t0 - halo), min(n, t1 + halo)
        cross = a[:, lo:hi] * np.conj(b[:, lo:hi])
        re, im = _smooth_planes(cross.real, cross.imag, cfg)
        re, im = re[:, t0 - lo : t1 - lo], im[:, t0 - lo : t1 - lo]
        c = _ratio(re * re + im * im, power_x[:, t0:t1] * power_y[:, t0:t1])
        if mask is not None:
            c = c[mask[:, t0:t1]]
        total += float(c.sum())
    return total


@dataclass
class CoherenceResult:
    coherence: np.ndarray  # [scales x timesteps], in [0, 1]
    phase: np.ndarray  # angle of the cross-wavelet transform, (-pi, pi]
    grid: object
    coi: np.ndarray  # largest valid scale per timestep

    def coi_mask(self):
        return self.grid.scales[:, None] <= self.coi[None, :]


def wavelet_coherence(x, y, grid=None, *, f_min=200.0, f_max=1200.0, n_scales=200,
                      sample_rate=None, morlet=None, smoothing=None, impl="fft"):
    """Coherence and phase of two equal-length signals.

    Pass a ready ``grid`` or the parameters to build one.
    """
    xs, xr = as_samples(x, sample_rate)
    ys, yr = as_samples(y, sample_rate)
    rate = xr if xr is not None else yr
    if xr is not None and yr is not None and float(xr) != float(yr):
        raise SampleRateMismatch(f"sample rates differ: {xr} Hz vs {yr} Hz")
    if len(xs) != len(ys):
        raise LengthMismatch(f"signal lengths differ: {len(xs)} vs {len(ys)}")
    if grid is None:
        if rate is None:
            raise ValueError("sample_rate is required for bare arrays")
        grid = make_scale_grid(f_min, f_max, n_scales, rate, morlet)
    elif rate is not None and float(rate) != grid.sample_rate:
        raise SampleRateMismatch(f"signal at {rate} Hz, grid built for {grid.sample_rate} Hz")
    Wx = cwt(xs, grid, impl)
    Wy = cwt(ys, grid, impl)
    cross = xwt(Wx, Wy)
    coh = coherence_matrix(Wx, Wy, smoothing)
    return CoherenceResult(coh, np.angle(cross), grid, cone_of_influence(len(xs), grid))


def gross_coherence(c, restrict_to_coi=False):
    """Sum of every coherence cell (only cells inside the cone if asked)."""
    if isinstance(c, CoherenceResult):
        m = c.coherence
        if restrict_to_coi:
            return float(m[c.coi_mask()].sum())
        return float(m.sum())
    m = np.asarray(c)
    if restrict_to_coi:
        raise ValueError("cone restriction needs a CoherenceResult")
    return float(m.sum())


def calibrate(scores):
    """Subtract the smallest score from every score.

    Accepts a list of ``(name, score)`` pairs or of bare numbers and returns
    the same shape.
    """
    scores = list(scores)
    if not scores:
        raise ValueError("calibrate needs at least one score")
    if isinstance(scores[0], (tuple, list)):
        low = min(s for _, s in scores)
        return [(name, s - low) for name, s in scores]
    low = min(scores)
    return [s - low for s in scores]


def cone_mask(n, grid):
    return coi_mask(n, grid)
