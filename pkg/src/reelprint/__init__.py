"""Identify Irish reels by wavelet coherence against synthetic fingerprints.

Submodules: ``abc_parser`` (ABC notation to semitone sequences),
``synthesis`` (note and tune rendering), ``fourier`` (radix-2 FFT),
``timefreq`` (Morlet CWT, Gabor transform), ``coherence`` (cross-wavelet
transform and wavelet coherence), ``tunebase`` (tune lookup and fingerprint
cache), ``identify`` (ranking) and ``cli``.
"""

from .abc_parser import encode_semitones, normalize_to_grid, parse_abc
from .coherence import calibrate, gross_coherence, wavelet_coherence, xwt
from .errors import ReelprintError
from .fourier import fft, ifft
from .identify import IdentifyConfig, decisiveness
from .signals import Signal
from .synthesis import render_tune, semitone_to_freq
from .timefreq import cwt, cwt_fft, cwt_naive, gabor_transform, make_scale_grid
from .tunebase import load_tunebase
from .wav import read_wav, write_wav

# ``identify`` is left to its submodule so the name keeps meaning the module
__version__ = "0.1.0"

__all__ = [
    "parse_abc", "normalize_to_grid", "encode_semitones",
    "semitone_to_freq", "render_tune",
    "fft", "ifft",
    "cwt", "cwt_fft", "cwt_naive", "gabor_transform", "make_scale_grid",
    "xwt", "wavelet_coherence", "gross_coherence", "calibrate",
    "load_tunebase", "IdentifyConfig", "decisiveness",
    "read_wav", "write_wav", "Signal", "ReelprintError",
]
