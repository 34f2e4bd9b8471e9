"""WAV file reading (16-bit PCM or 32-bit float, mono or stereo) and writing.

The stdlib ``wave`` module only understands integer PCM, so reading walks the
RIFF chunks directly; writing (always 16-bit PCM mono) goes through ``wave``.
"""

import struct
import wave

import numpy as np

from .errors import CorruptHeader, UnsupportedEncoding
from .signals import Signal

__all__ = ["read_wav", "write_wav"]

PCM = 1
IEEE_FLOAT = 3
EXTENSIBLE = 0xFFFE


def _chunks(data):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size and cid != b"data":
            raise CorruptHeader(f"chunk {cid!r} truncated")
        yield cid, body
        pos += 8 + size + (size & 1)


def read_wav(path):
    """Samples scaled to [-1, 1]; stereo comes back as ``(frames, 2)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeader(f"{path}: not a RIFF/WAVE file")
    fmt = None
    frames = None
    for cid, body in _chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body)
            if fmt[0] == EXTENSIBLE:
                if len(body) < 40:
                    raise CorruptHeader(f"{path}: extensible fmt chunk too short")
                fmt = (struct.unpack_from("<H", body, 24)[0],) + fmt[1:]
        elif cid == b"data":
            frames = body
            break
    if fmt is None:
        raise CorruptHeader(f"{path}: no fmt chunk before the audio data")
    if frames is None:
        raise CorruptHeader(f"{path}: no data chunk")
    tag, channels, rate, _, block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{path}: {channels} channels (1 or 2 supported)")
    if rate == 0:
        raise CorruptHeader(f"{path}: sample rate is 0")
    if tag == PCM and bits == 16:
        dtype, scale = "<i2", 1.0 / 32768.0
    elif tag == IEEE_FLOAT and bits == 32:
        dtype, scale = "<f4", 1.0
    else:
        raise UnsupportedEncoding(f"{path}: format tag {tag} with {bits} bits per sample")
    width = np.dtype(dtype).itemsize * channels
    usable = len(frames) - len(frames) % width
    samples = np.frombuffer(frames[:usable], dtype=dtype).astype(np.float64) * scale
    if channels == 2:
        samples = samples.reshape(-1, 2)
    return Signal(samples, float(rate))


def write_wav(signal, path):
    """16-bit PCM mono, full-scale 1.0 = 32768 (so 1.0 itself saturates at 32767)."""
    x = np.asarray(signal.samples, dtype=float)
    if x.ndim == 2:
        x = x.mean(axis=1)
    pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    rate = int(round(signal.sample_rate))
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(pcm.tobytes())
