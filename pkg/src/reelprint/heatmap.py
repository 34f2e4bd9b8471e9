"""Grayscale heatmaps (binary PGM) and phase CSV sidecars.

Rows are scales with the highest frequency on top, columns are timesteps.
Values map linearly to 0..255 over the image's own min..max unless a fixed
``value_range`` is given; a constant image is mid-gray (128).
"""

import re

import numpy as np

__all__ = ["to_gray", "emit_heatmap", "write_pgm", "read_pgm", "write_phase_csv"]

COI_VALUE = 255
FLAT_VALUE = 128


def to_gray(matrix, value_range=None):
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("heatmap needs a non-empty 2-D matrix")
    lo, hi = value_range if value_range is not None else (m.min(), m.max())
    if not hi > lo:
        return np.full(m.shape, FLAT_VALUE, dtype=np.uint8)
    scaled = (np.clip(m, lo, hi) - lo) / (hi - lo)
    return np.round(scaled * 255.0).astype(np.uint8)


def write_pgm(path, gray):
    gray = np.ascontiguousarray(gray, dtype=np.uint8)
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise ValueError(f"{path}: not a binary PGM")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(data, dtype=np.uint8, count=w * h, offset=m.end()).reshape(h, w)


def _coi_rows(scales, boundary):
    """Row per column where the cone edge crosses: the largest scale inside."""
    inside = scales[:, None] <= boundary[None, :]
    rows = np.full(boundary.shape, -1)
    any_inside = inside.any(axis=0)
    # scales grow with the row index, so the last True row is the boundary
    rows[any_inside] = inside.shape[0] - 1 - np.argmax(inside[::-1, any_inside], axis=0)
    return rows


def emit_heatmap(matrix, path, grid=None, coi=None, decimate=1, value_range=None):
    """Write ``matrix`` as a PGM; with ``grid`` and ``coi``, mark the cone edge.

    The cone edge is drawn in white (255) at the last row still inside the
    cone for each column.  ``decimate=k`` keeps every k-th column.
    """
    gray = to_gray(matrix, value_range)
    if coi is not None:
        if grid is None:
            raise ValueError("drawing the cone needs the scale grid")
        rows = _coi_rows(np.asarray(grid.scales), np.asarray(coi))
        cols = np.nonzero(rows >= 0)[0]
        gray[rows[cols], cols] = COI_VALUE
    step = max(1, int(decimate))
    gray = gray[:, ::step]
    write_pgm(path, gray)
    return gray


def write_phase_csv(path, phase, grid, sample_rate, scale_stride=16, time_stride=512):
    """Decimated ``time_s,freq_hz,angle_rad`` rows of a phase matrix."""
    phase = np.asarray(phase)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s,freq_hz,angle_rad\n")
        for r in range(0, phase.shape[0], max(1, scale_stride)):
            f = grid.frequencies[r]
            for c in range(0, phase.shape[1], max(1, time_stride)):
                fh.write(f"{c / sample_rate:.6f},{f:.6f},{round(float(phase[r, c]), 6) + 0.0:.6f}\n")
