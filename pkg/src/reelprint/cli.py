"""Command-line interface: ``reelprint <command> ...``.

Exit status is 0 on success, 1 on a domain or file error, 2 on bad usage.
"""

import argparse
import sys

import numpy as np

from .bench import run_benchmark
from .coherence import SmoothingConfig, wavelet_coherence
from .errors import ReelprintError
from .fourier import fft
from .heatmap import emit_heatmap, write_phase_csv
from .identify import IdentifyConfig, identify
from .synthesis import control_signal, render_tune
from .timefreq import MorletParams, cwt, gabor_transform, make_scale_grid
from .tunebase import default_tunebase_path, load_tunebase, setting_semitones
from .wav import read_wav, write_wav

__all__ = ["main", "build_parser", "run_command"]


def _mono(signal):
    s = signal.samples
    if s.ndim == 2:
        signal.samples = s.mean(axis=1)
    return signal


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _grid_flags(p, fmax=1200.0, nfreqs=200):
    p.add_argument("--fmin", type=float, default=200.0, help="lowest frequency, Hz")
    p.add_argument("--fmax", type=float, default=fmax, help="highest frequency, Hz")
    p.add_argument("--nfreqs", type=int, default=nfreqs, help="number of scales")
    p.add_argument("--f0", type=float, default=5.0, help="Morlet centre frequency parameter")
    p.add_argument("--decimate", type=int, default=1, help="keep every k-th image column")


def _grid(args, rate):
    return make_scale_grid(args.fmin, args.fmax, args.nfreqs, rate, MorletParams(args.f0))


def cmd_synth(args):
    base = load_tunebase(args.tunebase)
    rec, _, count = base.resolve(args.tune, args.setting)
    seq = setting_semitones(rec, args.setting)
    signal = render_tune(seq, args.timbre, args.bpm, args.sr, seed=args.seed)
    write_wav(signal, args.out)
    print(f"{rec.name}\tsetting {args.setting} of {count}\t{signal.duration:.2f} s", file=sys.stderr)


def cmd_scalogram(args):
    signal = _mono(read_wav(args.input))
    grid = _grid(args, signal.sample_rate)
    w = cwt(signal, grid, args.impl)
    mag = w.magnitude()
    emit_heatmap(mag, args.out, grid, w.coi if args.coi else None, args.decimate)
    if args.csv:
        write_phase_csv(args.csv, np.angle(w.coefficients), grid, signal.sample_rate,
                        args.scale_stride, args.time_stride)


def cmd_gabor(args):
    signal = _mono(read_wav(args.input))
    spec = gabor_transform(signal, args.window, args.sigma, args.hop, args.bins)
    # top row = highest frequency
    emit_heatmap(spec.magnitudes[::-1], args.out, decimate=args.decimate)


def cmd_fftmag(args):
    signal = _mono(read_wav(args.input))
    spectrum = fft(signal)
    mags = spectrum.magnitudes()
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bin,freq_hz,magnitude\n")
        for k, m in enumerate(mags):
            fh.write(f"{k},{k * spectrum.bin_hz:.6f},{m:.9g}\n")
    # bins are spaced on the zero padded length, not the input length
    print(f"{len(signal)} samples padded to {len(spectrum.coefficients)}; bin spacing "
          f"{spectrum.bin_hz:.6f} Hz", file=sys.stderr)


def cmd_coherence(args):
    a = _mono(read_wav(args.a))
    b = _mono(read_wav(args.b))
    grid = _grid(args, a.sample_rate)
    smoothing = SmoothingConfig(args.sigma_scale, args.sigma_time)
    res = wavelet_coherence(a, b, grid, smoothing=smoothing, impl=args.impl)
    emit_heatmap(res.coherence, args.out, grid, res.coi if args.coi else None,
                 args.decimate, value_range=(0.0, 1.0))
    if args.phase:
        write_phase_csv(args.phase, res.phase, grid, a.sample_rate,
                        args.scale_stride, args.time_stride)


def cmd_identify(args):
    base = load_tunebase(args.tunebase)
    cfg = IdentifyConfig(
        f_min=args.fmin, f_max=args.fmax, n_scales=args.nfreqs, f0=args.f0,
        timbre=args.timbre, calibrate=not args.no_calibrate,
        restrict_to_coi=args.coi_only, seed=args.seed,
    )
    ranked = identify(read_wav(args.input), base, None, cfg)
    rows = ranked.matches if args.top is None else ranked.matches[: args.top]
    for m in rows:
        cal = "-" if m.calibrated is None else f"{m.calibrated:.6f}"
        print(f"{m.name}\t{m.score:.6f}\t{cal}")
    for tune_id, name, reason in ranked.skipped:
        print(f"skipped {name} ({tune_id}): {reason}", file=sys.stderr)


def cmd_bench(args):
    rows = run_benchmark(args.impl.split(","), _int_list(args.samples), args.scales, args.repeats)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("impl,n,scales,seconds\n")
        for impl, n, s, sec in rows:
            fh.write(f"{impl},{n},{s},{sec:.6f}\n")


def cmd_control(args):
    band = None
    if args.kind == "noise":
        band = _float_list(args.band)
        if len(band) != 2:
            raise SystemExit("--band needs two values, LO,HI")
    signal = control_signal(args.kind, args.duration, args.sr, band, seed=args.seed)
    write_wav(signal, args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="reelprint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a tune from the tunebase to WAV")
    p.add_argument("tune")
    p.add_argument("--setting", type=int, default=1)
    p.add_argument("--timbre", choices=["sine", "piano", "banjo"], default="piano")
    p.add_argument("--bpm", type=float, default=100.0)
    p.add_argument("--sr", type=float, default=8000.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tunebase", default=default_tunebase_path())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("scalogram", help="CWT magnitude heatmap of a WAV file")
    p.add_argument("input")
    _grid_flags(p, fmax=4000.0)
    p.add_argument("--impl", choices=["naive", "fft"], default="fft")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also write decimated CWT phase as CSV")
    p.add_argument("--coi", action="store_true", help="draw the cone of influence")
    p.add_argument("--scale-stride", type=int, default=16)
    p.add_argument("--time-stride", type=int, default=512)
    p.set_defaults(func=cmd_scalogram)

    p = sub.add_parser("gabor", help="Gabor (Gaussian-window STFT) heatmap")
    p.add_argument("input")
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--hop", type=int, required=True)
    p.add_argument("--bins", type=int, default=None, help="frequency rows, 0..Nyquist")
    p.add_argument("--decimate", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gabor)

    p = sub.add_parser("fftmag", help="one-sided FFT magnitudes as CSV")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fftmag)

    p = sub.add_parser("coherence", help="wavelet coherence heatmap of two WAV files")
    p.add_argument("a")
    p.add_argument("b")
    _grid_flags(p)
    p.add_argument("--impl", choices=["naive", "fft"], default="fft")
    p.add_argument("--sigma-scale", type=float, default=2.0)
    p.add_argument("--sigma-time", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.add_argument("--phase", help="write decimated phase CSV here")
    p.add_argument("--coi", action="store_true")
    p.add_argument("--scale-stride", type=int, default=16)
    p.add_argument("--time-stride", type=int, default=512)
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("identify", help="rank tunebase tunes against a recording")
    p.add_argument("input")
    p.add_argument("--tunebase", default=default_tunebase_path())
    p.add_argument("--fmin", type=float, default=200.0)
    p.add_argument("--fmax", type=float, default=1200.0)
    p.add_argument("--nfreqs", type=int, default=200)
    p.add_argument("--f0", type=float, default=5.0)
    p.add_argument("--timbre", choices=["sine", "piano", "banjo"], default="piano")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--no-calibrate", action="store_true")
    p.add_argument("--coi-only", action="store_true", help="score only cells inside the cone")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("bench", help="time the CWT implementations")
    p.add_argument("--impl", default="naive,fft")
    p.add_argument("--samples", required=True, help="comma-separated signal lengths")
    p.add_argument("--scales", type=int, default=64)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("control", help="write a blank or band-noise control signal")
    p.add_argument("--kind", choices=["blank", "noise"], required=True)
    p.add_argument("--band", default="200,3000")
    p.add_argument("--duration", type=float, default=19.2)
    p.add_argument("--sr", type=float, default=8000.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_control)
    return parser


def run_command(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        args.func(args)
    except (ReelprintError, OSError) as exc:
        print(f"reelprint {args.command}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"reelprint {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    return run_command(sys.argv[1:] if argv is None else argv)
