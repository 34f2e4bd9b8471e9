"""Tune metadata, name/alias lookup and synthetic fingerprint caching.

A tunebase is a JSON array of records::

    {"tune_id": 1, "name": "The Galway Rambler", "aliases": ["..."],
     "rhythm": "reel", "mode": "Gmajor",
     "settings": [{"setting": 1, "abc": "..."}]}

Setting ABC may be a full tune (with X:/K: headers) or a bare body, as
exported by thesession.org; bare bodies get headers built from the record.
Settings are numbered from 1 in file order.
"""

from dataclasses import dataclass, field
import hashlib
import json
import os
import re
import struct
import threading

import numpy as np

from .abc_parser import encode_semitones, normalize_to_grid, parse_abc
from .coherence import smoothed_power
from .errors import (
    CorruptHeader,
    ReelprintError,
    SchemaError,
    SettingOutOfRange,
    UnknownTune,
)
from .synthesis import Timbre, render_tune
from .timefreq import MorletParams, Scalogram, cwt_fft, make_scale_grid

__all__ = [
    "preprocess_string",
    "TuneRecord",
    "TuneBase",
    "load_tunebase",
    "parse_tunebase",
    "default_tunebase_path",
    "FingerprintConfig",
    "FingerprintCache",
    "BuildReport",
    "build_fingerprints",
    "render_setting",
    "setting_semitones",
]


def preprocess_string(text):
    """Lowercase, drop a leading "the ", keep only letters and digits."""
    s = text.strip().lower()
    if s.startswith("the "):
        s = s[4:]
    return re.sub(r"[\W_]+", "", s)


@dataclass
class TuneRecord:
    tune_id: int
    name: str
    aliases: list = field(default_factory=list)
    rhythm: str = "reel"
    mode: str = ""
    settings: list = field(default_factory=list)  # ABC text; setting k is settings[k - 1]

    def setting(self, k):
        if not 1 <= k <= len(self.settings):
            raise SettingOutOfRange(
                f"{self.name!r} has {len(self.settings)} setting(s); asked for {k}"
            )
        return self.settings[k - 1]

    def abc(self, k=1):
        """Full ABC text of setting ``k``, headers added to a bare body."""
        text = self.setting(k)
        if re.search(r"^\s*K:", text, flags=re.M):
            return text
        meter = "4/4" if self.rhythm.lower() in ("reel", "") else ""
        lines = [f"X:{k}", f"T:{self.name}", f"R:{self.rhythm}"]
        if meter:
            lines.append(f"M:{meter}")
        lines += ["L:1/8", f"K:{self.mode}", text]
        return "\n".join(lines)


class TuneBase:
    """Records plus normalized-name and alias indices."""

    def __init__(self, records=()):
        self.records = list(records)
        self._by_name = {}
        self._by_alias = {}
        for rec in self.records:
            self._by_name.setdefault(preprocess_string(rec.name), rec)
        for rec in self.records:
            for alias in rec.aliases:
                self._by_alias.setdefault(preprocess_string(alias), rec)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def resolve(self, name, setting=1):
        """Return ``(record, abc_text, setting_count)``.

        Names are matched first, aliases second, both after
        :func:`preprocess_string`.
        """
        if setting < 1:
            raise SettingOutOfRange(f"settings are numbered from 1, got {setting}")
        key = preprocess_string(name)
        rec = self._by_name.get(key) or self._by_alias.get(key)
        if rec is None:
            raise UnknownTune(f"no tune or alias matches {name!r}")
        return rec, rec.abc(setting), len(rec.settings)

    def by_id(self, tune_id):
        for rec in self.records:
            if rec.tune_id == tune_id:
                return rec
        raise UnknownTune(f"no tune with id {tune_id}")


def _require(obj, key, kind, tune_id):
    if key not in obj:
        raise SchemaError(f"missing field {key!r}", tune_id)
    value = obj[key]
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise SchemaError(f"field {key!r} should be {kind.__name__}", tune_id)
    return value


def parse_tunebase(data):
    """Build a TuneBase from already-decoded JSON."""
    if not isinstance(data, list):
        raise SchemaError("top level must be an array of tune records")
    records = []
    for i, obj in enumerate(data):
        if not isinstance(obj, dict):
            raise SchemaError(f"record #{i} is not an object")
        tune_id = obj.get("tune_id")
        tune_id = _require(obj, "tune_id", int, tune_id if tune_id is not None else f"#{i}")
        name = _require(obj, "name", str, tune_id)
        aliases = obj.get("aliases", [])
        if not isinstance(aliases, list) or not all(isinstance(a, str) for a in aliases):
            raise SchemaError("field 'aliases' should be a list of strings", tune_id)
        rhythm = obj.get("rhythm", "reel")
        mode = obj.get("mode", "")
        if not isinstance(rhythm, str) or not isinstance(mode, str):
            raise SchemaError("fields 'rhythm' and 'mode' should be strings", tune_id)
        settings = _require(obj, "settings", list, tune_id)
        if not settings:
            raise SchemaError("settings array is empty", tune_id)
        abcs = []
        for s in settings:
            if not isinstance(s, dict) or not isinstance(s.get("abc"), str):
                raise SchemaError("each setting needs an 'abc' string", tune_id)
            abcs.append(s["abc"])
        records.append(TuneRecord(tune_id, name, aliases, rhythm, mode, abcs))
    return TuneBase(records)


def load_tunebase(path):
    """Load a tunebase JSON file (FileNotFoundError if absent)."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return parse_tunebase(data)


def default_tunebase_path():
    """The reel fixture shipped with the package."""
    return os.path.join(os.path.dirname(__file__), "data", "reels.json")


# Fingerprints

@dataclass(frozen=True)
class FingerprintConfig:
    """Every parameter a fingerprint depends on."""

    f_min: float = 200.0
    f_max: float = 1200.0
    n_scales: int = 200
    f0: float = 5.0
    bpm: float = 100.0
    sample_rate: float = 8000.0
    timbre: str = "piano"
    seed: int = 0
    setting: int = 1
    spacing: str = "log"

    def grid(self):
        return make_scale_grid(self.f_min, self.f_max, self.n_scales, self.sample_rate,
                               MorletParams(self.f0), self.spacing)

    def digest(self):
        """16-byte hash over all fields; changes whenever any field does."""
        fields = [
            ("f_min", float(self.f_min)), ("f_max", float(self.f_max)),
            ("n_scales", int(self.n_scales)), ("f0", float(self.f0)),
            ("bpm", float(self.bpm)), ("sample_rate", float(self.sample_rate)),
            ("timbre", Timbre.parse(self.timbre).value), ("seed", int(self.seed)),
            ("setting", int(self.setting)), ("spacing", self.spacing),
        ]
        text = ";".join(f"{k}={v!r}" for k, v in fields)
        return hashlib.blake2b(text.encode(), digest_size=16).digest()


MAGIC = b"RPFP"
VERSION = 1
_HEADER = struct.Struct("<4sIII16s")  # 32 bytes


def write_fingerprint(path, coefficients, digest):
    coefficients = np.ascontiguousarray(coefficients, dtype="<c16")
    rows, cols = coefficients.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, rows, cols, digest))
        fh.write(coefficients.tobytes())


def read_fingerprint(path, digest=None):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise CorruptHeader(f"{path}: truncated fingerprint header")
        magic, version, rows, cols, stored = _HEADER.unpack(head)
        if magic != MAGIC or version != VERSION:
            raise CorruptHeader(f"{path}: not a version {VERSION} fingerprint file")
        if digest is not None and stored != digest:
            return None
        body = fh.read()
    if len(body) != rows * cols * 16:
        raise CorruptHeader(f"{path}: expected {rows}x{cols} coefficients")
    return np.frombuffer(body, dtype="<c16").reshape(rows, cols).astype(np.complex128)


class FingerprintCache:
    """Scalograms keyed by ``(tune_id, setting, config digest)``.

    Held in memory, optionally backed by a directory with one file per tune.
    Reads are safe from several threads once building is done.
    """

    def __init__(self, config, directory=None):
        self.config = config
        self.digest = config.digest()
        self.grid = config.grid()
        self.directory = directory
        self._items = {}
        self._powers = {}
        self._lock = threading.Lock()
        if directory:
            os.makedirs(directory, exist_ok=True)

    def key(self, tune_id):
        return (tune_id, self.config.setting, self.digest)

    def _path(self, tune_id):
        return os.path.join(self.directory, f"{tune_id}-{self.config.setting}-{self.digest.hex()}.fp")

    def __contains__(self, tune_id):
        if self.key(tune_id) in self._items:
            return True
        return bool(self.directory) and os.path.exists(self._path(tune_id))

    def __len__(self):
        return len(self.tune_ids())

    def tune_ids(self):
        ids = {k[0] for k in self._items}
        if self.directory:
            suffix = f"-{self.config.setting}-{self.digest.hex()}.fp"
            for fname in os.listdir(self.directory):
                if fname.endswith(suffix):
                    head = fname[: -len(suffix)]
                    if head.lstrip("-").isdigit():
                        ids.add(int(head))
        return sorted(ids)

    def put(self, tune_id, coefficients):
        with self._lock:
            if self.directory:
                write_fingerprint(self._path(tune_id), coefficients, self.digest)
            else:
                self._items[self.key(tune_id)] = coefficients

    def get(self, tune_id):
        """Scalogram for a tune, or None when not cached under this config."""
        coefficients = self._items.get(self.key(tune_id))
        if coefficients is None and self.directory and os.path.exists(self._path(tune_id)):
            coefficients = read_fingerprint(self._path(tune_id), self.digest)
        if coefficients is None:
            return None
        return Scalogram(coefficients, self.grid, self.grid.sample_rate)


    def power(self, tune_id, smoothing=None):
        """Smoothed power of a fingerprint, computed once per smoothing config."""
        key = (tune_id, smoothing)
        p = self._powers.get(key)
        if p is None:
            fp = self.get(tune_id)
            if fp is None:
                return None
            p = smoothed_power(fp, smoothing)
            with self._lock:
                self._powers[key] = p
        return p


@dataclass
class BuildReport:
    built: list = field(default_factory=list)  # tune ids
    skipped: list = field(default_factory=list)  # (tune_id, name, error message)


def setting_semitones(record, setting=1):
    score = parse_abc(record.abc(setting))
    return encode_semitones(normalize_to_grid(score), score.key)


def render_setting(record, config):
    seq = setting_semitones(record, config.setting)
    return render_tune(seq, config.timbre, config.bpm, config.sample_rate, seed=config.seed)


def build_fingerprints(base, config=None, cache=None, directory=None):
    """Render and transform every tune; failures are reported, not raised.

    Returns ``(cache, report)``.  Tunes already in ``cache`` are left alone.
    """
    config = config or FingerprintConfig()
    cache = cache or FingerprintCache(config, directory)
    report = BuildReport()
    for rec in base:
        if rec.tune_id in cache:
            report.built.append(rec.tune_id)
            continue
        try:
            signal = render_setting(rec, config)
        except ReelprintError as exc:
            report.skipped.append((rec.tune_id, rec.name, str(exc)))
            continue
        cache.put(rec.tune_id, cwt_fft(signal, cache.grid).coefficients)
        report.built.append(rec.tune_id)
    return cache, report
