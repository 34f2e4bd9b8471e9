import json

import numpy as np
import pytest

from reelprint.errors import CorruptHeader, SchemaError, SettingOutOfRange, UnknownTune
from reelprint.tunebase import (
    FingerprintCache,
    FingerprintConfig,
    TuneBase,
    build_fingerprints,
    load_tunebase,
    parse_tunebase,
    preprocess_string,
    read_fingerprint,
    write_fingerprint,
)

SMALL = FingerprintConfig(n_scales=4, timbre="sine")


def record(**over):
    rec = {"tune_id": 1, "name": "Test", "aliases": [], "rhythm": "reel", "mode": "Cmajor",
           "settings": [{"setting": 1, "abc": "CCCCCCCC|" * 16}]}
    rec.update(over)
    return rec


def test_preprocess_string():
    assert preprocess_string("The Sailor's Bonnet") == "sailorsbonnet"
    assert preprocess_string("  Miss McLeod's Reel! ") == "missmcleodsreel"
    assert preprocess_string("Theodore") == "theodore"


def test_fixture_loads(tunebase):
    assert len(tunebase) >= 10
    ids = [r.tune_id for r in tunebase]
    assert len(set(ids)) == len(ids)


def test_resolve_name_and_alias(tunebase):
    rec, abc, count = tunebase.resolve("the galway rambler")
    assert rec.name == "The Galway Rambler" and count >= 1 and "K:" in abc
    for r in tunebase:
        for alias in r.aliases:
            assert tunebase.resolve(alias)[0].tune_id == r.tune_id


def test_synthetic_alias():
    base = parse_tunebase([record(aliases=["Other Name"])])
    assert base.resolve("other name")[0] is base.resolve("test")[0]


def test_name_beats_alias():
    base = parse_tunebase([record(tune_id=1, name="A", aliases=["B"]), record(tune_id=2, name="B")])
    assert base.resolve("B")[0].tune_id == 2


def test_resolve_errors(tunebase):
    with pytest.raises(UnknownTune):
        tunebase.resolve("no such tune xyz")
    with pytest.raises(SettingOutOfRange):
        tunebase.resolve("The Galway Rambler", 99)
    with pytest.raises(SettingOutOfRange):
        tunebase.resolve("The Galway Rambler", 0)


def test_bare_body_gets_headers():
    rec = parse_tunebase([record()]).records[0]
    text = rec.abc(1)
    assert "M:4/4" in text and "L:1/8" in text and text.rstrip().endswith("|")


def test_multiple_settings(tunebase):
    multi = [r for r in tunebase if len(r.settings) > 1]
    assert multi
    r = multi[0]
    assert tunebase.resolve(r.name, 2)[1] == r.abc(2) != r.abc(1)


@pytest.mark.parametrize(
    "bad",
    [
        {k: v for k, v in record(tune_id=7).items() if k != "settings"},
        record(tune_id=7, settings=[]),
        record(tune_id=7, name=3),
        record(tune_id=7, settings=[{"setting": 1}]),
    ],
)
def test_schema_errors_name_the_tune(bad):
    with pytest.raises(SchemaError) as exc:
        parse_tunebase([bad])
    assert exc.value.tune_id == 7


def test_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_tunebase(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SchemaError):
        load_tunebase(p)
    p.write_text(json.dumps({"tunes": []}))
    with pytest.raises(SchemaError):
        load_tunebase(p)


def test_empty_base():
    base = parse_tunebase([])
    assert len(base) == 0


def test_digest_covers_every_field():
    base = FingerprintConfig()
    changes = dict(f_min=150.0, f_max=1000.0, n_scales=100, f0=6.0, bpm=120.0,
                   sample_rate=16000.0, timbre="sine", seed=1, setting=2, spacing="linear")
    digests = {base.digest()}
    for k, v in changes.items():
        digests.add(FingerprintConfig(**{k: v}).digest())
    assert len(digests) == len(changes) + 1
    assert FingerprintConfig().digest() == base.digest()


def test_fingerprint_file_round_trip(tmp_path, rng):
    m = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    d = FingerprintConfig().digest()
    write_fingerprint(tmp_path / "a.fp", m, d)
    raw = (tmp_path / "a.fp").read_bytes()
    assert len(raw) == 32 + 15 * 16 and raw[:4] == b"RPFP"
    assert np.array_equal(read_fingerprint(tmp_path / "a.fp", d), m)
    assert read_fingerprint(tmp_path / "a.fp", SMALL.digest()) is None
    (tmp_path / "b.fp").write_bytes(raw[:20])
    with pytest.raises(CorruptHeader):
        read_fingerprint(tmp_path / "b.fp")


@pytest.fixture(scope="module")
def two_tunes(tunebase):
    return TuneBase(tunebase.records[:2])


def test_build_is_deterministic(two_tunes, tmp_path):
    cfg = FingerprintConfig(n_scales=4, timbre="piano", seed=3)
    mem, report = build_fingerprints(two_tunes, cfg)
    assert report.built == [r.tune_id for r in two_tunes] and not report.skipped
    disk, _ = build_fingerprints(two_tunes, cfg, directory=str(tmp_path))
    again, _ = build_fingerprints(two_tunes, cfg)
    for r in two_tunes:
        a = mem.get(r.tune_id).coefficients
        assert a.shape == (4, 153600)
        assert np.array_equal(a, again.get(r.tune_id).coefficients)
        assert np.array_equal(a, disk.get(r.tune_id).coefficients)
    reopened = FingerprintCache(cfg, str(tmp_path))
    assert reopened.tune_ids() == sorted(r.tune_id for r in two_tunes)
    other = FingerprintCache(FingerprintConfig(n_scales=4, timbre="piano", seed=4), str(tmp_path))
    assert other.tune_ids() == []


def test_bad_tune_is_skipped(two_tunes):
    bad = parse_tunebase([record(tune_id=99, settings=[{"setting": 1, "abc": "CCCC|" * 4}])])
    cache, report = build_fingerprints(TuneBase(list(two_tunes) + list(bad)), SMALL)
    assert [s[0] for s in report.skipped] == [99]
    assert 99 not in cache and cache.get(99) is None
