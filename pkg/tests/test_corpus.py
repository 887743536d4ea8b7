import json

import numpy as np
import pytest

from affectbench.corpus import (
    annotation_from_record,
    annotation_to_record,
    read_annotations,
    read_corpus,
    write_corpus,
)
from affectbench.errors import ChecksumMismatch, MalformedManifest, UnsupportedVersion
from affectbench.synth import SynthSpec, generate_corpus

from helpers import make_annotation


def _corpus(tmp_path, **kw):
    spec = SynthSpec(n_subjects=2, trials_per_subject=2, stimulus_duration_s=12.0,
                     eeg_channels=3, master_seed=3, **kw)
    corpus = generate_corpus(spec)
    root = write_corpus(corpus.trials, tmp_path / "corpus")
    return corpus, root


def test_round_trip_bit_identical(tmp_path):
    corpus, root = _corpus(tmp_path)
    loaded = read_corpus(root)
    assert len(loaded) == len(corpus.trials)
    for a, b in zip(corpus.trials, loaded):
        assert a.trial_id == b.trial_id
        assert a.annotations == b.annotations
        assert a.baseline_span_s == b.baseline_span_s
        assert a.stimulus_span_s == b.stimulus_span_s
        for modality in a.recordings:
            ra, rb = a.recordings[modality], b.recordings[modality]
            assert ra.channel_names == rb.channel_names
            assert ra.sample_rate_hz == rb.sample_rate_hz
            np.testing.assert_array_equal(ra.samples, rb.samples)


def test_corrupted_file_checksum(tmp_path):
    _, root = _corpus(tmp_path)
    victim = sorted((root / "data").iterdir())[0]
    raw = bytearray(victim.read_bytes())
    raw[7] ^= 0xFF
    victim.write_bytes(bytes(raw))
    with pytest.raises(ChecksumMismatch) as err:
        read_corpus(root)
    assert victim.name in str(err.value)


def test_future_version_rejected(tmp_path):
    _, root = _corpus(tmp_path)
    manifest = json.loads((root / "manifest.json").read_text())
    manifest["format_version"] = 99
    (root / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(UnsupportedVersion):
        read_corpus(root)


def test_malformed_manifest(tmp_path):
    _, root = _corpus(tmp_path)
    (root / "manifest.json").write_text("{not json")
    with pytest.raises(MalformedManifest):
        read_corpus(root)
    (root / "manifest.json").unlink()
    with pytest.raises(MalformedManifest):
        read_corpus(root)


def test_missing_data_file(tmp_path):
    _, root = _corpus(tmp_path)
    victim = sorted((root / "data").iterdir())[0]
    victim.unlink()
    with pytest.raises(MalformedManifest):
        read_corpus(root)


def test_annotation_record_round_trip(tmp_path):
    ann = make_annotation(t_event_s=12.5, label="Disgust", intensity="Low")
    record = annotation_to_record("trial9", ann)
    trial_id, back = annotation_from_record(record)
    assert trial_id == "trial9" and back == ann

    path = tmp_path / "ann.jsonl"
    path.write_text(json.dumps(record) + "\n\n" + json.dumps(record) + "\n")
    loaded = read_annotations(path)
    assert len(loaded) == 2 and loaded[0][1] == ann


def test_bad_annotation_record():
    with pytest.raises(MalformedManifest):
        annotation_from_record({"trial_id": "x", "label": "Fear"})
