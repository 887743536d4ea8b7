"""On-disk corpus format: JSON manifest + raw little-endian float32 blocks.

Layout of a corpus directory:

    manifest.json        index of trials, recording metadata, checksums
    annotations.jsonl    one annotation record per line
    data/<trial>_<modality>.f32   channel-major sample blocks

Samples are stored exactly as held in memory (float32), so write/read
round-trips are bit-identical; every data file carries a SHA-256 checksum
that is verified on read.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, MalformedManifest, UnsupportedVersion
from .model import EmotionAnnotation, Recording, Trial

FORMAT_VERSION = 1
_DTYPE = "<f4"


def annotation_to_record(trial_id: str, ann: EmotionAnnotation) -> dict:
    return {
        "trial_id": trial_id,
        "t_event_s": ann.t_event_s,
        "label": ann.label,
        "intensity": ann.intensity,
        "session_id": ann.session_id,
        "participant_id": ann.participant_id,
    }


def annotation_from_record(record: dict) -> tuple[str, EmotionAnnotation]:
    try:
        return record["trial_id"], EmotionAnnotation(
            t_event_s=float(record["t_event_s"]),
            label=record["label"],
            intensity=record["intensity"],
            session_id=record.get("session_id", ""),
            participant_id=record.get("participant_id", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedManifest(f"bad annotation record {record!r}: {exc}") from exc


def read_annotations(path: Path) -> list[tuple[str, EmotionAnnotation]]:
    """Parse a JSON-lines annotation file (as written here or by the
    annotation service)."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(annotation_from_record(json.loads(line)))
    return out


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_corpus(trials, path: str | Path) -> Path:
    """Serialize trials into ``path`` (created if needed)."""
    root = Path(path)
    (root / "data").mkdir(parents=True, exist_ok=True)
    manifest: dict = {"format_version": FORMAT_VERSION, "trials": []}
    annotations: list[dict] = []
    for trial in trials:
        entry = {
            "trial_id": trial.trial_id,
            "stimulus_id": trial.stimulus_id,
            "participant_id": trial.participant_id,
            "session_id": trial.session_id,
            "baseline_span_s": list(trial.baseline_span_s) if trial.baseline_span_s else None,
            "stimulus_span_s": list(trial.stimulus_span_s),
            "recordings": {},
        }
        for modality in sorted(trial.recordings):
            rec = trial.recordings[modality]
            rel = f"data/{trial.trial_id}_{modality}.f32"
            block = np.ascontiguousarray(rec.samples, dtype=_DTYPE)
            (root / rel).write_bytes(block.tobytes())
            entry["recordings"][modality] = {
                "file": rel,
                "channels": list(rec.channel_names),
                "rate_hz": rec.sample_rate_hz,
                "units": rec.units,
                "start_time_s": rec.start_time_s,
                "n_samples": rec.n_samples,
                "dtype": _DTYPE,
                "layout": "channel-major",
                "sha256": _sha256(root / rel),
            }
        manifest["trials"].append(entry)
        annotations.extend(annotation_to_record(trial.trial_id, a) for a in trial.annotations)
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    with open(root / "annotations.jsonl", "w", encoding="utf-8") as fh:
        for record in annotations:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return root


@dataclass(frozen=True)
class CorpusManifest:
    format_version: int
    trials: tuple[dict, ...]


def _load_manifest(root: Path) -> CorpusManifest:
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise MalformedManifest(f"no manifest.json under {root}")
    try:
        raw = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"manifest.json is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "format_version" not in raw or "trials" not in raw:
        raise MalformedManifest("manifest.json lacks format_version/trials")
    version = raw["format_version"]
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"corpus format {version}, this build reads {FORMAT_VERSION}")
    return CorpusManifest(format_version=version, trials=tuple(raw["trials"]))


def read_corpus(path: str | Path) -> list[Trial]:
    """Load a corpus directory, verifying checksums; raises
    ChecksumMismatch naming the offending file."""
    root = Path(path)
    manifest = _load_manifest(root)
    annotations_by_trial: dict[str, list[EmotionAnnotation]] = {}
    ann_path = root / "annotations.jsonl"
    if ann_path.exists():
        for trial_id, ann in read_annotations(ann_path):
            annotations_by_trial.setdefault(trial_id, []).append(ann)

    trials = []
    for entry in manifest.trials:
        try:
            recordings = {}
            for modality, meta in entry["recordings"].items():
                file_path = root / meta["file"]
                if not file_path.exists():
                    raise MalformedManifest(f"data file missing: {meta['file']}")
                actual = _sha256(file_path)
                if actual != meta["sha256"]:
                    raise ChecksumMismatch(
                        f"{meta['file']}: stored {meta['sha256'][:12]}..., got {actual[:12]}..."
                    )
                flat = np.frombuffer(file_path.read_bytes(), dtype=_DTYPE)
                n_channels = len(meta["channels"])
                samples = flat.reshape(n_channels, int(meta["n_samples"]))
                recordings[modality] = Recording(
                    modality=modality,
                    channel_names=tuple(meta["channels"]),
                    sample_rate_hz=float(meta["rate_hz"]),
                    samples=samples,
                    start_time_s=float(meta.get("start_time_s", 0.0)),
                    units=meta.get("units", ""),
                )
            baseline = entry["baseline_span_s"]
            trials.append(Trial(
                trial_id=entry["trial_id"],
                stimulus_id=entry["stimulus_id"],
                baseline_span_s=tuple(baseline) if baseline else None,
                stimulus_span_s=tuple(entry["stimulus_span_s"]),
                recordings=recordings,
                annotations=tuple(annotations_by_trial.get(entry["trial_id"], ())),
                participant_id=entry.get("participant_id", ""),
                session_id=entry.get("session_id", ""),
            ))
        except (ChecksumMismatch, UnsupportedVersion, MalformedManifest):
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedManifest(f"bad trial entry {entry.get('trial_id')!r}: {exc}") from exc
    return trials
