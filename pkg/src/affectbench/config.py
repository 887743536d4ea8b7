"""JSON config parsing for the CLI and service.

Top-level keys (all optional, commands read the sections they need):

  synth       corpus generator: {"profile": "benchmark"|"scr"|"null"|
              "spectral"|"default", ...SynthSpec field overrides...,
              "band_effects": [{"band","channels","gain","emotions"}, ...],
              "scr_policy": {...ScrPolicy fields...}}
  preprocess  {"eeg_target_rate_hz", "bad_channel_threshold",
              "repair_bad_channels"}
  bench       {"classifiers": [...], "combos": [...], "knn_k": int,
              "mlp": {...MlpConfig fields...}}
  psd         {"emotions": [...], "n_permutations", "alpha"}
  scr         {"threshold_us", "search_s", "concordance_window_s"}
  paradigms   {"immediate_ratings": [...], "delayed_ratings": [...],
              "delayed_annotations": "path.jsonl"}
  serve       {"host", "port", "data_dir", "ui_dir",
              "stimuli": [{"stimulus_id","duration_s","media_url","media_path"}]}
"""

from __future__ import annotations

import dataclasses
import inspect
import json
from pathlib import Path

from .errors import InvalidSpec, MalformedManifest
from .mlp import MlpConfig
from .preprocess import FilterSpec, PreprocessConfig
from .synth import (
    BandEffect,
    ScrPolicy,
    SynthSpec,
    benchmark_spec,
    null_spec,
    scr_validation_spec,
    spectral_effect_spec,
)

_PROFILES = {
    "default": SynthSpec,
    "benchmark": benchmark_spec,
    "scr": scr_validation_spec,
    "null": null_spec,
    "spectral": spectral_effect_spec,
}


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise MalformedManifest(f"config file {p} does not exist")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"config {p} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise MalformedManifest("config root must be a JSON object")
    return cfg


def synth_spec_from_config(cfg: dict, seed: int | None = None) -> SynthSpec:
    """Build a generator spec from the ``synth`` section; ``seed`` (the CLI
    flag) overrides the config's master_seed."""
    section = dict(cfg.get("synth", {}))
    profile = section.pop("profile", "default")
    if profile not in _PROFILES:
        raise InvalidSpec(f"unknown synth profile {profile!r} (have {sorted(_PROFILES)})")

    if "band_effects" in section:
        section["band_effects"] = tuple(
            BandEffect(
                band=e["band"], channels=tuple(e["channels"]),
                gain=float(e["gain"]), emotions=tuple(e["emotions"]),
            )
            for e in section["band_effects"]
        )
    if "scr_policy" in section:
        policy = dict(section["scr_policy"])
        for key in ("amplitude_range_us", "latency_range_s"):
            if key in policy:
                policy[key] = tuple(policy[key])
        section["scr_policy"] = ScrPolicy(**policy)

    known = {f.name for f in dataclasses.fields(SynthSpec)}
    unknown = set(section) - known
    if unknown:
        raise InvalidSpec(f"unknown synth fields {sorted(unknown)}")

    # route fields the profile factory understands through it (profiles
    # derive internals, e.g. channel groupings, from those arguments)
    factory = _PROFILES[profile]
    factory_params = set(inspect.signature(factory).parameters)
    factory_kwargs = {k: section.pop(k) for k in list(section) if k in factory_params}
    spec = dataclasses.replace(factory(**factory_kwargs), **section)
    if seed is not None:
        spec = dataclasses.replace(spec, master_seed=seed)
    return spec


_FILTER_FIELDS = ("eeg_bandpass", "eeg_notch", "ecg_bandpass", "gsr_lowpass", "ppg_bandpass")


def preprocess_config_from_config(cfg: dict) -> PreprocessConfig:
    """Build the conditioning-chain config; filter specs are JSON objects
    with the FilterSpec fields ({"kind", "band_hz", ...})."""
    section = dict(cfg.get("preprocess", {}))
    for name in _FILTER_FIELDS:
        if name in section:
            spec = dict(section[name])
            if "band_hz" in spec:
                spec["band_hz"] = tuple(spec["band_hz"])
            section[name] = FilterSpec(**spec)
    known = {f.name for f in dataclasses.fields(PreprocessConfig)}
    unknown = set(section) - known
    if unknown:
        raise InvalidSpec(f"unknown preprocess fields {sorted(unknown)}")
    return PreprocessConfig(**section)


def mlp_config_from_config(cfg: dict, seed: int = 0) -> MlpConfig:
    section = dict(cfg.get("bench", {}).get("mlp", {}))
    if "hidden" in section:
        section["hidden"] = tuple(section["hidden"])
    known = {f.name for f in dataclasses.fields(MlpConfig)}
    unknown = set(section) - known
    if unknown:
        raise InvalidSpec(f"unknown mlp fields {sorted(unknown)}")
    return MlpConfig(**{"seed": seed, **section})
