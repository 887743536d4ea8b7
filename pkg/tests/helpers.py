"""Shared builders for test fixtures: minimal trials, sine/noise recordings."""

from __future__ import annotations

import numpy as np

from affectbench.model import EmotionAnnotation, Recording, Trial


def sine(freq_hz: float, rate_hz: float, duration_s: float, amplitude: float = 1.0, phase: float = 0.0):
    t = np.arange(int(round(duration_s * rate_hz))) / rate_hz
    return amplitude * np.sin(2.0 * np.pi * freq_hz * t + phase), t


def make_recording(modality="EEG", n_channels=4, rate_hz=250.0, duration_s=70.0,
                   start_time_s=0.0, fill=None, seed=0):
    n = int(round(duration_s * rate_hz))
    if fill is None:
        rng = np.random.default_rng(seed)
        samples = rng.standard_normal((n_channels, n))
    else:
        samples = np.full((n_channels, n), fill, dtype=float)
    names = tuple(f"{modality[0]}{i:02d}" for i in range(n_channels))
    return Recording(modality=modality, channel_names=names, sample_rate_hz=rate_hz,
                     samples=samples, start_time_s=start_time_s)


def make_trial(annotations=(), stimulus_duration_s=60.0, baseline_s=10.0, rates=None,
               n_eeg=4, seed=0, participant_id="P01", trial_id="T01"):
    """Trial laid out as [baseline | stimulus] from session time 0."""
    rates = rates or {"EEG": 250.0, "ECG": 250.0, "GSR": 100.0, "PPG": 50.0}
    total = baseline_s + stimulus_duration_s
    recordings = {}
    for i, (modality, rate) in enumerate(rates.items()):
        recordings[modality] = make_recording(
            modality=modality,
            n_channels=n_eeg if modality == "EEG" else (3 if modality == "ECG" else (2 if modality == "GSR" else 1)),
            rate_hz=rate, duration_s=total, seed=seed + i,
        )
    return Trial(
        trial_id=trial_id, stimulus_id="S01",
        baseline_span_s=(0.0, baseline_s),
        stimulus_span_s=(baseline_s, baseline_s + stimulus_duration_s),
        recordings=recordings,
        annotations=tuple(annotations),
        participant_id=participant_id, session_id="ses1",
    )


def make_annotation(t_event_s=30.0, label="Fear", intensity="High", participant_id="P01"):
    return EmotionAnnotation(t_event_s=t_event_s, label=label, intensity=intensity,
                             session_id="ses1", participant_id=participant_id)
