"""Core domain types and event-centered epoch extraction.

All types are immutable after construction and safe to share across
threads; epoch extraction is a pure function of its inputs.

Conventions:
  * sample blocks are ``channels x time`` float32 arrays (float32 is the
    at-rest dtype of the corpus format; DSP promotes to float64 internally),
  * ``t_event_s`` is relative to stimulus onset, not the session clock,
  * sample indices are derived with round-half-to-even so that results do
    not depend on the platform's default rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MissingBaseline, MissingModality, WindowOutOfBounds

MODALITIES = ("EEG", "ECG", "GSR", "PPG")

EMOTION_LABELS = ("Happiness", "Surprise", "Disgust", "Anger", "Fear", "Sadness")

INTENSITIES = ("Low", "Medium", "High")

#: physical units per modality (PPG is normalized, unit-free)
MODALITY_UNITS = {"EEG": "uV", "ECG": "uV", "GSR": "uS", "PPG": "a.u."}


def _round_half_even(x: float) -> int:
    return int(np.rint(x))


@dataclass(frozen=True)
class Recording:
    """One modality's multichannel sampled signal.

    ``samples`` has shape (n_channels, n_samples); ``start_time_s`` is the
    offset of sample 0 within the session clock.
    """

    modality: str
    channel_names: tuple[str, ...]
    sample_rate_hz: float
    samples: np.ndarray
    start_time_s: float = 0.0
    units: str = ""

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 2:
            raise ValueError("samples must be 2-D (channels x time)")
        if samples.shape[0] != len(self.channel_names):
            raise ValueError(
                f"{samples.shape[0]} sample rows vs {len(self.channel_names)} channel names"
            )
        if samples.shape[0] < 1:
            raise ValueError("recording needs at least one channel")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if not self.units:
            object.__setattr__(self, "units", MODALITY_UNITS[self.modality])

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray, sample_rate_hz: float | None = None) -> "Recording":
        """Copy of this recording with new sample data (and optionally a new rate)."""
        return replace(
            self,
            samples=samples,
            sample_rate_hz=self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz,
        )

    def assert_finite(self) -> None:
        if not np.all(np.isfinite(self.samples)):
            raise ValueError(f"{self.modality} recording contains NaN/Inf samples")


@dataclass(frozen=True)
class EmotionAnnotation:
    """A (t_event, label, intensity) triple marked during stimulus replay."""

    t_event_s: float
    label: str
    intensity: str
    session_id: str = ""
    participant_id: str = ""

    def __post_init__(self):
        if self.t_event_s < 0:
            raise ValueError("t_event_s must be >= 0")
        if self.label not in EMOTION_LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        if self.intensity not in INTENSITIES:
            raise ValueError(f"unknown intensity {self.intensity!r}")


@dataclass(frozen=True)
class Trial:
    """One stimulus presentation with its recordings and annotations.

    Spans are (start, end) pairs on the session clock; the baseline
    precedes the stimulus and the two never overlap. Annotations are
    anchored to stimulus onset.
    """

    trial_id: str
    stimulus_id: str
    baseline_span_s: tuple[float, float] | None
    stimulus_span_s: tuple[float, float]
    recordings: dict[str, Recording]
    annotations: tuple[EmotionAnnotation, ...] = ()
    participant_id: str = ""
    session_id: str = ""

    def __post_init__(self):
        s0, s1 = self.stimulus_span_s
        if not s0 < s1:
            raise ValueError("stimulus span must have positive duration")
        if self.baseline_span_s is not None:
            b0, b1 = self.baseline_span_s
            if not (b0 < b1 <= s0):
                raise ValueError("baseline must precede stimulus; spans must not overlap")
        for ann in self.annotations:
            if ann.t_event_s > self.stimulus_duration_s:
                raise ValueError(
                    f"annotation at t={ann.t_event_s} s outside {self.stimulus_duration_s} s stimulus"
                )
        object.__setattr__(self, "annotations", tuple(self.annotations))

    @property
    def stimulus_duration_s(self) -> float:
        return self.stimulus_span_s[1] - self.stimulus_span_s[0]

    @property
    def baseline_duration_s(self) -> float:
        if self.baseline_span_s is None:
            raise MissingBaseline(f"trial {self.trial_id} has no baseline span")
        return self.baseline_span_s[1] - self.baseline_span_s[0]

    def recording(self, modality: str) -> Recording:
        try:
            return self.recordings[modality]
        except KeyError:
            raise MissingModality(f"trial {self.trial_id} has no {modality} recording") from None

    def with_annotations(self, annotations) -> "Trial":
        return replace(self, annotations=tuple(annotations))

    def with_recordings(self, recordings: dict[str, Recording]) -> "Trial":
        return replace(self, recordings=dict(recordings))


@dataclass(frozen=True)
class EpochProvenance:
    trial_id: str
    shift_offset_s: float = 0.0
    strategy: str = "fine-grained"


@dataclass(frozen=True)
class Epoch:
    """Fixed-length multimodal window centered on an annotated event.

    ``blocks`` maps modality -> (channels x time) array whose length is
    round(window_duration * rate) samples for that modality.
    """

    annotation: EmotionAnnotation
    window_span_s: tuple[float, float]
    blocks: dict[str, np.ndarray]
    rates: dict[str, float]
    provenance: EpochProvenance

    @property
    def epoch_id(self) -> str:
        p = self.provenance
        return f"{p.trial_id}@{self.window_span_s[0]:.3f}s+{p.shift_offset_s:+.1f}"

    @property
    def label(self) -> str:
        return self.annotation.label

    def block(self, modality: str) -> np.ndarray:
        try:
            return self.blocks[modality]
        except KeyError:
            raise MissingModality(f"epoch {self.epoch_id} has no {modality} block") from None


def _slice_block(rec: Recording, t0_session: float, duration_s: float) -> np.ndarray:
    """Cut ``duration_s`` seconds starting at session time ``t0_session``.

    The block length is fixed to round(duration * rate) so all epochs of a
    modality have identical sample counts regardless of start alignment.
    """
    rate = rec.sample_rate_hz
    start = _round_half_even((t0_session - rec.start_time_s) * rate)
    n = _round_half_even(duration_s * rate)
    if start < 0 or start + n > rec.n_samples:
        raise WindowOutOfBounds(
            f"window [{t0_session}, {t0_session + duration_s}] s outside {rec.modality} recording"
        )
    return np.array(rec.samples[:, start:start + n])


def extract_epoch(
    trial: Trial,
    annotation: EmotionAnnotation,
    half_width_s: float = 2.0,
    modalities: tuple[str, ...] | None = None,
    shift_offset_s: float = 0.0,
    strategy: str = "fine-grained",
) -> Epoch:
    """Extract the [t_event - half_width, t_event + half_width] window.

    ``shift_offset_s`` moves the window center relative to t_event (used by
    the fine-grained dataset builder); bounds are checked against the
    stimulus span and never clamped: a window that would cross the span
    raises ``WindowOutOfBounds``.
    """
    center = annotation.t_event_s + shift_offset_s
    lo, hi = center - half_width_s, center + half_width_s
    if lo < 0 or hi > trial.stimulus_duration_s:
        raise WindowOutOfBounds(
            f"window [{lo:.3f}, {hi:.3f}] s crosses the {trial.stimulus_duration_s:.1f} s stimulus span"
        )
    wanted = modalities if modalities is not None else tuple(sorted(trial.recordings))
    t0 = trial.stimulus_span_s[0] + lo
    blocks, rates = {}, {}
    for modality in wanted:
        rec = trial.recording(modality)
        blocks[modality] = _slice_block(rec, t0, 2.0 * half_width_s)
        rates[modality] = rec.sample_rate_hz
    return Epoch(
        annotation=annotation,
        window_span_s=(lo, hi),
        blocks=blocks,
        rates=rates,
        provenance=EpochProvenance(trial.trial_id, shift_offset_s, strategy),
    )


def extract_baseline(trial: Trial, modalities: tuple[str, ...] | None = None) -> dict[str, np.ndarray]:
    """Return the full baseline block per modality."""
    if trial.baseline_span_s is None:
        raise MissingBaseline(f"trial {trial.trial_id} has no baseline span")
    b0, b1 = trial.baseline_span_s
    wanted = modalities if modalities is not None else tuple(sorted(trial.recordings))
    out = {}
    for modality in wanted:
        rec = trial.recording(modality)
        out[modality] = _slice_block(rec, b0, b1 - b0)
    return out
