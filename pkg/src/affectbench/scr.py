"""Skin-conductance response detection and autonomic validation metrics.

An SCR is a phasic trough-to-peak rise in conductance; a response counts
as "valid" when its trough-to-peak amplitude reaches 0.05 uS. Detection
assumes the tonic low-pass from the preprocessing chain has already been
applied (raw sensor noise would fragment the rises).

The six labels split into arousal groups: high = Fear, Surprise,
Happiness, Anger; low = Sadness, Disgust.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import signal as sps
from scipy import stats as spstats

from .errors import DegenerateGroup, EmptyEventSet, MissingEmotion
from .model import EMOTION_LABELS, Trial

VALID_SCR_THRESHOLD_US = 0.05
CANDIDATE_AMPLITUDE_US = 0.01

HIGH_AROUSAL = ("Fear", "Surprise", "Happiness", "Anger")
LOW_AROUSAL = ("Sadness", "Disgust")


@dataclass(frozen=True)
class ArousalGroup:
    name: str
    members: tuple[str, ...]


HIGH_GROUP = ArousalGroup("high", HIGH_AROUSAL)
LOW_GROUP = ArousalGroup("low", LOW_AROUSAL)


@dataclass(frozen=True)
class ScrEvent:
    """One phasic rise; times are seconds from the start of the signal."""

    onset_s: float
    peak_s: float
    amplitude_us: float

    @property
    def rise_time_s(self) -> float:
        return self.peak_s - self.onset_s


def detect_scr(
    gsr: np.ndarray,
    rate_hz: float,
    window_span_s: tuple[float, float] | None = None,
    min_amplitude_us: float = CANDIDATE_AMPLITUDE_US,
) -> list[ScrEvent]:
    """Find trough-to-peak rises with amplitude >= ``min_amplitude_us``.

    Peaks are located by prominence (so the declining tonic drift does not
    mask them); each peak's onset is the minimum since the previous peak.
    An empty list is a valid result. Adding a constant to the signal does
    not change the output (amplitudes are differences).
    """
    x = np.asarray(gsr, dtype=np.float64)
    offset = 0.0
    if window_span_s is not None:
        lo, hi = window_span_s
        i0, i1 = max(0, int(np.floor(lo * rate_hz))), min(x.size, int(np.ceil(hi * rate_hz)) + 1)
        x = x[i0:i1]
        offset = i0 / rate_hz
    if x.size < 3:
        return []
    wlen = int(round(10.0 * rate_hz))
    peaks, _ = sps.find_peaks(x, prominence=min_amplitude_us, wlen=wlen)
    events = []
    prev = 0
    for p in peaks:
        trough = prev + int(np.argmin(x[prev:p + 1]))
        amplitude = float(x[p] - x[trough])
        if amplitude >= min_amplitude_us:
            events.append(ScrEvent(
                onset_s=offset + trough / rate_hz,
                peak_s=offset + p / rate_hz,
                amplitude_us=amplitude,
            ))
        prev = p
    return events


def max_scr_amplitude_after(events: Iterable[ScrEvent], t_s: float, search_s: float = 2.0) -> float:
    """Largest SCR amplitude whose peak falls in (t, t + search_s]; 0 if none."""
    amps = [e.amplitude_us for e in events if t_s < e.peak_s <= t_s + search_s]
    return max(amps) if amps else 0.0


def gsr_increase_percentage(
    per_participant_amplitudes: Sequence[Sequence[float]],
    threshold_us: float = VALID_SCR_THRESHOLD_US,
) -> float:
    """Percentage of events whose post-event max SCR amplitude exceeds the
    threshold, over the total event count (n subjects x mean events each)."""
    total = sum(len(a) for a in per_participant_amplitudes)
    if total == 0:
        raise EmptyEventSet("no events to score")
    over = sum(1 for amps in per_participant_amplitudes for a in amps if a > threshold_us)
    return 100.0 * over / total


def event_scr_amplitudes(trial: Trial, search_s: float = 2.0) -> list[tuple[str, float]]:
    """(label, post-event max SCR amplitude) for every annotation of a trial.

    SCRs are detected on the trial's full GSR channel 0; the search window
    is (t_event, t_event + search_s] on the stimulus clock.
    """
    rec = trial.recording("GSR")
    events = detect_scr(rec.samples[0], rec.sample_rate_hz)
    stim0 = trial.stimulus_span_s[0] - rec.start_time_s
    out = []
    for ann in trial.annotations:
        amp = max_scr_amplitude_after(events, stim0 + ann.t_event_s, search_s)
        out.append((ann.label, amp))
    return out


def increase_percentages_by_emotion(
    trials: Sequence[Trial],
    threshold_us: float = VALID_SCR_THRESHOLD_US,
    search_s: float = 2.0,
) -> dict[str, float]:
    """Per-emotion GSR increase percentage across all participants."""
    by_emotion: dict[str, dict[str, list[float]]] = {e: {} for e in EMOTION_LABELS}
    for trial in trials:
        for label, amp in event_scr_amplitudes(trial, search_s):
            by_emotion[label].setdefault(trial.participant_id, []).append(amp)
    out = {}
    for emotion, per_participant in by_emotion.items():
        if per_participant:
            out[emotion] = gsr_increase_percentage(list(per_participant.values()), threshold_us)
    return out


def arousal_group_contrast(per_emotion: dict[str, float]) -> tuple[float, float]:
    """Unweighted (high-group mean, low-group mean) over the six emotions."""
    missing = [e for e in EMOTION_LABELS if e not in per_emotion]
    if missing:
        raise MissingEmotion(f"percentages missing for {missing}")
    high = float(np.mean([per_emotion[e] for e in HIGH_AROUSAL]))
    low = float(np.mean([per_emotion[e] for e in LOW_AROUSAL]))
    return high, low


def scr_concordance(
    trials: Sequence[Trial],
    window_s: float = 4.0,
    labels: tuple[str, ...] = HIGH_AROUSAL,
    threshold_us: float = VALID_SCR_THRESHOLD_US,
) -> float:
    """Fraction of annotated events whose centered window contains at least
    one valid SCR peak (amplitude >= threshold)."""
    hits = 0
    total = 0
    half = window_s / 2.0
    for trial in trials:
        rec = trial.recording("GSR")
        events = [e for e in detect_scr(rec.samples[0], rec.sample_rate_hz)
                  if e.amplitude_us >= threshold_us]
        stim0 = trial.stimulus_span_s[0] - rec.start_time_s
        for ann in trial.annotations:
            if ann.label not in labels:
                continue
            total += 1
            t = stim0 + ann.t_event_s
            if any(t - half <= e.peak_s <= t + half for e in events):
                hits += 1
    if total == 0:
        raise EmptyEventSet("no annotations with the requested labels")
    return hits / total


@dataclass(frozen=True)
class ConsistencyStats:
    """Dispersion summary of one rating group plus the shared variance test."""

    mean: float
    sd: float
    coefficient_of_variation: float
    levene_f: float
    levene_p: float


def brown_forsythe(group_a: Sequence[float], group_b: Sequence[float]) -> tuple[float, float]:
    """Median-centered variance-equality test (one-way ANOVA on absolute
    deviations from each group's median).

    Both groups all-identical is a degenerate no-dispersion case and yields
    (0.0, 1.0) by convention.
    """
    groups = [np.asarray(g, dtype=np.float64) for g in (group_a, group_b)]
    if any(g.size < 2 for g in groups):
        raise DegenerateGroup("each group needs at least 2 ratings")
    z = [np.abs(g - np.median(g)) for g in groups]
    n_total = sum(g.size for g in z)
    grand = float(np.concatenate(z).mean())
    ssb = sum(g.size * (g.mean() - grand) ** 2 for g in z)
    ssw = sum(float(((g - g.mean()) ** 2).sum()) for g in z)
    df1, df2 = len(z) - 1, n_total - len(z)
    if ssw <= 0.0:
        if ssb <= 0.0:
            return 0.0, 1.0
        return float("inf"), 0.0
    f = (ssb / df1) / (ssw / df2)
    return float(f), float(spstats.f.sf(f, df1, df2))


def consistency_stats(
    group_a: Sequence[float], group_b: Sequence[float]
) -> tuple[ConsistencyStats, ConsistencyStats]:
    """Mean/SD/CV per rating group plus the shared Brown-Forsythe F and p."""
    f, p = brown_forsythe(group_a, group_b)
    out = []
    for g in (group_a, group_b):
        arr = np.asarray(g, dtype=np.float64)
        mean = float(arr.mean())
        sd = float(arr.std(ddof=1))
        cv = sd / mean if mean != 0 else float("inf")
        out.append(ConsistencyStats(mean=mean, sd=sd, coefficient_of_variation=cv,
                                    levene_f=f, levene_p=p))
    return out[0], out[1]
