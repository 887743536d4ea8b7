"""Per-modality signal conditioning chain.

All filtering is zero-phase (forward-backward application) so event
timing is never shifted; the effective filter order therefore doubles.
Filters operate on float64 internally and results are cast back to the
recording's at-rest float32 dtype.

Defaults mirror the acquisition pipeline this package targets:
  EEG  250 Hz, windowed-sinc FIR band-pass 0.5-70 Hz, 50 Hz IIR notch (Q=30),
       variance-based bad-channel detection + inverse-distance repair
  ECG  4th-order Butterworth band-pass 0.5-40 Hz
  GSR  Butterworth low-pass 0.5 Hz (tonic component)
  PPG  4th-order Butterworth band-pass 0.5-8 Hz
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from .errors import (
    AllChannelsBad,
    InvalidBand,
    IrrationalRatio,
    TooFewChannels,
    UpsamplingNotSupported,
)
from .model import Recording
from .montage import Montage

FIR_KIND = "fir-bandpass"
NOTCH_KIND = "notch"
BUTTER_BP_KIND = "butterworth-bandpass"
BUTTER_LP_KIND = "butterworth-lowpass"

_KINDS = (FIR_KIND, NOTCH_KIND, BUTTER_BP_KIND, BUTTER_LP_KIND)


@dataclass(frozen=True)
class FilterSpec:
    """Declarative filter description, expressible in the pipeline config.

    ``band_hz`` is (low, high) for band-passes, (cutoff,) for low-pass, and
    (center,) for the notch. ``fir_transition_hz`` sets the windowed-sinc
    transition width (taps are derived from it unless ``fir_numtaps`` is
    given); ``notch_q`` is the notch quality factor.
    """

    kind: str
    band_hz: tuple[float, ...]
    order: int = 4
    fir_transition_hz: float = 0.25
    fir_numtaps: int | None = None
    notch_q: float = 30.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        nb = {FIR_KIND: 2, NOTCH_KIND: 1, BUTTER_BP_KIND: 2, BUTTER_LP_KIND: 1}[self.kind]
        if len(self.band_hz) != nb:
            raise ValueError(f"{self.kind} expects {nb} band edge(s)")
        object.__setattr__(self, "band_hz", tuple(float(f) for f in self.band_hz))

    @classmethod
    def fir_bandpass(cls, low_hz: float, high_hz: float, transition_hz: float = 0.25) -> "FilterSpec":
        return cls(kind=FIR_KIND, band_hz=(low_hz, high_hz), fir_transition_hz=transition_hz)

    @classmethod
    def notch(cls, freq_hz: float, q: float = 30.0) -> "FilterSpec":
        return cls(kind=NOTCH_KIND, band_hz=(freq_hz,), notch_q=q)

    @classmethod
    def butter_bandpass(cls, low_hz: float, high_hz: float, order: int = 4) -> "FilterSpec":
        return cls(kind=BUTTER_BP_KIND, band_hz=(low_hz, high_hz), order=order)

    @classmethod
    def butter_lowpass(cls, cutoff_hz: float, order: int = 4) -> "FilterSpec":
        return cls(kind=BUTTER_LP_KIND, band_hz=(cutoff_hz,), order=order)

    def validate_for_rate(self, rate_hz: float) -> None:
        nyq = rate_hz / 2.0
        edges = self.band_hz
        if any(not 0.0 < f < nyq for f in edges):
            raise InvalidBand(f"{self.kind} edges {edges} outside (0, {nyq}) Hz")
        if self.kind in (FIR_KIND, BUTTER_BP_KIND) and not edges[0] < edges[1]:
            raise InvalidBand(f"band-pass needs low < high, got {edges}")


def _fir_taps(spec: FilterSpec, rate_hz: float) -> np.ndarray:
    if spec.fir_numtaps is not None:
        numtaps = spec.fir_numtaps
    else:
        # Hamming main-lobe rule: transition ~ 3.3 / N (normalized to rate)
        numtaps = int(np.ceil(3.3 * rate_hz / spec.fir_transition_hz))
    numtaps |= 1  # odd length keeps a symmetric, type-I design
    return sps.firwin(numtaps, list(spec.band_hz), pass_zero=False, window="hamming", fs=rate_hz)


def filter_array(samples: np.ndarray, rate_hz: float, spec: FilterSpec) -> np.ndarray:
    """Zero-phase filter over the last axis; returns float64, same shape."""
    spec.validate_for_rate(rate_hz)
    x = np.asarray(samples, dtype=np.float64)
    if spec.kind == FIR_KIND:
        taps = _fir_taps(spec, rate_hz)
        padlen = 3 * len(taps)
        if x.shape[-1] <= padlen:
            raise InvalidBand(
                f"signal too short for {len(taps)}-tap FIR (needs > {padlen} samples); "
                "use a wider transition or a Butterworth band-pass"
            )
        return sps.filtfilt(taps, [1.0], x, axis=-1, padlen=padlen)
    if spec.kind == NOTCH_KIND:
        b, a = sps.iirnotch(spec.band_hz[0], spec.notch_q, fs=rate_hz)
        # pad past the notch ring-down (~Q cycles), not just 3 coefficients
        padlen = min(x.shape[-1] - 1, int(3.0 * spec.notch_q * rate_hz / spec.band_hz[0]))
        return sps.filtfilt(b, a, x, axis=-1, padlen=padlen)
    if spec.kind == BUTTER_BP_KIND:
        sos = sps.butter(spec.order, list(spec.band_hz), btype="bandpass", fs=rate_hz, output="sos")
    else:
        sos = sps.butter(spec.order, spec.band_hz[0], btype="lowpass", fs=rate_hz, output="sos")
    return sps.sosfiltfilt(sos, x, axis=-1)


def apply_filter(recording: Recording, spec: FilterSpec) -> Recording:
    """Zero-phase application of ``spec``; length and rate are preserved."""
    out = filter_array(recording.samples, recording.sample_rate_hz, spec)
    return recording.with_samples(out)


def resample(recording: Recording, target_hz: float) -> Recording:
    """Anti-aliased polyphase resampling down to ``target_hz``.

    Output length is round(n * target / source) (half-to-even); the ratio
    must reduce to a small rational.
    """
    source = recording.sample_rate_hz
    if target_hz > source:
        raise UpsamplingNotSupported(f"{source} Hz -> {target_hz} Hz would upsample")
    if target_hz == source:
        return recording
    ratio = Fraction(target_hz / source).limit_denominator(1000)
    if abs(float(ratio) - target_hz / source) > 1e-12:
        raise IrrationalRatio(f"rate ratio {target_hz}/{source} is not a small rational")
    up, down = ratio.numerator, ratio.denominator
    out = sps.resample_poly(recording.samples.astype(np.float64), up, down, axis=-1)
    n_expected = int(np.rint(recording.n_samples * float(ratio)))
    return recording.with_samples(out[:, :n_expected], sample_rate_hz=target_hz)


@dataclass(frozen=True)
class BadChannelReport:
    """Variance-rule flags: var(channel) > threshold x median(var)."""

    variances: tuple[float, ...]
    median_variance: float
    flagged: tuple[int, ...]
    threshold: float = 10.0
    repair_method: str = "inverse-distance"


def detect_bad_channels(recording: Recording, threshold: float = 10.0) -> BadChannelReport:
    if recording.n_channels < 3:
        raise TooFewChannels("bad-channel detection needs at least 3 channels")
    variances = np.var(recording.samples.astype(np.float64), axis=1)
    median = float(np.median(variances))
    flagged = tuple(int(c) for c in np.flatnonzero(variances > threshold * median))
    return BadChannelReport(
        variances=tuple(float(v) for v in variances),
        median_variance=median,
        flagged=flagged,
        threshold=threshold,
    )


def repair_channels(recording: Recording, report: BadChannelReport, montage: Montage) -> Recording:
    """Replace flagged channels with an inverse-distance-weighted (power 2)
    average of the good channels; good channels are untouched.

    Spatial interpolation stand-in for spline-based repair: same contract,
    simpler weights. Weights are normalized to sum to 1 per repaired channel.
    """
    if not report.flagged:
        return recording
    positions = montage.index_of(recording.channel_names)
    bad = set(report.flagged)
    good = [c for c in range(recording.n_channels) if c not in bad]
    if not good:
        raise AllChannelsBad("cannot repair: every channel is flagged")
    samples = recording.samples.astype(np.float64).copy()
    good_pos = positions[good]
    for c in sorted(bad):
        d = np.linalg.norm(good_pos - positions[c], axis=1)
        if np.any(d < 1e-12):
            w = (d < 1e-12).astype(np.float64)
        else:
            w = 1.0 / d**2
        w /= w.sum()
        samples[c] = w @ recording.samples[good].astype(np.float64)
    return recording.with_samples(samples)


@dataclass(frozen=True)
class ArtifactMask:
    """Half-open sample spans [start, end) where amplitude exceeded threshold."""

    spans: tuple[tuple[int, int], ...]
    n_samples: int
    threshold: float

    def overlaps(self, start: int, end: int) -> bool:
        return any(s < end and start < e for s, e in self.spans)


def amplitude_reject(recording: Recording, threshold: float) -> ArtifactMask:
    """Flag sample spans where any channel exceeds +-threshold.

    Heuristic stand-in for component-based artifact removal: downstream
    consumers exclude epochs overlapping flagged spans.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    hot = np.any(np.abs(recording.samples) > threshold, axis=0)
    spans = []
    idx = np.flatnonzero(np.diff(np.concatenate(([False], hot, [False])).astype(np.int8)))
    for start, end in zip(idx[0::2], idx[1::2]):
        spans.append((int(start), int(end)))
    return ArtifactMask(spans=tuple(spans), n_samples=recording.n_samples, threshold=threshold)


@dataclass(frozen=True)
class PreprocessConfig:
    """Which conditioning steps run per modality."""

    eeg_target_rate_hz: float = 250.0
    eeg_bandpass: FilterSpec = field(default_factory=lambda: FilterSpec.fir_bandpass(0.5, 70.0))
    eeg_notch: FilterSpec = field(default_factory=lambda: FilterSpec.notch(50.0))
    ecg_bandpass: FilterSpec = field(default_factory=lambda: FilterSpec.butter_bandpass(0.5, 40.0))
    gsr_lowpass: FilterSpec = field(default_factory=lambda: FilterSpec.butter_lowpass(0.5))
    ppg_bandpass: FilterSpec = field(default_factory=lambda: FilterSpec.butter_bandpass(0.5, 8.0))
    bad_channel_threshold: float = 10.0
    repair_bad_channels: bool = True


def preprocess_recording(
    recording: Recording,
    config: PreprocessConfig | None = None,
    montage: Montage | None = None,
) -> tuple[Recording, BadChannelReport | None]:
    """Run the modality's conditioning chain; EEG also gets channel repair
    when a montage is supplied."""
    cfg = config or PreprocessConfig()
    report = None
    if recording.modality == "EEG":
        rec = resample(recording, min(cfg.eeg_target_rate_hz, recording.sample_rate_hz))
        rec = apply_filter(rec, cfg.eeg_bandpass)
        rec = apply_filter(rec, cfg.eeg_notch)
        if cfg.repair_bad_channels and rec.n_channels >= 3 and montage is not None:
            report = detect_bad_channels(rec, cfg.bad_channel_threshold)
            rec = repair_channels(rec, report, montage)
    elif recording.modality == "ECG":
        rec = apply_filter(recording, cfg.ecg_bandpass)
    elif recording.modality == "GSR":
        rec = apply_filter(recording, cfg.gsr_lowpass)
    else:
        rec = apply_filter(recording, cfg.ppg_bandpass)
    rec.assert_finite()
    return rec, report


def preprocess_trial(trial, config: PreprocessConfig | None = None, montage: Montage | None = None):
    """Condition every recording of a trial; returns (trial, reports by modality)."""
    out, reports = {}, {}
    for modality, rec in trial.recordings.items():
        out[modality], report = preprocess_recording(rec, config, montage)
        if report is not None:
            reports[modality] = report
    return trial.with_recordings(out), reports
