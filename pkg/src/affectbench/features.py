"""Per-epoch features over the four modalities.

One scalar family per modality:
  EEG  band-wise differential entropy 0.5*ln(2*pi*e*var) in nats, computed
       on zero-phase band-filtered segments, channel-major ordering
       (ch0/band0, ch0/band1, ..., ch1/band0, ...)
  GSR  skewness of the first derivative (phasic-rise asymmetry)
  ECG  RMSSD over R-R intervals inside the window, in seconds
  PPG  normalized pulse-wave-amplitude change rate between window halves

Variance uses the population (1/N) convention throughout; the derivative
in the GSR feature is the forward difference scaled by the sample rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import (
    DegenerateVariance,
    InsufficientPulses,
    NoPeaksFound,
    SegmentTooShort,
    TooFewIntervals,
)
from .model import Epoch
from .preprocess import FilterSpec, filter_array

_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class BandDef:
    name: str
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not 0 < self.low_hz < self.high_hz:
            raise ValueError(f"bad band {self.name}: [{self.low_hz}, {self.high_hz}]")


#: the five standard rhythms used for spectral features and statistics
DEFAULT_BANDS = (
    BandDef("delta", 1.0, 4.0),
    BandDef("theta", 4.0, 8.0),
    BandDef("alpha", 8.0, 13.0),
    BandDef("beta", 13.0, 30.0),
    BandDef("gamma", 30.0, 45.0),
)


def validate_bands(bands: tuple[BandDef, ...]) -> None:
    """Bands must be ordered and non-overlapping (shared edges allowed)."""
    for a, b in zip(bands, bands[1:]):
        if b.low_hz < a.high_hz:
            raise ValueError(f"bands {a.name} and {b.name} overlap")


def band_filter(samples: np.ndarray, rate_hz: float, band: BandDef) -> np.ndarray:
    """Zero-phase 4th-order Butterworth band extraction (last axis)."""
    return filter_array(samples, rate_hz, FilterSpec.butter_bandpass(band.low_hz, band.high_hz))


def differential_entropy(segment: np.ndarray, rate_hz: float, band: BandDef | None = None) -> float:
    """0.5*ln(2*pi*e*var) of the band-filtered segment, in nats.

    With band=None the segment is taken as already band-limited and used
    as-is. Raises DegenerateVariance instead of returning -inf when the
    band variance collapses below 1e-12.
    """
    x = np.asarray(segment, dtype=np.float64)
    if band is not None:
        if x.shape[-1] / rate_hz < 2.0 / band.low_hz:
            raise SegmentTooShort(
                f"{band.name} entropy needs >= {2.0 / band.low_hz:.1f} s, got {x.shape[-1] / rate_hz:.2f} s"
            )
        x = band_filter(x, rate_hz, band)
    elif x.shape[-1] < 2:
        raise SegmentTooShort("entropy needs at least 2 samples")
    var = float(np.var(x))
    if var < _VARIANCE_FLOOR:
        raise DegenerateVariance(f"band variance {var:.3e} below {_VARIANCE_FLOOR}")
    return 0.5 * math.log(2.0 * math.pi * math.e * var)


def _band_entropies(block: np.ndarray, rate_hz: float, bands: tuple[BandDef, ...]) -> np.ndarray:
    """(channels x bands) differential entropies, batched per band."""
    x = np.asarray(block, dtype=np.float64)
    out = np.empty((x.shape[0], len(bands)))
    for j, band in enumerate(bands):
        filtered = band_filter(x, rate_hz, band)
        var = np.var(filtered, axis=-1)
        bad = np.flatnonzero(var < _VARIANCE_FLOOR)
        if bad.size:
            raise DegenerateVariance(f"channel {int(bad[0])} has degenerate {band.name} variance")
        out[:, j] = 0.5 * np.log(2.0 * math.pi * math.e * var)
    return out


def gsr_derivative_skewness(segment: np.ndarray, rate_hz: float) -> float:
    """Skewness of the conductance first derivative over the window.

    A flat segment (derivative spread below 1e-12) yields 0.0: no phasic
    activity is a legitimate low-arousal observation, not an error.
    """
    x = np.asarray(segment, dtype=np.float64)
    if x.size < 3:
        raise SegmentTooShort("skewness needs at least 3 samples")
    v = np.diff(x) * rate_hz
    sigma = float(np.sqrt(np.mean((v - v.mean()) ** 2)))
    if sigma < _VARIANCE_FLOOR:
        return 0.0
    return float(np.mean((v - v.mean()) ** 3) / sigma**3)


def detect_r_peaks(ecg: np.ndarray, rate_hz: float, refractory_s: float = 0.2) -> np.ndarray:
    """R-peak indices via the classic derivative-energy chain.

    Band-pass 5-15 Hz, differentiate, square, 150 ms moving-window
    integration, adaptive signal/noise threshold, then refine each
    detection to the local extremum of the band-passed signal. A 200 ms
    refractory period is enforced on the output.
    """
    x = np.asarray(ecg, dtype=np.float64)
    if x.size < 2.0 * rate_hz:
        raise SegmentTooShort("R-peak detection needs at least 2 s of signal")
    bp = filter_array(x, rate_hz, FilterSpec.butter_bandpass(5.0, 15.0, order=2))
    energy = np.gradient(bp) ** 2
    win = max(1, int(round(0.15 * rate_hz)))
    integ = np.convolve(energy, np.ones(win) / win, mode="same")
    if float(integ.max()) <= 0.0:
        raise NoPeaksFound("no QRS energy in segment")

    distance = max(1, int(round(refractory_s * rate_hz)))
    candidates, _ = sps.find_peaks(integ, distance=distance)
    if candidates.size == 0:
        raise NoPeaksFound("no integration-window peaks")

    # adaptive running threshold (signal/noise level tracking)
    spk = float(integ[candidates].max()) * 0.5
    npk = float(np.median(integ))
    accepted = []
    for c in candidates:
        thr = npk + 0.25 * (spk - npk)
        if integ[c] >= thr:
            accepted.append(c)
            spk = 0.875 * spk + 0.125 * float(integ[c])
        else:
            npk = 0.875 * npk + 0.125 * float(integ[c])
    if not accepted:
        raise NoPeaksFound("no candidate exceeded the adaptive threshold")

    # refine to the band-passed extremum near each detection
    half = int(round(0.1 * rate_hz))
    refined = []
    for c in accepted:
        lo, hi = max(0, c - half), min(x.size, c + half + 1)
        refined.append(lo + int(np.argmax(np.abs(bp[lo:hi]))))
    refined = sorted(set(refined))

    # enforce refractory on refined positions, keeping the stronger peak
    out: list[int] = []
    for r in refined:
        if out and r - out[-1] < distance:
            if np.abs(bp[r]) > np.abs(bp[out[-1]]):
                out[-1] = r
        else:
            out.append(r)
    return np.asarray(out, dtype=int)


def rmssd(rr_intervals_s: np.ndarray) -> float:
    """Root mean square of successive R-R differences, seconds."""
    rr = np.asarray(rr_intervals_s, dtype=np.float64)
    if rr.size < 2:
        raise TooFewIntervals("RMSSD needs at least 2 R-R intervals")
    return float(np.sqrt(np.mean(np.diff(rr) ** 2)))


def _pulse_amplitudes(ppg: np.ndarray, rate_hz: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-pulse (peak - preceding valley) amplitudes and peak indices.

    The preceding valley is the minimum between the previous systolic peak
    (or the signal start) and the current peak.
    """
    x = np.asarray(ppg, dtype=np.float64)
    distance = max(1, int(round(0.3 * rate_hz)))
    prom = 0.05 * float(np.ptp(x)) if np.ptp(x) > 0 else None
    peaks, _ = sps.find_peaks(x, distance=distance, prominence=prom)
    amplitudes = np.empty(peaks.size)
    prev = 0
    for i, p in enumerate(peaks):
        amplitudes[i] = x[p] - float(x[prev:p + 1].min())
        prev = p
    return amplitudes, peaks.astype(int)


def delta_pwa(ppg: np.ndarray, rate_hz: float) -> float:
    """Pulse-wave-amplitude change rate between window halves.

    (mean second-half amplitude - mean first-half amplitude) / overall
    mean; reliable when each half covers >= 2 pulse cycles.
    """
    x = np.asarray(ppg, dtype=np.float64)
    amplitudes, peaks = _pulse_amplitudes(x, rate_hz)
    half = x.size / 2.0
    pre = amplitudes[peaks < half]
    post = amplitudes[peaks >= half]
    if pre.size == 0 or post.size == 0:
        raise InsufficientPulses(
            f"need pulses in both window halves, got {pre.size}/{post.size}"
        )
    total = float(amplitudes.mean())
    if total < _VARIANCE_FLOOR:
        raise InsufficientPulses("pulse amplitudes are all ~0")
    return float((post.mean() - pre.mean()) / total)


PERIPHERAL_NAMES = ("gsr_skewness", "ecg_rmssd", "ppg_delta_pwa")


@dataclass(frozen=True)
class FeatureVector:
    """All features of one epoch plus its label and provenance."""

    eeg_de: np.ndarray  # channels x bands, flattened channel-major
    gsr_skewness: float
    ecg_rmssd: float
    ppg_delta_pwa: float
    label: str
    epoch_id: str

    def peripheral(self, name: str) -> float:
        if name not in PERIPHERAL_NAMES:
            raise KeyError(name)
        return getattr(self, name)


def extract_features(epoch: Epoch, bands: tuple[BandDef, ...] = DEFAULT_BANDS) -> FeatureVector:
    """Assemble the full feature vector for a 4-modality epoch.

    EEG entries are ordered channel-major (all bands of channel 0, then
    channel 1, ...); errors from per-feature routines propagate with the
    epoch id attached.
    """
    validate_bands(bands)
    try:
        eeg = epoch.block("EEG")
        de = _band_entropies(eeg, epoch.rates["EEG"], bands).reshape(-1)
        skew = gsr_derivative_skewness(epoch.block("GSR")[0], epoch.rates["GSR"])
        ecg = epoch.block("ECG")[0]
        peaks = detect_r_peaks(ecg, epoch.rates["ECG"])
        rr = np.diff(peaks) / epoch.rates["ECG"]
        hrv = rmssd(rr)
        dpwa = delta_pwa(epoch.block("PPG")[0], epoch.rates["PPG"])
    except Exception as exc:
        exc.args = (f"epoch {epoch.epoch_id}: {exc}",)
        raise
    vec = FeatureVector(
        eeg_de=de, gsr_skewness=skew, ecg_rmssd=hrv, ppg_delta_pwa=dpwa,
        label=epoch.label, epoch_id=epoch.epoch_id,
    )
    values = np.concatenate([de, [skew, hrv, dpwa]])
    if not np.all(np.isfinite(values)):
        raise DegenerateVariance(f"non-finite feature in epoch {epoch.epoch_id}")
    return vec
