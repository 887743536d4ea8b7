"""Deterministic synthetic multimodal corpus with a ground-truth ledger.

Every injected effect (event times, SCR parameters, band-power gains, R-R
series, pulse-amplitude schedules) is recorded so tests can compare the
analysis chain against construction. Per-trial random streams derive from
the master seed by stable hashing of (seed, subject, trial), so identical
specs yield byte-identical corpora regardless of generation order.

Signal models, kept only as realistic as the analysis chain measures:
  EEG  per-band filtered noise mixed at declared power ratios; event
       effects multiply one band's component inside [t-2, t+2]
  GSR  linearly declining tonic level plus bi-exponential SCRs
       (rise tau 0.75 s, decay tau 2 s) injected per arousal policy
  ECG  stylized PQRST template train over a configurable R-R series
  PPG  raised-cosine pulse train with a per-pulse amplitude schedule
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpec
from .features import DEFAULT_BANDS
from .model import EMOTION_LABELS, INTENSITIES, EmotionAnnotation, Recording, Trial
from .scr import HIGH_AROUSAL

BAND_NAMES = tuple(b.name for b in DEFAULT_BANDS)

_EVENT_HALF_S = 2.0
_EVENT_MARGIN_S = 4.0  # events keep this distance from the stimulus edges


@dataclass(frozen=True)
class BandEffect:
    """Multiply one band's amplitude by ``gain`` inside event windows of the
    listed emotions, on the listed channel indices."""

    band: str
    channels: tuple[int, ...]
    gain: float
    emotions: tuple[str, ...]


@dataclass(frozen=True)
class ScrPolicy:
    """When and how phasic responses are injected after events."""

    high_arousal_only: bool = True
    amplitude_range_us: tuple[float, float] = (0.1, 0.3)
    latency_range_s: tuple[float, float] = (0.2, 0.7)
    rise_tau_s: float = 0.75
    decay_tau_s: float = 2.0
    enabled: bool = True


@dataclass(frozen=True)
class SynthSpec:
    n_subjects: int = 10
    trials_per_subject: int = 6
    stimulus_duration_s: float = 60.0
    baseline_duration_s: float = 10.0
    events_per_trial: int = 1
    eeg_channels: int = 59
    eeg_rate_hz: float = 250.0
    ecg_rate_hz: float = 250.0
    gsr_rate_hz: float = 100.0
    ppg_rate_hz: float = 50.0
    #: relative power per band (delta, theta, alpha, beta, gamma)
    band_power_ratios: tuple[float, ...] = (1.0, 0.8, 1.5, 0.6, 0.3)
    eeg_scale_uv: float = 10.0
    band_effects: tuple[BandEffect, ...] = ()
    scr_policy: ScrPolicy = field(default_factory=ScrPolicy)
    gsr_level_us: float = 5.0
    gsr_decline_us_per_s: float = 0.01
    gsr_noise_us: float = 0.002
    rr_mean_s: float = 0.8
    rr_jitter_s: float = 0.02
    #: emotion -> R-R jitter (s) used for beats inside event windows
    rr_event_jitter_s: dict[str, float] = field(default_factory=dict)
    #: emotion -> fractional pulse-amplitude change applied in (t_event, t_event+2]
    ppg_event_delta: dict[str, float] = field(default_factory=dict)
    ppg_noise: float = 0.005
    ecg_noise_uv: float = 0.01
    master_seed: int = 0

    def validate(self) -> None:
        if self.n_subjects < 1 or self.trials_per_subject < 1 or self.events_per_trial < 1:
            raise InvalidSpec("counts must be >= 1")
        if self.stimulus_duration_s < 2 * _EVENT_MARGIN_S:
            raise InvalidSpec(f"stimulus must be >= {2 * _EVENT_MARGIN_S} s to place events")
        if self.baseline_duration_s <= 0:
            raise InvalidSpec("baseline duration must be positive")
        for rate in (self.eeg_rate_hz, self.ecg_rate_hz, self.gsr_rate_hz, self.ppg_rate_hz):
            if rate <= 0:
                raise InvalidSpec("rates must be positive")
        if len(self.band_power_ratios) != len(BAND_NAMES) or min(self.band_power_ratios) <= 0:
            raise InvalidSpec("band_power_ratios must give a positive power per band")
        if self.eeg_channels < 1:
            raise InvalidSpec("eeg_channels must be >= 1")
        for eff in self.band_effects:
            if eff.band not in BAND_NAMES:
                raise InvalidSpec(f"unknown band {eff.band!r}")
            if eff.gain <= 0:
                raise InvalidSpec("band-effect gain must be positive")
            if any(not 0 <= c < self.eeg_channels for c in eff.channels):
                raise InvalidSpec("band-effect channel index out of range")
            if any(e not in EMOTION_LABELS for e in eff.emotions):
                raise InvalidSpec("band-effect references an unknown emotion")
        lo, hi = self.scr_policy.amplitude_range_us
        if not 0 < lo <= hi:
            raise InvalidSpec("SCR amplitude range must be positive and ordered")


# -- ground truth -------------------------------------------------------------

@dataclass(frozen=True)
class InjectedScr:
    onset_s: float       # stimulus-relative
    amplitude_us: float
    event_index: int


@dataclass(frozen=True)
class AppliedBandEffect:
    band: str
    channels: tuple[int, ...]
    amplitude_gain: float
    event_index: int


@dataclass(frozen=True)
class TrialTruth:
    trial_id: str
    participant_id: str
    emotion: str
    event_times_s: tuple[float, ...]   # stimulus-relative
    scrs: tuple[InjectedScr, ...]
    band_effects: tuple[AppliedBandEffect, ...]
    rr_series_s: tuple[float, ...]
    pwa_deltas: tuple[float, ...]      # per event, fractional change


@dataclass(frozen=True)
class GroundTruth:
    trials: tuple[TrialTruth, ...]

    def for_trial(self, trial_id: str) -> TrialTruth:
        for t in self.trials:
            if t.trial_id == trial_id:
                return t
        raise KeyError(trial_id)

    @property
    def all_scrs(self) -> list[tuple[str, InjectedScr]]:
        return [(t.trial_id, s) for t in self.trials for s in t.scrs]


@dataclass(frozen=True)
class SynthCorpus:
    spec: SynthSpec
    trials: tuple[Trial, ...]
    truth: GroundTruth


def ground_truth(corpus: SynthCorpus) -> GroundTruth:
    """The injected-effect ledger of a generated corpus."""
    return corpus.truth


# -- waveform primitives -------------------------------------------------------

def scr_shape(duration_s: float, rate_hz: float, rise_tau_s: float = 0.75,
              decay_tau_s: float = 2.0) -> np.ndarray:
    """Bi-exponential electrodermal response, normalized to unit peak."""
    t = np.arange(int(round(duration_s * rate_hz))) / rate_hz
    w = np.exp(-t / decay_tau_s) - np.exp(-t / rise_tau_s)
    peak = w.max()
    return w / peak if peak > 0 else w


def ecg_beat_shape(rate_hz: float) -> tuple[np.ndarray, int]:
    """One stylized PQRST complex; returns (waveform, R sample index).

    Morphology is only faithful enough for R-peak detection: a tall narrow
    R flanked by small P/Q/S/T deflections.
    """
    t = np.arange(int(round(0.6 * rate_hz))) / rate_hz - 0.3
    def bump(center, width, amp):
        return amp * np.exp(-0.5 * ((t - center) / width) ** 2)
    wave = (
        bump(-0.2, 0.025, 0.15)    # P
        + bump(-0.035, 0.012, -0.1)  # Q
        + bump(0.0, 0.012, 1.0)    # R
        + bump(0.035, 0.012, -0.15)  # S
        + bump(0.2, 0.05, 0.3)     # T
    )
    r_index = int(np.argmax(wave))
    return wave, r_index


def ecg_train(r_times_s: np.ndarray, rate_hz: float, n_samples: int) -> np.ndarray:
    """Superimpose beat templates so each R peak lands on round(t * rate)."""
    wave, r_index = ecg_beat_shape(rate_hz)
    out = np.zeros(n_samples)
    for t in r_times_s:
        center = int(np.rint(t * rate_hz))
        start = center - r_index
        lo, hi = max(0, start), min(n_samples, start + wave.size)
        if lo < hi:
            out[lo:hi] += wave[lo - start:hi - start]
    return out


def ppg_pulse_train(beat_times_s: np.ndarray, amplitudes: np.ndarray,
                    rate_hz: float, n_samples: int, width_s: float = 0.35) -> np.ndarray:
    """Raised-cosine pulse per beat; peak value equals the beat's amplitude."""
    width = int(round(width_s * rate_hz))
    tau = np.arange(width) / max(width - 1, 1)
    shape = 0.5 * (1.0 - np.cos(2.0 * np.pi * tau))
    out = np.zeros(n_samples)
    for t, amp in zip(beat_times_s, amplitudes):
        start = int(np.rint(t * rate_hz)) - width // 2
        lo, hi = max(0, start), min(n_samples, start + width)
        if lo < hi:
            out[lo:hi] += amp * shape[lo - start:hi - start]
    return out


# -- per-trial generation --------------------------------------------------------

def _trial_rng(spec: SynthSpec, subject: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((spec.master_seed, subject, trial)))


def _event_times(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Events spread over equal slots of the stimulus, away from the edges."""
    usable = spec.stimulus_duration_s - 2 * _EVENT_MARGIN_S
    n = spec.events_per_trial
    slot = usable / n
    jitter = rng.uniform(0.0, max(slot - 1.0, 0.0), size=n)
    return _EVENT_MARGIN_S + np.arange(n) * slot + jitter


def _band_noise(rng: np.random.Generator, n_channels: int, n_samples: int,
                rate_hz: float, low_hz: float, high_hz: float) -> np.ndarray:
    """Gaussian noise whose spectrum sits strictly inside (low, high).

    Synthesized in the frequency domain so neighboring analysis bands see
    none of it; a small interior margin leaves room for the spectral
    spread of windowed gain modulation.
    """
    freqs = np.fft.rfftfreq(n_samples, 1.0 / rate_hz)
    margin = min(0.5, (high_hz - low_hz) / 4.0)
    sel = (freqs >= low_hz + margin) & (freqs <= high_hz - margin)
    spec = np.zeros((n_channels, freqs.size), dtype=complex)
    z = rng.standard_normal((n_channels, int(sel.sum()), 2))
    spec[:, sel] = z[..., 0] + 1j * z[..., 1]
    x = np.fft.irfft(spec, n=n_samples, axis=1)
    return x / np.sqrt(np.mean(x**2, axis=1, keepdims=True))


def _generate_eeg(spec: SynthSpec, rng: np.random.Generator, emotion: str,
                  event_times: np.ndarray, total_s: float,
                  stim_offset_s: float) -> tuple[np.ndarray, list[AppliedBandEffect]]:
    n = int(round(total_s * spec.eeg_rate_hz))
    total_power = sum(spec.band_power_ratios)
    mix = np.zeros((spec.eeg_channels, n))
    applied = []
    for band, power in zip(DEFAULT_BANDS, spec.band_power_ratios):
        comp = _band_noise(rng, spec.eeg_channels, n, spec.eeg_rate_hz,
                           band.low_hz, band.high_hz)
        comp *= math.sqrt(power / total_power)
        for eff in spec.band_effects:
            if eff.band != band.name or emotion not in eff.emotions:
                continue
            for k, t_event in enumerate(event_times):
                w0 = int(round((stim_offset_s + t_event - _EVENT_HALF_S) * spec.eeg_rate_hz))
                w1 = int(round((stim_offset_s + t_event + _EVENT_HALF_S) * spec.eeg_rate_hz))
                comp[list(eff.channels), w0:w1] *= eff.gain
                applied.append(AppliedBandEffect(band=band.name, channels=eff.channels,
                                                 amplitude_gain=eff.gain, event_index=k))
        mix += comp
    return spec.eeg_scale_uv * mix, applied


def _generate_gsr(spec: SynthSpec, rng: np.random.Generator, emotion: str,
                  event_times: np.ndarray, total_s: float,
                  stim_offset_s: float) -> tuple[np.ndarray, list[InjectedScr]]:
    n = int(round(total_s * spec.gsr_rate_hz))
    t = np.arange(n) / spec.gsr_rate_hz
    tonic = spec.gsr_level_us - spec.gsr_decline_us_per_s * t
    policy = spec.scr_policy
    scrs: list[InjectedScr] = []
    phasic = np.zeros(n)
    if policy.enabled and (not policy.high_arousal_only or emotion in HIGH_AROUSAL):
        shape = scr_shape(12.0, spec.gsr_rate_hz, policy.rise_tau_s, policy.decay_tau_s)
        for k, t_event in enumerate(event_times):
            latency = rng.uniform(*policy.latency_range_s)
            amplitude = rng.uniform(*policy.amplitude_range_us)
            onset = stim_offset_s + t_event + latency
            start = int(round(onset * spec.gsr_rate_hz))
            hi = min(n, start + shape.size)
            if start < hi:
                phasic[start:hi] += amplitude * shape[:hi - start]
                scrs.append(InjectedScr(onset_s=t_event + latency, amplitude_us=amplitude,
                                        event_index=k))
    noise = rng.normal(0.0, spec.gsr_noise_us, size=(2, n))
    signal = tonic + phasic
    return np.vstack([signal + noise[0], signal + noise[1]]), scrs


def _generate_rr(spec: SynthSpec, rng: np.random.Generator, emotion: str,
                 event_times: np.ndarray, total_s: float,
                 stim_offset_s: float) -> tuple[np.ndarray, np.ndarray]:
    """Beat times and the R-R series that produced them."""
    event_jitter = spec.rr_event_jitter_s.get(emotion)
    beats = [0.3]
    rr = []
    while beats[-1] < total_s - 0.3:
        in_event = any(
            abs(beats[-1] - (stim_offset_s + te)) <= _EVENT_HALF_S for te in event_times
        )
        jitter = event_jitter if (in_event and event_jitter is not None) else spec.rr_jitter_s
        step = float(np.clip(rng.normal(spec.rr_mean_s, jitter),
                             0.55 * spec.rr_mean_s, 1.45 * spec.rr_mean_s))
        rr.append(step)
        beats.append(beats[-1] + step)
    return np.asarray(beats[:-1]), np.asarray(rr[:-1])


def _generate_ecg(spec: SynthSpec, rng: np.random.Generator, beat_times: np.ndarray,
                  total_s: float) -> np.ndarray:
    n = int(round(total_s * spec.ecg_rate_hz))
    base = ecg_train(beat_times, spec.ecg_rate_hz, n)
    scales = (1.0, 0.6, 0.3)
    rows = [s * base + rng.normal(0.0, spec.ecg_noise_uv, size=n) for s in scales]
    return np.vstack(rows)


def _generate_ppg(spec: SynthSpec, rng: np.random.Generator, emotion: str,
                  beat_times: np.ndarray, event_times: np.ndarray, total_s: float,
                  stim_offset_s: float) -> tuple[np.ndarray, list[float]]:
    n = int(round(total_s * spec.ppg_rate_hz))
    pulse_times = beat_times + 0.25  # pulse transit delay
    amplitudes = 1.0 + rng.normal(0.0, 0.02, size=pulse_times.size)
    delta = spec.ppg_event_delta.get(emotion, 0.0)
    deltas = []
    for t_event in event_times:
        t0 = stim_offset_s + t_event
        inside = (pulse_times >= t0) & (pulse_times <= t0 + _EVENT_HALF_S)
        amplitudes[inside] *= 1.0 + delta
        deltas.append(delta)
    signal = ppg_pulse_train(pulse_times, amplitudes, spec.ppg_rate_hz, n)
    signal += rng.normal(0.0, spec.ppg_noise, size=n)
    return signal[None, :], deltas


def generate_trial(spec: SynthSpec, subject: int, trial_index: int) -> tuple[Trial, TrialTruth]:
    rng = _trial_rng(spec, subject, trial_index)
    emotion = EMOTION_LABELS[trial_index % len(EMOTION_LABELS)]
    total_s = spec.baseline_duration_s + spec.stimulus_duration_s
    stim0 = spec.baseline_duration_s
    event_times = _event_times(spec, rng)

    eeg, applied = _generate_eeg(spec, rng, emotion, event_times, total_s, stim0)
    gsr, scrs = _generate_gsr(spec, rng, emotion, event_times, total_s, stim0)
    beat_times, rr = _generate_rr(spec, rng, emotion, event_times, total_s, stim0)
    ecg = _generate_ecg(spec, rng, beat_times, total_s)
    ppg, pwa_deltas = _generate_ppg(spec, rng, emotion, beat_times, event_times, total_s, stim0)

    participant = f"P{subject + 1:02d}"
    trial_id = f"{participant}_t{trial_index:02d}"
    annotations = tuple(
        EmotionAnnotation(
            t_event_s=float(te), label=emotion,
            intensity=INTENSITIES[int(rng.integers(len(INTENSITIES)))],
            session_id="s01", participant_id=participant,
        )
        for te in event_times
    )

    def rec(modality, samples, rate, prefix):
        names = tuple(f"{prefix}{i + 1:02d}" for i in range(samples.shape[0]))
        return Recording(modality=modality, channel_names=names, sample_rate_hz=rate,
                         samples=samples, start_time_s=0.0)

    trial = Trial(
        trial_id=trial_id, stimulus_id=f"stim{trial_index:02d}",
        baseline_span_s=(0.0, spec.baseline_duration_s),
        stimulus_span_s=(stim0, stim0 + spec.stimulus_duration_s),
        recordings={
            "EEG": rec("EEG", eeg, spec.eeg_rate_hz, "E"),
            "ECG": rec("ECG", ecg, spec.ecg_rate_hz, "C"),
            "GSR": rec("GSR", gsr, spec.gsr_rate_hz, "G"),
            "PPG": rec("PPG", ppg, spec.ppg_rate_hz, "O"),
        },
        annotations=annotations,
        participant_id=participant, session_id="s01",
    )
    truth = TrialTruth(
        trial_id=trial_id, participant_id=participant, emotion=emotion,
        event_times_s=tuple(float(t) for t in event_times),
        scrs=tuple(scrs), band_effects=tuple(applied),
        rr_series_s=tuple(float(r) for r in rr),
        pwa_deltas=tuple(pwa_deltas),
    )
    return trial, truth


def generate_corpus(spec: SynthSpec) -> SynthCorpus:
    """Generate the full corpus; identical spec yields identical bytes."""
    spec.validate()
    trials, truths = [], []
    for s in range(spec.n_subjects):
        for k in range(spec.trials_per_subject):
            trial, truth = generate_trial(spec, s, k)
            trials.append(trial)
            truths.append(truth)
    return SynthCorpus(spec=spec, trials=tuple(trials), truth=GroundTruth(tuple(truths)))


# -- canonical spec profiles -------------------------------------------------------

def scr_validation_spec(n_subjects: int = 10, trials_per_subject: int = 6,
                        master_seed: int = 0) -> SynthSpec:
    """Phasic responses only inside high-arousal event windows."""
    return SynthSpec(
        n_subjects=n_subjects, trials_per_subject=trials_per_subject,
        eeg_channels=4, stimulus_duration_s=40.0,
        scr_policy=ScrPolicy(high_arousal_only=True, amplitude_range_us=(0.1, 0.3)),
        master_seed=master_seed,
    )


def null_spec(n_subjects: int = 8, trials_per_subject: int = 2, eeg_channels: int = 16,
              stimulus_duration_s: float = 30.0, master_seed: int = 0) -> SynthSpec:
    """No injected effects anywhere; for false-positive measurements."""
    return SynthSpec(
        n_subjects=n_subjects, trials_per_subject=trials_per_subject,
        eeg_channels=eeg_channels, stimulus_duration_s=stimulus_duration_s,
        scr_policy=ScrPolicy(enabled=False),
        master_seed=master_seed,
    )


def spectral_effect_spec(n_subjects: int = 8, eeg_channels: int = 20,
                         effect_channels: tuple[int, ...] = tuple(range(10, 20)),
                         gain: float = 0.5, master_seed: int = 0) -> SynthSpec:
    """Alpha-band suppression on a posterior channel block for Fear events."""
    return SynthSpec(
        n_subjects=n_subjects, trials_per_subject=6,
        eeg_channels=eeg_channels, stimulus_duration_s=30.0,
        band_effects=(BandEffect("alpha", effect_channels, gain, ("Fear",)),),
        scr_policy=ScrPolicy(enabled=False),
        master_seed=master_seed,
    )


def benchmark_spec(n_subjects: int = 20, trials_per_subject: int = 6,
                   eeg_channels: int = 16, stimulus_duration_s: float = 60.0,
                   master_seed: int = 0) -> SynthSpec:
    """Event-locked class signal in every modality, nothing elsewhere.

    Each emotion gets its own (band, channel block) amplitude signature plus
    distinct R-R jitter and pulse-amplitude modulation, all confined to
    [t_event - 2 s, t_event + 2 s]; windows away from events carry noise only.
    """
    blocks = [tuple(range(i, eeg_channels, 4)) for i in range(4)]
    boost, cut = 1.35, 0.72
    effects = (
        BandEffect("gamma", blocks[0], boost, ("Happiness",)),
        BandEffect("beta", blocks[1], boost, ("Surprise",)),
        BandEffect("theta", blocks[2], cut, ("Disgust",)),
        BandEffect("delta", blocks[3], boost, ("Anger",)),
        BandEffect("alpha", blocks[2] + blocks[3], cut, ("Fear",)),
        BandEffect("alpha", blocks[0] + blocks[1], boost, ("Sadness",)),
    )
    return SynthSpec(
        n_subjects=n_subjects, trials_per_subject=trials_per_subject,
        eeg_channels=eeg_channels, stimulus_duration_s=stimulus_duration_s,
        band_effects=effects,
        scr_policy=ScrPolicy(high_arousal_only=True, amplitude_range_us=(0.1, 0.3)),
        rr_event_jitter_s={
            "Happiness": 0.005, "Surprise": 0.03, "Disgust": 0.055,
            "Anger": 0.08, "Fear": 0.105, "Sadness": 0.13,
        },
        ppg_event_delta={
            "Happiness": -0.5, "Surprise": -0.3, "Disgust": -0.1,
            "Anger": 0.1, "Fear": 0.3, "Sadness": 0.5,
        },
        master_seed=master_seed,
    )
