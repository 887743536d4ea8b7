"""Band-power change statistics: Welch estimates, event-minus-baseline
differences, and group-level cluster-based permutation tests.

The permutation test controls the family-wise error rate over channels:
one-sample t per channel, sign-consistent suprathreshold channels grouped
by montage adjacency, observed cluster masses (sums of member t-values)
compared against the max-|mass| null distribution obtained by randomly
flipping each subject's sign. Permutations are vectorized; results are
deterministic given (data, seed) and independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import signal as sps
from scipy import stats as spstats

from .errors import (
    InsufficientData,
    SegmentTooShort,
    ShapeMismatch,
    TooFewSubjects,
)
from .features import DEFAULT_BANDS, BandDef
from .model import Epoch
from .montage import ElectrodeAdjacency


@dataclass(frozen=True)
class WelchParams:
    segment_s: float = 1.0
    overlap: float = 0.5
    window: str = "hann"


@dataclass(frozen=True)
class PsdEstimate:
    """Per-channel mean power in each band's [low, high) bin range."""

    band_power: np.ndarray  # (n_channels, n_bands)
    bands: tuple[BandDef, ...]
    params: WelchParams


def welch_psd(
    samples: np.ndarray,
    rate_hz: float,
    bands: tuple[BandDef, ...] = DEFAULT_BANDS,
    params: WelchParams = WelchParams(),
) -> PsdEstimate:
    """Averaged modified periodograms, reduced to band means.

    The same 1 s / 50 % overlap segmentation is used for event windows and
    baselines so both terms of a difference share spectral resolution.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    nperseg = int(round(params.segment_s * rate_hz))
    if x.shape[-1] < 2 * nperseg - int(nperseg * params.overlap):
        raise SegmentTooShort(
            f"need >= 2 Welch segments ({nperseg} samples each), got {x.shape[-1]} samples"
        )
    freqs, psd = sps.welch(
        x, fs=rate_hz, window=params.window, nperseg=nperseg,
        noverlap=int(nperseg * params.overlap), axis=-1,
    )
    power = np.empty((x.shape[0], len(bands)))
    for j, band in enumerate(bands):
        sel = (freqs >= band.low_hz) & (freqs < band.high_hz)
        if not np.any(sel):
            raise SegmentTooShort(f"no spectral bins inside band {band.name}")
        power[:, j] = psd[:, sel].mean(axis=-1)
    return PsdEstimate(band_power=power, bands=tuple(bands), params=params)


def delta_psd(event: PsdEstimate, baseline: PsdEstimate) -> np.ndarray:
    """Element-wise event-minus-baseline band power (linear, no transform)."""
    if event.band_power.shape != baseline.band_power.shape:
        raise ShapeMismatch(
            f"event {event.band_power.shape} vs baseline {baseline.band_power.shape}"
        )
    if tuple(b.name for b in event.bands) != tuple(b.name for b in baseline.bands):
        raise ShapeMismatch("band definitions differ between estimates")
    return event.band_power - baseline.band_power


@dataclass(frozen=True)
class Cluster:
    channels: tuple[int, ...]
    mass: float      # sum of member t-values (sign-consistent)
    p_value: float


@dataclass(frozen=True)
class ClusterTestResult:
    t_values: np.ndarray        # per channel
    effect_sizes: np.ndarray    # per channel, mean/SD of subject deltas
    clusters: tuple[Cluster, ...]
    threshold: float
    n_permutations: int
    alpha: float
    seed: int

    @property
    def significant_clusters(self) -> tuple[Cluster, ...]:
        return tuple(c for c in self.clusters if c.p_value < self.alpha)


_DEGENERATE_T = 1e12  # stands in for +-inf when sd = 0, keeps masses finite


def _t_map(data: np.ndarray) -> np.ndarray:
    n = data.shape[0]
    mean = data.mean(axis=0)
    sd = data.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = mean / (sd / np.sqrt(n))
    return np.where(sd > 0, t, np.sign(mean) * _DEGENERATE_T)


def _clusters_from_tmap(t: np.ndarray, threshold: float,
                        adjacency: ElectrodeAdjacency) -> list[tuple[list[int], float]]:
    """Sign-consistent connected suprathreshold groups and their masses."""
    found = []
    for sign in (1.0, -1.0):
        members = sign * t > threshold
        if not np.any(members):
            continue
        for comp in adjacency.connected_components(members):
            found.append((comp, float(t[comp].sum())))
    return found


def cluster_permutation_test(
    subject_deltas: np.ndarray,
    adjacency: ElectrodeAdjacency,
    n_permutations: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    threshold: float | None = None,
) -> ClusterTestResult:
    """Sign-flip max-cluster-mass test of subject deltas against zero.

    ``subject_deltas`` is (n_subjects, n_channels) for one band. The
    cluster-forming threshold defaults to the two-tailed t critical value
    at p = 0.05 with n_subjects - 1 degrees of freedom. Cluster p-values
    are (1 + #{permutation max |mass| >= |observed mass|}) / (1 + n).
    """
    data = np.asarray(subject_deltas, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeMismatch("subject_deltas must be (subjects, channels)")
    n_subjects, n_channels = data.shape
    if n_subjects < 5:
        raise TooFewSubjects(f"got {n_subjects} subjects, need >= 5")
    if adjacency.n_channels != n_channels:
        raise ShapeMismatch(
            f"adjacency covers {adjacency.n_channels} channels, data has {n_channels}"
        )
    if threshold is None:
        threshold = float(spstats.t.ppf(1.0 - 0.05 / 2.0, df=n_subjects - 1))

    t_obs = _t_map(data)
    sd = data.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        effect = np.where(sd > 0, data.mean(axis=0) / sd, 0.0)
    observed = _clusters_from_tmap(t_obs, threshold, adjacency)

    # vectorized sign-flip null: per-permutation t-maps via moment identities
    # (squares are sign-invariant, so only the mean changes under flips)
    rng = np.random.default_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(n_permutations, n_subjects))
    mean_sq = np.mean(data**2, axis=0)
    perm_means = signs @ data / n_subjects
    with np.errstate(divide="ignore", invalid="ignore"):
        perm_var = np.clip(mean_sq - perm_means**2, 0.0, None) * (n_subjects / (n_subjects - 1))
        perm_t = perm_means / np.sqrt(perm_var / n_subjects)
    perm_t = np.where(perm_var > 0, perm_t, np.sign(perm_means) * _DEGENERATE_T)

    null_max = np.zeros(n_permutations)
    for i in range(n_permutations):
        masses = [abs(m) for _, m in _clusters_from_tmap(perm_t[i], threshold, adjacency)]
        if masses:
            null_max[i] = max(masses)

    clusters = tuple(
        Cluster(
            channels=tuple(comp),
            mass=mass,
            p_value=float((1 + np.count_nonzero(null_max >= abs(mass))) / (1 + n_permutations)),
        )
        for comp, mass in observed
    )
    return ClusterTestResult(
        t_values=t_obs, effect_sizes=effect, clusters=clusters,
        threshold=threshold, n_permutations=n_permutations, alpha=alpha, seed=seed,
    )


def subject_mean_deltas(
    epochs: Sequence[Epoch],
    baselines: Mapping[str, np.ndarray],
    emotion: str,
    rate_hz: float,
    bands: tuple[BandDef, ...] = DEFAULT_BANDS,
    params: WelchParams = WelchParams(),
) -> tuple[np.ndarray, list[str]]:
    """Per-subject event-minus-baseline band power, averaged over each
    subject's events of ``emotion``.

    ``baselines`` maps trial_id -> EEG baseline block. Returns
    (subjects x channels x bands, subject ids).
    """
    per_subject: dict[str, list[np.ndarray]] = {}
    baseline_cache: dict[str, PsdEstimate] = {}
    for epoch in epochs:
        if epoch.label != emotion:
            continue
        trial_id = epoch.provenance.trial_id
        if trial_id not in baseline_cache:
            baseline_cache[trial_id] = welch_psd(baselines[trial_id], rate_hz, bands, params)
        event = welch_psd(epoch.block("EEG"), rate_hz, bands, params)
        delta = delta_psd(event, baseline_cache[trial_id])
        per_subject.setdefault(epoch.annotation.participant_id, []).append(delta)
    subjects = sorted(per_subject)
    if not subjects:
        raise InsufficientData(f"no epochs labeled {emotion}")
    stacked = np.stack([np.mean(per_subject[s], axis=0) for s in subjects])
    return stacked, subjects


def run_band_analysis(
    epochs: Sequence[Epoch],
    baselines: Mapping[str, np.ndarray],
    emotion: str,
    adjacency: ElectrodeAdjacency,
    rate_hz: float,
    bands: tuple[BandDef, ...] = DEFAULT_BANDS,
    n_permutations: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    params: WelchParams = WelchParams(),
) -> dict[str, ClusterTestResult]:
    """Group-level cluster test per band for one emotion.

    Each subject contributes one averaged delta; at least 5 subjects with
    at least one event of the emotion are required.
    """
    deltas, subjects = subject_mean_deltas(epochs, baselines, emotion, rate_hz, bands, params)
    if len(subjects) < 5:
        raise InsufficientData(
            f"{emotion}: only {len(subjects)} subjects with events, need >= 5"
        )
    results = {}
    for j, band in enumerate(bands):
        results[band.name] = cluster_permutation_test(
            deltas[:, :, j], adjacency,
            n_permutations=n_permutations, alpha=alpha, seed=seed,
        )
    return results
