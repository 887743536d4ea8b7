"""Acceptance gate: one test per release criterion, at pinned tolerances.

Heavy statistical checks run on deterministic seeds, so results are exact
across runs; the terminal summary (conftest) prints one PASS/FAIL line per
criterion.
"""

import json
import math

import numpy as np
import pytest
import scipy.stats as spstats

from affectbench.cli import main as cli_main
from affectbench.features import (
    BandDef,
    delta_pwa,
    differential_entropy,
    gsr_derivative_skewness,
    rmssd,
)
from affectbench.harness import FINE, WHOLE, assemble_dataset, build_fine_dataset, build_whole_dataset, run_benchmark
from affectbench.model import EMOTION_LABELS, extract_epoch
from affectbench.montage import adjacency_from_montage, spherical_cap_montage
from affectbench.preprocess import FilterSpec, filter_array
from affectbench.scr import (
    arousal_group_contrast,
    brown_forsythe,
    detect_scr,
    increase_percentages_by_emotion,
)
from affectbench.spectral import cluster_permutation_test
from affectbench.synth import benchmark_spec, generate_corpus, ppg_pulse_train, scr_validation_spec

from helpers import make_annotation, make_trial


# -- criterion: feature formulas vs oracles (tolerance 1e-9, < 10 s) -----------------

def test_feature_formulas_match_oracles():
    # closed forms of the band-entropy formula
    x = np.array([-1.0, 1.0] * 500)  # population variance exactly 1
    assert abs(differential_entropy(x, 250.0) - 0.5 * math.log(2 * math.pi * math.e)) < 1e-9
    a = math.sqrt(1.0 / (2 * math.pi * math.e))
    assert abs(differential_entropy(np.array([-a, a] * 500), 250.0)) < 1e-9

    # RMSSD hand cases
    assert abs(rmssd([0.8, 1.0]) - 0.2) < 1e-9
    assert abs(rmssd([1.0, 0.9, 1.1]) - math.sqrt((0.01 + 0.04) / 2.0)) < 1e-9

    # pulse-amplitude change-rate hand case: 1.0 -> 1.2 against overall 1.1
    times = 0.45 + np.arange(4) * 0.9
    signal = ppg_pulse_train(times, np.array([1.0, 1.0, 1.2, 1.2]), 50.0, 200)
    assert abs(delta_pwa(signal, 50.0) - (1.2 - 1.0) / 1.1) < 1e-9

    # derivative skewness vs the direct definition on 1000 random segments
    rng = np.random.default_rng(12345)
    for _ in range(1000):
        seg = np.cumsum(rng.standard_normal(64)) * rng.uniform(0.01, 2.0)
        v = np.diff(seg) * 100.0
        mu = v.mean()
        sigma = math.sqrt(float(np.mean((v - mu) ** 2)))
        expected = 0.0 if sigma < 1e-12 else float(np.mean((v - mu) ** 3)) / sigma**3
        assert abs(gsr_derivative_skewness(seg, 100.0) - expected) < 1e-9


# -- criterion: filter conformance (< 30 s) --------------------------------------------

def _attenuation_db(spec, freq, rate=250.0, duration=120.0):
    t = np.arange(int(duration * rate)) / rate
    x = np.sin(2 * np.pi * freq * t)
    y = filter_array(x, rate, spec)
    mid = slice(int(0.2 * x.size), int(0.8 * x.size))
    return -20.0 * np.log10(np.sqrt(np.mean(y[mid] ** 2) / np.mean(x[mid] ** 2)))


def test_filter_conformance():
    notch = FilterSpec.notch(50.0)
    ecg = FilterSpec.butter_bandpass(0.5, 40.0)

    assert _attenuation_db(notch, 50.0) >= 20.0
    assert abs(_attenuation_db(ecg, 10.0)) <= 1.0          # passband ripple
    assert _attenuation_db(ecg, 0.1) >= 20.0               # stopband floor

    # zero-phase: cross-correlation peak lag is 0 samples for every filter
    rng = np.random.default_rng(99)
    rate = 250.0
    x = filter_array(rng.standard_normal(int(80 * rate)), rate,
                     FilterSpec.butter_bandpass(5.0, 15.0))
    for spec in (notch, ecg, FilterSpec.fir_bandpass(0.5, 70.0)):
        y = filter_array(x, rate, spec)
        lags = np.arange(-40, 41)
        xc = [float(np.dot(x[40:-40], y[40 + lag:y.size - 40 + lag])) for lag in lags]
        assert lags[int(np.argmax(xc))] == 0


# -- criterion: cluster permutation validity (< 10 min) -----------------------------------

_MONTAGE59 = spherical_cap_montage(59)
_ADJ59 = adjacency_from_montage(_MONTAGE59)


def _connected_region(adjacency, size=20, start=0):
    region, frontier, seen = [], [start], {start}
    while frontier and len(region) < size:
        node = frontier.pop(0)
        region.append(node)
        for nb in adjacency.neighbors[node]:
            if nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    return sorted(region[:size])


def test_cluster_null_rejection_rate_controlled():
    rng = np.random.default_rng(20240817)
    hits = 0
    runs = 200
    for i in range(runs):
        data = rng.standard_normal((20, 59))
        res = cluster_permutation_test(data, _ADJ59, n_permutations=1000, seed=3000 + i)
        hits += bool(res.significant_clusters)
    assert hits / runs <= 0.08


def test_cluster_recovers_injected_region():
    region = _connected_region(_ADJ59, size=20)
    rng = np.random.default_rng(77)
    detected = 0
    runs = 50
    for i in range(runs):
        data = rng.standard_normal((20, 59))
        data[:, region] += 1.0  # standardized effect size 1 per channel
        res = cluster_permutation_test(data, _ADJ59, n_permutations=1000, seed=7000 + i)
        detected += any(
            c.p_value < 0.05 and len(set(c.channels) & set(region)) >= 0.8 * len(region)
            for c in res.clusters
        )
    assert detected / runs >= 0.95


# -- criterion: SCR pipeline on the synthetic corpus (< 1 min) ------------------------------

def _lowpassed(trial):
    recs = dict(trial.recordings)
    rec = recs["GSR"]
    recs["GSR"] = rec.with_samples(
        filter_array(rec.samples, rec.sample_rate_hz, FilterSpec.butter_lowpass(0.5)))
    return trial.with_recordings(recs)


def test_scr_pipeline_direction_and_recall():
    spec = scr_validation_spec(n_subjects=10, trials_per_subject=6, master_seed=2024)
    corpus = generate_corpus(spec)
    trials = [_lowpassed(t) for t in corpus.trials]

    percentages = increase_percentages_by_emotion(trials)
    high, low = arousal_group_contrast(percentages)
    assert high >= 90.0
    assert low <= 10.0

    injected = recovered = 0
    baseline_fp = 0
    for trial, truth in zip(trials, corpus.truth.trials):
        rec = trial.recording("GSR")
        events = detect_scr(rec.samples[0], rec.sample_rate_hz)
        stim0 = trial.stimulus_span_s[0]
        for scr in truth.scrs:
            injected += 1
            onset = stim0 + scr.onset_s
            if any(abs(e.onset_s - onset) < 1.5 and e.amplitude_us >= 0.05 for e in events):
                recovered += 1
        if any(e.amplitude_us >= 0.05 and e.peak_s < trial.baseline_span_s[1] for e in events):
            baseline_fp += 1
    assert injected >= 40
    assert recovered / injected >= 0.95
    assert baseline_fp / len(trials) <= 0.05


# -- criteria: labeling-strategy effect + harness integrity (< 15 min) ------------------------

@pytest.fixture(scope="module")
def benchmark_run():
    spec = benchmark_spec(n_subjects=20, master_seed=101)
    corpus = generate_corpus(spec)
    report = run_benchmark(corpus.trials, seed=5)
    return corpus, report


def test_labeling_strategy_effect(benchmark_run):
    _, report = benchmark_run
    for clf in ("knn", "mlp"):
        for combo in ("eeg", "eeg+gsr+ecg+ppg"):
            fine = report.cell(clf, FINE, combo).mean["accuracy"]
            whole = report.cell(clf, WHOLE, combo).mean["accuracy"]
            assert fine - whole >= 5.0, f"{clf}/{combo}: {fine:.1f} vs {whole:.1f}"
        eeg_only = report.cell(clf, FINE, "eeg").mean["accuracy"]
        fused = report.cell(clf, FINE, "eeg+gsr+ecg+ppg").mean["accuracy"]
        assert fused >= eeg_only - 1e-9, f"{clf}: fused {fused:.2f} < eeg {eeg_only:.2f}"


def test_harness_integrity(benchmark_run):
    corpus, report = benchmark_run
    assert len(report.split.folds) == 20
    tables = {kind: assemble_dataset(corpus.trials, kind) for kind in (FINE, WHOLE)}
    for cell in report.cells:
        assert len(cell.folds) == 20
        table = tables[cell.strategy]
        x = table.matrix(cell.combo)
        for fold in cell.folds:
            sel = table.subjects == fold.held_out
            expected_rows = [int(np.sum(table.labels[sel] == l)) for l in EMOTION_LABELS]
            assert fold.confusion.sum(axis=1).tolist() == expected_rows
            # normalization statistics recomputed from the training split only
            train = x[~sel]
            np.testing.assert_array_equal(fold.norm_mean, train.mean(axis=0))
            std = train.std(axis=0)
            np.testing.assert_array_equal(fold.norm_std, np.where(std > 1e-12, std, 1.0))


def test_bench_cli_byte_reproducible(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "synth": {"profile": "benchmark", "n_subjects": 20, "trials_per_subject": 2,
                  "eeg_channels": 8, "stimulus_duration_s": 12.0},
        "bench": {"classifiers": ["knn"], "combos": ["eeg", "eeg+gsr+ecg+ppg"]},
    }))
    corpus_dir = tmp_path / "corpus"
    assert cli_main(["synth", "--config", str(config), "--seed", "7",
                     "--out", str(corpus_dir)]) == 0
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert cli_main(["bench", "--corpus", str(corpus_dir), "--config", str(config),
                         "--seed", "7", "--out", str(out)]) == 0
    assert (out_a / "bench_report.json").read_bytes() == (out_b / "bench_report.json").read_bytes()
    assert (out_a / "bench_summary.csv").read_bytes() == (out_b / "bench_summary.csv").read_bytes()


# -- criterion: dataset constructors ------------------------------------------------------------

def test_dataset_constructors_exact_windows():
    trial = make_trial(annotations=[make_annotation(t_event_s=30.0)])
    epochs = build_fine_dataset([trial])
    assert [e.window_span_s for e in epochs] == [(28.0, 32.0), (27.0, 31.0), (29.0, 33.0)]

    edge = make_trial(annotations=[make_annotation(t_event_s=2.5)])
    assert len(build_fine_dataset([edge])) == 2  # the -1 s shift would cross the span

    t60 = make_trial(annotations=[make_annotation(t_event_s=30.0)], stimulus_duration_s=60.0)
    assert len(build_whole_dataset([t60])) == 29  # floor((60-4)/2)+1
    for duration, count in ((4.0, 1), (10.0, 4), (12.0, 5)):
        t = make_trial(annotations=[make_annotation(t_event_s=duration / 2)],
                       stimulus_duration_s=duration)
        assert len(build_whole_dataset([t])) == count == int((duration - 4.0) // 2.0) + 1


# -- criterion: statistics utilities ---------------------------------------------------------------

def test_variance_test_matches_brute_force():
    rng = np.random.default_rng(4242)
    for _ in range(100):
        a = rng.normal(rng.uniform(4, 7), rng.uniform(0.05, 2.0), size=int(rng.integers(5, 40)))
        b = rng.normal(rng.uniform(4, 7), rng.uniform(0.05, 2.0), size=int(rng.integers(5, 40)))
        f_mine, p_mine = brown_forsythe(a, b)
        za, zb = np.abs(a - np.median(a)), np.abs(b - np.median(b))
        f_ref, p_ref = spstats.f_oneway(za, zb)
        assert abs(f_mine - f_ref) < 1e-9
        assert abs(p_mine - p_ref) < 1e-9

    f, p = brown_forsythe([5, 5, 5, 5], [5, 5, 5, 5])
    assert f == 0.0 and p == 1.0
