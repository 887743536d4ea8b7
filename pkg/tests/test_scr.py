import numpy as np
import pytest
import scipy.stats as spstats

from affectbench.errors import DegenerateGroup, EmptyEventSet, MissingEmotion
from affectbench.model import EMOTION_LABELS, Recording, Trial
from affectbench.scr import (
    HIGH_AROUSAL,
    LOW_AROUSAL,
    arousal_group_contrast,
    brown_forsythe,
    consistency_stats,
    detect_scr,
    event_scr_amplitudes,
    gsr_increase_percentage,
    max_scr_amplitude_after,
    scr_concordance,
)
from affectbench.synth import scr_shape

from helpers import make_annotation

RATE = 100.0


def _tonic(duration_s=60.0, level=5.0, slope=0.01):
    t = np.arange(int(duration_s * RATE)) / RATE
    return level - slope * t


def _with_scr(signal, onset_s, amplitude):
    out = signal.copy()
    wave = amplitude * scr_shape(12.0, RATE)
    start = int(round(onset_s * RATE))
    hi = min(out.size, start + wave.size)
    out[start:hi] += wave[:hi - start]
    return out


def test_detect_scr_declining_signal_empty():
    assert detect_scr(_tonic(), RATE) == []


def test_detect_scr_injected_amplitude():
    x = _with_scr(_tonic(), 20.0, 0.2)
    events = detect_scr(x, RATE)
    assert len(events) == 1
    ev = events[0]
    assert abs(ev.amplitude_us - 0.2) / 0.2 < 0.10
    assert 20.0 <= ev.peak_s <= 22.5
    assert ev.rise_time_s > 0


def test_detect_scr_two_events_ordered():
    x = _with_scr(_with_scr(_tonic(), 20.0, 0.15), 23.0, 0.25)
    events = detect_scr(x, RATE)
    assert len(events) == 2
    assert events[0].peak_s < events[1].peak_s
    assert events[0].amplitude_us < events[1].amplitude_us


def test_detect_scr_constant_shift_invariant():
    x = _with_scr(_tonic(), 15.0, 0.12)
    a = detect_scr(x, RATE)
    b = detect_scr(x + 3.7, RATE)
    assert len(a) == len(b) == 1
    assert abs(a[0].amplitude_us - b[0].amplitude_us) < 1e-9
    assert a[0].peak_s == b[0].peak_s


def test_detect_scr_window_slicing():
    x = _with_scr(_tonic(), 30.0, 0.2)
    inside = detect_scr(x, RATE, window_span_s=(28.0, 36.0))
    outside = detect_scr(x, RATE, window_span_s=(2.0, 10.0))
    assert len(inside) == 1 and outside == []
    assert 30.0 <= inside[0].peak_s <= 33.0


# -- increase percentage ----------------------------------------------------------

def test_gsr_increase_percentage_extremes():
    assert gsr_increase_percentage([[0.2, 0.2], [0.2]]) == 100.0
    assert gsr_increase_percentage([[0.01, 0.0], [0.02]]) == 0.0
    with pytest.raises(EmptyEventSet):
        gsr_increase_percentage([[], []])


def test_gsr_increase_percentage_monotone_in_threshold():
    rng = np.random.default_rng(4)
    amps = [list(rng.uniform(0.0, 0.3, size=6)) for _ in range(5)]
    values = [gsr_increase_percentage(amps, thr) for thr in np.linspace(0.0, 0.3, 20)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_max_scr_amplitude_search_window():
    x = _with_scr(_tonic(), 20.5, 0.2)
    events = detect_scr(x, RATE)
    # peak lands ~1.2 s after onset, within (20, 22]
    assert max_scr_amplitude_after(events, 20.0, 2.0) > 0.15
    assert max_scr_amplitude_after(events, 25.0, 2.0) == 0.0


def test_arousal_group_contrast():
    flat = {e: 50.0 for e in EMOTION_LABELS}
    assert arousal_group_contrast(flat) == (50.0, 50.0)

    observed = {"Fear": 98.8, "Surprise": 92.6, "Happiness": 87.2, "Anger": 85.2,
                "Sadness": 7.4, "Disgust": 4.6}
    high, low = arousal_group_contrast(observed)
    assert abs(high - 90.95) < 1e-9
    assert abs(low - 6.0) < 1e-9

    split = {e: (100.0 if e in HIGH_AROUSAL else 0.0) for e in EMOTION_LABELS}
    assert arousal_group_contrast(split) == (100.0, 0.0)

    with pytest.raises(MissingEmotion):
        arousal_group_contrast({"Fear": 10.0})


# -- concordance -------------------------------------------------------------------

def _gsr_trial(onsets, amplitudes, labels, duration=60.0, trial_id="t1"):
    x = _tonic(duration + 10.0)
    for onset, amp in zip(onsets, amplitudes):
        x = _with_scr(x, 10.0 + onset, amp)  # onsets are stimulus-relative
    rec = Recording("GSR", ("g1", "g2"), RATE, np.vstack([x, x]))
    anns = tuple(make_annotation(t_event_s=o, label=l) for o, l in zip(onsets, labels))
    return Trial(trial_id, "s", (0.0, 10.0), (10.0, 10.0 + duration), {"GSR": rec}, anns)


def test_scr_concordance_all_hit():
    trial = _gsr_trial([20.0, 35.0], [0.2, 0.3], ["Fear", "Surprise"])
    assert scr_concordance([trial]) == 1.0


def test_scr_concordance_none_hit():
    trial = _gsr_trial([20.0, 35.0], [0.2, 0.3], ["Fear", "Surprise"])
    bare = _gsr_trial([], [], [], trial_id="t2")
    bare = Trial("t2", "s", (0.0, 10.0), (10.0, 70.0), bare.recordings,
                 (make_annotation(t_event_s=50.0, label="Fear"),))
    assert scr_concordance([bare]) == 0.0
    with pytest.raises(EmptyEventSet):
        scr_concordance([_gsr_trial([20.0], [0.2], ["Sadness"])])  # low arousal only


def test_event_scr_amplitudes_by_label():
    trial = _gsr_trial([20.0, 40.0], [0.2, 0.0], ["Fear", "Sadness"])
    pairs = dict(event_scr_amplitudes(trial))
    assert pairs["Fear"] > 0.05
    assert pairs["Sadness"] <= 0.01


# -- rating consistency --------------------------------------------------------------

def test_consistency_identical_groups():
    a, b = consistency_stats([5, 5, 5, 5], [5, 5, 5, 5])
    assert a.levene_f == 0.0 and a.levene_p == 1.0
    assert a.sd == 0.0 and a.coefficient_of_variation == 0.0


def test_consistency_group_mean():
    a, _ = consistency_stats([6, 7, 7, 7], [1, 2, 3, 4])
    assert abs(a.mean - 6.75) < 1e-12
    assert a.coefficient_of_variation == a.sd / a.mean


def test_brown_forsythe_matches_scipy_levene():
    rng = np.random.default_rng(17)
    for _ in range(100):
        a = rng.normal(6.0, rng.uniform(0.1, 2.0), size=rng.integers(5, 40))
        b = rng.normal(5.0, rng.uniform(0.1, 2.0), size=rng.integers(5, 40))
        f, p = brown_forsythe(a, b)
        f_ref, p_ref = spstats.levene(a, b, center="median")
        assert abs(f - f_ref) < 1e-9
        assert abs(p - p_ref) < 1e-9


def test_brown_forsythe_matches_anova_on_deviations():
    rng = np.random.default_rng(23)
    for _ in range(100):
        a = rng.normal(0.0, 1.0, size=12)
        b = rng.normal(0.0, 3.0, size=15)
        f, p = brown_forsythe(a, b)
        za = np.abs(a - np.median(a))
        zb = np.abs(b - np.median(b))
        f_ref, p_ref = spstats.f_oneway(za, zb)
        assert abs(f - f_ref) < 1e-9
        assert abs(p - p_ref) < 1e-9


def test_brown_forsythe_needs_two_ratings():
    with pytest.raises(DegenerateGroup):
        brown_forsythe([5.0], [5.0, 6.0])
