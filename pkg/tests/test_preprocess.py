import numpy as np
import pytest

from affectbench.errors import (
    AllChannelsBad,
    InvalidBand,
    IrrationalRatio,
    TooFewChannels,
    UpsamplingNotSupported,
)
from affectbench.model import Recording
from affectbench.montage import Montage, spherical_cap_montage
from affectbench.preprocess import (
    ArtifactMask,
    FilterSpec,
    amplitude_reject,
    apply_filter,
    detect_bad_channels,
    filter_array,
    preprocess_recording,
    repair_channels,
    resample,
)

from helpers import make_recording, sine


def _recording_from(samples, rate=250.0, modality="EEG"):
    samples = np.atleast_2d(samples)
    names = tuple(f"c{i}" for i in range(samples.shape[0]))
    return Recording(modality, names, rate, samples)


# -- resample -----------------------------------------------------------------

def test_resample_quarter_ratio_length():
    rec = make_recording(rate_hz=1000.0, duration_s=60.0, n_channels=2)
    assert rec.n_samples == 60000
    out = resample(rec, 250.0)
    assert out.n_samples == 15000
    assert out.sample_rate_hz == 250.0


def test_resample_preserves_dc():
    rec = make_recording(rate_hz=1000.0, duration_s=10.0, n_channels=1, fill=5.0)
    out = resample(rec, 250.0)
    interior = out.samples[0, 100:-100]
    assert np.max(np.abs(interior - 5.0)) < 1e-6


def test_resample_sine_matches_analytic():
    x, _ = sine(10.0, 1000.0, 8.0)
    out = resample(_recording_from(x, rate=1000.0), 250.0)
    expected, _ = sine(10.0, 250.0, 8.0)
    mid = slice(250, 1750)
    err = np.max(np.abs(out.samples[0, mid] - expected[mid]))
    assert err < 0.01  # within 1% of unit amplitude mid-signal


def test_resample_rejects_upsampling_and_irrational():
    rec = make_recording(rate_hz=250.0, duration_s=2.0)
    with pytest.raises(UpsamplingNotSupported):
        resample(rec, 500.0)
    with pytest.raises(IrrationalRatio):
        resample(rec, 250.0 / np.pi)


# -- filtering ----------------------------------------------------------------

def test_notch_kills_50hz():
    x, _ = sine(50.0, 250.0, 60.0)
    out = apply_filter(_recording_from(x), FilterSpec.notch(50.0))
    mid = slice(2500, 12500)
    ratio = np.sqrt(np.mean(out.samples[0, mid] ** 2)) / np.sqrt(np.mean(x[mid] ** 2))
    assert ratio <= 0.10


def test_ecg_bandpass_passband_flat_at_10hz():
    x, _ = sine(10.0, 250.0, 60.0, amplitude=1.0)
    out = apply_filter(_recording_from(x, modality="ECG"), FilterSpec.butter_bandpass(0.5, 40.0))
    mid = slice(2500, 12500)
    gain_db = 20 * np.log10(np.sqrt(np.mean(out.samples[0, mid].astype(float) ** 2) / np.mean(x[mid] ** 2)))
    assert abs(gain_db) <= 1.0


def test_gsr_lowpass_preserves_dc():
    rec = make_recording(modality="GSR", n_channels=1, rate_hz=100.0, duration_s=30.0, fill=2.0)
    out = apply_filter(rec, FilterSpec.butter_lowpass(0.5))
    interior = out.samples[0, 500:-500]
    assert np.max(np.abs(interior - 2.0)) / 2.0 < 0.01


def test_fir_bandpass_rejects_out_of_band():
    # 0.5-70 Hz FIR at 250 Hz: 0.1 Hz and 90 Hz should be strongly attenuated
    rate, dur = 250.0, 120.0
    lo, _ = sine(0.1, rate, dur)
    hi, _ = sine(90.0, rate, dur)
    mid10, _ = sine(10.0, rate, dur)
    spec = FilterSpec.fir_bandpass(0.5, 70.0)
    for x, expect_pass in ((lo, False), (hi, False), (mid10, True)):
        y = filter_array(x, rate, spec)
        m = slice(int(20 * rate), int(100 * rate))
        gain = np.sqrt(np.mean(y[m] ** 2) / np.mean(x[m] ** 2))
        if expect_pass:
            assert gain > 0.89
        else:
            assert gain < 0.1


def test_zero_phase_no_lag():
    # band-limited input: cross-correlation peak between input and output at lag 0
    rng = np.random.default_rng(7)
    rate = 250.0
    x = rng.standard_normal(int(60 * rate))
    x = filter_array(x, rate, FilterSpec.butter_bandpass(5.0, 15.0))
    for spec in (FilterSpec.notch(50.0), FilterSpec.butter_bandpass(0.5, 40.0),
                 FilterSpec.fir_bandpass(0.5, 70.0)):
        y = filter_array(x, rate, spec)
        lags = np.arange(-50, 51)
        xc = [np.dot(x[50:-50], y[50 + lag:len(y) - 50 + lag]) for lag in lags]
        assert lags[int(np.argmax(xc))] == 0


def test_filter_length_preserved_and_band_validated():
    rec = make_recording(rate_hz=250.0, duration_s=60.0)
    out = apply_filter(rec, FilterSpec.butter_bandpass(1.0, 40.0))
    assert out.n_samples == rec.n_samples
    with pytest.raises(InvalidBand):
        apply_filter(rec, FilterSpec.butter_bandpass(1.0, 130.0))
    with pytest.raises(InvalidBand):
        apply_filter(rec, FilterSpec.notch(125.0))


# -- bad channels ---------------------------------------------------------------

def _variance_recording(variances, n=4096, rate=250.0):
    rng = np.random.default_rng(11)
    rows = [rng.standard_normal(n) * np.sqrt(v) for v in variances]
    return _recording_from(np.array(rows), rate=rate)


def test_detect_bad_channels_rule():
    rec = _recording_from(np.diag([1.0] * 59) @ np.random.default_rng(1).standard_normal((59, 4096)))
    base = detect_bad_channels(rec)
    assert base.flagged == ()
    # scale one channel so its variance is 11x the median
    samples = rec.samples.astype(float).copy()
    med = np.median(np.var(samples, axis=1))
    samples[7] *= np.sqrt(11.0 * med / np.var(samples[7]))
    report = detect_bad_channels(_recording_from(samples))
    assert report.flagged == (7,)


def test_detect_bad_channels_threshold_strict():
    # exact multiples of the median: 10.5x flagged, 9.5x not
    n = 8192
    rng = np.random.default_rng(3)
    base = rng.standard_normal((9, n))
    samples = base / np.std(base, axis=1, keepdims=True)  # unit variance-ish
    med = np.median(np.var(samples, axis=1))
    samples[0] *= np.sqrt(10.5 * med / np.var(samples[0]))
    samples[1] *= np.sqrt(9.5 * med / np.var(samples[1]))
    report = detect_bad_channels(_recording_from(samples))
    assert 0 in report.flagged and 1 not in report.flagged


def test_detect_bad_channels_needs_three():
    with pytest.raises(TooFewChannels):
        detect_bad_channels(make_recording(n_channels=2, duration_s=2.0))


def test_detect_bad_channels_permutation_equivariant():
    rng = np.random.default_rng(5)
    samples = rng.standard_normal((12, 2048))
    samples[3] *= 8.0
    samples[9] *= 9.0
    flags = set(detect_bad_channels(_recording_from(samples)).flagged)
    perm = rng.permutation(12)
    flags_perm = set(detect_bad_channels(_recording_from(samples[perm])).flagged)
    assert flags_perm == {int(np.flatnonzero(perm == f)[0]) for f in flags}


# -- repair ---------------------------------------------------------------------

def _toy_montage():
    return Montage(
        names=("g1", "g2", "bad"),
        positions=np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    )


def test_repair_equidistant_average():
    noisy = np.random.default_rng(2).standard_normal(100) * 50.0
    samples = np.vstack([np.full(100, 1.0), np.full(100, 3.0), noisy])
    rec = Recording("EEG", ("g1", "g2", "bad"), 250.0, samples)
    report = detect_bad_channels(rec)
    assert report.flagged == (2,)
    fixed = repair_channels(rec, report, _toy_montage())
    np.testing.assert_allclose(fixed.samples[2], 2.0, atol=1e-6)
    np.testing.assert_array_equal(fixed.samples[:2], rec.samples[:2])


def test_repair_no_bad_channels_is_identity():
    rec = make_recording(n_channels=5, duration_s=2.0)
    report = detect_bad_channels(rec)
    fixed = repair_channels(rec, report, spherical_cap_montage(5, prefix="E"))
    assert fixed is rec


def test_repair_single_good_channel():
    samples = np.vstack([np.linspace(0, 1, 50), np.full(50, 9.0), np.full(50, 9.0)])
    rec = Recording("EEG", ("a", "b", "c"), 100.0, samples)
    montage = spherical_cap_montage(3)
    montage = Montage(names=("a", "b", "c"), positions=montage.positions)
    report = detect_bad_channels(rec)
    from dataclasses import replace
    report = replace(report, flagged=(1, 2))
    fixed = repair_channels(rec, report, montage)
    np.testing.assert_allclose(fixed.samples[1], rec.samples[0], rtol=1e-6)
    np.testing.assert_allclose(fixed.samples[2], rec.samples[0], rtol=1e-6)


def test_repair_all_bad_raises():
    rec = make_recording(n_channels=3, duration_s=1.0)
    montage = Montage(names=rec.channel_names, positions=spherical_cap_montage(3).positions)
    report = detect_bad_channels(rec)
    from dataclasses import replace
    report = replace(report, flagged=(0, 1, 2))
    with pytest.raises(AllChannelsBad):
        repair_channels(rec, report, montage)


# -- amplitude rejection ----------------------------------------------------------

def test_amplitude_reject_empty():
    rec = _recording_from(np.full((2, 500), 80.0))
    mask = amplitude_reject(rec, 150.0)
    assert mask.spans == ()


def test_amplitude_reject_spike():
    samples = np.zeros((2, 500))
    samples[1, 240:243] = 500.0
    mask = amplitude_reject(_recording_from(samples), 150.0)
    assert len(mask.spans) == 1
    start, end = mask.spans[0]
    assert start == 240 and end == 243
    assert mask.overlaps(200, 241)
    assert not mask.overlaps(0, 240)


def test_amplitude_reject_bad_threshold():
    with pytest.raises(ValueError):
        amplitude_reject(make_recording(duration_s=1.0), 0.0)


def test_preprocess_recording_eeg_chain():
    rec = make_recording(modality="EEG", n_channels=4, rate_hz=1000.0, duration_s=70.0)
    out, report = preprocess_recording(rec, montage=spherical_cap_montage(4, prefix="E"))
    assert out.sample_rate_hz == 250.0
    assert out.n_samples == 17500
    assert report is not None
