"""Pipeline driver.

Subcommands: synth, preprocess, epoch, features, validate-psd,
validate-scr, compare-paradigms, bench, serve. Exit codes: 0 success,
1 usage error, 2 data error (corpus/config problems), 3 analysis error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from . import corpus as corpus_io
from .config import (
    load_config,
    mlp_config_from_config,
    preprocess_config_from_config,
    synth_spec_from_config,
)
from .errors import AnalysisError, DataError, InsufficientData
from .features import DEFAULT_BANDS
from .harness import FINE, assemble_dataset, build_fine_dataset, report_to_csv, report_to_dict, run_benchmark
from .model import EMOTION_LABELS, Trial, extract_baseline, extract_epoch
from .montage import Montage, adjacency_from_montage, spherical_cap_montage
from .preprocess import FilterSpec, filter_array, preprocess_trial
from .scr import arousal_group_contrast, consistency_stats, increase_percentages_by_emotion, scr_concordance
from .spectral import run_band_analysis
from .synth import generate_corpus


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _montage_for(trial: Trial) -> Montage:
    names = trial.recording("EEG").channel_names
    return Montage(names=names, positions=spherical_cap_montage(len(names)).positions)


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    cfg = load_config(args.config)
    spec = synth_spec_from_config(cfg, args.seed)
    corpus = generate_corpus(spec)
    out = _out_dir(args)
    corpus_io.write_corpus(corpus.trials, out)
    truth = [dataclasses.asdict(t) for t in corpus.truth.trials]
    _write_json(out / "ground_truth.json", truth)
    print(f"wrote {len(corpus.trials)} trials to {out}")
    return 0


def cmd_preprocess(args) -> int:
    pp = preprocess_config_from_config(load_config(args.config))
    trials = corpus_io.read_corpus(args.corpus)
    out_trials = []
    for trial in trials:
        montage = _montage_for(trial) if "EEG" in trial.recordings else None
        processed, _ = preprocess_trial(trial, pp, montage)
        out_trials.append(processed)
    out = _out_dir(args)
    corpus_io.write_corpus(out_trials, out)
    print(f"preprocessed {len(out_trials)} trials into {out}")
    return 0


def cmd_epoch(args) -> int:
    trials = corpus_io.read_corpus(args.corpus)
    epochs = build_fine_dataset(trials)
    payload = [
        {
            "epoch_id": e.epoch_id,
            "trial_id": e.provenance.trial_id,
            "shift_offset_s": e.provenance.shift_offset_s,
            "label": e.label,
            "intensity": e.annotation.intensity,
            "participant_id": e.annotation.participant_id,
            "window_span_s": list(e.window_span_s),
            "samples": {m: int(b.shape[1]) for m, b in sorted(e.blocks.items())},
        }
        for e in epochs
    ]
    _write_json(_out_dir(args) / "epochs.json", payload)
    print(f"extracted {len(epochs)} epochs")
    return 0


def cmd_features(args) -> int:
    trials = corpus_io.read_corpus(args.corpus)
    table = assemble_dataset(trials, FINE)
    out = _out_dir(args)
    n_bands = len(DEFAULT_BANDS)
    n_channels = table.eeg.shape[1] // n_bands
    header = (
        ["epoch_id", "participant_id", "label"]
        + [f"de_c{c:02d}_{band.name}" for c in range(n_channels) for band in DEFAULT_BANDS]
        + ["gsr_skewness", "ecg_rmssd", "ppg_delta_pwa"]
    )
    with open(out / "features.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, epoch_id in enumerate(table.epoch_ids):
            writer.writerow(
                [epoch_id, table.subjects[i], table.labels[i]]
                + [repr(v) for v in table.eeg[i]]
                + [repr(table.peripherals[n][i]) for n in ("gsr_skewness", "ecg_rmssd", "ppg_delta_pwa")]
            )
    print(f"wrote {len(table.epoch_ids)} feature rows")
    return 0


def cmd_validate_psd(args) -> int:
    cfg = load_config(args.config).get("psd", {})
    emotions = cfg.get("emotions", list(EMOTION_LABELS))
    n_permutations = int(cfg.get("n_permutations", 1000))
    alpha = float(cfg.get("alpha", 0.05))
    seed = args.seed if args.seed is not None else 0

    trials = corpus_io.read_corpus(args.corpus)
    montage = _montage_for(trials[0])
    adjacency = adjacency_from_montage(montage)
    rate = trials[0].recording("EEG").sample_rate_hz
    epochs, baselines = [], {}
    for trial in trials:
        baselines[trial.trial_id] = extract_baseline(trial, modalities=("EEG",))["EEG"]
        for ann in trial.annotations:
            epochs.append(extract_epoch(trial, ann, modalities=("EEG",)))

    report, rows = {}, []
    for emotion in emotions:
        try:
            results = run_band_analysis(
                epochs, baselines, emotion, adjacency, rate,
                n_permutations=n_permutations, alpha=alpha, seed=seed,
            )
        except InsufficientData as exc:
            report[emotion] = {"error": str(exc)}
            continue
        report[emotion] = {}
        for band, res in results.items():
            sig_channels = set()
            for c in res.significant_clusters:
                sig_channels.update(c.channels)
            report[emotion][band] = {
                "threshold": res.threshold,
                "n_permutations": res.n_permutations,
                "alpha": res.alpha,
                "seed": res.seed,
                "t_values": res.t_values.tolist(),
                "effect_sizes": res.effect_sizes.tolist(),
                "clusters": [
                    {"channels": list(c.channels), "mass": c.mass, "p_value": c.p_value}
                    for c in res.clusters
                ],
            }
            for idx, name in enumerate(montage.names):
                rows.append([emotion, band, idx, name, repr(float(res.t_values[idx])),
                             repr(float(res.effect_sizes[idx])), int(idx in sig_channels)])

    out = _out_dir(args)
    _write_json(out / "psd_report.json", report)
    with open(out / "psd_topography.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["emotion", "band", "channel_index", "channel", "t", "effect_size",
                         "in_significant_cluster"])
        writer.writerows(rows)
    print(f"band statistics written for {len(report)} emotions")
    return 0


def _lowpass_gsr(trials: list[Trial]) -> list[Trial]:
    out = []
    for trial in trials:
        recs = dict(trial.recordings)
        if "GSR" in recs:
            rec = recs["GSR"]
            smooth = filter_array(rec.samples, rec.sample_rate_hz, FilterSpec.butter_lowpass(0.5))
            recs["GSR"] = rec.with_samples(smooth)
        out.append(trial.with_recordings(recs))
    return out


def cmd_validate_scr(args) -> int:
    cfg = load_config(args.config).get("scr", {})
    threshold = float(cfg.get("threshold_us", 0.05))
    search = float(cfg.get("search_s", 2.0))
    window = float(cfg.get("concordance_window_s", 4.0))

    trials = _lowpass_gsr(corpus_io.read_corpus(args.corpus))
    percentages = increase_percentages_by_emotion(trials, threshold, search)
    payload = {"threshold_us": threshold, "search_s": search,
               "increase_percentage": percentages}
    try:
        high, low = arousal_group_contrast(percentages)
        payload["group_means"] = {"high": high, "low": low}
    except DataError as exc:
        payload["group_means"] = {"error": str(exc)}
    try:
        payload["concordance"] = scr_concordance(trials, window_s=window, threshold_us=threshold)
    except AnalysisError:
        payload["concordance"] = None

    out = _out_dir(args)
    _write_json(out / "scr_report.json", payload)
    with open(out / "scr_increase.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["emotion", "increase_percentage"])
        for emotion in EMOTION_LABELS:
            if emotion in percentages:
                writer.writerow([emotion, f"{percentages[emotion]:.1f}"])
    print(f"SCR metrics written for {len(percentages)} emotions")
    return 0


def cmd_compare_paradigms(args) -> int:
    cfg = load_config(args.config)
    section = cfg.get("paradigms", {})
    if "immediate_ratings" not in section or "delayed_ratings" not in section:
        raise DataError("config needs paradigms.immediate_ratings and paradigms.delayed_ratings")
    immediate, delayed = consistency_stats(
        section["immediate_ratings"], section["delayed_ratings"])
    payload = {
        "confidence": {
            "immediate": dataclasses.asdict(immediate),
            "delayed": dataclasses.asdict(delayed),
        }
    }
    if args.corpus:
        trials = _lowpass_gsr(corpus_io.read_corpus(args.corpus))
        payload["scr_concordance"] = {"immediate": scr_concordance(trials)}
        delayed_path = section.get("delayed_annotations")
        if delayed_path:
            by_trial: dict[str, list] = {}
            for trial_id, ann in corpus_io.read_annotations(Path(delayed_path)):
                by_trial.setdefault(trial_id, []).append(ann)
            shifted = [t.with_annotations(by_trial.get(t.trial_id, ())) for t in trials]
            payload["scr_concordance"]["delayed"] = scr_concordance(shifted)
    _write_json(_out_dir(args) / "paradigm_report.json", payload)
    print("paradigm comparison written")
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    section = cfg.get("bench", {})
    seed = args.seed if args.seed is not None else int(section.get("seed", 0))
    trials = corpus_io.read_corpus(args.corpus)
    report = run_benchmark(
        trials,
        classifiers=tuple(section.get("classifiers", ("knn", "mlp"))),
        combos=tuple(section.get("combos", ("eeg", "eeg+gsr+ecg+ppg"))),
        seed=seed,
        knn_k=int(section.get("knn_k", 5)),
        mlp_config=mlp_config_from_config(cfg, seed),
    )
    out = _out_dir(args)
    payload = report_to_dict(report)
    (out / "bench_report.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    (out / "bench_summary.csv").write_text(report_to_csv(report))
    for key, deltas in report.improvements.items():
        print(f"{key}: accuracy improvement {deltas['accuracy']:+.1f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import Stimulus, create_app

    cfg = load_config(args.config).get("serve", {})
    stimuli = {
        s["stimulus_id"]: Stimulus(
            stimulus_id=s["stimulus_id"], duration_s=float(s["duration_s"]),
            media_url=s.get("media_url", ""), media_path=s.get("media_path", ""),
        )
        for s in cfg.get("stimuli", [])
    }
    if not stimuli:
        raise DataError("serve config lists no stimuli")
    app = create_app(stimuli, data_dir=cfg.get("data_dir", args.out), ui_dir=cfg.get("ui_dir"))
    host = args.host or cfg.get("host", "127.0.0.1")
    port = args.port or int(cfg.get("port", 8710))
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="affectbench")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, needs_corpus=False, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default="out", help="output directory")
        if needs_corpus:
            p.add_argument("--corpus", required=True, help="corpus directory")
        p.set_defaults(handler=handler)
        return p

    add("synth", cmd_synth, help="generate a synthetic corpus")
    add("preprocess", cmd_preprocess, needs_corpus=True, help="run the conditioning chain")
    add("epoch", cmd_epoch, needs_corpus=True, help="extract event-centered windows")
    add("features", cmd_features, needs_corpus=True, help="export the feature matrix as CSV")
    add("validate-psd", cmd_validate_psd, needs_corpus=True,
        help="band-power cluster statistics per emotion")
    add("validate-scr", cmd_validate_scr, needs_corpus=True,
        help="phasic-response concordance metrics")
    compare = add("compare-paradigms", cmd_compare_paradigms,
                  help="rating-consistency and concordance comparison")
    compare.add_argument("--corpus", default=None, help="optional corpus for concordance")
    add("bench", cmd_bench, needs_corpus=True, help="labeling-strategy benchmark")
    serve = add("serve", cmd_serve, help="run the annotation HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
