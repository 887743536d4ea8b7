"""Labeling-strategy benchmark: builds event-anchored and whole-trial
datasets from the same recordings and compares classifiers under
leave-one-subject-out cross-validation.

The two dataset builders are the controlled variable:
  fine-grained  three overlapping windows per annotated event, centered at
                t_event and shifted by -1 s and +1 s, all inheriting the
                event's label (out-of-bounds shifts are skipped)
  whole-trial   sliding 4 s windows with a 2 s step across the whole
                stimulus, every window labeled with the trial's reported
                emotion

Everything downstream (features, normalization, classifiers, folds) is
identical across strategies, so metric deltas isolate the labeling choice.
"""

from __future__ import annotations

import collections
import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, MissingFeature, TooFewSubjects, UnlabeledTrial, WindowOutOfBounds
from .features import PERIPHERAL_NAMES, DEFAULT_BANDS, BandDef, extract_features
from .mlp import MlpConfig, mlp_predict, mlp_train
from .model import EMOTION_LABELS, EmotionAnnotation, Epoch, Trial, extract_epoch

log = logging.getLogger(__name__)

FINE = "fine-grained"
WHOLE = "whole-trial"


@dataclass(frozen=True)
class LabelingStrategy:
    kind: str
    window_s: float = 4.0
    fine_shifts_s: tuple[float, ...] = (0.0, -1.0, 1.0)
    whole_step_s: float = 2.0

    def __post_init__(self):
        if self.kind not in (FINE, WHOLE):
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.window_s <= 0 or self.whole_step_s <= 0:
            raise ValueError("window and step must be positive")


def build_fine_dataset(trials, strategy: LabelingStrategy = LabelingStrategy(FINE)) -> list[Epoch]:
    """Up to three windows per annotation; shifted windows that would cross
    the stimulus span are skipped (and counted in the log)."""
    half = strategy.window_s / 2.0
    epochs, skipped = [], 0
    for trial in trials:
        for ann in trial.annotations:
            for shift in strategy.fine_shifts_s:
                try:
                    epochs.append(extract_epoch(trial, ann, half_width_s=half,
                                                shift_offset_s=shift, strategy=FINE))
                except WindowOutOfBounds:
                    skipped += 1
    if skipped:
        log.info("fine dataset: skipped %d out-of-bounds shifted windows", skipped)
    return epochs


def trial_label(trial: Trial) -> str:
    """The trial's reported emotion: majority over annotations, ties broken
    lexicographically."""
    if not trial.annotations:
        raise UnlabeledTrial(f"trial {trial.trial_id} has no annotations to label it")
    counts = collections.Counter(a.label for a in trial.annotations)
    top = max(counts.values())
    return sorted(l for l, c in counts.items() if c == top)[0]


def build_whole_dataset(trials, strategy: LabelingStrategy = LabelingStrategy(WHOLE)) -> list[Epoch]:
    """floor((D - window)/step) + 1 windows per trial of duration D, all
    carrying the trial label; trials shorter than one window are skipped."""
    epochs = []
    for trial in trials:
        label = trial_label(trial)
        duration = trial.stimulus_duration_s
        if duration < strategy.window_s:
            log.warning("trial %s (%.1f s) shorter than one window, skipped",
                        trial.trial_id, duration)
            continue
        intensity = trial.annotations[0].intensity
        half = strategy.window_s / 2.0
        start = 0.0
        while start + strategy.window_s <= duration + 1e-9:
            ann = EmotionAnnotation(
                t_event_s=start + half, label=label, intensity=intensity,
                session_id=trial.session_id, participant_id=trial.participant_id,
            )
            epochs.append(extract_epoch(trial, ann, half_width_s=half, strategy=WHOLE))
            start += strategy.whole_step_s
    return epochs


# -- classifiers ------------------------------------------------------------------

def knn_classify(train_x: np.ndarray, train_y, test_x: np.ndarray, k: int = 5) -> np.ndarray:
    """Majority vote among the k Euclidean-nearest training points.

    Ties (distance and vote) resolve to the lexicographically smallest
    label; k larger than the training set is clamped with a warning.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    test_x = np.asarray(test_x, dtype=np.float64)
    if train_x.shape[0] == 0:
        raise DimensionMismatch("empty training set")
    if train_x.shape[1] != test_x.shape[1]:
        raise DimensionMismatch(f"train dim {train_x.shape[1]} != test dim {test_x.shape[1]}")
    if k > train_x.shape[0]:
        log.warning("k=%d larger than training set (%d); clamped", k, train_x.shape[0])
        k = train_x.shape[0]
    classes = tuple(sorted(set(np.asarray(train_y).tolist())))
    code = {c: i for i, c in enumerate(classes)}
    y_codes = np.array([code[l] for l in np.asarray(train_y).tolist()], dtype=int)

    dist = cdist(test_x, train_x)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    out = np.empty(test_x.shape[0], dtype=object)
    for i, row in enumerate(nearest):
        votes = np.bincount(y_codes[row], minlength=len(classes))
        out[i] = classes[int(np.argmax(votes))]  # argmax takes the smallest index on ties
    return out


def fuse_features(eeg_vec: np.ndarray, peripherals: dict[str, float],
                  include: tuple[str, ...] = ()) -> np.ndarray:
    """EEG vector concatenated with the selected peripheral scalars, in the
    fixed order gsr_skewness, ecg_rmssd, ppg_delta_pwa."""
    unknown = [n for n in include if n not in PERIPHERAL_NAMES]
    if unknown:
        raise MissingFeature(f"unknown peripheral features {unknown}")
    missing = [n for n in include if n not in peripherals]
    if missing:
        raise MissingFeature(f"peripheral features not available: {missing}")
    extra = [peripherals[n] for n in PERIPHERAL_NAMES if n in include]
    return np.concatenate([np.asarray(eeg_vec, dtype=np.float64), np.asarray(extra)])


#: modality combination name -> peripheral feature subset
MODALITY_COMBOS = {
    "eeg": (),
    "eeg+gsr": ("gsr_skewness",),
    "eeg+ecg": ("ecg_rmssd",),
    "eeg+ppg": ("ppg_delta_pwa",),
    "eeg+gsr+ecg+ppg": PERIPHERAL_NAMES,
}


# -- dataset assembly ----------------------------------------------------------------

@dataclass(frozen=True)
class FeatureTable:
    """Extracted features for one strategy's epoch set."""

    strategy: str
    eeg: np.ndarray                     # (n, channels x bands)
    peripherals: dict[str, np.ndarray]  # name -> (n,)
    labels: np.ndarray                  # (n,) object
    subjects: np.ndarray                # (n,) object
    epoch_ids: tuple[str, ...]

    def matrix(self, combo: str) -> np.ndarray:
        extras = [self.peripherals[n] for n in MODALITY_COMBOS[combo]]
        if not extras:
            return self.eeg
        return np.hstack([self.eeg, np.column_stack(extras)])


def assemble_dataset(trials, strategy_kind: str,
                     bands: tuple[BandDef, ...] = DEFAULT_BANDS) -> FeatureTable:
    """Build the strategy's epochs and extract every feature once."""
    strategy = LabelingStrategy(strategy_kind)
    epochs = build_fine_dataset(trials, strategy) if strategy_kind == FINE \
        else build_whole_dataset(trials, strategy)
    vectors = [extract_features(e, bands) for e in epochs]
    return FeatureTable(
        strategy=strategy_kind,
        eeg=np.stack([v.eeg_de for v in vectors]),
        peripherals={
            name: np.array([v.peripheral(name) for v in vectors]) for name in PERIPHERAL_NAMES
        },
        labels=np.array([v.label for v in vectors], dtype=object),
        subjects=np.array([e.annotation.participant_id for e in epochs], dtype=object),
        epoch_ids=tuple(v.epoch_id for v in vectors),
    )


def corpus_checksum(trials) -> str:
    """SHA-256 over every recording's raw bytes, in a stable order."""
    digest = hashlib.sha256()
    for trial in sorted(trials, key=lambda t: t.trial_id):
        for modality in sorted(trial.recordings):
            digest.update(trial.recordings[modality].samples.tobytes())
    return digest.hexdigest()


# -- metrics ----------------------------------------------------------------------------

def confusion_matrix(y_true, y_pred, classes=EMOTION_LABELS) -> np.ndarray:
    code = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=int)
    for t, p in zip(np.asarray(y_true).tolist(), np.asarray(y_pred).tolist()):
        out[code[t], code[p]] += 1
    return out


def metrics_from_confusion(confusion: np.ndarray) -> dict[str, float]:
    """Accuracy and macro precision/recall/F1 in percent (0/0 counts as 0)."""
    total = confusion.sum()
    tp = np.diag(confusion).astype(float)
    pred = confusion.sum(axis=0).astype(float)
    true = confusion.sum(axis=1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred > 0, tp / pred, 0.0)
        recall = np.where(true > 0, tp / true, 0.0)
        f1 = np.where(precision + recall > 0, 2 * precision * recall / (precision + recall), 0.0)
    return {
        "accuracy": 100.0 * float(tp.sum() / total) if total else 0.0,
        "precision": 100.0 * float(precision.mean()),
        "recall": 100.0 * float(recall.mean()),
        "f1": 100.0 * float(f1.mean()),
    }


METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


# -- LOSO benchmark -----------------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    """Each fold holds out exactly one subject; folds partition subjects."""

    scheme: str
    folds: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.folds)) != len(self.folds):
            raise ValueError("duplicate held-out subject in split plan")


def loso_plan(subjects) -> SplitPlan:
    return SplitPlan(scheme="loso", folds=tuple(sorted(set(subjects))))


@dataclass(frozen=True)
class FoldResult:
    held_out: str
    metrics: dict[str, float]
    confusion: np.ndarray
    n_train: int
    n_test: int
    norm_mean: np.ndarray
    norm_std: np.ndarray


@dataclass(frozen=True)
class CellResult:
    classifier: str
    strategy: str
    combo: str
    folds: tuple[FoldResult, ...]
    mean: dict[str, float]
    sd: dict[str, float]
    confusion: np.ndarray               # pooled over folds
    per_emotion_accuracy: dict[str, float]


@dataclass(frozen=True)
class BenchmarkReport:
    cells: tuple[CellResult, ...]
    split: SplitPlan
    seed: int
    source_checksum: str
    dataset_sizes: dict[str, int]
    improvements: dict[str, dict[str, float]]  # "clf/combo" -> metric deltas fine-whole

    def cell(self, classifier: str, strategy: str, combo: str) -> CellResult:
        for c in self.cells:
            if (c.classifier, c.strategy, c.combo) == (classifier, strategy, combo):
                return c
        raise KeyError((classifier, strategy, combo))


def normalize_train_test(train_x: np.ndarray, test_x: np.ndarray):
    """Z-score both sides using training-fold statistics only."""
    mean = train_x.mean(axis=0)
    std = train_x.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return (train_x - mean) / std, (test_x - mean) / std, mean, std


def _classify(classifier: str, train_x, train_y, test_x, seed: int, knn_k: int,
              mlp_config: MlpConfig):
    if classifier == "knn":
        return knn_classify(train_x, train_y, test_x, k=knn_k)
    if classifier == "mlp":
        cfg = MlpConfig(
            hidden=mlp_config.hidden, dropout=mlp_config.dropout,
            learning_rate=mlp_config.learning_rate, epochs=mlp_config.epochs,
            batch_size=mlp_config.batch_size, seed=seed,
            max_restarts=mlp_config.max_restarts,
        )
        return mlp_predict(mlp_train(train_x, train_y, cfg), test_x)
    raise ValueError(f"unknown classifier {classifier!r}")


def run_benchmark(
    trials,
    strategies: tuple[str, ...] = (FINE, WHOLE),
    classifiers: tuple[str, ...] = ("knn", "mlp"),
    combos: tuple[str, ...] = ("eeg", "eeg+gsr+ecg+ppg"),
    seed: int = 0,
    bands: tuple[BandDef, ...] = DEFAULT_BANDS,
    knn_k: int = 5,
    mlp_config: MlpConfig = MlpConfig(),
) -> BenchmarkReport:
    """Every (strategy x classifier x combo) cell under LOSO.

    Normalization statistics come from each fold's training split only; a
    failing fold propagates its error (folds are never silently dropped).
    """
    subjects = sorted({t.participant_id for t in trials})
    if len(subjects) < 2:
        raise TooFewSubjects("need at least 2 subjects for LOSO")
    split = loso_plan(subjects)
    tables = {kind: assemble_dataset(trials, kind, bands) for kind in strategies}

    cells = []
    for strategy in strategies:
        table = tables[strategy]
        for classifier in classifiers:
            for combo in combos:
                x_all = table.matrix(combo)
                folds = []
                for fold_index, held_out in enumerate(split.folds):
                    test_sel = table.subjects == held_out
                    train_sel = ~test_sel
                    train_x, test_x, mean, std = normalize_train_test(
                        x_all[train_sel], x_all[test_sel])
                    fold_seed = int(np.random.SeedSequence(
                        (seed, len(cells), fold_index)).generate_state(1)[0])
                    predicted = _classify(classifier, train_x, table.labels[train_sel],
                                          test_x, fold_seed, knn_k, mlp_config)
                    confusion = confusion_matrix(table.labels[test_sel], predicted)
                    folds.append(FoldResult(
                        held_out=held_out, metrics=metrics_from_confusion(confusion),
                        confusion=confusion, n_train=int(train_sel.sum()),
                        n_test=int(test_sel.sum()), norm_mean=mean, norm_std=std,
                    ))
                pooled = np.sum([f.confusion for f in folds], axis=0)
                with np.errstate(divide="ignore", invalid="ignore"):
                    row = pooled.sum(axis=1)
                    per_emotion = {
                        label: 100.0 * float(pooled[i, i] / row[i]) if row[i] else 0.0
                        for i, label in enumerate(EMOTION_LABELS)
                    }
                cells.append(CellResult(
                    classifier=classifier, strategy=strategy, combo=combo,
                    folds=tuple(folds),
                    mean={m: float(np.mean([f.metrics[m] for f in folds])) for m in METRIC_NAMES},
                    sd={m: float(np.std([f.metrics[m] for f in folds], ddof=1)) for m in METRIC_NAMES},
                    confusion=pooled, per_emotion_accuracy=per_emotion,
                ))

    report = BenchmarkReport(
        cells=tuple(cells), split=split, seed=seed,
        source_checksum=corpus_checksum(trials),
        dataset_sizes={k: len(t.epoch_ids) for k, t in tables.items()},
        improvements=_improvements(cells),
    )
    return report


def _improvements(cells) -> dict[str, dict[str, float]]:
    by_key = {(c.classifier, c.strategy, c.combo): c for c in cells}
    out = {}
    for (clf, strategy, combo), cell in sorted(by_key.items()):
        if strategy != FINE:
            continue
        whole = by_key.get((clf, WHOLE, combo))
        if whole is None:
            continue
        deltas = {m: cell.mean[m] - whole.mean[m] for m in METRIC_NAMES}
        deltas.update({
            f"emotion:{label}": cell.per_emotion_accuracy[label] - whole.per_emotion_accuracy[label]
            for label in EMOTION_LABELS
        })
        out[f"{clf}/{combo}"] = deltas
    return out


# -- serialization --------------------------------------------------------------------------

def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).hexdigest()


def report_to_dict(report: BenchmarkReport) -> dict:
    return {
        "seed": report.seed,
        "split": {"scheme": report.split.scheme, "folds": list(report.split.folds)},
        "source_checksum": report.source_checksum,
        "dataset_sizes": dict(sorted(report.dataset_sizes.items())),
        "improvements": {k: dict(sorted(v.items())) for k, v in sorted(report.improvements.items())},
        "cells": [
            {
                "classifier": c.classifier,
                "strategy": c.strategy,
                "combo": c.combo,
                "mean": {m: c.mean[m] for m in METRIC_NAMES},
                "sd": {m: c.sd[m] for m in METRIC_NAMES},
                "confusion": c.confusion.tolist(),
                "confusion_labels": list(EMOTION_LABELS),
                "per_emotion_accuracy": {l: c.per_emotion_accuracy[l] for l in EMOTION_LABELS},
                "folds": [
                    {
                        "held_out": f.held_out,
                        "metrics": {m: f.metrics[m] for m in METRIC_NAMES},
                        "n_train": f.n_train,
                        "n_test": f.n_test,
                        "confusion": f.confusion.tolist(),
                        "norm_mean_sha256": _digest(f.norm_mean),
                        "norm_std_sha256": _digest(f.norm_std),
                    }
                    for f in c.folds
                ],
            }
            for c in report.cells
        ],
    }


def report_to_json(report: BenchmarkReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)


def report_to_csv(report: BenchmarkReport) -> str:
    """Summary table: one row per cell, metrics as "mean +- sd"."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["classifier", "dataset", "combo", "accuracy", "precision", "recall", "f1"])
    for c in report.cells:
        writer.writerow(
            [c.classifier, c.strategy, c.combo]
            + [f"{c.mean[m]:.1f} ± {c.sd[m]:.1f}" for m in METRIC_NAMES]
        )
    return buf.getvalue()
