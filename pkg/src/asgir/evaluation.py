"""Train/test splitting, confusion-matrix metrics and report formatting."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .labels import LabelRegistry

log = logging.getLogger(__name__)


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (n_classes, n_classes); rows true, cols predicted

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class ClassReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    median_precision: float
    median_recall: float
    median_f1: float
    registry: LabelRegistry


def split(
    class_ids, ratio: float = 0.8, seed: int = 0
) -> tuple[list[int], list[int]]:
    """Stratified index split: per class, floor(ratio*n) items go to train.

    Returns (train_indices, test_indices) into the input sequence. The
    shuffle is seeded, so identical seeds give identical splits. A class
    with a single item is warned about and assigned to train.
    """
    ids = np.asarray(class_ids, dtype=np.int64)
    if len(ids) == 0:
        raise ArgumentError("nothing to split")
    if not 0.0 < ratio < 1.0:
        raise ArgumentError("ratio must be in (0, 1)")

    rng = np.random.default_rng(seed)
    train: list[int] = []
    test: list[int] = []
    for c in np.unique(ids):
        members = np.flatnonzero(ids == c)
        if len(members) == 1:
            log.warning("class %d has a single segment; assigning it to train", c)
            train.append(int(members[0]))
            continue
        order = rng.permutation(len(members))
        cut = int(np.floor(ratio * len(members)))
        train.extend(int(i) for i in members[order[:cut]])
        test.extend(int(i) for i in members[order[cut:]])
    return sorted(train), sorted(test)


def confusion(true_labels, predicted_labels, n_classes: int) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if len(t) != len(p):
        raise ArgumentError(f"{len(t)} true labels vs {len(p)} predictions")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts=counts)


def class_report(cm: ConfusionMatrix, registry: LabelRegistry) -> ClassReport:
    """Per-class precision/recall/F1 plus macro averages, medians, accuracy.

    Precision of a never-predicted class and recall of an absent class are
    defined as 0; F1 is 2PR/(P+R) when P+R > 0, else 0.
    """
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    col_sums = counts.sum(axis=0)
    row_sums = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(col_sums > 0, diag / col_sums, 0.0)
        recall = np.where(row_sums > 0, diag / row_sums, 0.0)
        pr_sum = precision + recall
        f1 = np.where(pr_sum > 0, 2.0 * precision * recall / pr_sum, 0.0)
    total = counts.sum()
    accuracy = float(diag.sum() / total) if total > 0 else 0.0
    return ClassReport(
        precision=precision,
        recall=recall,
        f1=f1,
        support=row_sums.astype(np.int64),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        accuracy=accuracy,
        median_precision=float(np.median(precision)),
        median_recall=float(np.median(recall)),
        median_f1=float(np.median(f1)),
        registry=registry,
    )


def report_as_dict(report: ClassReport) -> dict:
    return {
        "classes": [
            {
                "name": report.registry.name_of(c),
                "precision": round(float(report.precision[c]), 6),
                "recall": round(float(report.recall[c]), 6),
                "f1": round(float(report.f1[c]), 6),
                "support": int(report.support[c]),
            }
            for c in range(len(report.registry))
        ],
        "macro": {
            "precision": round(report.macro_precision, 6),
            "recall": round(report.macro_recall, 6),
            "f1": round(report.macro_f1, 6),
        },
        "medians": {
            "precision": round(report.median_precision, 6),
            "recall": round(report.median_recall, 6),
            "f1": round(report.median_f1, 6),
        },
        "accuracy": round(report.accuracy, 6),
    }


def report_as_text(report: ClassReport) -> str:
    """Aligned per-class table: Class, Precision, Recall, F1-Score, Support."""
    name_width = max([len("Class")] + [len(n) for n in report.registry.names])
    lines = [
        f"{'Class':<{name_width}}  {'Precision':>9}  {'Recall':>6}  {'F1-Score':>8}  {'Support':>7}"
    ]
    for c in range(len(report.registry)):
        lines.append(
            f"{report.registry.name_of(c):<{name_width}}  "
            f"{report.precision[c]:>9.2f}  {report.recall[c]:>6.2f}  "
            f"{report.f1[c]:>8.2f}  {report.support[c]:>7d}"
        )
    lines.append("")
    lines.append(
        f"{'macro':<{name_width}}  {report.macro_precision:>9.2f}  "
        f"{report.macro_recall:>6.2f}  {report.macro_f1:>8.2f}  {report.support.sum():>7d}"
    )
    lines.append(
        f"{'median':<{name_width}}  {report.median_precision:>9.2f}  "
        f"{report.median_recall:>6.2f}  {report.median_f1:>8.2f}"
    )
    lines.append(f"accuracy: {report.accuracy:.4f}")
    return "\n".join(lines)


@dataclass
class AblationRow:
    head: str
    masked: bool
    macro_f1: float | None = None
    macro_precision: float | None = None
    macro_recall: float | None = None
    accuracy: float | None = None
    error: str | None = None


def run_ablation(
    train_embeddings,
    train_labels,
    test_embeddings,
    test_labels,
    test_regions,
    registry: LabelRegistry,
    region_index,
    heads: list[str],
    masking_options: list[bool],
    seed: int = 0,
) -> list[AblationRow]:
    """One row per (head, masking) configuration on the shared test split.

    Embeddings are computed by the caller once and reused across rows. A
    row that fails to train reports its error and the remaining rows run.
    """
    from . import heads as heads_mod
    from .regions import mask_scores

    rows: list[AblationRow] = []
    for head_name in heads:
        try:
            if head_name == "svm":
                model = heads_mod.svm_train(train_embeddings, train_labels, registry, seed=seed)
                scorer = lambda e, m=model: heads_mod.svm_score(m, e)
            elif head_name == "gmm":
                model = heads_mod.gmm_train(train_embeddings, train_labels, registry, seed=seed)
                scorer = lambda e, m=model: heads_mod.gmm_score(m, e)
            else:
                raise ArgumentError(f"unknown head {head_name!r}")
        except Exception as exc:
            for masked in masking_options:
                rows.append(AblationRow(head=head_name, masked=masked, error=str(exc)))
            continue

        score_cache = [scorer(e) for e in test_embeddings]
        for masked in masking_options:
            try:
                predictions = []
                for scores, region in zip(score_cache, test_regions):
                    use_region = region if masked else None
                    final = mask_scores(scores, use_region, region_index) if use_region else scores
                    predictions.append(heads_mod.predict(final))
                cm = confusion(test_labels, predictions, len(registry))
                report = class_report(cm, registry)
                rows.append(
                    AblationRow(
                        head=head_name,
                        masked=masked,
                        macro_f1=report.macro_f1,
                        macro_precision=report.macro_precision,
                        macro_recall=report.macro_recall,
                        accuracy=report.accuracy,
                    )
                )
            except Exception as exc:
                rows.append(AblationRow(head=head_name, masked=masked, error=str(exc)))
    return rows


def ablation_as_text(rows: list[AblationRow]) -> str:
    lines = [f"{'Model':<14} {'F1-Score Macro':>14} {'Precision':>10} {'Recall':>8} {'Accuracy':>9}"]
    for row in rows:
        label = row.head.upper() + ("+region" if row.masked else "")
        if row.error is not None:
            lines.append(f"{label:<14} failed: {row.error}")
        else:
            lines.append(
                f"{label:<14} {row.macro_f1:>14.3f} {row.macro_precision:>10.3f} "
                f"{row.macro_recall:>8.3f} {row.accuracy:>9.3f}"
            )
    return "\n".join(lines)
