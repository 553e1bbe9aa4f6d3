"""Permutation importance on the static predictor and component confirmation.

A column's importance is the mean MSE increase after shuffling it, à la
Breiman.  Column scores aggregate to components by summation so wide
multi-hot blocks are not penalized for their width; the confirmed search
set is the Top-N of the resulting ranking (N defaults to 5).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
import yaml

from .encoding import EncodingSchema
from .errors import ValidationFailure
from .forest import ForestModel, predict_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColumnImportance:
    index: int
    component: str
    mean: float  # raw mean MSE increase; may be negative
    std: float

    @property
    def clipped(self) -> float:
        """Reported score: negative estimates clip to 0, raw value retained."""
        return max(self.mean, 0.0)


@dataclass(frozen=True)
class ImportanceReport:
    per_column: tuple[ColumnImportance, ...]
    per_component: tuple[tuple[str, float], ...]  # raw sums, component order
    ranking: tuple[str, ...]
    baseline_mse: float
    repeats: int

    def component_score(self, name: str) -> float:
        for comp, score in self.per_component:
            if comp == name:
                return score
        raise KeyError(name)


def permutation_importance(
    model: ForestModel,
    X: np.ndarray,
    y: np.ndarray,
    schema: EncodingSchema,
    repeats: int = 10,
    seed: int = 0,
) -> ImportanceReport:
    """Score every column by shuffling it and re-measuring MSE.

    Shuffles are seed-deterministic per column, so evaluation order (or a
    parallel backend) cannot change the result.  A column no tree ever
    splits on scores exactly 0.
    """
    if repeats < 1:
        raise ValidationFailure("repeats must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    baseline = float(np.mean((predict_batch(model, X) - y) ** 2))

    per_column = []
    for j, column in enumerate(schema.columns):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(j,)))
        shuffled = X.copy()
        increases = np.empty(repeats, dtype=np.float64)
        for r in range(repeats):
            shuffled[:, j] = X[rng.permutation(len(X)), j]
            mse = float(np.mean((predict_batch(model, shuffled) - y) ** 2))
            increases[r] = mse - baseline
        per_column.append(
            ColumnImportance(
                index=j,
                component=column.component,
                mean=float(np.mean(increases)),
                std=float(np.std(increases)),
            )
        )

    totals: dict[str, float] = {name: 0.0 for name in schema.space.names}
    for ci in per_column:
        totals[ci.component] += ci.mean
    per_component = tuple((name, totals[name]) for name in schema.space.names)
    ranking = tuple(sorted(totals, key=lambda name: (-totals[name], name)))
    return ImportanceReport(
        per_column=tuple(per_column),
        per_component=per_component,
        ranking=ranking,
        baseline_mse=baseline,
        repeats=repeats,
    )


def confirm_components(report: ImportanceReport, top_n: int = 5) -> list[str]:
    """The components worth searching: the Top-N of the importance ranking."""
    if top_n < 1:
        raise ValidationFailure("top_n must be >= 1")
    if top_n > len(report.ranking):
        logger.warning(
            "top_n=%d exceeds the %d available components; truncating", top_n, len(report.ranking)
        )
        top_n = len(report.ranking)
    return list(report.ranking[:top_n])


def write_report(report: ImportanceReport, path: str) -> None:
    doc = {
        "baseline_mse": report.baseline_mse,
        "repeats": report.repeats,
        "ranking": list(report.ranking),
        "components": [
            {"component": name, "importance": max(score, 0.0), "raw": score}
            for name, score in sorted(report.per_component, key=lambda kv: (-kv[1], kv[0]))
        ],
        "columns": [
            {
                "index": ci.index,
                "component": ci.component,
                "importance": ci.clipped,
                "raw": ci.mean,
                "std": ci.std,
            }
            for ci in report.per_column
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, allow_unicode=True)


def write_scores_csv(report: ImportanceReport, path: str) -> None:
    """Bar-chart data: one (component, score) row per component, ranked."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "importance"])
        scores = dict(report.per_component)
        for name in report.ranking:
            writer.writerow([name, max(scores[name], 0.0)])
