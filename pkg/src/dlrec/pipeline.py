"""End-to-end recommendation: dataset -> predictor -> confirmation -> search.

``recommend`` trains the grid-tuned forest on a component dataset, confirms
which components to search (Top-5 by permutation importance, or a manual
list), pins every other component to a fixed value, then runs the
probability-scheduled Bayesian search against the static predictor.  The
result is a full, validating configuration plus its predicted Top-1
accuracy; no training job is ever launched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
import yaml

from . import forest as forest_mod
from .bo import AcquisitionParams, optimize, write_history
from .dataset import TabularDataset, component_modes, load_csv, to_matrix
from .encoding import EncodingSchema, build_schema, decode, encode
from .errors import ValidationFailure
from .importance import confirm_components, permutation_importance
from .space import (
    Configuration,
    SearchSpace,
    config_to_jsonable,
    default_space,
    load_aliases,
    load_space,
    restrict,
    validate,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecommendationReport:
    recommended: Configuration
    predicted_top1: float
    searched_components: list[str]
    fixed_components: Configuration
    mode: str
    importance_ranking: list[tuple[str, float]] | None
    surrogate_cv_mse: float
    best_n_estimators: int
    best_max_depth: int
    optimizer_history_path: str | None
    seed: int
    budget: int
    n_init: int
    alpha: float
    beta: float
    p: float

    def to_dict(self, space: SearchSpace) -> dict[str, Any]:
        return {
            "recommended": config_to_jsonable(space, self.recommended),
            "predicted_top1": self.predicted_top1,
            "predicted_top1_rounded": round(self.predicted_top1, 2),
            "searched_components": list(self.searched_components),
            "fixed_components": config_to_jsonable(space, self.fixed_components),
            "mode": self.mode,
            "importance_ranking": (
                [[name, score] for name, score in self.importance_ranking]
                if self.importance_ranking is not None
                else None
            ),
            "surrogate_cv_mse": self.surrogate_cv_mse,
            "best_n_estimators": self.best_n_estimators,
            "best_max_depth": self.best_max_depth,
            "optimizer_history_path": self.optimizer_history_path,
            "seed": self.seed,
            "budget": self.budget,
            "n_init": self.n_init,
            "alpha": self.alpha,
            "beta": self.beta,
            "p": self.p,
        }


def write_report(report: RecommendationReport, space: SearchSpace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(report.to_dict(space), fh, sort_keys=False, allow_unicode=True)


def _load_space_and_aliases(space_path: str | None) -> tuple[SearchSpace, dict[str, str]]:
    if space_path is None:
        return default_space(), {}
    return load_space(space_path), load_aliases(space_path)


def train_predictor(
    ds: TabularDataset,
    schema: EncodingSchema,
    seed: int = 0,
    folds: int = 5,
    n_jobs: int = 1,
) -> tuple[forest_mod.ForestModel, forest_mod.TunerResult]:
    """Grid-tuned forest fitted on the full dataset."""
    X, y = to_matrix(ds, schema)
    tuner = forest_mod.grid_search(X, y, folds=folds, seed=seed)
    model = forest_mod.fit_forest(
        X, y, tuner.best_n_estimators, tuner.best_max_depth,
        seed=seed, schema=schema, n_jobs=n_jobs,
    )
    return model, tuner


def recommend(
    dataset_path: str,
    space_path: str | None = None,
    mode: str = "auto",
    manual_components: list[str] | None = None,
    fixed: Configuration | None = None,
    params: AcquisitionParams | None = None,
    budget: int = 60,
    n_init: int = 10,
    seed: int = 0,
    top_n: int = 5,
    importance_repeats: int = 10,
    history_path: str | None = None,
    candidate_budget: int = 2048,
    n_jobs: int = 1,
    fixed_policy: str = "best_record",
) -> RecommendationReport:
    """Produce a full configuration and its predicted Top-1 accuracy.

    ``mode="auto"`` searches the Top-``top_n`` components by permutation
    importance; ``mode="manual"`` searches exactly ``manual_components``.
    Non-searched components take user-supplied ``fixed`` values first;
    remaining ones follow ``fixed_policy``: ``"best_record"`` anchors them
    at the best-scoring dataset record (searching around a known-good
    context, the way recommendations are applied to an existing model),
    ``"mode"`` uses the dataset mode (most frequent category / median
    numeric).  Either way the recommendation is complete and runnable.
    """
    if mode not in ("auto", "manual"):
        raise ValidationFailure(f"mode must be 'auto' or 'manual', got {mode!r}")
    params = params or AcquisitionParams()
    fixed = dict(fixed or {})
    space, aliases = _load_space_and_aliases(space_path)
    ds = load_csv(dataset_path, space, aliases)
    if not ds.records:
        raise ValidationFailure(f"dataset {dataset_path!r} has no records")
    schema = build_schema(space)
    model, tuner = train_predictor(ds, schema, seed=seed, n_jobs=n_jobs)
    cv_mse = tuner.cv_mse[(tuner.best_n_estimators, tuner.best_max_depth)]
    X, y = to_matrix(ds, schema)

    importance_ranking: list[tuple[str, float]] | None = None
    if mode == "manual":
        if not manual_components:
            raise ValidationFailure("manual mode needs a non-empty component list")
        missing = sorted(set(manual_components) - set(space.names))
        if missing:
            raise ValidationFailure(f"not components of this space: {missing}")
        searched = list(dict.fromkeys(manual_components))
    else:
        report = permutation_importance(
            model, X, y, schema, repeats=importance_repeats, seed=seed
        )
        searched = confirm_components(report, top_n=top_n)
        importance_ranking = [(name, report.component_score(name)) for name in report.ranking]

    overlap = sorted(set(searched) & set(fixed))
    if overlap:
        raise ValidationFailure(f"components both searched and fixed: {overlap}")
    unknown_fixed = sorted(set(fixed) - set(space.names))
    if unknown_fixed:
        raise ValidationFailure(f"fixed values for unknown components: {unknown_fixed}")

    if fixed_policy not in ("best_record", "mode"):
        raise ValidationFailure(f"fixed_policy must be 'best_record' or 'mode', got {fixed_policy!r}")
    defaults = component_modes(ds)
    if fixed_policy == "best_record":
        best_record = max(ds.records, key=lambda r: r.top1_accuracy)
        defaults = {**defaults, **best_record.values}
    fixed_full: Configuration = {
        name: fixed.get(name, defaults[name]) for name in space.names if name not in searched
    }
    reduced = restrict(space, searched, fixed_full)
    reduced_schema = build_schema(reduced)

    def predict_full(reduced_x: np.ndarray) -> float:
        config = dict(fixed_full)
        config.update(decode(reduced_schema, reduced_x))
        return forest_mod.predict(model, encode(schema, config))

    if budget == 0:
        logger.warning("budget is 0; returning the best of %d initial samples", n_init)
    result = optimize(
        predict_full,
        reduced,
        reduced_schema,
        params,
        n_init=n_init,
        t=budget,
        seed=seed,
        candidate_budget=candidate_budget,
    )
    if history_path is not None:
        write_history(result.history, reduced_schema, history_path)

    recommended = dict(fixed_full)
    recommended.update(result.best_config)
    report_ok = validate(space, recommended)
    if not report_ok.ok:
        raise ValidationFailure(f"internal error: recommendation fails validation: {report_ok.violations}")
    predicted = forest_mod.predict(model, encode(schema, recommended))

    return RecommendationReport(
        recommended=recommended,
        predicted_top1=predicted,
        searched_components=searched,
        fixed_components=fixed_full,
        mode=mode,
        importance_ranking=importance_ranking,
        surrogate_cv_mse=cv_mse,
        best_n_estimators=tuner.best_n_estimators,
        best_max_depth=tuner.best_max_depth,
        optimizer_history_path=history_path,
        seed=seed,
        budget=budget,
        n_init=n_init,
        alpha=params.alpha,
        beta=params.beta,
        p=params.p,
    )


def predict_config(
    model_path: str, config_path: str, space_path: str | None = None
) -> float:
    """Predicted Top-1 accuracy (percent) for a stored configuration."""
    from .space import load_config

    space, _ = _load_space_and_aliases(space_path)
    schema = build_schema(space)
    model = forest_mod.load(model_path)
    if model.schema_fingerprint is not None and model.schema_fingerprint != schema.fingerprint():
        raise forest_mod.ShapeError(
            "model was trained against a different encoding schema "
            f"({model.schema_fingerprint} != {schema.fingerprint()})"
        )
    config = load_config(config_path, space)
    report = validate(space, config)
    if not report.ok:
        problems = "; ".join(f"{v.component}: {v.message}" for v in report.violations)
        raise ValidationFailure(f"configuration is invalid: {problems}")
    return forest_mod.predict(model, encode(schema, config))
