"""Tabular component datasets: CSV ingestion, imputation, design matrices.

The interchange format is UTF-8 CSV with a header row.  Column names must
match component names in the space file exactly (case-sensitive); an
optional ``aliases`` mapping adapts foreign headers.  Multi-select cells
hold ``;``-separated label lists, empty cells are missing values, and the
``top1_accuracy`` column carries the target in percent (0-100).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from .encoding import ColumnRole, EncodingSchema, encode_partial, missing_code
from .errors import LoadFailure, ValidationFailure
from .space import Configuration, Kind, SearchSpace, _check_value

logger = logging.getLogger(__name__)

TARGET_COLUMN = "top1_accuracy"
SOURCE_COLUMN = "source_id"
MULTI_SELECT_SEPARATOR = ";"


class DatasetError(ValidationFailure):
    pass


@dataclass(frozen=True)
class ModelRecord:
    """One published model: a partial configuration plus its accuracy."""

    values: dict[str, Any]
    top1_accuracy: float
    source_id: str = ""


@dataclass(frozen=True)
class TabularDataset:
    space: SearchSpace
    records: tuple[ModelRecord, ...]

    def __len__(self) -> int:
        return len(self.records)


def _parse_cell(spec, text: str, row: int) -> Any:
    if spec.kind is Kind.MULTI_SELECT:
        labels = [part.strip() for part in text.split(MULTI_SELECT_SEPARATOR)]
        value: Any = {label for label in labels if label}
    elif spec.kind is Kind.EXCLUSIVE:
        value = text.strip()
    else:
        try:
            number = float(text)
        except ValueError:
            raise DatasetError(f"row {row}: {spec.name!r} is not numeric: {text!r}") from None
        if spec.kind is Kind.INTEGER:
            if not number.is_integer():
                raise DatasetError(f"row {row}: {spec.name!r} must be an integer: {text!r}")
            value = int(number)
        else:
            value = number
    message = _check_value(spec, value)
    if message is not None:
        raise DatasetError(f"row {row}: {spec.name!r}: {message}")
    return value


def load_csv(path: str, space: SearchSpace, aliases: dict[str, str] | None = None) -> TabularDataset:
    """Read a component dataset.

    One record per row; empty cells become missing values; columns that
    match no component (and no alias) are logged and ignored.  Rows with a
    missing or out-of-range target raise, naming the offending row.
    """
    aliases = aliases or {}
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise LoadFailure(f"cannot read dataset {path!r}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"dataset {path!r} is empty") from None
        header = [aliases.get(name, name) for name in header]
        if TARGET_COLUMN not in header:
            raise DatasetError(f"dataset {path!r} lacks the {TARGET_COLUMN!r} column")
        unknown = [name for name in header if name not in space and name not in (TARGET_COLUMN, SOURCE_COLUMN)]
        if unknown:
            logger.warning("ignoring unknown columns in %s: %s", path, ", ".join(unknown))

        records: list[ModelRecord] = []
        for row_number, cells in enumerate(reader, start=1):
            values: dict[str, Any] = {}
            target: float | None = None
            source = ""
            for name, text in zip(header, cells):
                text = text.strip()
                if name == TARGET_COLUMN:
                    try:
                        target = float(text)
                    except ValueError:
                        raise DatasetError(f"row {row_number}: bad {TARGET_COLUMN}: {text!r}") from None
                elif name == SOURCE_COLUMN:
                    source = text
                elif name in space and text != "":
                    values[name] = _parse_cell(space[name], text, row_number)
            if target is None:
                raise DatasetError(f"row {row_number}: missing {TARGET_COLUMN}")
            if not 0.0 <= target <= 100.0:
                raise DatasetError(f"row {row_number}: {TARGET_COLUMN} {target} outside [0, 100]")
            records.append(ModelRecord(values=values, top1_accuracy=target, source_id=source))
    return TabularDataset(space=space, records=tuple(records))


def save_csv(ds: TabularDataset, path: str) -> None:
    """Write a dataset back out with normalized column order."""
    names = ds.space.names
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + [TARGET_COLUMN, SOURCE_COLUMN])
        for record in ds.records:
            row = []
            for name in names:
                if name not in record.values:
                    row.append("")
                    continue
                value = record.values[name]
                if isinstance(value, (set, frozenset)):
                    order = ds.space[name].categories
                    row.append(MULTI_SELECT_SEPARATOR.join(c for c in order if c in value))
                else:
                    row.append(repr(value) if isinstance(value, float) else str(value))
            row.append(repr(record.top1_accuracy))
            row.append(record.source_id)
            writer.writerow(row)


def to_matrix(ds: TabularDataset, schema: EncodingSchema) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix and target vector, with missing values imputed.

    Numeric columns impute to the column median of non-missing rows (the
    range midpoint when every row is missing); label and binary columns
    use the dedicated missing code appended after the declared categories;
    membership columns impute to 0.
    """
    if not ds.records:
        raise DatasetError("dataset has no records")
    X = np.vstack([encode_partial(schema, r.values) for r in ds.records])
    y = np.array([r.top1_accuracy for r in ds.records], dtype=np.float64)
    for j, column in enumerate(schema.columns):
        mask = np.isnan(X[:, j])
        if not mask.any():
            continue
        if column.role is ColumnRole.NUMERIC:
            spec = schema.space[column.component]
            if mask.all():
                mid = 0.5 * (spec.lo + spec.hi)
                fill = np.log(mid) if spec.log_scale else mid
            else:
                fill = float(np.median(X[~mask, j]))
        elif column.role is ColumnRole.MEMBER:
            fill = 0.0
        else:
            fill = missing_code(schema.space[column.component])
        X[mask, j] = fill
    return X, y


def split(ds: TabularDataset, fraction: float, seed: int) -> tuple[TabularDataset, TabularDataset]:
    """Seed-deterministic shuffle split into disjoint, exhaustive halves."""
    if not 0.0 < fraction < 1.0:
        raise ValidationFailure(f"fraction must lie in (0, 1), got {fraction}")
    n = len(ds.records)
    order = np.random.default_rng(seed).permutation(n)
    n_first = int(round(n * fraction))
    first = tuple(ds.records[i] for i in order[:n_first])
    second = tuple(ds.records[i] for i in order[n_first:])
    return TabularDataset(ds.space, first), TabularDataset(ds.space, second)


def component_modes(ds: TabularDataset) -> Configuration:
    """Most frequent categorical value / median numeric per component.

    Used to complete non-searched components so a recommendation is always
    a full runnable configuration.  Components never observed fall back to
    the first category, the full category set's most common single label,
    or the range midpoint.
    """
    modes: Configuration = {}
    for spec in ds.space.components:
        observed = [r.values[spec.name] for r in ds.records if spec.name in r.values]
        if spec.kind is Kind.EXCLUSIVE:
            if observed:
                counts: dict[str, int] = {}
                for v in observed:
                    counts[v] = counts.get(v, 0) + 1
                best = max(counts.values())
                winners = [c for c in spec.categories if counts.get(c, 0) == best]
                modes[spec.name] = winners[0]
            else:
                modes[spec.name] = spec.categories[0]
        elif spec.kind is Kind.MULTI_SELECT:
            if observed:
                counts = {}
                for v in observed:
                    key = tuple(c for c in spec.categories if c in v)
                    counts[key] = counts.get(key, 0) + 1
                best = max(counts.values())
                winners = sorted(key for key, c in counts.items() if c == best)
                modes[spec.name] = set(winners[0])
            else:
                modes[spec.name] = {spec.categories[0]}
        else:
            if observed:
                value = float(np.median(np.asarray(observed, dtype=np.float64)))
            else:
                value = 0.5 * (spec.lo + spec.hi)
            value = min(max(value, spec.lo), spec.hi)
            modes[spec.name] = int(round(value)) if spec.kind is Kind.INTEGER else value
    return modes
