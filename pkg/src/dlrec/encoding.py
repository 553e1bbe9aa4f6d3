"""Deterministic numeric encoding of configurations.

Encoding rules, per component kind:

* exclusive with two categories -> one 0/1 indicator column (a one-hot
  pair collapsed to a single column to avoid perfect collinearity)
* exclusive with more categories -> one label column with integer codes
  ``0..n-1`` in declared category order
* multi-select -> one 0/1 membership column per category (a combination
  of parallel values is exactly a set-membership pattern)
* continuous / integer range -> one numeric column, stored as the natural
  log of the value when the component is log-scaled

``decode`` inverts ``encode`` on valid vectors and snaps arbitrary
vectors to the nearest valid configuration (rounding label codes,
thresholding indicators at 0.5, clamping ranges).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ValidationFailure
from .space import ComponentSpec, Configuration, Kind, SearchSpace


class EncodingError(ValidationFailure):
    pass


class ColumnRole(str, Enum):
    BINARY = "binary"
    LABEL = "label"
    MEMBER = "member"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class Column:
    component: str
    role: ColumnRole
    category: str | None = None  # set for MEMBER columns only


@dataclass(frozen=True)
class EncodingSchema:
    """Fixed-width column layout derived from a search space.

    The column order is a pure function of the space, so the same space
    always yields the same schema (and the same fingerprint).
    """

    space: SearchSpace
    columns: tuple[Column, ...]
    _spans: dict[str, tuple[int, int]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        spans: dict[str, tuple[int, int]] = {}
        for i, col in enumerate(self.columns):
            start, _ = spans.get(col.component, (i, i))
            spans[col.component] = (start, i + 1)
        object.__setattr__(self, "_spans", spans)

    @property
    def width(self) -> int:
        return len(self.columns)

    def component_span(self, name: str) -> tuple[int, int]:
        """Half-open column range owned by a component."""
        return self._spans[name]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for spec in self.space.components:
            h.update(repr((spec.name, spec.kind.value, spec.categories, spec.lo, spec.hi, spec.log_scale)).encode())
        for col in self.columns:
            h.update(repr((col.component, col.role.value, col.category)).encode())
        return h.hexdigest()[:16]


def build_schema(space: SearchSpace) -> EncodingSchema:
    columns: list[Column] = []
    for spec in space.components:
        if spec.kind is Kind.EXCLUSIVE:
            role = ColumnRole.BINARY if len(spec.categories) == 2 else ColumnRole.LABEL
            columns.append(Column(spec.name, role))
        elif spec.kind is Kind.MULTI_SELECT:
            columns.extend(Column(spec.name, ColumnRole.MEMBER, c) for c in spec.categories)
        else:
            columns.append(Column(spec.name, ColumnRole.NUMERIC))
    return EncodingSchema(space, tuple(columns))


def missing_code(spec: ComponentSpec) -> float:
    """Label code reserved for a missing categorical value (appended after
    the declared categories)."""
    return float(len(spec.categories))


def _label_code(spec: ComponentSpec, value) -> float:
    if not isinstance(value, str) or value not in spec.categories:
        raise EncodingError(f"{spec.name}: unknown category {value!r}")
    return float(spec.categories.index(value))


def _encode_numeric(spec: ComponentSpec, value: float) -> float:
    return math.log(value) if spec.log_scale else float(value)


def encode(schema: EncodingSchema, config: Configuration) -> np.ndarray:
    """Encode a full configuration into a float vector of schema width."""
    out = np.empty(schema.width, dtype=np.float64)
    i = 0
    for spec in schema.space.components:
        try:
            value = config[spec.name]
        except KeyError:
            raise EncodingError(f"configuration lacks component {spec.name!r}") from None
        if spec.kind is Kind.EXCLUSIVE:
            out[i] = _label_code(spec, value)
            i += 1
        elif spec.kind is Kind.MULTI_SELECT:
            unknown = set(value) - set(spec.categories)
            if unknown:
                raise EncodingError(f"{spec.name}: unknown categories {sorted(unknown)}")
            for cat in spec.categories:
                out[i] = 1.0 if cat in value else 0.0
                i += 1
        else:
            out[i] = _encode_numeric(spec, value)
            i += 1
    return out


def encode_partial(schema: EncodingSchema, values: Configuration) -> np.ndarray:
    """Encode a partial configuration, leaving NaN in missing components'
    columns (imputation is the dataset layer's job)."""
    out = np.full(schema.width, np.nan, dtype=np.float64)
    i = 0
    for spec in schema.space.components:
        n_cols = len(spec.categories) if spec.kind is Kind.MULTI_SELECT else 1
        if spec.name in values:
            value = values[spec.name]
            if spec.kind is Kind.EXCLUSIVE:
                out[i] = _label_code(spec, value)
            elif spec.kind is Kind.MULTI_SELECT:
                unknown = set(value) - set(spec.categories)
                if unknown:
                    raise EncodingError(f"{spec.name}: unknown categories {sorted(unknown)}")
                for j, cat in enumerate(spec.categories):
                    out[i + j] = 1.0 if cat in value else 0.0
            else:
                out[i] = _encode_numeric(spec, value)
        i += n_cols
    return out


def decode(schema: EncodingSchema, vec: np.ndarray) -> Configuration:
    """Map a vector back to a valid configuration.

    Inverse of :func:`encode` on vectors that came from valid
    configurations; otherwise snaps each column block to the nearest
    valid value.  An all-zero membership block promotes its largest raw
    column so the decoded set is never empty.
    """
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (schema.width,):
        raise EncodingError(f"expected vector of width {schema.width}, got shape {vec.shape}")
    config: Configuration = {}
    i = 0
    for spec in schema.space.components:
        if spec.kind is Kind.EXCLUSIVE:
            # half-up rounding so the two-category case thresholds at 0.5
            code = int(min(max(math.floor(vec[i] + 0.5), 0), len(spec.categories) - 1))
            config[spec.name] = spec.categories[code]
            i += 1
        elif spec.kind is Kind.MULTI_SELECT:
            n = len(spec.categories)
            block = vec[i : i + n]
            chosen = {cat for cat, v in zip(spec.categories, block) if v >= 0.5}
            if not chosen:
                chosen = {spec.categories[int(np.argmax(block))]}
            config[spec.name] = chosen
            i += n
        else:
            raw = math.exp(vec[i]) if spec.log_scale else float(vec[i])
            raw = min(max(raw, spec.lo), spec.hi)
            config[spec.name] = int(round(raw)) if spec.kind is Kind.INTEGER else raw
            i += 1
    return config
