"""Component search space: specs, configurations, sampling, restriction.

A ``SearchSpace`` is an ordered collection of ``ComponentSpec`` entries.  A
``Configuration`` assigns a value to every component in its space:

* exclusive categorical  -> one category label (``str``)
* multi-select categorical -> a non-empty ``set`` of labels
* continuous range       -> ``float`` in ``[lo, hi]``
* integer range          -> ``int`` in ``[lo, hi]``

The bundled default space covers the 27 tunable deep-learning system
components (architecture choices, training hyperparameters, data
properties, hardware) shipped in ``data/default_space.yaml``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Any, Iterable

import numpy as np
import yaml

from .errors import LoadFailure, ValidationFailure

Configuration = dict[str, Any]


class Kind(str, Enum):
    """How a component takes values."""

    EXCLUSIVE = "exclusive"
    MULTI_SELECT = "multi_select"
    CONTINUOUS = "continuous"
    INTEGER = "integer"

    @property
    def is_categorical(self) -> bool:
        return self in (Kind.EXCLUSIVE, Kind.MULTI_SELECT)

    @property
    def is_range(self) -> bool:
        return not self.is_categorical


class Dimension(str, Enum):
    """Top-level grouping a component belongs to."""

    MODEL_ARCHITECTURE = "model_architecture"
    TRAINING_OPTIMIZATION = "training_optimization"
    REGULARIZATION_GENERALIZATION = "regularization_generalization"
    FRAMEWORK = "framework"
    DATA = "data"
    HARDWARE = "hardware"


@dataclass(frozen=True)
class ComponentSpec:
    """One tunable component: its kind and admissible values.

    Categorical kinds use ``categories`` (ordered, duplicate-free); range
    kinds use ``lo``/``hi`` (and optionally ``log_scale`` for quantities
    spanning orders of magnitude, e.g. learning rate).
    """

    name: str
    dimension: Dimension
    kind: Kind
    categories: tuple[str, ...] = ()
    lo: float = 0.0
    hi: float = 0.0
    log_scale: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not self.name:
            raise ValidationFailure("component name must be non-empty")
        if self.kind.is_categorical:
            if not self.categories:
                raise ValidationFailure(f"{self.name}: categorical component needs categories")
            if len(set(self.categories)) != len(self.categories):
                raise ValidationFailure(f"{self.name}: duplicate category labels")
            if self.log_scale:
                raise ValidationFailure(f"{self.name}: log_scale is meaningless for categories")
        else:
            if not self.lo < self.hi:
                raise ValidationFailure(f"{self.name}: requires lo < hi, got [{self.lo}, {self.hi}]")
            if self.log_scale and self.lo <= 0:
                raise ValidationFailure(f"{self.name}: log_scale requires lo > 0")
            if self.kind is Kind.INTEGER and not (
                float(self.lo).is_integer() and float(self.hi).is_integer()
            ):
                raise ValidationFailure(f"{self.name}: integer component needs integer bounds")
            if self.categories:
                raise ValidationFailure(f"{self.name}: range component must not list categories")

    def category_index(self, label: str) -> int:
        try:
            return self.categories.index(label)
        except ValueError:
            raise ValidationFailure(f"{self.name}: unknown category {label!r}") from None


@dataclass(frozen=True)
class SearchSpace:
    """Ordered, immutable collection of components with unique names."""

    components: tuple[ComponentSpec, ...]
    _by_name: dict[str, ComponentSpec] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_name = {c.name: c for c in self.components}
        if len(by_name) != len(self.components):
            raise ValidationFailure("component names must be unique")
        object.__setattr__(self, "_by_name", by_name)

    def __len__(self) -> int:
        return len(self.components)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> ComponentSpec:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"no component named {name!r}") from None

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.components]


@dataclass(frozen=True)
class Violation:
    component: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]

    def __bool__(self) -> bool:
        return self.ok


def _check_value(spec: ComponentSpec, value: Any) -> str | None:
    """Return a violation message for ``value`` against ``spec``, or None."""
    if spec.kind is Kind.EXCLUSIVE:
        if not isinstance(value, str):
            return f"expected a category label, got {type(value).__name__}"
        if value not in spec.categories:
            return f"unknown category {value!r}"
    elif spec.kind is Kind.MULTI_SELECT:
        if not isinstance(value, (set, frozenset)):
            return f"expected a set of labels, got {type(value).__name__}"
        if not value:
            return "multi-select value must be non-empty"
        unknown = sorted(v for v in value if v not in spec.categories)
        if unknown:
            return f"unknown categories {unknown}"
    elif spec.kind is Kind.INTEGER:
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            return f"expected an integer, got {type(value).__name__}"
        if not spec.lo <= value <= spec.hi:
            return f"{value} outside [{spec.lo:g}, {spec.hi:g}]"
    else:
        if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
            return f"expected a number, got {type(value).__name__}"
        if not spec.lo <= value <= spec.hi:
            return f"{value} outside [{spec.lo:g}, {spec.hi:g}]"
    return None


def validate(space: SearchSpace, config: Configuration) -> ValidationReport:
    """Check a configuration against its space.

    Violations are data, not exceptions: the report lists one entry per
    missing component, unknown component, or out-of-range/unknown value.
    """
    violations: list[Violation] = []
    for spec in space.components:
        if spec.name not in config:
            violations.append(Violation(spec.name, "missing component"))
            continue
        message = _check_value(spec, config[spec.name])
        if message is not None:
            violations.append(Violation(spec.name, message))
    for name in config:
        if name not in space:
            violations.append(Violation(name, "not a component of this space"))
    return ValidationReport(ok=not violations, violations=tuple(violations))


def _sample_value(spec: ComponentSpec, rng: np.random.Generator) -> Any:
    if spec.kind is Kind.EXCLUSIVE:
        return spec.categories[int(rng.integers(len(spec.categories)))]
    if spec.kind is Kind.MULTI_SELECT:
        # independent inclusion at 1/2, rejecting the empty set
        while True:
            mask = rng.random(len(spec.categories)) < 0.5
            if mask.any():
                return {c for c, keep in zip(spec.categories, mask) if keep}
    if spec.kind is Kind.INTEGER:
        if spec.log_scale:
            raw = math.exp(rng.uniform(math.log(spec.lo), math.log(spec.hi)))
            return int(min(max(round(raw), spec.lo), spec.hi))
        return int(rng.integers(int(spec.lo), int(spec.hi) + 1))
    if spec.log_scale:
        raw = math.exp(rng.uniform(math.log(spec.lo), math.log(spec.hi)))
    else:
        raw = rng.uniform(spec.lo, spec.hi)
    return float(min(max(raw, spec.lo), spec.hi))


def sample_config(space: SearchSpace, rng: np.random.Generator) -> Configuration:
    """Draw one uniform configuration using the caller's generator."""
    return {spec.name: _sample_value(spec, rng) for spec in space.components}


def sample_uniform(space: SearchSpace, rng_seed: int) -> Configuration:
    """Draw one uniform configuration; the same seed gives the same result.

    Exclusive components pick one label uniformly; multi-select components
    include each label independently with probability 1/2 (empty sets are
    rejected); ranges sample uniformly, in the log domain when ``log_scale``.
    """
    return sample_config(space, np.random.default_rng(rng_seed))


def restrict(space: SearchSpace, free: Iterable[str], fixed: Configuration) -> SearchSpace:
    """Reduce a space to its free components.

    ``free`` and the keys of ``fixed`` must partition the component set:
    no overlap, nothing left uncovered.  Fixed values are validated here
    and re-attached by the caller when a full configuration is emitted.
    """
    free_set = set(free)
    unknown = sorted((free_set | set(fixed)) - set(space.names))
    if unknown:
        raise ValidationFailure(f"not components of this space: {unknown}")
    overlap = sorted(free_set & set(fixed))
    if overlap:
        raise ValidationFailure(f"components both free and fixed: {overlap}")
    uncovered = sorted(set(space.names) - free_set - set(fixed))
    if uncovered:
        raise ValidationFailure(f"components neither free nor fixed: {uncovered}")
    for name, value in fixed.items():
        message = _check_value(space[name], value)
        if message is not None:
            raise ValidationFailure(f"fixed value for {name!r}: {message}")
    return SearchSpace(tuple(c for c in space.components if c.name in free_set))


def configs_allclose(
    space: SearchSpace, a: Configuration, b: Configuration, rel_tol: float = 1e-9
) -> bool:
    """Equality up to floating-point noise on continuous components.

    Categories, sets, and integers must match exactly; continuous values
    may differ by ``rel_tol`` relatively (log-scale encodings round-trip
    through exp/log and can move by a few ulps).
    """
    if set(a) != set(b):
        return False
    for spec in space.components:
        if spec.name not in a:
            return False
        va, vb = a[spec.name], b[spec.name]
        if spec.kind is Kind.CONTINUOUS:
            if not math.isclose(va, vb, rel_tol=rel_tol, abs_tol=1e-300):
                return False
        elif va != vb:
            return False
    return True


# --- configuration (de)serialization helpers ---------------------------------


def config_to_jsonable(space: SearchSpace, config: Configuration) -> dict[str, Any]:
    """Plain-data view of a configuration (multi-select as sorted lists)."""
    out: dict[str, Any] = {}
    for name, value in config.items():
        if isinstance(value, (set, frozenset)):
            out[name] = sorted(value)
        elif isinstance(value, np.generic):
            out[name] = value.item()
        else:
            out[name] = value
    return out


def config_from_jsonable(space: SearchSpace, data: dict[str, Any]) -> Configuration:
    """Inverse of :func:`config_to_jsonable`, coercing value types per spec."""
    config: Configuration = {}
    for name, value in data.items():
        if name not in space:
            config[name] = value
            continue
        spec = space[name]
        if spec.kind is Kind.MULTI_SELECT:
            if isinstance(value, str):
                value = [value]
            config[name] = set(value)
        elif spec.kind is Kind.INTEGER:
            config[name] = int(value)
        elif spec.kind is Kind.CONTINUOUS:
            config[name] = float(value)
        else:
            config[name] = value
    return config


def load_config(path: str, space: SearchSpace) -> Configuration:
    """Load a configuration from a YAML mapping of component name to value."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise LoadFailure(f"cannot read configuration file {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise LoadFailure(f"malformed configuration file {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise LoadFailure(f"configuration file {path!r} must hold a mapping")
    return config_from_jsonable(space, data)


def save_config(config: Configuration, space: SearchSpace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_jsonable(space, config), fh, sort_keys=False)


# --- space file format --------------------------------------------------------


def _spec_to_dict(spec: ComponentSpec) -> dict[str, Any]:
    out: dict[str, Any] = {
        "name": spec.name,
        "dimension": spec.dimension.value,
        "kind": spec.kind.value,
    }
    if spec.kind.is_categorical:
        out["categories"] = list(spec.categories)
    else:
        out["range"] = [spec.lo, spec.hi]
        if spec.log_scale:
            out["log_scale"] = True
    return out


def _spec_from_dict(data: dict[str, Any]) -> ComponentSpec:
    try:
        kind = Kind(data["kind"])
        dimension = Dimension(data["dimension"])
        name = data["name"]
    except (KeyError, ValueError) as exc:
        raise LoadFailure(f"bad component entry {data!r}: {exc}") from exc
    if kind.is_categorical:
        return ComponentSpec(name, dimension, kind, categories=tuple(data.get("categories", ())))
    lo, hi = data["range"]
    return ComponentSpec(
        name, dimension, kind, lo=float(lo), hi=float(hi), log_scale=bool(data.get("log_scale", False))
    )


def space_to_dict(space: SearchSpace) -> dict[str, Any]:
    return {"components": [_spec_to_dict(c) for c in space.components]}


def space_from_dict(data: dict[str, Any]) -> SearchSpace:
    if not isinstance(data, dict) or "components" not in data:
        raise LoadFailure("space document must hold a 'components' list")
    return SearchSpace(tuple(_spec_from_dict(entry) for entry in data["components"]))


def save_space(space: SearchSpace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(space_to_dict(space), fh, sort_keys=False, allow_unicode=True)


def _read_space_document(path: str) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise LoadFailure(f"cannot read space file {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise LoadFailure(f"malformed space file {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise LoadFailure(f"space file {path!r} must hold a mapping")
    return data


def load_space(path: str) -> SearchSpace:
    """Load a search space from its YAML document."""
    return space_from_dict(_read_space_document(path))


def load_aliases(path: str) -> dict[str, str]:
    """Optional CSV-column aliases declared in a space file."""
    aliases = _read_space_document(path).get("aliases", {})
    if not isinstance(aliases, dict):
        raise LoadFailure(f"'aliases' in {path!r} must map column names to component names")
    return {str(k): str(v) for k, v in aliases.items()}


@lru_cache(maxsize=1)
def default_space() -> SearchSpace:
    """The bundled 27-component space."""
    ref = resources.files("dlrec.data").joinpath("default_space.yaml")
    with resources.as_file(ref) as path:
        return load_space(str(path))
