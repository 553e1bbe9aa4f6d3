"""Synthetic maximization benchmarks for comparing acquisition modes.

Each test function gets a small continuous space whose encoding is the
identity, so optimizer vectors are raw coordinates.  All functions are
negated where needed so that bigger is better, matching the recommender's
convention.  The paired random baseline reruns the same seeds with the
exploration probability pinned to 1, which reuses the exact code path and
initial designs of the optimized runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bo import AcquisitionMode, AcquisitionParams, HistoryEntry, optimize
from .encoding import build_schema
from .errors import ValidationFailure
from .space import ComponentSpec, Dimension, Kind, SearchSpace

BRANIN_MAX = -0.39788735772973816  # negated Branin optimum


def _axis(name: str, lo: float, hi: float) -> ComponentSpec:
    return ComponentSpec(name, Dimension.DATA, Kind.CONTINUOUS, lo=lo, hi=hi)


def sphere(x: np.ndarray) -> float:
    """1-D concave bump: max 0 at x = 0.3 on [0, 1]."""
    return -((float(x[0]) - 0.3) ** 2)


def branin(x: np.ndarray) -> float:
    """Negated Branin on [-5, 10] x [0, 15]; max -0.397887 at three points."""
    x1, x2 = float(x[0]), float(x[1])
    a = 1.0
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    r = 6.0
    s = 10.0
    t = 1.0 / (8.0 * math.pi)
    value = a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1.0 - t) * math.cos(x1) + s
    return -value


def rastrigin(x: np.ndarray) -> float:
    """Negated 2-D Rastrigin on [-5.12, 5.12]^2; max 0 at the origin."""
    x = np.asarray(x, dtype=np.float64)
    return -float(10.0 * len(x) + np.sum(x**2 - 10.0 * np.cos(2.0 * math.pi * x)))


@dataclass(frozen=True)
class TestFunction:
    name: str
    space: SearchSpace
    fn: Callable[[np.ndarray], float]
    optimum: float


_FUNCTIONS = {
    "sphere": TestFunction(
        "sphere", SearchSpace((_axis("x0", 0.0, 1.0),)), sphere, 0.0
    ),
    "branin": TestFunction(
        "branin", SearchSpace((_axis("x0", -5.0, 10.0), _axis("x1", 0.0, 15.0))), branin, BRANIN_MAX
    ),
    "rastrigin": TestFunction(
        "rastrigin",
        SearchSpace((_axis("x0", -5.12, 5.12), _axis("x1", -5.12, 5.12))),
        rastrigin,
        0.0,
    ),
}


def get_test_function(name: str) -> TestFunction:
    try:
        return _FUNCTIONS[name]
    except KeyError:
        raise ValidationFailure(
            f"unknown benchmark function {name!r}; pick one of {sorted(_FUNCTIONS)}"
        ) from None


def grid_optimum(name: str, points_per_axis: int = 1000) -> float:
    """Dense-grid oracle for a function's maximum (independent of the search)."""
    f = get_test_function(name)
    axes = [np.linspace(spec.lo, spec.hi, points_per_axis) for spec in f.space.components]
    if len(axes) == 1:
        return max(f.fn(np.array([v])) for v in axes[0])
    best = -math.inf
    for v0 in axes[0]:
        for v1 in axes[1]:
            best = max(best, f.fn(np.array([v0, v1])))
    return best


def best_so_far(history: list[HistoryEntry]) -> list[float]:
    curve: list[float] = []
    best = -math.inf
    for entry in history:
        best = max(best, entry.y)
        curve.append(best)
    return curve


@dataclass(frozen=True)
class BenchmarkRun:
    seed: int
    curve: list[float]
    final_gap: float
    n_random_steps: int  # random-flagged search steps (init excluded)


@dataclass(frozen=True)
class BenchmarkSummary:
    function: str
    mode: AcquisitionMode
    repeats: int
    t: int
    n_init: int
    no_omega: bool
    runs: list[BenchmarkRun]
    random_runs: list[BenchmarkRun] | None
    median_gap: float = field(init=False)
    iqr_gap: float = field(init=False)

    def __post_init__(self) -> None:
        gaps = np.array([r.final_gap for r in self.runs])
        object.__setattr__(self, "median_gap", float(np.median(gaps)))
        object.__setattr__(
            self, "iqr_gap", float(np.percentile(gaps, 75) - np.percentile(gaps, 25))
        )

    @property
    def random_median_gap(self) -> float | None:
        if self.random_runs is None:
            return None
        return float(np.median([r.final_gap for r in self.random_runs]))

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "mode": self.mode.value,
            "repeats": self.repeats,
            "t": self.t,
            "n_init": self.n_init,
            "no_omega": self.no_omega,
            "median_gap": self.median_gap,
            "iqr_gap": self.iqr_gap,
            "random_median_gap": self.random_median_gap,
            "runs": [
                {
                    "seed": r.seed,
                    "final_gap": r.final_gap,
                    "n_random_steps": r.n_random_steps,
                    "curve": r.curve,
                }
                for r in self.runs
            ],
        }


def _run_once(
    f: TestFunction,
    params: AcquisitionParams,
    t: int,
    n_init: int,
    seed: int,
    omega_override: float | None,
    candidate_budget: int,
    kernel_refit_every: int,
) -> BenchmarkRun:
    schema = build_schema(f.space)
    result = optimize(
        lambda x: f.fn(x),
        f.space,
        schema,
        params,
        n_init=n_init,
        t=t,
        seed=seed,
        omega_override=omega_override,
        candidate_budget=candidate_budget,
        kernel_refit_every=kernel_refit_every,
    )
    n_random = sum(1 for e in result.history if e.phase == "search" and e.was_random)
    return BenchmarkRun(
        seed=seed,
        curve=best_so_far(result.history),
        final_gap=float(f.optimum - result.best_y),
        n_random_steps=n_random,
    )


def benchmark(
    function: str,
    mode: AcquisitionMode = AcquisitionMode.GAMMA_EI,
    repeats: int = 20,
    t: int = 100,
    n_init: int = 10,
    seed: int = 0,
    params: AcquisitionParams | None = None,
    no_omega: bool = False,
    compare_random: bool = True,
    candidate_budget: int = 2048,
    kernel_refit_every: int = 5,
) -> BenchmarkSummary:
    """Repeated seeded runs of one acquisition mode on one test function.

    ``no_omega`` pins the exploration probability to 0 (the schedule-free
    ablation); ``compare_random`` adds a paired always-random baseline on
    the same seeds and total evaluation count.
    """
    if repeats < 1:
        raise ValidationFailure("repeats must be >= 1")
    f = get_test_function(function)
    if params is None:
        params = AcquisitionParams(mode=mode)
    elif params.mode is not mode:
        params = AcquisitionParams(
            alpha=params.alpha, beta=params.beta, p=params.p, mode=mode,
            ucb_kappa=params.ucb_kappa, gamma_ei_pdf_variant=params.gamma_ei_pdf_variant,
            literal_gamma_orientation=params.literal_gamma_orientation,
        )
    override = 0.0 if no_omega else None
    runs = [
        _run_once(f, params, t, n_init, seed + r, override, candidate_budget, kernel_refit_every)
        for r in range(repeats)
    ]
    random_runs = None
    if compare_random:
        random_runs = [
            _run_once(f, params, t, n_init, seed + r, 1.0, candidate_budget, kernel_refit_every)
            for r in range(repeats)
        ]
    return BenchmarkSummary(
        function=function,
        mode=mode,
        repeats=repeats,
        t=t,
        n_init=n_init,
        no_omega=no_omega,
        runs=runs,
        random_runs=random_runs,
    )
