"""Probability-scheduled Bayesian search over encoded configurations.

Each iteration draws xi in [0, 1] and explores at random while
``xi <= omega``, where ``omega = clamp(1 - k*P, 0, 1)`` decays with the
count ``k`` of consecutive random steps and resets after an exploitation
step.  Exploitation maximizes the blended acquisition over a sampled
candidate set plus local perturbations of the best incumbents.

``gamma_ei`` computes the blended acquisition in shortfall orientation
(``Z = (f_best - m) / sigma``); because an argmax of that orientation
under maximization scores worse-than-incumbent means highest, the search
loop evaluates the same algebra in improvement orientation
(:func:`gamma_ei_search_score`), keeping the alpha term an expected
improvement and the beta term the probability of exceeding the incumbent.
``AcquisitionParams.literal_gamma_orientation`` switches the loop back to
the shortfall orientation for inspection.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.special import ndtr

from . import gp as gp_mod
from .encoding import ColumnRole, EncodingSchema, decode, encode
from .errors import DlrecError, ValidationFailure
from .space import Kind, SearchSpace, config_to_jsonable, sample_config

N_PERTURB_INCUMBENTS = 5
N_PERTURB_EACH = 10


class AcquisitionMode(str, Enum):
    GAMMA_EI = "gammaei"
    EI = "ei"
    PI = "pi"
    UCB = "ucb"


@dataclass(frozen=True)
class AcquisitionParams:
    """Weights and schedule constants for the search.

    ``alpha`` scales the expected-improvement term and ``beta`` the
    exceedance-probability term of the blended acquisition; ``p`` is the
    user-set likelihood unit of the random-exploration schedule.
    """

    alpha: float = 1.0
    beta: float = 1.0
    p: float = 0.1
    mode: AcquisitionMode = AcquisitionMode.GAMMA_EI
    ucb_kappa: float = 2.0
    gamma_ei_pdf_variant: bool = False
    literal_gamma_orientation: bool = False

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValidationFailure("alpha and beta must be non-negative")
        if self.mode is AcquisitionMode.GAMMA_EI and self.alpha + self.beta <= 0:
            raise ValidationFailure("gamma-EI needs alpha + beta > 0")
        if not 0.0 < self.p <= 1.0:
            raise ValidationFailure("p must lie in (0, 1]")
        if self.ucb_kappa <= 0:
            raise ValidationFailure("ucb_kappa must be positive")


def omega_update(k: int, p: float) -> float:
    """Random-exploration probability ``clamp(1 - k*p, 0, 1)``.

    Caller contract: after a random iteration ``k`` increments; after a
    non-random iteration ``k`` resets to 1.
    """
    if k < 1:
        raise ValidationFailure("k must be >= 1")
    if not 0.0 < p <= 1.0:
        raise ValidationFailure("p must lie in (0, 1]")
    return min(max(1.0 - k * p, 0.0), 1.0)


def normal_cdf(z):
    return ndtr(z)


def normal_pdf(z):
    z = np.asarray(z, dtype=np.float64)
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _floored(sigma):
    return np.maximum(np.asarray(sigma, dtype=np.float64), gp_mod.SIGMA_FLOOR)


def gamma_ei(m, sigma, f_best, alpha, beta, pdf_variant: bool = False):
    """The blended acquisition in shortfall orientation.

    ``Z = (f_best - m) / sigma``; the first term is
    ``alpha * (sigma*Z + (f_best - m) * Phi(Z))`` (note ``sigma*Z``
    collapses to ``f_best - m``; ``pdf_variant`` substitutes
    ``sigma * phi(Z)``), the second ``beta * (1 - Phi(Z))``.
    """
    m = np.asarray(m, dtype=np.float64)
    sigma = _floored(sigma)
    shortfall = f_best - m
    z = shortfall / sigma
    first = sigma * normal_pdf(z) if pdf_variant else sigma * z
    value = alpha * (first + shortfall * normal_cdf(z)) + beta * (1.0 - normal_cdf(z))
    return float(value) if value.ndim == 0 else value


def gamma_ei_search_score(m, sigma, f_best, alpha, beta, pdf_variant: bool = False):
    """The blended acquisition in improvement orientation (maximization).

    Same algebra as :func:`gamma_ei` with the alpha term evaluated on the
    predicted improvement ``m - f_best``; the beta term is unchanged and
    equals the probability of exceeding the incumbent.
    """
    m = np.asarray(m, dtype=np.float64)
    sigma = _floored(sigma)
    improvement = m - f_best
    z = improvement / sigma
    first = sigma * normal_pdf(z) if pdf_variant else improvement
    value = alpha * (first + improvement * normal_cdf(z)) + beta * normal_cdf(z)
    return float(value) if value.ndim == 0 else value


def baseline_acquisition(mode: AcquisitionMode, m, sigma, f_best: float, kappa: float = 2.0):
    """EI / PI / UCB under the maximization convention."""
    m = np.asarray(m, dtype=np.float64)
    if mode is AcquisitionMode.UCB:
        value = m + kappa * np.asarray(sigma, dtype=np.float64)
        return float(value) if value.ndim == 0 else value
    sigma = _floored(sigma)
    z = (m - f_best) / sigma
    if mode is AcquisitionMode.EI:
        value = (m - f_best) * normal_cdf(z) + sigma * normal_pdf(z)
    elif mode is AcquisitionMode.PI:
        value = normal_cdf(z)
    else:
        raise ValidationFailure(f"{mode} is not a baseline acquisition")
    return float(value) if value.ndim == 0 else value


def acquisition_scores(params: AcquisitionParams, m, sigma, f_best: float):
    """Candidate scores for the mode the loop is running."""
    if params.mode is AcquisitionMode.GAMMA_EI:
        if params.literal_gamma_orientation:
            return gamma_ei(m, sigma, f_best, params.alpha, params.beta, params.gamma_ei_pdf_variant)
        return gamma_ei_search_score(
            m, sigma, f_best, params.alpha, params.beta, params.gamma_ei_pdf_variant
        )
    return baseline_acquisition(params.mode, m, sigma, f_best, params.ucb_kappa)


# --- optimizer ------------------------------------------------------------------


class ObjectiveError(DlrecError):
    """Objective evaluation failed; carries the history up to the failure."""

    def __init__(self, message: str, history: list["HistoryEntry"]):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    x: np.ndarray
    y: float
    was_random: bool
    omega: float
    f_best: float
    phase: str  # "init" or "search"


@dataclass
class OptimizerState:
    """Mutable loop state: the data D, schedule counters, and surrogate."""

    observed_x: list[np.ndarray] = field(default_factory=list)
    observed_y: list[float] = field(default_factory=list)
    f_best: float = -math.inf
    k: int = 1
    omega: float = 1.0
    iteration: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    gp: gp_mod.GpModel | None = None

    @property
    def observed(self) -> list[tuple[np.ndarray, float]]:
        return list(zip(self.observed_x, self.observed_y))

    def record(self, x: np.ndarray, y: float) -> None:
        self.observed_x.append(x)
        self.observed_y.append(y)
        if y > self.f_best:
            self.f_best = y


def _perturb(schema: EncodingSchema, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = x.copy()
    i = 0
    for spec in schema.space.components:
        if spec.kind is Kind.MULTI_SELECT:
            n = len(spec.categories)
            flips = rng.random(n) < 0.1
            out[i : i + n] = np.where(flips, 1.0 - out[i : i + n], out[i : i + n])
            i += n
            continue
        column = schema.columns[i]
        if column.role is ColumnRole.NUMERIC:
            if spec.log_scale:
                lo, hi = math.log(spec.lo), math.log(spec.hi)
            else:
                lo, hi = spec.lo, spec.hi
            out[i] += rng.normal(0.0, 0.1 * (hi - lo))
        elif column.role is ColumnRole.LABEL:
            if rng.random() < 0.2:
                out[i] = float(rng.integers(len(spec.categories)))
        else:  # BINARY
            if rng.random() < 0.1:
                out[i] = 1.0 - out[i]
        i += 1
    # snap to the nearest valid configuration
    return encode(schema, decode(schema, out))


def _candidate_set(
    state: OptimizerState,
    space: SearchSpace,
    schema: EncodingSchema,
    candidate_budget: int,
) -> np.ndarray:
    candidates = [
        encode(schema, sample_config(space, state.rng)) for _ in range(candidate_budget)
    ]
    if state.observed_x:
        order = np.argsort(-np.asarray(state.observed_y))[:N_PERTURB_INCUMBENTS]
        for idx in order:
            incumbent = state.observed_x[idx]
            candidates.extend(
                _perturb(schema, incumbent, state.rng) for _ in range(N_PERTURB_EACH)
            )
    return np.vstack(candidates)


def propose_next(
    state: OptimizerState,
    space: SearchSpace,
    schema: EncodingSchema,
    params: AcquisitionParams,
    candidate_budget: int = 2048,
    posterior_fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None,
) -> tuple[np.ndarray, bool]:
    """One proposal: random while ``xi <= omega``, else the acquisition argmax.

    The argmax runs over ``candidate_budget`` uniform samples plus local
    perturbations of the best incumbents; ties resolve to the earliest
    generated candidate.  ``posterior_fn`` overrides the fitted surrogate
    (test hook).
    """
    if candidate_budget < 1:
        raise ValidationFailure("candidate_budget must be >= 1")
    xi = state.rng.random()
    if xi <= state.omega:
        return encode(schema, sample_config(space, state.rng)), True
    if posterior_fn is None:
        if state.gp is None:
            raise ValidationFailure("cannot exploit before the surrogate is fitted")
        posterior_fn = lambda X: gp_mod.posterior_batch(state.gp, X)  # noqa: E731
    candidates = _candidate_set(state, space, schema, candidate_budget)
    mean, sigma = posterior_fn(candidates)
    scores = acquisition_scores(params, mean, sigma, state.f_best)
    return candidates[int(np.argmax(scores))], False


@dataclass
class OptimizeResult:
    best_config: dict
    best_y: float
    history: list[HistoryEntry]
    state: OptimizerState


def optimize(
    objective: Callable[[np.ndarray], float],
    space: SearchSpace,
    schema: EncodingSchema,
    params: AcquisitionParams,
    n_init: int = 10,
    t: int = 100,
    seed: int = 0,
    omega_override: float | None = None,
    kernel_kind: gp_mod.KernelKind = gp_mod.KernelKind.SQUARED_EXPONENTIAL,
    noise_variance: float = 1e-6,
    candidate_budget: int = 2048,
    kernel_refit_every: int = 5,
    kernel_restarts: int = 5,
) -> OptimizeResult:
    """Run the full search loop.

    Seeds ``n_init`` uniform evaluations, then iterates propose ->
    evaluate -> augment -> refit surrogate -> update the schedule for
    ``t`` rounds.  ``omega_override`` pins the exploration probability
    (0 disables random search, 1 forces it).  The returned history holds
    every evaluation in order; ``best_y`` is the maximum observed value.
    """
    if n_init < 1:
        raise ValidationFailure("n_init must be >= 1")
    if t < 0:
        raise ValidationFailure("t must be >= 0")
    root = np.random.SeedSequence(seed)
    rng_ss, kernel_ss = root.spawn(2)
    state = OptimizerState(rng=np.random.default_rng(rng_ss))
    kernel_seed = int(kernel_ss.generate_state(1, np.uint64)[0])
    history: list[HistoryEntry] = []

    def evaluate(x: np.ndarray) -> float:
        try:
            return float(objective(x))
        except Exception as exc:
            raise ObjectiveError(f"objective evaluation failed: {exc}", history) from exc

    for i in range(n_init):
        x = encode(schema, sample_config(space, state.rng))
        y = evaluate(x)
        state.record(x, y)
        history.append(
            HistoryEntry(iteration=i, x=x, y=y, was_random=True, omega=1.0,
                         f_best=state.f_best, phase="init")
        )

    kernel = None
    surrogate_needed = omega_override is None or omega_override < 1.0
    for i in range(t):
        if surrogate_needed:
            X = np.vstack(state.observed_x)
            y_arr = np.asarray(state.observed_y)
            if kernel is None or i % max(kernel_refit_every, 1) == 0:
                kernel = gp_mod.optimize_kernel(
                    X, y_arr, kind=kernel_kind, noise_variance=noise_variance,
                    n_restarts=kernel_restarts, seed=kernel_seed,
                )
            state.gp = gp_mod.fit(X, y_arr, kernel, noise_variance)
        state.omega = omega_update(state.k, params.p) if omega_override is None else omega_override
        x, was_random = propose_next(state, space, schema, params, candidate_budget)
        y = evaluate(x)
        state.record(x, y)
        state.iteration += 1
        history.append(
            HistoryEntry(iteration=n_init + i, x=x, y=y, was_random=was_random,
                         omega=state.omega, f_best=state.f_best, phase="search")
        )
        state.k = state.k + 1 if was_random else 1

    best_idx = int(np.argmax(state.observed_y))
    best_x = state.observed_x[best_idx]
    return OptimizeResult(
        best_config=decode(schema, best_x),
        best_y=float(state.observed_y[best_idx]),
        history=history,
        state=state,
    )


def write_history(history: list[HistoryEntry], schema: EncodingSchema, path: str) -> None:
    """Line-delimited records of every evaluation, for external plotting."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in history:
            record = {
                "iteration": entry.iteration,
                "phase": entry.phase,
                "x": [float(v) for v in entry.x],
                "config": config_to_jsonable(schema.space, decode(schema, entry.x)),
                "y": entry.y,
                "was_random": entry.was_random,
                "omega": entry.omega,
                "f_best": entry.f_best,
            }
            fh.write(json.dumps(record) + "\n")
