"""Derivative-free camera search: from-scratch CMA-ES and a finite-difference
local-ascent baseline, both over the normalized [0,1]^9 parameter box.

CMA-ES follows the standard (mu/mu_w, lambda) formulation with log-rank
positive recombination weights and Hansen's default learning rates.  The
budget is counted in objective evaluations and checked at generation
boundaries; the early-stop rule terminates a run once the best-so-far value
failed to improve by at least `min_improvement` over the last `window`
evaluations.  Candidates are clamped to the box before evaluation and their
ranking fitness carries a quadratic penalty on the clamped amount, so the
sampling distribution is pushed back inside while every evaluated point stays
feasible.  The returned solution is always the best evaluated candidate,
never the final distribution mean.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .camera import PARAM_NAMES, CameraParams, SearchBounds, decode, encode, identity_params
from .objective import EvaluationError, ObjectiveValue

DEFAULT_SIGMA0 = 0.25
DEFAULT_LEARNING_RATE = 0.01
DEFAULT_FD_STEP = 1e-3
BOUNDARY_PENALTY_WEIGHT = 1.0


@dataclass
class StopRule:
    """Evaluation budget and the no-improvement early stop."""

    max_evaluations: int = 2000
    window: int = 500
    min_improvement: float = 0.001

    def __post_init__(self):
        if self.window > self.max_evaluations:
            raise ValueError("window must not exceed max_evaluations")
        if self.min_improvement <= 0:
            raise ValueError("min_improvement must be positive")


@dataclass(frozen=True)
class TraceRecord:
    index: int  # 1-based evaluation counter
    params: CameraParams
    score: float
    mask_loss: float
    total: float
    best_total: float

    def to_dict(self) -> dict:
        return {"i": self.index, "params": self.params.to_dict(), "score": self.score,
                "mask_loss": self.mask_loss, "total": self.total, "best_total": self.best_total}


@dataclass
class OptimizationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    termination: str = "running"
    best_index: int = -1
    best_params: CameraParams | None = None
    best_x: np.ndarray | None = None
    best_value: ObjectiveValue | None = None

    @property
    def evaluations(self) -> int:
        return len(self.records)

    @property
    def best_total(self) -> float:
        return -math.inf if self.best_value is None else self.best_value.total

    def add(self, x: np.ndarray, params: CameraParams, value: ObjectiveValue) -> TraceRecord:
        if value.total > self.best_total:
            self.best_index = len(self.records) + 1
            self.best_params = params
            self.best_x = x.copy()
            self.best_value = value
        rec = TraceRecord(index=len(self.records) + 1, params=params, score=value.score,
                          mask_loss=value.mask_loss, total=value.total, best_total=self.best_total)
        self.records.append(rec)
        return rec

    def summary(self) -> dict:
        return {
            "evaluations": self.evaluations,
            "termination": self.termination,
            "best_index": self.best_index,
            "best_params": None if self.best_params is None else self.best_params.to_dict(),
            "best_score": None if self.best_value is None else self.best_value.score,
            "best_mask_loss": None if self.best_value is None else self.best_value.mask_loss,
            "best_total": None if self.best_value is None else self.best_value.total,
        }

    def write_jsonl(self, path) -> None:
        with Path(path).open("w", encoding="ascii") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.to_dict()) + "\n")

    def write_summary(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2) + "\n", encoding="ascii")


class OptimizationAborted(RuntimeError):
    """An objective evaluation failed; the trace so far is preserved."""

    def __init__(self, trace: OptimizationTrace, cause: Exception):
        super().__init__(f"optimization aborted after {trace.evaluations} evaluations: {cause}")
        self.trace = trace
        self.cause = cause


ObjectiveFn = Callable[[np.ndarray], "ObjectiveValue | float"]


def _as_value(raw) -> ObjectiveValue:
    if isinstance(raw, ObjectiveValue):
        value = raw
    else:
        value = ObjectiveValue.of(float(raw), 0.0, 0.0)
    if not math.isfinite(value.total):
        raise EvaluationError(f"objective returned a non-finite value: {value.total!r}")
    return value


class _Problem:
    """Shared bookkeeping: frozen dimensions, clamping, tracing, early stop."""

    def __init__(self, objective_fn: ObjectiveFn, bounds: SearchBounds, stop: StopRule,
                 frozen: Mapping[str, float] | None, boundary_penalty_weight: float):
        self.objective_fn = objective_fn
        self.bounds = bounds
        self.stop = stop
        self.penalty_weight = boundary_penalty_weight
        identity_x = encode(identity_params(), bounds)
        frozen = dict(frozen or {})
        for name in frozen:
            if name not in PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r} in frozen set")
        self.free_idx = np.array([i for i in range(9) if PARAM_NAMES[i] not in frozen], dtype=np.intp)
        self.template = identity_x.copy()
        for name, phys in frozen.items():
            i = PARAM_NAMES.index(name)
            lo, hi = bounds.lo[i], bounds.hi[i]
            self.template[i] = np.clip((phys - lo) / (hi - lo), 0.0, 1.0)
        self.x0 = identity_x[self.free_idx]
        self.n = len(self.free_idx)
        self.trace = OptimizationTrace()
        self.best_history: list[float] = []

    def full_vector(self, x_free: np.ndarray) -> np.ndarray:
        full = self.template.copy()
        full[self.free_idx] = x_free
        return full

    def evaluate(self, x_free_raw: np.ndarray) -> float:
        """Evaluate at the clamped point; return the penalized ranking fitness."""
        x_clip = np.clip(x_free_raw, 0.0, 1.0)
        full = self.full_vector(x_clip)
        params = decode(full, self.bounds)
        try:
            value = _as_value(self.objective_fn(full))
        except EvaluationError as exc:
            self.trace.termination = f"evaluation_error: {exc}"
            raise OptimizationAborted(self.trace, exc) from exc
        self.trace.add(full, params, value)
        self.best_history.append(self.trace.best_total)
        penalty = float(np.sum((x_free_raw - x_clip) ** 2))
        return value.total - self.penalty_weight * penalty

    def budget_left(self) -> bool:
        return len(self.best_history) < self.stop.max_evaluations

    def early_stop(self) -> bool:
        t = len(self.best_history)
        w = self.stop.window
        if t <= w:
            return False
        return self.best_history[-1] - self.best_history[-1 - w] < self.stop.min_improvement

    def finish(self, reason: str):
        self.trace.termination = reason
        return self.trace.best_params, self.trace


@dataclass
class CmaState:
    """Strategy state after a generation update, exposed for inspection."""

    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int
    lam: int
    mu: int
    weights: np.ndarray
    mueff: float


def population_size(n: int) -> int:
    return 4 + int(math.floor(3.0 * math.log(n)))


def cma_optimize(objective_fn: ObjectiveFn, bounds: SearchBounds, stop: StopRule,
                 seed: int, *, sigma0: float = DEFAULT_SIGMA0,
                 frozen: Mapping[str, float] | None = None,
                 evaluate_initial_mean: bool = True,
                 boundary_penalty_weight: float = BOUNDARY_PENALTY_WEIGHT,
                 state_callback: Callable[[CmaState], None] | None = None
                 ) -> tuple[CameraParams, OptimizationTrace]:
    """Maximize `objective_fn` over the bounds box with (mu/mu_w, lambda)-CMA-ES.

    The initial mean is the encoded identity view, evaluated first by default
    so the returned best can never fall below the input view's value.
    """
    problem = _Problem(objective_fn, bounds, stop, frozen, boundary_penalty_weight)
    n = problem.n
    rng = np.random.default_rng(seed)

    lam = population_size(n)
    mu = lam // 2
    raw_w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    weights = raw_w / raw_w.sum()
    mueff = 1.0 / float(np.sum(weights**2))

    cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n)
    cs = (mueff + 2.0) / (n + mueff + 5.0)
    c1 = 2.0 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) ** 2 + mueff))
    damps = 1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))

    mean = problem.x0.copy()
    sigma = float(sigma0)
    cov = np.eye(n)
    p_sigma = np.zeros(n)
    p_c = np.zeros(n)
    generation = 0

    if evaluate_initial_mean:
        problem.evaluate(mean)

    reason = "max_evaluations"
    while True:
        if not problem.budget_left():
            reason = "max_evaluations"
            break
        if problem.early_stop():
            reason = "early_stop"
            break

        cov = (cov + cov.T) / 2.0
        eigvals, basis = np.linalg.eigh(cov)
        scales = np.sqrt(np.maximum(eigvals, 1e-300))
        inv_sqrt = (basis / scales) @ basis.T

        z = rng.standard_normal((lam, n))
        ys = z * scales @ basis.T  # rows: B @ diag(scales) @ z_k
        xs = mean + sigma * ys
        fitness = np.array([problem.evaluate(xs[k]) for k in range(lam)])

        order = np.argsort(-fitness, kind="stable")
        selected = xs[order[:mu]]
        mean_old = mean
        mean = weights @ selected

        y_mean = (mean - mean_old) / sigma
        p_sigma = (1.0 - cs) * p_sigma + math.sqrt(cs * (2.0 - cs) * mueff) * (inv_sqrt @ y_mean)
        generation += 1
        ps_norm = float(np.linalg.norm(p_sigma))
        hsig = ps_norm / math.sqrt(1.0 - (1.0 - cs) ** (2.0 * generation)) / chi_n < 1.4 + 2.0 / (n + 1.0)
        p_c = (1.0 - cc) * p_c + (math.sqrt(cc * (2.0 - cc) * mueff) * y_mean if hsig else 0.0)

        y_sel = (selected - mean_old) / sigma
        rank_mu = (y_sel.T * weights) @ y_sel
        delta_hsig = (1.0 - (1.0 if hsig else 0.0)) * cc * (2.0 - cc)
        cov = (1.0 - c1 - cmu) * cov + c1 * (np.outer(p_c, p_c) + delta_hsig * cov) + cmu * rank_mu
        sigma *= math.exp((cs / damps) * (ps_norm / chi_n - 1.0))

        if state_callback is not None:
            state_callback(CmaState(mean=mean.copy(), sigma=sigma, cov=cov.copy(),
                                    p_sigma=p_sigma.copy(), p_c=p_c.copy(), generation=generation,
                                    lam=lam, mu=mu, weights=weights.copy(), mueff=mueff))

    return problem.finish(reason)


def local_ascent_baseline(objective_fn: ObjectiveFn, bounds: SearchBounds, stop: StopRule,
                          seed: int = 0, *, learning_rate: float = DEFAULT_LEARNING_RATE,
                          fd_step: float = DEFAULT_FD_STEP,
                          frozen: Mapping[str, float] | None = None
                          ) -> tuple[CameraParams, OptimizationTrace]:
    """Gradient ascent with central finite differences, standing in for a
    gradient-based optimizer: it climbs the nearest local optimum and stalls
    there.  Iteration count is the evaluation budget divided by the 2n+1
    evaluations each iteration costs.  Deterministic; `seed` is accepted for
    interface parity and unused.
    """
    del seed
    problem = _Problem(objective_fn, bounds, stop, frozen, BOUNDARY_PENALTY_WEIGHT)
    n = problem.n
    iterations = stop.max_evaluations // (2 * n + 1)
    x = problem.x0.copy()
    reason = "budget_exhausted"
    for _ in range(iterations):
        problem.evaluate(x)
        grad = np.zeros(n)
        for i in range(n):
            step = np.zeros(n)
            step[i] = fd_step
            f_plus = problem.evaluate(np.clip(x + step, 0.0, 1.0))
            f_minus = problem.evaluate(np.clip(x - step, 0.0, 1.0))
            grad[i] = (f_plus - f_minus) / (2.0 * fd_step)
        if not np.any(grad):
            reason = "zero_gradient"
            break
        x = np.clip(x + learning_rate * grad, 0.0, 1.0)
    return problem.finish(reason)


def optimize_with_and_without_scaling(objective_fn: ObjectiveFn, bounds: SearchBounds,
                                      stop: StopRule, seed: int, **kwargs
                                      ) -> tuple[OptimizationTrace, OptimizationTrace]:
    """Ablation pair: CMA-ES with output scaling frozen at 1 (7-D search)
    versus the full 9-D search.  Returns (without_scaling, with_scaling)."""
    _, trace_without = cma_optimize(objective_fn, bounds, stop, seed,
                                    frozen={"s_w": 1.0, "s_h": 1.0}, **kwargs)
    _, trace_with = cma_optimize(objective_fn, bounds, stop, seed, **kwargs)
    return trace_without, trace_with
