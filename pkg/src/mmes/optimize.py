"""Multistart minimization of the penalized average purity.

Per-start randomness: start ``i`` of a run seeded with ``seed`` draws from
``numpy.random.default_rng(SeedSequence(seed, spawn_key=(i,)))``. The streams
are independent of the worker count, so records are reproducible bit for bit.
"""
from __future__ import annotations

import json
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import line_search, minimize as scipy_minimize

from . import __version__
from .errors import InvalidConfigError, NumericalFailure
from .gradients import KINDS, PENALTIES, Parametrization, objective, objective_and_grad

log = logging.getLogger(__name__)

ALGORITHMS = ("quasi-newton", "gradient-descent", "simulated-annealing", "anneal-then-polish")
TIE_TOL = 1e-12
FRUSTRATED_NOTE = "frustrated regime: slow convergence expected"


@dataclass
class AnnealSchedule:
    t0: float = 1.0
    factor: float = 0.995
    step: float = 0.5


@dataclass
class OptimizerConfig:
    n: int
    param: str = "phases"
    algorithm: str = "quasi-newton"
    lam: float = 0.0
    starts: int = 10
    max_iters: int = 5000
    grad_tol: float = 1e-9
    seed: int = 0
    budget_seconds: float | None = None
    # how lam enters the minimized objective; records always report pi + lam * sigma
    penalty: str = "variance"
    memory: int = 20
    workers: int = 1
    anneal: AnnealSchedule = field(default_factory=AnnealSchedule)

    def validate(self) -> None:
        if self.n < 2:
            raise InvalidConfigError(f"n must be >= 2, got {self.n}")
        if self.param not in KINDS:
            raise InvalidConfigError(f"param must be one of {KINDS}, got {self.param!r}")
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.penalty not in PENALTIES:
            raise InvalidConfigError(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")
        if not self.lam >= 0:
            raise InvalidConfigError(f"lambda must be nonnegative, got {self.lam}")
        if self.starts < 1:
            raise InvalidConfigError("starts must be >= 1")
        if self.grad_tol <= 0:
            raise InvalidConfigError("grad_tol must be positive")
        annealing = self.algorithm in ("simulated-annealing", "anneal-then-polish")
        # a zero budget is only meaningful for the annealer (returns the start point)
        if self.max_iters < (0 if annealing else 1):
            raise InvalidConfigError(f"max_iters={self.max_iters} leaves no iterations to run")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")
        if not (0 < self.anneal.factor <= 1 and self.anneal.t0 > 0 and self.anneal.step > 0):
            raise InvalidConfigError("annealing schedule needs t0 > 0, 0 < factor <= 1, step > 0")

    def parametrization(self) -> Parametrization:
        if self.param == "phases":
            return Parametrization.phases(self.n)
        return Parametrization.complex(self.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> OptimizerConfig:
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        if isinstance(d.get("anneal"), dict):
            d["anneal"] = AnnealSchedule(**d["anneal"])
        return cls(**d)


@dataclass
class StartSummary:
    start: int
    cost: float
    pi_me: float
    sigma_me: float
    iterations: int
    converged: bool
    warm: bool = False


@dataclass
class RunRecord:
    config: OptimizerConfig
    best_params: list
    best_state: dict
    best_start: int
    cost: float
    pi_me: float
    sigma_me: float
    starts: list
    wall_time: float
    version: str = __version__
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "best_params": [float(x) for x in self.best_params],
            "best_state": self.best_state,
            "best_start": self.best_start,
            "cost": self.cost,
            "pi_me": self.pi_me,
            "sigma_me": self.sigma_me,
            "starts": [asdict(s) for s in self.starts],
            "wall_time": self.wall_time,
            "version": self.version,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunRecord:
        return cls(
            config=OptimizerConfig.from_dict(d["config"]),
            best_params=list(d["best_params"]),
            best_state=d["best_state"],
            best_start=d["best_start"],
            cost=d["cost"],
            pi_me=d["pi_me"],
            sigma_me=d["sigma_me"],
            starts=[StartSummary(**s) for s in d["starts"]],
            wall_time=d["wall_time"],
            version=d.get("version", __version__),
            notes=d.get("notes", []),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> RunRecord:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def state(self):
        from .state import PureState

        return PureState.from_dict(self.best_state)


def start_rng(seed: int, start: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(start,)))


class _Problem:
    """Objective restricted to the free (non-gauge) coordinates."""

    def __init__(self, config: OptimizerConfig, start: int, trace: list | None):
        self.config = config
        self.par = config.parametrization()
        self.free = self.par.free
        self.start = start
        self.trace = trace
        self.full = np.zeros(self.par.dim)

    def expand(self, y: np.ndarray) -> np.ndarray:
        x = self.full.copy()
        x[self.free] = y
        return x

    def value_grad(self, y: np.ndarray) -> tuple[float, np.ndarray]:
        v, g, _, _ = objective_and_grad(self.expand(y), self.par, self.config.lam, self.config.penalty)
        if not (math.isfinite(v) and np.all(np.isfinite(g))):
            raise NumericalFailure(f"non-finite objective in start {self.start}", start=self.start)
        return v, g[self.free]

    def value(self, y: np.ndarray) -> float:
        v = objective(self.expand(y), self.par, self.config.lam, self.config.penalty)
        if not math.isfinite(v):
            raise NumericalFailure(f"non-finite objective in start {self.start}", start=self.start)
        return v

    def record(self, it: int, y: np.ndarray, value: float | None = None, gnorm: float | None = None) -> None:
        if self.trace is None:
            return
        if value is None or gnorm is None:
            value, g = self.value_grad(y)
            gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        self.trace.append((self.start, it, float(value), float(gnorm)))


def _quasi_newton(prob: _Problem, y0: np.ndarray, max_iters: int) -> tuple[np.ndarray, int]:
    cfg = prob.config
    it = [0]

    def callback(y):
        it[0] += 1
        prob.record(it[0], y)

    res = scipy_minimize(
        prob.value_grad, y0, jac=True, method="L-BFGS-B",
        callback=callback if prob.trace is not None else None,
        options={"maxiter": max_iters, "gtol": cfg.grad_tol, "ftol": 1e-15, "maxcor": cfg.memory},
    )
    return res.x, int(res.nit)


def _gradient_descent(prob: _Problem, y0: np.ndarray, max_iters: int) -> tuple[np.ndarray, int]:
    """Steepest descent; strong-Wolfe step with an Armijo backtracking fallback."""
    y = y0.copy()
    f, g = prob.value_grad(y)
    it = 0
    while it < max_iters and np.max(np.abs(g)) >= prob.config.grad_tol:
        d = -g
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="The line search algorithm")
            alpha, *_ = line_search(
                prob.value, lambda v: prob.value_grad(v)[1], y, d, gfk=g, old_fval=f, c1=1e-4, c2=0.9
            )
        if alpha is None:
            alpha, slope = 1.0, float(g @ d)
            while alpha > 1e-16 and prob.value(y + alpha * d) > f + 1e-4 * alpha * slope:
                alpha *= 0.5
        y_new = y + alpha * d
        f_new, g_new = prob.value_grad(y_new)
        if f_new > f:
            break
        it += 1
        stalled = f - f_new <= 1e-16 * max(1.0, abs(f))
        y, f, g = y_new, f_new, g_new
        prob.record(it, y, f, float(np.max(np.abs(g))))
        if stalled:
            break
    return y, it


def _anneal(prob: _Problem, y0: np.ndarray, sweeps: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Metropolis walk, one random coordinate per proposal, geometric cooling per sweep."""
    sched = prob.config.anneal
    y = y0.copy()
    f = prob.value(y)
    best_y, best_f = y.copy(), f
    temp = sched.t0
    dim = y.shape[0]
    for sweep in range(sweeps):
        for _ in range(dim):
            i = int(rng.integers(dim))
            old = y[i]
            y[i] = old + rng.uniform(-sched.step, sched.step)
            f_new = prob.value(y)
            if f_new <= f or rng.random() < math.exp(-(f_new - f) / temp):
                f = f_new
                if f < best_f:
                    best_f, best_y = f, y.copy()
            else:
                y[i] = old
        temp *= sched.factor
        prob.record(sweep + 1, y)
    return best_y, sweeps


def _run_start(config: OptimizerConfig, start: int, x0: np.ndarray | None, trace: list | None) -> tuple[StartSummary, np.ndarray]:
    prob = _Problem(config, start, trace)
    rng = start_rng(config.seed, start)
    warm = x0 is not None
    if x0 is None:
        x0 = prob.par.random(rng)
    y = np.asarray(x0, dtype=float)[prob.free]
    algo = config.algorithm
    if algo == "quasi-newton":
        y, iters = _quasi_newton(prob, y, config.max_iters)
    elif algo == "gradient-descent":
        y, iters = _gradient_descent(prob, y, config.max_iters)
    else:
        y, iters = _anneal(prob, y, config.max_iters, rng)
        if algo == "anneal-then-polish" and config.max_iters > 0:
            y, polish = _quasi_newton(prob, y, config.max_iters)
            iters += polish
    x = prob.expand(y)
    _, g, pi_me, sigma_me = objective_and_grad(x, prob.par, config.lam, config.penalty)
    converged = bool(np.max(np.abs(g[prob.free])) < config.grad_tol)
    c = pi_me + config.lam * sigma_me
    if not math.isfinite(c):
        raise NumericalFailure(f"non-finite objective in start {start}", start=start)
    return StartSummary(start, c, pi_me, sigma_me, iters, converged, warm), x


def minimize(
    config: OptimizerConfig,
    initial_points: Sequence[np.ndarray] = (),
    trace: list | None = None,
) -> RunRecord:
    """Run ``config.starts`` random starts plus one start per warm initial point.

    Warm starts are numbered after the random ones. The best start has the
    lowest ``pi_me + lam * sigma_me``; ties within 1e-12 go to the lower index.
    """
    config.validate()
    t0 = time.perf_counter()
    jobs: list[tuple[int, np.ndarray | None]] = [(i, None) for i in range(config.starts)]
    jobs += [(config.starts + j, np.asarray(p, dtype=float)) for j, p in enumerate(initial_points)]
    traces = [[] if trace is not None else None for _ in jobs]
    deadline = None if config.budget_seconds is None else t0 + config.budget_seconds

    def run(job):
        (idx, x0), tr = job
        # the first start always runs so a record exists
        if idx > 0 and deadline is not None and time.perf_counter() > deadline:
            return None
        return _run_start(config, idx, x0, tr)

    pairs = list(zip(jobs, traces))
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(p) for p in pairs]
    done = [r for r in results if r is not None]
    if trace is not None:
        for tr in traces:
            trace.extend(tr or [])

    best_i = 0
    for i, (s, _) in enumerate(done):
        if s.cost < done[best_i][0].cost - TIE_TOL:
            best_i = i
    summary, x = done[best_i]
    par = config.parametrization()
    notes = []
    if config.n >= 8:
        notes.append(FRUSTRATED_NOTE)
    if len(done) < len(results):
        notes.append(f"time budget stopped the run after {len(done)} of {len(results)} starts")
    log.info("n=%d best cost %.15g (start %d)", config.n, summary.cost, summary.start)
    return RunRecord(
        config=config,
        best_params=x.tolist(),
        best_state=par.decode(x).to_dict(),
        best_start=summary.start,
        cost=summary.cost,
        pi_me=summary.pi_me,
        sigma_me=summary.sigma_me,
        starts=[s for s, _ in done],
        wall_time=time.perf_counter() - t0,
        notes=notes,
    )


def anneal(config: OptimizerConfig, **kwargs) -> RunRecord:
    if config.algorithm not in ("simulated-annealing", "anneal-then-polish"):
        raise InvalidConfigError("anneal() needs algorithm 'simulated-annealing' or 'anneal-then-polish'")
    return minimize(config, **kwargs)


def lambda_sweep(base: OptimizerConfig, lambdas: Sequence[float]) -> list[RunRecord]:
    """One run per lambda; each run also polishes the previous lambda's best point."""
    records: list[RunRecord] = []
    for lam in lambdas:
        if lam < 0:
            raise InvalidConfigError(f"lambda must be nonnegative, got {lam}")
        config = OptimizerConfig.from_dict({**base.to_dict(), "lambda": float(lam)})
        warm = [np.asarray(records[-1].best_params)] if records else []
        records.append(minimize(config, initial_points=warm))
    return records


def write_trace_csv(trace: list, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["start", "iter", "cost", "grad_norm"])
        w.writerows(trace)

