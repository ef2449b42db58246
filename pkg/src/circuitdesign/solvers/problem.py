"""Mixed-integer problem definition, memoised evaluation and solver reports."""

from __future__ import annotations

import csv
import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError
from ..model import N_PAIRS, DesignVector
from ..objectives import SENTINEL, ObjectiveVector


@dataclass(frozen=True)
class Band:
    """Constraint ``lower <= J[index] < upper`` (``<= upper`` when ``closed``)."""

    index: int
    lower: float
    upper: float
    closed: bool = False

    def __post_init__(self):
        if self.lower > self.upper or (self.lower == self.upper and not self.closed):
            raise DomainError(f"empty band [{self.lower}, {self.upper})")

    def contains(self, value: float) -> bool:
        if self.closed:
            return self.lower <= value <= self.upper
        return self.lower <= value < self.upper


class CachedObjective:
    """Thread-safe memo around an objective callable.

    Keys are ``(y, x quantised to `quantum`)``; ``hits``/``misses`` count lookups.
    """

    def __init__(self, objective: Callable[[DesignVector], ObjectiveVector],
                 quantum: float = 1e-9):
        self.objective = objective
        self.quantum = quantum
        self.names = tuple(getattr(objective, "names", ()))
        self._cache: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def key(self, d: DesignVector):
        return d.key(self.quantum)

    def cached(self, d: DesignVector) -> ObjectiveVector | None:
        with self._lock:
            return self._cache.get(self.key(d))

    def __call__(self, d: DesignVector) -> ObjectiveVector:
        k = self.key(d)
        with self._lock:
            hit = self._cache.get(k)
            if hit is not None:
                self.hits += 1
                return hit
        try:
            value = self.objective(d)
        except Exception as exc:  # noqa: BLE001 - any simulation failure rejects the design
            value = ObjectiveVector.rejected(self.names or ("J1",), f"evaluation error: {exc}")
        with self._lock:
            # first writer wins so concurrent duplicates agree
            value = self._cache.setdefault(k, value)
            self.misses += 1
        return value

    def __len__(self):
        return len(self._cache)


@dataclass(frozen=True)
class ProblemSpec:
    """Minimise ``J[primary_index]`` over designs subject to cardinality and bands.

    ``x_grid`` (one tuple of values per tunable) is only consulted by
    exhaustive enumeration.
    """

    objective: Callable[[DesignVector], ObjectiveVector]
    primary_index: int = 0
    bands: tuple[Band, ...] = ()
    m_min: int = 0
    m_max: int = N_PAIRS
    x_lower: tuple[float, ...] = ()
    x_upper: tuple[float, ...] = ()
    x_names: tuple[str, ...] = ()
    x_grid: tuple[tuple[float, ...], ...] | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.m_min <= self.m_max <= N_PAIRS:
            raise DomainError(f"need 0 <= M_min <= M_max <= {N_PAIRS}, "
                              f"got {self.m_min}, {self.m_max}")
        if len(self.x_lower) != len(self.x_upper):
            raise DomainError("x bounds differ in length")
        if any(lo > hi for lo, hi in zip(self.x_lower, self.x_upper)):
            raise DomainError("x lower bound above upper bound")
        if self.x_names and len(self.x_names) != len(self.x_lower):
            raise DomainError("x_names must match the number of tunables")
        if self.x_grid is not None and len(self.x_grid) != len(self.x_lower):
            raise DomainError("x_grid must list values for every tunable")
        if not isinstance(self.objective, CachedObjective):
            object.__setattr__(self, "objective", CachedObjective(self.objective))
        object.__setattr__(self, "bands", tuple(self.bands))

    @property
    def n_x(self) -> int:
        return len(self.x_lower)

    @property
    def names(self) -> tuple[str, ...]:
        return self.objective.names

    def with_bands(self, *bands: Band) -> ProblemSpec:
        return replace(self, bands=self.bands + tuple(bands))

    def with_primary(self, index: int) -> ProblemSpec:
        return replace(self, primary_index=index)

    def cardinality_ok(self, d: DesignVector) -> bool:
        return self.m_min <= d.active_pairs <= self.m_max

    def x_midpoint(self) -> tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in zip(self.x_lower, self.x_upper))

    def clip_x(self, x) -> tuple[float, ...]:
        return tuple(min(max(float(v), lo), hi) for v, lo, hi in zip(x, self.x_lower, self.x_upper))


def evaluate_design(d: DesignVector, p: ProblemSpec) -> ObjectiveVector:
    """Objective vector of ``d`` under ``p``'s cardinality and band constraints.

    Simulations are memoised on the problem's objective; constraint checks are
    applied afterwards so one cache serves every band of a Pareto sweep.
    """
    d.check_bounds(p.x_lower, p.x_upper)
    ov = p.objective(d)
    if not ov.feasible:
        return ov
    if not p.cardinality_ok(d):
        return ov.infeasible(f"active pairs {d.active_pairs} outside [{p.m_min}, {p.m_max}]")
    for band in p.bands:
        if not band.contains(ov.values[band.index]):
            return ov.infeasible(f"criterion {band.index} outside band")
    return ov


def primary_value(ov: ObjectiveVector, p: ProblemSpec) -> float:
    return ov.values[p.primary_index] if ov.feasible else SENTINEL


@dataclass
class SolverReport:
    solver: str
    seed: int | None
    best_design: DesignVector | None
    best_objective: ObjectiveVector | None
    evaluations: int
    wall_time: float
    convergence_curve: list[tuple[int, float]]
    primary_index: int = 0
    all_evaluated: list[tuple[DesignVector, ObjectiveVector]] | None = None
    stop_reason: str = ""

    @property
    def best_value(self) -> float:
        if self.best_objective is None:
            return SENTINEL
        return self.best_objective.values[self.primary_index]

    @property
    def found(self) -> bool:
        return self.best_objective is not None and self.best_objective.feasible

    def to_dict(self, *, include_timing: bool = False) -> dict:
        out = {
            "solver": self.solver,
            "seed": self.seed,
            "primary_index": self.primary_index,
            "evaluations": self.evaluations,
            "stop_reason": self.stop_reason,
            "best": None,
            "convergence_curve": [[e, v] for e, v in self.convergence_curve],
        }
        if self.best_design is not None:
            out["best"] = {
                "y_bits": self.best_design.bits(),
                "x": list(self.best_design.x),
                "pairs": [list(pr) for pr in self.best_design.matrix.pairs()],
                "objective": self.best_objective.as_dict(),
            }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, path, *, include_timing: bool = False) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(include_timing=include_timing), indent=2,
                                   sort_keys=True, allow_nan=True) + "\n")
        return path

    def convergence_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("evals", "best_primary"))
            for e, v in self.convergence_curve:
                w.writerow((e, repr(float(v))))
        return path


class StopSearch(Exception):
    """Raised inside a solver run when its evaluation or time budget is spent."""


class SearchRun:
    """Per-run bookkeeping shared by the solvers.

    Counts distinct designs requested by this run (cache hits from earlier runs
    still count once), tracks the incumbent and the anytime convergence curve.
    """

    def __init__(self, problem: ProblemSpec, name: str, seed: int | None,
                 max_evals: float = math.inf, max_time: float | None = None,
                 workers: int = 1):
        self.problem = problem
        self.name = name
        self.seed = seed
        self.max_evals = max_evals
        self.max_time = max_time
        self.workers = max(1, int(workers))
        self.t0 = time.perf_counter()
        self.seen: dict = {}
        self.best_design: DesignVector | None = None
        self.best_objective: ObjectiveVector | None = None
        self.best_value = SENTINEL
        self.curve: list[tuple[int, float]] = []
        self.stop_reason = ""

    @property
    def evaluations(self) -> int:
        return len(self.seen)

    def out_of_time(self) -> bool:
        return self.max_time is not None and time.perf_counter() - self.t0 > self.max_time

    def _check_budget(self):
        if self.evaluations >= self.max_evals:
            self.stop_reason = "max_evals"
            raise StopSearch
        if self.out_of_time():
            self.stop_reason = "max_time"
            raise StopSearch

    def _record(self, d: DesignVector, ov: ObjectiveVector):
        v = primary_value(ov, self.problem)
        if ov.feasible and (v < self.best_value or self.best_objective is None):
            self.best_value = v
            self.best_design = d
            self.best_objective = ov
            self.curve.append((self.evaluations, v))

    def evaluate(self, d: DesignVector) -> float:
        """Primary value of ``d`` (sentinel when infeasible)."""
        return primary_value(self.evaluate_full(d), self.problem)

    def evaluate_full(self, d: DesignVector) -> ObjectiveVector:
        key = d.key(self.problem.objective.quantum)
        ov = self.seen.get(key)
        if ov is not None:
            return ov
        self._check_budget()
        ov = evaluate_design(d, self.problem)
        self.seen[key] = ov
        self._record(d, ov)
        return ov

    def evaluate_many(self, designs: Sequence[DesignVector]) -> list[float]:
        """Evaluate a batch in order; new designs may run concurrently.

        Stops (raising :class:`StopSearch`) once the budget would be exceeded,
        after recording everything evaluated so far.
        """
        if self.workers > 1:
            q = self.problem.objective.quantum
            fresh, keys = [], set()
            room = self.max_evals - self.evaluations
            for d in designs:
                k = d.key(q)
                if k in self.seen or k in keys:
                    continue
                if len(fresh) >= room:
                    break
                keys.add(k)
                fresh.append(d)
            with ThreadPoolExecutor(self.workers) as pool:
                list(pool.map(self.problem.objective, fresh))
        return [self.evaluate(d) for d in designs]

    def report(self, all_evaluated=None) -> SolverReport:
        return SolverReport(
            solver=self.name,
            seed=self.seed,
            best_design=self.best_design,
            best_objective=self.best_objective,
            evaluations=self.evaluations,
            wall_time=time.perf_counter() - self.t0,
            convergence_curve=list(self.curve),
            primary_index=self.problem.primary_index,
            all_evaluated=all_evaluated,
            stop_reason=self.stop_reason or "converged",
        )


def random_feasible_y(rng: np.random.Generator, p: ProblemSpec, weights=None) -> tuple[int, ...]:
    """Random bit vector with cardinality drawn uniformly from ``[m_min, m_max]``.

    ``weights`` (length 32, larger = preferred) biases which bits are set.
    """
    m = int(rng.integers(p.m_min, p.m_max + 1))
    y = np.zeros(N_PAIRS, dtype=np.int64)
    if m:
        if weights is None:
            idx = rng.choice(N_PAIRS, size=m, replace=False)
        else:
            w = np.asarray(weights, dtype=float)
            w = w / w.sum()
            idx = rng.choice(N_PAIRS, size=m, replace=False, p=w)
        y[idx] = 1
    return tuple(int(b) for b in y)


def random_x(rng: np.random.Generator, p: ProblemSpec) -> tuple[float, ...]:
    return tuple(float(rng.uniform(lo, hi)) for lo, hi in zip(p.x_lower, p.x_upper))


def initial_design(p: ProblemSpec, rng: np.random.Generator, x0=None) -> DesignVector:
    """The all-zeros circuit when it satisfies the cardinality bounds, else a random one."""
    x = tuple(x0) if x0 is not None else p.x_midpoint()
    if p.m_min == 0:
        return DesignVector.zeros(x)
    y = np.zeros(N_PAIRS, dtype=np.int64)
    y[rng.choice(N_PAIRS, size=p.m_min, replace=False)] = 1
    return DesignVector(tuple(int(b) for b in y), x)


def hamming(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(1 for u, v in zip(a, b) if u != v)


def is_sentinel(v: float) -> bool:
    return v >= SENTINEL
