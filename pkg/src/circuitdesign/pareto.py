"""Pareto dominance, nondominated filtering and the epsilon-constraint driver."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import DomainError, EmptyFrontError
from .model import DesignVector
from .objectives import ObjectiveVector
from .solvers import SOLVERS, Band, ProblemSpec, SolverReport, exhaustive_search

CSV_HEADER = ("band", "J1", "J2", "active_pairs", "y_bits", "x_values")


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """True when ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    if tuple(a.names) != tuple(b.names):
        raise DomainError(f"criteria differ: {a.names} vs {b.names}")
    if not (a.feasible and b.feasible):
        raise DomainError("dominance is only defined between feasible vectors")
    strict = False
    for u, v in zip(a.values, b.values):
        if u > v:
            return False
        if u < v:
            strict = True
    return strict


@dataclass
class ParetoPoint:
    objective: ObjectiveVector
    design: DesignVector | None = None
    band: int | None = None
    solver: str = ""
    seed: int | None = None
    # other designs that reached exactly the same objective values
    alternatives: list[DesignVector] = field(default_factory=list)

    @property
    def values(self) -> tuple[float, ...]:
        return self.objective.values

    def as_dict(self) -> dict:
        d = self.design
        return {
            "band": self.band,
            "solver": self.solver,
            "seed": self.seed,
            "objective": self.objective.as_dict(),
            "design": None if d is None else _design_dict(d),
            "alternatives": [_design_dict(a) for a in self.alternatives],
        }


def _design_dict(d: DesignVector) -> dict:
    return {"y_bits": d.bits(), "x": list(d.x), "pairs": [list(p) for p in d.matrix.pairs()]}


def _as_point(item) -> ParetoPoint:
    if isinstance(item, ParetoPoint):
        return item
    if isinstance(item, ObjectiveVector):
        return ParetoPoint(item)
    design, ov = item[0], item[1]
    return ParetoPoint(ov, design)


@dataclass
class ParetoFront:
    """Mutually nondominated points sorted by the secondary criterion.

    ``bounds`` holds ``(lower, upper)`` per criterion; ``gaps`` lists band
    indices whose banded problem had no feasible solution.
    """

    points: list[ParetoPoint]
    names: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...] | None = None
    bands: tuple[Band, ...] = ()
    gaps: tuple[int, ...] = ()
    secondary_index: int = 1

    def __post_init__(self):
        k = self.secondary_index
        self.points = sorted(self.points, key=lambda pt: pt.values[k] if len(pt.values) > k else 0)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def values(self) -> list[tuple[float, ...]]:
        return [pt.values for pt in self.points]

    def _bounds_line(self) -> str:
        if self.bounds is None:
            return "# bounds none"
        parts = [f"{n}=[{lo!r},{hi!r}]" for n, (lo, hi) in zip(self.names, self.bounds)]
        return "# bounds " + " ".join(parts)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(self._bounds_line() + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for pt in self.points:
            d = pt.design
            pairs = "" if d is None else ";".join(f"{a}>{b}" for a, b in d.matrix.pairs())
            w.writerow((
                "" if pt.band is None else pt.band,
                repr(pt.values[0]),
                repr(pt.values[1]) if len(pt.values) > 1 else "",
                pairs,
                "" if d is None else d.bits(),
                "" if d is None else ";".join(repr(v) for v in d.x),
            ))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "bounds": None if self.bounds is None else [list(b) for b in self.bounds],
            "bands": [[b.lower, b.upper, b.closed] for b in self.bands],
            "gaps": list(self.gaps),
            "points": [pt.as_dict() for pt in self.points],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def nondominated_filter(points: Iterable, *, bounds=None, bands=(), gaps=(),
                        secondary_index: int = 1) -> ParetoFront:
    """Keep the feasible points that no other point dominates.

    Accepts :class:`ParetoPoint`, bare :class:`ObjectiveVector` or
    ``(design, objective)`` pairs.  Points with identical values collapse onto
    the first one seen, which records the other designs as alternatives.
    """
    pts = [_as_point(p) for p in points]
    feas = [p for p in pts if p.objective.feasible]
    if not feas:
        raise EmptyFrontError("no feasible point to build a front from")
    names = feas[0].objective.names
    unique: dict[tuple, ParetoPoint] = {}
    for p in feas:
        key = p.values
        if key in unique:
            rep = unique[key]
            for d in [p.design, *p.alternatives]:
                if d is not None and d != rep.design and d not in rep.alternatives:
                    rep.alternatives.append(d)
        else:
            unique[key] = ParetoPoint(p.objective, p.design, p.band, p.solver, p.seed,
                                      list(p.alternatives))
    cands = list(unique.values())
    keep = [p for p in cands
            if not any(dominates(q.objective, p.objective) for q in cands if q is not p)]
    return ParetoFront(keep, tuple(names), bounds, tuple(bands), tuple(gaps), secondary_index)


def solve(p: ProblemSpec, solver: str = "scatter", seeds: Sequence[int] = (0,),
          cfg=None, budget: int = 10**5) -> SolverReport:
    """Best-of-seeds solution of a single-criterion problem.

    ``solver`` is ``"exhaustive"`` or a key of :data:`SOLVERS`; ties between
    seeds keep the earliest seed.
    """
    if solver == "exhaustive":
        return exhaustive_search(p, budget, keep_all=False)
    if solver not in SOLVERS:
        raise DomainError(f"unknown solver {solver!r}")
    best = None
    for s in seeds:
        r = SOLVERS[solver](p, cfg, seed=s)
        if best is None or (r.found and (not best.found or r.best_value < best.best_value)):
            best = r
    return best


@dataclass
class OptimaBounds:
    """Individual optima of both criteria and the criterion ranges they span."""

    opt1: tuple[DesignVector, ObjectiveVector]
    opt2: tuple[DesignVector, ObjectiveVector]
    bounds: tuple[tuple[float, float], tuple[float, float]]
    reports: tuple[SolverReport, SolverReport]


def individual_optima_bounds(p: ProblemSpec, solver: str = "scatter", seeds: Sequence[int] = (0,),
                             cfg=None, *, secondary_band: Band | None = Band(0, -math.inf, 0.0),
                             budget: int = 10**5) -> OptimaBounds:
    """Minimise each criterion on its own and derive the ranges of both.

    The secondary optimum is searched only among designs inside
    ``secondary_band`` (by default a strictly negative first criterion, which
    discards circuits that do not work at all).
    """
    r1 = solve(p.with_primary(0), solver, seeds, cfg, budget)
    p2 = p.with_primary(1)
    if secondary_band is not None:
        p2 = p2.with_bands(secondary_band)
    r2 = solve(p2, solver, seeds, cfg, budget)
    for r, label in ((r1, "first"), (r2, "second")):
        if not r.found:
            raise DomainError(f"no feasible design minimising the {label} criterion")
    a, b = r1.best_objective.values, r2.best_objective.values
    bounds = ((a[0], b[0]), (b[1], a[1]))
    if bounds[1][0] > bounds[1][1]:
        # the secondary optimum must not cost more than the primary one
        raise DomainError("secondary optimum is worse than the primary optimum in its own criterion")
    return OptimaBounds((r1.best_design, r1.best_objective), (r2.best_design, r2.best_objective),
                        bounds, (r1, r2))


def epsilon_grid(lower: float, upper: float, step: float) -> list[Band]:
    """Bands ``[e_k, e_{k+1})`` of width ``step`` covering ``[lower, upper]``; the last is closed."""
    if not step > 0:
        raise DomainError(f"step must be > 0, got {step}")
    if lower > upper:
        raise DomainError("lower bound above upper bound")
    if lower == upper:
        return [Band(1, lower, upper, closed=True)]
    n = max(1, math.ceil((upper - lower) / step - 1e-12))
    edges = [lower + k * step for k in range(n + 1)]
    edges[-1] = max(edges[-1], upper)
    return [Band(1, edges[k], edges[k + 1], closed=(k == n - 1)) for k in range(n)]


def epsilon_constraint_front(p: ProblemSpec, step: float = 50.0, solver: str = "scatter",
                             seeds: Sequence[int] = (0, 1, 2), cfg=None, workers: int = 1,
                             optima: OptimaBounds | None = None,
                             progress: Callable[[int, SolverReport], None] | None = None,
                             budget: int = 10**5,
                             secondary_band: Band | None = Band(0, -math.inf, 0.0)) -> ParetoFront:
    """Trace the front by minimising criterion 0 within successive bands of criterion 1.

    Bands without a feasible solution are recorded in ``gaps``.  The two
    individual optima join the candidate pool before filtering.
    """
    optima = optima or individual_optima_bounds(p, solver, seeds, cfg, budget=budget,
                                                secondary_band=secondary_band)
    bands = epsilon_grid(*optima.bounds[1], step)
    base = p.with_primary(0)

    def run_band(k: int) -> SolverReport:
        return solve(base.with_bands(bands[k]), solver, seeds, cfg, budget)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            reports = list(pool.map(run_band, range(len(bands))))
    else:
        reports = [run_band(k) for k in range(len(bands))]

    def band_of(v: float) -> int | None:
        return next((k for k, b in enumerate(bands) if b.contains(v)), None)

    pool_pts, gaps = [], []
    for k, r in enumerate(reports):
        if progress is not None:
            progress(k, r)
        if r.found:
            pool_pts.append(ParetoPoint(r.best_objective, r.best_design, k, r.solver, r.seed))
        else:
            gaps.append(k)
    for (d, ov), r in zip((optima.opt1, optima.opt2), optima.reports):
        pool_pts.append(ParetoPoint(ov, d, band_of(ov.values[1]), r.solver, r.seed))
    bounds = optima.bounds
    return nondominated_filter(pool_pts, bounds=bounds, bands=bands, gaps=gaps)
