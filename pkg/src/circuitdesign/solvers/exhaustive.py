"""Brute-force enumeration, used as the reference oracle on small instances."""

from __future__ import annotations

import itertools
import math

from ..errors import BudgetExceeded
from ..model import N_PAIRS, DesignVector
from .problem import ProblemSpec, SearchRun, SolverReport


def enumeration_size(p: ProblemSpec) -> int:
    n_y = sum(math.comb(N_PAIRS, m) for m in range(p.m_min, p.m_max + 1))
    n_x = math.prod(len(g) for g in p.x_grid) if p.x_grid else 1
    return n_y * n_x


def enumerate_designs(p: ProblemSpec):
    """Yield every design in a fixed order: by cardinality, then bit positions, then ``x_grid``.

    Without an ``x_grid`` the tunables stay at the midpoint of their bounds.
    """
    xs = list(itertools.product(*p.x_grid)) if p.x_grid else [p.x_midpoint()]
    for m in range(p.m_min, p.m_max + 1):
        for on in itertools.combinations(range(N_PAIRS), m):
            y = [0] * N_PAIRS
            for i in on:
                y[i] = 1
            y = tuple(y)
            for x in xs:
                yield DesignVector(y, x)


def exhaustive_search(p: ProblemSpec, budget: int = 10**5, *, keep_all: bool = True,
                      workers: int = 1) -> SolverReport:
    """Evaluate every admissible design and return the global optimum.

    Ties keep the design enumerated first.  Raises :class:`BudgetExceeded`
    before any simulation when the enumeration is larger than ``budget``.
    """
    count = enumeration_size(p)
    if count > budget:
        raise BudgetExceeded(count, budget)
    run = SearchRun(p, "exhaustive", None, workers=workers)
    designs = list(enumerate_designs(p))
    chunk = max(1, 64 * run.workers)
    for s in range(0, len(designs), chunk):
        run.evaluate_many(designs[s:s + chunk])
    evaluated = [(d, run.evaluate_full(d)) for d in designs] if keep_all else None
    return run.report(all_evaluated=evaluated)
