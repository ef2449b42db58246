"""Derivative-free mixed-integer local refinement.

Alternates best-improvement bit moves on ``y`` with a shrinking-step
coordinate pattern search on ``x`` until neither improves the design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from ..model import DesignVector
from .problem import ProblemSpec, SearchRun, StopSearch


@dataclass(frozen=True)
class RefineConfig:
    max_evals: float = math.inf
    max_rounds: int = 50
    swaps: bool = True
    # pattern steps are fractions of each tunable's range
    x_step: float = 0.1
    x_tol: float = 1e-6


def flip_moves(y: tuple[int, ...], p: ProblemSpec) -> Iterator[tuple[int, ...]]:
    """Single-bit flips that keep the active-pair count within bounds."""
    m = sum(y)
    for i, b in enumerate(y):
        if b and m - 1 < p.m_min:
            continue
        if not b and m + 1 > p.m_max:
            continue
        yield (i,)


def swap_moves(y: tuple[int, ...]) -> Iterator[tuple[int, int]]:
    """Pairs ``(on, off)``: switch one active pair off and one inactive pair on."""
    ones = [i for i, b in enumerate(y) if b]
    zeros = [i for i, b in enumerate(y) if not b]
    for i in ones:
        for j in zeros:
            yield (i, j)


def apply_move(y: tuple[int, ...], move) -> tuple[int, ...]:
    out = list(y)
    for i in move:
        out[i] = 1 - out[i]
    return tuple(out)


def _bit_descent(run: SearchRun, d: DesignVector, v: float, swaps: bool):
    p = run.problem
    while True:
        moves = list(flip_moves(d.y, p))
        if swaps:
            moves += list(swap_moves(d.y))
        cands = [d.with_y(apply_move(d.y, m)) for m in moves]
        vals = run.evaluate_many(cands)
        best_i = min(range(len(cands)), key=vals.__getitem__, default=None)
        if best_i is None or not vals[best_i] < v:
            return d, v
        d, v = cands[best_i], vals[best_i]


def _pattern_search(run: SearchRun, d: DesignVector, v: float, cfg: RefineConfig):
    p = run.problem
    widths = [hi - lo for lo, hi in zip(p.x_lower, p.x_upper)]
    steps = [cfg.x_step * w for w in widths]
    improved_any = False
    while any(s > cfg.x_tol * max(w, 1e-300) for s, w in zip(steps, widths)):
        improved = False
        for i in range(p.n_x):
            if steps[i] <= cfg.x_tol * max(widths[i], 1e-300):
                continue
            for sign in (1.0, -1.0):
                x = list(d.x)
                x[i] += sign * steps[i]
                x = p.clip_x(x)
                if x == d.x:
                    continue
                cand = d.with_x(x)
                cv = run.evaluate(cand)
                if cv < v:
                    d, v = cand, cv
                    improved = improved_any = True
                    break
        if not improved:
            steps = [0.5 * s for s in steps]
    return d, v, improved_any


def refine_in_run(run: SearchRun, d: DesignVector, cfg: RefineConfig | None = None) -> DesignVector:
    """Refine ``d`` inside an existing run; never returns a worse design.

    Budget exhaustion inside the run stops refinement and returns the best
    design reached so far.
    """
    cfg = cfg or RefineConfig()
    start_evals = run.evaluations
    d0 = d
    try:
        v = run.evaluate(d)
    except StopSearch:
        return d0
    best, best_v = d, v
    try:
        for _ in range(cfg.max_rounds):
            if run.evaluations - start_evals >= cfg.max_evals:
                break
            d, v = _bit_descent(run, best, best_v, cfg.swaps)
            moved = v < best_v
            best, best_v = (d, v) if moved else (best, best_v)
            if run.problem.n_x:
                d, v, improved = _pattern_search(run, best, best_v, cfg)
                if improved and v < best_v:
                    best, best_v = d, v
                    moved = True
            if not moved:
                break
    except StopSearch:
        # the run's incumbent already reflects anything better found here
        if run.best_design is not None and run.best_value < best_v:
            return run.best_design
    return best


def local_refine(d: DesignVector, p: ProblemSpec, cfg: RefineConfig | None = None) -> DesignVector:
    """Standalone local refinement of a feasible design."""
    cfg = cfg or RefineConfig()
    run = SearchRun(p, "local_refine", None, max_evals=cfg.max_evals)
    return refine_in_run(run, d, cfg)
