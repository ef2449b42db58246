"""Tabu search over the binary superstructure with local refinement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import N_PAIRS, N_PROMOTERS, N_TRANSCRIPTS, DesignVector
from .problem import (
    ProblemSpec,
    SearchRun,
    SolverReport,
    StopSearch,
    initial_design,
    random_x,
)
from .refine import RefineConfig, apply_move, flip_moves, refine_in_run, swap_moves


@dataclass(frozen=True)
class TabuConfig:
    """Tabu search options.

    ``max_swaps`` caps how many cardinality-preserving swaps are sampled per
    iteration (all flips are always tried).  After ``stall_limit`` iterations
    without a new incumbent the search restarts from the least-visited part
    of the superstructure.
    """

    max_evals: int = 5000
    max_time: float | None = None
    max_iters: int = 5000
    tenure: int = 15
    max_swaps: int = 48
    stall_limit: int = 25
    # stop after this many iterations that request no new design
    idle_limit: int = 100
    x_moves: int = 2
    refine: bool = True
    refine_cfg: RefineConfig = field(default_factory=lambda: RefineConfig(max_evals=500))
    workers: int = 1


def _least_visited_start(rng, p: ProblemSpec, freq: np.ndarray) -> tuple[int, ...]:
    grid = freq.reshape((N_PROMOTERS, N_TRANSCRIPTS), order="F")
    # score each pair by how often its row, column and bit were active
    score = (grid.sum(axis=1)[:, None] + grid.sum(axis=0)[None, :] + grid).flatten(order="F")
    score = score + rng.random(N_PAIRS) * 1e-3
    lo = max(p.m_min, 1) if p.m_max > 0 else 0
    m = int(rng.integers(lo, p.m_max + 1))
    y = np.zeros(N_PAIRS, dtype=np.int64)
    y[np.argsort(score, kind="stable")[:m]] = 1
    return tuple(int(b) for b in y)


def tabu_search(p: ProblemSpec, cfg: TabuConfig | None = None, seed: int | None = None,
                x0=None) -> SolverReport:
    """Minimise ``p``'s primary criterion by tabu search.

    Starts from the all-zeros circuit (or the smallest feasible random one).
    Each iteration scores all bit flips, a sample of swaps and a few random
    steps on ``x``, then moves to the best admissible neighbour even if it is
    worse.  Reversing a recent move is tabu unless it beats the incumbent.
    """
    cfg = cfg or TabuConfig()
    seed = p.rng_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    run = SearchRun(p, "tabu", seed, cfg.max_evals, cfg.max_time, cfg.workers)
    tabu_until = np.zeros(N_PAIRS, dtype=np.int64)
    freq = np.zeros(N_PAIRS)
    widths = np.array([hi - lo for lo, hi in zip(p.x_lower, p.x_upper)])

    try:
        cur = initial_design(p, rng, x0)
        cur_v = run.evaluate(cur)
        if cfg.refine and run.best_design is not None:
            cur = refine_in_run(run, cur, cfg.refine_cfg)
            cur_v = run.evaluate(cur)
        stall = idle = 0
        for it in range(1, cfg.max_iters + 1):
            if run.out_of_time():
                run.stop_reason = "max_time"
                break
            if idle >= cfg.idle_limit:
                run.stop_reason = "no_new_designs"
                break
            evals_before = run.evaluations
            moves = list(flip_moves(cur.y, p))
            swaps = list(swap_moves(cur.y))
            if len(swaps) > cfg.max_swaps:
                pick = rng.choice(len(swaps), size=cfg.max_swaps, replace=False)
                swaps = [swaps[i] for i in sorted(pick)]
            moves += swaps
            cands = [cur.with_y(apply_move(cur.y, m)) for m in moves]
            tabu = [bool(np.any(tabu_until[list(m)] > it)) for m in moves]
            for _ in range(cfg.x_moves if p.n_x else 0):
                i = int(rng.integers(p.n_x))
                x = np.array(cur.x)
                x[i] += rng.normal(0.0, 0.1) * widths[i]
                cands.append(cur.with_x(p.clip_x(x)))
                moves.append(())
                tabu.append(False)

            best_before = run.best_value
            vals = run.evaluate_many(cands)
            order = sorted(range(len(cands)), key=lambda i: (vals[i], i))
            chosen = None
            for i in order:
                if not tabu[i] or vals[i] < best_before:
                    chosen = i
                    break

            if chosen is not None:
                cur, cur_v = cands[chosen], vals[chosen]
                if moves[chosen]:
                    tabu_until[list(moves[chosen])] = it + cfg.tenure
            freq += np.array(cur.y)

            if run.best_value < best_before:
                stall = 0
                if cfg.refine:
                    refined = refine_in_run(run, run.best_design, cfg.refine_cfg)
                    cur, cur_v = refined, run.evaluate(refined)
            else:
                stall += 1

            if chosen is None or stall >= cfg.stall_limit:
                y = _least_visited_start(rng, p, freq)
                x = random_x(rng, p) if p.n_x else ()
                cur = DesignVector(y, x)
                cur_v = run.evaluate(cur)
                tabu_until[:] = 0
                stall = 0
            idle = idle + 1 if run.evaluations == evals_before else 0
        else:
            run.stop_reason = "max_iters"
    except StopSearch:
        pass
    return run.report()
