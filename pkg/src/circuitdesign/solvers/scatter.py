"""Scatter search with a quality/diversity reference set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import N_PAIRS, DesignVector
from .problem import (
    ProblemSpec,
    SearchRun,
    SolverReport,
    StopSearch,
    hamming,
    random_feasible_y,
    random_x,
)
from .refine import RefineConfig, refine_in_run


@dataclass(frozen=True)
class ScatterConfig:
    """Scatter search options.

    The reference set holds ``refset_size`` designs, half chosen for quality
    and half for Hamming diversity from ``n_diverse`` random seeds.  A member
    that has not improved for ``n_stuck`` generations is replaced by a fresh
    diverse design.
    """

    max_evals: int = 5000
    max_time: float | None = None
    max_generations: int = 500
    refset_size: int = 10
    n_diverse: int = 50
    go_beyond: int = 5
    n_stuck: int = 3
    # stop after this many generations that request no new design
    idle_limit: int = 20
    refine: bool = True
    refine_cfg: RefineConfig = field(default_factory=lambda: RefineConfig(max_evals=300))
    workers: int = 1


def _repair(y: np.ndarray, p: ProblemSpec, rng, prefer: np.ndarray) -> np.ndarray:
    """Bring the active count into ``[m_min, m_max]`` preferring bits set in ``prefer``."""
    y = y.copy()
    m = int(y.sum())
    if m > p.m_max:
        on = np.flatnonzero(y)
        # drop bits not shared with ``prefer`` first
        order = sorted(on, key=lambda i: (prefer[i], rng.random()))
        y[order[: m - p.m_max]] = 0
    elif m < p.m_min:
        off = np.flatnonzero(y == 0)
        order = sorted(off, key=lambda i: (-prefer[i], rng.random()))
        y[order[: p.m_min - m]] = 1
    return y


def _combine(a: DesignVector, b: DesignVector, p: ProblemSpec, rng) -> DesignVector:
    ya, yb = np.array(a.y), np.array(b.y)
    mask = rng.random(N_PAIRS) < 0.5
    y = np.where(mask, ya, yb)
    y = _repair(y, p, rng, ya & yb)
    x = ()
    if p.n_x:
        r = rng.uniform(-0.5, 1.5)
        x = p.clip_x(np.array(a.x) + r * (np.array(b.x) - np.array(a.x)))
    return DesignVector(tuple(int(v) for v in y), x)


def _diverse_pool(rng, p: ProblemSpec, n: int, freq: np.ndarray) -> list[DesignVector]:
    # bias towards rarely used pairs so restarts explore new wiring
    weights = 1.0 / (1.0 + freq)
    return [DesignVector(random_feasible_y(rng, p, weights), random_x(rng, p) if p.n_x else ())
            for _ in range(n)]


def _min_dist(d: DesignVector, ref: list[DesignVector]) -> int:
    return min((hamming(d.y, r.y) for r in ref), default=N_PAIRS + 1)


def scatter_search(p: ProblemSpec, cfg: ScatterConfig | None = None, seed: int | None = None,
                   x0=None, observer=None) -> SolverReport:
    """Minimise ``p``'s primary criterion by scatter search.

    Every pair of reference designs is combined by uniform crossover on the
    wiring (repaired to the cardinality bounds) and a line step on ``x``.
    Improving children are pushed further along the same direction before the
    reference set is updated.  ``observer``, if given, is called with a copy
    of the reference set once it is built and after every generation.
    """
    cfg = cfg or ScatterConfig()
    seed = p.rng_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    run = SearchRun(p, "scatter", seed, cfg.max_evals, cfg.max_time, cfg.workers)
    freq = np.zeros(N_PAIRS)
    half = max(1, cfg.refset_size // 2)

    try:
        x_start = tuple(x0) if x0 is not None else p.x_midpoint()
        pool = [DesignVector.zeros(x_start)] if p.m_min == 0 else []
        pool += _diverse_pool(rng, p, cfg.n_diverse, freq)
        vals = run.evaluate_many(pool)
        ranked = sorted(range(len(pool)), key=lambda i: (vals[i], i))
        ref: list[DesignVector] = []
        ref_v: list[float] = []
        for i in ranked:
            if len(ref) >= half:
                break
            if all(pool[i].y != r.y for r in ref):
                d = refine_in_run(run, pool[i], cfg.refine_cfg) if cfg.refine else pool[i]
                if all(d.y != r.y for r in ref):
                    ref.append(d)
                    ref_v.append(run.evaluate(d))
        rest = [pool[i] for i in ranked if all(pool[i].y != r.y for r in ref)]
        while len(ref) < cfg.refset_size and rest:
            j = max(range(len(rest)), key=lambda k: (_min_dist(rest[k], ref), -k))
            d = rest.pop(j)
            if any(d.y == r.y for r in ref):
                continue
            ref.append(d)
            ref_v.append(run.evaluate(d))
        for d in ref:
            freq += np.array(d.y)
        age = [0] * len(ref)
        idle = 0
        if observer is not None:
            observer(list(ref))

        for _gen in range(cfg.max_generations):
            if run.out_of_time():
                run.stop_reason = "max_time"
                break
            if idle >= cfg.idle_limit:
                run.stop_reason = "no_new_designs"
                break
            evals_before = run.evaluations
            best_before = run.best_value
            children = []
            for i in range(len(ref)):
                for j in range(i + 1, len(ref)):
                    children.append((i, j, _combine(ref[i], ref[j], p, rng)))
            child_v = run.evaluate_many([c for _, _, c in children])
            new_members = []
            for (i, j, c), cv in zip(children, child_v):
                parent_v = min(ref_v[i], ref_v[j])
                if cv < parent_v:
                    # keep pushing past the better parent while it helps
                    for _ in range(cfg.go_beyond):
                        nxt = _combine(c, ref[i] if ref_v[i] <= ref_v[j] else ref[j], p, rng)
                        nv = run.evaluate(nxt)
                        if not nv < cv:
                            break
                        c, cv = nxt, nv
                new_members.append((cv, c))

            improved = [False] * len(ref)
            for cv, c in sorted(new_members, key=lambda t: t[0]):
                if any(c.y == r.y and c.x == r.x for r in ref):
                    continue
                worst = max(range(len(ref)), key=lambda k: (ref_v[k], -_min_dist(ref[k], ref)))
                if cv < ref_v[worst] or (cv == ref_v[worst]
                                         and _min_dist(c, ref) > _min_dist(ref[worst], ref)):
                    if any(c.y == r.y for k, r in enumerate(ref) if k != worst):
                        continue
                    ref[worst], ref_v[worst] = c, cv
                    improved[worst] = True
                    age[worst] = 0
                    freq += np.array(c.y)

            if cfg.refine and run.best_value < best_before:
                b = refine_in_run(run, run.best_design, cfg.refine_cfg)
                bv = run.evaluate(b)
                worst = max(range(len(ref)), key=lambda k: ref_v[k])
                if all(b.y != r.y for r in ref) and bv < ref_v[worst]:
                    ref[worst], ref_v[worst] = b, bv
                    age[worst] = 0

            for k in range(len(ref)):
                age[k] = 0 if improved[k] else age[k] + 1
            stuck = [k for k in range(len(ref)) if age[k] >= cfg.n_stuck
                     and ref[k] is not run.best_design]
            if stuck and not any(improved):
                cand = _diverse_pool(rng, p, cfg.n_diverse // 2 or 1, freq)
                for k in stuck:
                    others = [r for m, r in enumerate(ref) if m != k]
                    cand = [c for c in cand if all(c.y != r.y for r in others)]
                    if not cand:
                        break
                    j = max(range(len(cand)), key=lambda q: (_min_dist(cand[q], others), -q))
                    d = cand.pop(j)
                    ref[k], ref_v[k], age[k] = d, run.evaluate(d), 0
                    freq += np.array(d.y)
            idle = idle + 1 if run.evaluations == evals_before else 0
            if observer is not None:
                observer(list(ref))
        else:
            run.stop_reason = "max_generations"
    except StopSearch:
        pass
    return run.report()
