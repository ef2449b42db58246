import json

import numpy as np
import pytest

from circuitdesign.errors import BudgetExceeded, DomainError
from circuitdesign.model import N_PAIRS, DesignVector
from circuitdesign.objectives import SENTINEL, ObjectiveVector
from circuitdesign.solvers import (
    Band,
    ProblemSpec,
    RefineConfig,
    ScatterConfig,
    TabuConfig,
    enumeration_size,
    exhaustive_search,
    local_refine,
    scatter_search,
    tabu_search,
)
from circuitdesign.solvers.refine import flip_moves, swap_moves

rng = np.random.default_rng(1234)
WEIGHTS = rng.normal(size=N_PAIRS)


class Linear:
    """Cheap synthetic objective: weighted bit sum plus a quadratic in x."""

    names = ("f", "g")

    def __init__(self, target=0.3):
        self.target = target
        self.calls = 0

    def __call__(self, d):
        self.calls += 1
        y = np.array(d.y)
        q = sum((v - self.target) ** 2 for v in d.x)
        return ObjectiveVector(self.names, (float(WEIGHTS @ y) + q, float(y.sum())))


def _oracle_best(m_max):
    order = np.argsort(WEIGHTS)
    neg = [i for i in order[:m_max] if WEIGHTS[i] < 0]
    return float(WEIGHTS[neg].sum())


def test_enumeration_count_529():
    p = ProblemSpec(Linear(), m_max=2)
    assert enumeration_size(p) == 1 + 32 + 496
    r = exhaustive_search(p)
    assert r.evaluations == 529 and len(r.all_evaluated) == 529
    assert r.best_value == pytest.approx(_oracle_best(2))


def test_exhaustive_mmax_zero():
    r = exhaustive_search(ProblemSpec(Linear(), m_max=0))
    assert r.best_design == DesignVector.zeros() and r.evaluations == 1


def test_exhaustive_budget_refusal():
    obj = Linear()
    with pytest.raises(BudgetExceeded) as info:
        exhaustive_search(ProblemSpec(obj, m_max=4), budget=1000)
    assert info.value.count == enumeration_size(ProblemSpec(obj, m_max=4))
    assert obj.calls == 0


def test_exhaustive_respects_bands():
    p = ProblemSpec(Linear(), m_max=3, bands=(Band(1, 0.0, 2.0),))
    r = exhaustive_search(p)
    assert r.best_design.active_pairs <= 1


def test_exhaustive_tie_keeps_first():
    class Flat:
        names = ("f",)

        def __call__(self, d):
            return ObjectiveVector(self.names, (0.0,))

    r = exhaustive_search(ProblemSpec(Flat(), m_max=2))
    assert r.best_design == DesignVector.zeros()


def test_band_validation():
    with pytest.raises(DomainError):
        Band(0, 1.0, 1.0)
    assert Band(0, 1.0, 1.0, closed=True).contains(1.0)
    assert not Band(0, 0.0, 1.0).contains(1.0)


def test_move_sets_respect_cardinality():
    p = ProblemSpec(Linear(), m_min=1, m_max=2)
    y = DesignVector.from_pairs([("Plac1", "tetR")]).y
    assert all(y[m[0]] == 0 for m in flip_moves(y, p))
    assert len(list(swap_moves(y))) == 31


def test_local_refine_quadratic():
    p = ProblemSpec(Linear(target=0.37), m_max=0, x_lower=(0.0,), x_upper=(1.0,))
    d = local_refine(DesignVector.zeros((0.9,)), p, RefineConfig(x_tol=1e-7))
    assert abs(d.x[0] - 0.37) < 1e-6


def test_local_refine_keeps_local_optimum():
    p = ProblemSpec(Linear(), m_max=2)
    best = exhaustive_search(p).best_design
    assert local_refine(best, p) == best


def test_local_refine_one_flip_from_toggle(perf_problem_m2, oracle_m2):
    start = DesignVector.from_pairs([("Plac1", "tetR")])
    d = local_refine(start, perf_problem_m2)
    assert d == oracle_m2.best_design


@pytest.mark.parametrize("solver", [tabu_search, scatter_search])
def test_solver_matches_synthetic_oracle(solver):
    p = ProblemSpec(Linear(), m_max=4)
    r = solver(p, seed=3)
    assert r.best_value == pytest.approx(_oracle_best(4))
    assert r.evaluations <= 5000


@pytest.mark.parametrize("solver", [tabu_search, scatter_search])
def test_solver_mmax1_matches_oracle(solver, perf_objective):
    p = ProblemSpec(perf_objective, m_max=1)
    oracle = exhaustive_search(p)
    r = solver(p, seed=0)
    assert r.best_value == oracle.best_value


@pytest.mark.parametrize("solver", [tabu_search, scatter_search])
def test_solver_reproducible(solver):
    p1 = ProblemSpec(Linear(), m_max=5, x_lower=(0.0,), x_upper=(1.0,))
    p2 = ProblemSpec(Linear(), m_max=5, x_lower=(0.0,), x_upper=(1.0,))
    a, b = solver(p1, seed=11), solver(p2, seed=11)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


@pytest.mark.parametrize("solver", [tabu_search, scatter_search])
def test_budget_and_monotone_curve(solver):
    p = ProblemSpec(Linear(), m_max=8, x_lower=(0.0,), x_upper=(1.0,))
    cfg = (TabuConfig if solver is tabu_search else ScatterConfig)(max_evals=300)
    r = solver(p, cfg, seed=5)
    assert r.evaluations <= 300 and r.stop_reason == "max_evals"
    vals = [v for _, v in r.convergence_curve]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert r.best_design.active_pairs <= 8


def test_refset_has_no_duplicate_wiring():
    sets = []
    p = ProblemSpec(Linear(), m_max=3)
    scatter_search(p, ScatterConfig(max_evals=2000), seed=2, observer=sets.append)
    assert sets
    for ref in sets:
        ys = [d.y for d in ref]
        assert len(ys) == len(set(ys))


def test_parallel_evaluation_is_deterministic():
    p1 = ProblemSpec(Linear(), m_max=3)
    p2 = ProblemSpec(Linear(), m_max=3)
    a = tabu_search(p1, TabuConfig(max_evals=800), seed=1)
    b = tabu_search(p2, TabuConfig(max_evals=800, workers=3), seed=1)
    assert a.to_dict() == b.to_dict()


def test_infeasible_never_reported_best():
    class OnlyBig:
        names = ("f",)

        def __call__(self, d):
            if d.active_pairs < 2:
                return ObjectiveVector.rejected(self.names, "too small")
            return ObjectiveVector(self.names, (-float(d.active_pairs),))

    r = tabu_search(ProblemSpec(OnlyBig(), m_max=3), seed=0)
    assert r.found and r.best_value == -3.0
    assert all(v < SENTINEL for _, v in r.convergence_curve)


def test_report_serialisation(tmp_path):
    r = tabu_search(ProblemSpec(Linear(), m_max=2), TabuConfig(max_evals=200), seed=0)
    data = json.loads(r.to_json(tmp_path / "r.json").read_text())
    assert "wall_time" not in data and data["best"]["y_bits"] == r.best_design.bits()
    lines = r.convergence_csv(tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "evals,best_primary"
    assert len(lines) == len(r.convergence_curve) + 1
