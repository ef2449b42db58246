import numpy as np
import pytest

from circuitdesign.errors import DomainError, SteadyStateNotReached
from circuitdesign.model import (
    SPECIES,
    TRANSCRIPT_SPECIES,
    InducerCondition,
    KineticParameters,
    SuperstructureMatrix,
    eval_rhs,
)
from circuitdesign.simulator import (
    TRAJECTORY_HEADER,
    IntegratorConfig,
    find_steady_state,
    integrate,
    step_response,
)

K = KineticParameters()
TOGGLE = SuperstructureMatrix.from_pairs([("Plac1", "tetR"), ("Ptet2", "lacI")])


def test_analytic_decay():
    tr = integrate(np.zeros((8, 4)), z0=[1, 0, 0, 0, 0, 0], horizon=100.0)
    exact = np.exp(-0.0346 * tr.times)
    assert np.max(np.abs(tr.species("lacI") - exact) / exact) < 1e-6
    assert tr.times[-1] == 100.0


def test_constant_production_integral():
    # no lacI present, so Plac1 fires at its maximal rate throughout
    Y = SuperstructureMatrix.from_pairs([("Plac1", "tetR")])
    tr = integrate(Y, horizon=200.0)
    assert tr.production_integral[-1, 0] == pytest.approx(K.alpha_lac * 200.0, rel=1e-9)
    tet = K.alpha_lac / K.K_degtetR * (1 - np.exp(-K.K_degtetR * 200.0))
    assert tr.species("tetR")[-1] == pytest.approx(tet, rel=1e-7)


def test_mass_balance_of_integrals():
    tr = integrate(TOGGLE, inducers=InducerCondition(IPTG=100.0), horizon=300.0)
    prod = np.zeros(6)
    for j, s in enumerate(TRANSCRIPT_SPECIES):
        prod[s] += tr.production_integral[-1, j]
    lhs = tr.states[-1] - tr.states[0]
    np.testing.assert_allclose(lhs, prod - tr.loss_integral[-1], atol=1e-6)


def test_steady_state_certificate():
    cfg = IntegratorConfig()
    z, t = find_steady_state(TOGGLE, cfg=cfg)
    arr = z.as_array()
    res = np.max(np.abs(eval_rhs(arr, TOGGLE))) / (1 + np.max(np.abs(arr)))
    assert res < cfg.ss_tol and t > 0


def test_steady_state_unreached_is_reported():
    with pytest.raises(SteadyStateNotReached):
        find_steady_state(TOGGLE, cfg=IntegratorConfig(t_max=1.0))


def test_zero_circuit_stays_zero():
    tr = integrate(np.zeros((8, 4)), horizon=50.0)
    assert np.all(tr.states == 0.0) and tr.clip_count == 0


def test_invalid_inputs():
    with pytest.raises(DomainError):
        integrate(TOGGLE, z0=[-1, 0, 0, 0, 0, 0])
    with pytest.raises(DomainError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(DomainError):
        step_response(TOGGLE, output="GFP")


def test_step_response_monotone_switch():
    resp = step_response(TOGGLE, step_inducers=InducerCondition(aTc=100.0))
    assert resp.converged
    # aTc sequesters tetR, releasing lacI to its high level without overshoot
    assert resp.final > resp.baseline
    assert resp.peak >= resp.final - 1e-9
    assert resp.peak == pytest.approx(resp.final, rel=1e-6)


def test_trajectory_csv(tmp_path):
    tr = integrate(TOGGLE, horizon=10.0)
    path = tr.to_csv(tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(TRAJECTORY_HEADER) == ["t", *SPECIES]
    assert all(len(line.split(",")) == 7 for line in lines)
    assert len(lines) == len(tr.times) + 1


def test_deterministic():
    a = integrate(TOGGLE, horizon=100.0)
    b = integrate(TOGGLE, horizon=100.0)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)
