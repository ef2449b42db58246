import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circuitdesign.errors import DomainError
from circuitdesign.model import (
    N_PAIRS,
    PROMOTERS,
    SPECIES,
    TRANSCRIPTS,
    CircuitState,
    DesignVector,
    InducerCondition,
    KineticParameters,
    SuperstructureMatrix,
    active_pair_count,
    eval_rhs,
    num_configurations,
    production_rates,
)

K = KineticParameters()


def test_default_parameters_positive_and_ordered():
    names = KineticParameters.names()
    assert names[0] == "alpha_lac" and names[-1] == "Kb"
    assert np.all(K.as_array() > 0)
    assert K.as_dict()["K_deglacI"] == pytest.approx(0.0346)


def test_overrides_and_validation():
    k2 = K.with_overrides({"alpha_tet": 2.5})
    assert k2.alpha_tet == 2.5 and K.alpha_tet != 2.5
    with pytest.raises(DomainError):
        K.with_overrides({"nope": 1.0})
    with pytest.raises(DomainError):
        K.with_overrides({"Kf": -1.0})


def test_flatten_is_column_major():
    Y = SuperstructureMatrix.from_pairs([("Ptet2", "lacI")])
    y = Y.flatten()
    assert y.shape == (N_PAIRS,)
    assert np.flatnonzero(y).tolist() == [1 * 8 + 6]
    assert SuperstructureMatrix.unflatten(y) == Y
    assert Y.pairs() == [("Ptet2", "lacI")]


@given(st.lists(st.integers(0, 1), min_size=N_PAIRS, max_size=N_PAIRS))
def test_flatten_roundtrip(bits):
    Y = SuperstructureMatrix.unflatten(np.array(bits))
    assert Y.flatten().tolist() == bits
    assert active_pair_count(Y) == sum(bits)
    assert DesignVector.from_matrix(Y).y == tuple(bits)


def test_bad_matrix_rejected():
    with pytest.raises(DomainError):
        SuperstructureMatrix(np.full((8, 4), 2))
    with pytest.raises(DomainError):
        SuperstructureMatrix(np.zeros((4, 8)))
    with pytest.raises(DomainError):
        DesignVector((0,) * 31)


def test_num_configurations_identities():
    assert num_configurations(32, 2) == 496
    assert num_configurations(32, 0) == 1
    for p in range(0, 40):
        assert sum(num_configurations(p, m) for m in range(p + 1)) == 2**p
        for m in range(p + 1):
            assert num_configurations(p, m) == num_configurations(p, p - m)
    with pytest.raises(DomainError):
        num_configurations(32, 33)


def test_zero_circuit_only_decays():
    z = np.array([1.0, 0.0, 3.0, 0.0, 5.0, 6.0])
    dz = eval_rhs(z, np.zeros((8, 4)))
    assert np.all(production_rates(z, np.zeros((8, 4))) == 0)
    # free proteins only decay when no complex or inducer is present
    assert dz[SPECIES.index("lacI")] == pytest.approx(-K.K_deglacI * 1.0)
    assert dz[SPECIES.index("cI")] == pytest.approx(-K.K_degcI * 5.0)


def test_promoter_repression_shapes():
    Y = SuperstructureMatrix.from_pairs([("Ptet1", "lacI")])
    free = production_rates(np.zeros(6), Y)[TRANSCRIPTS.index("lacI")]
    assert free == pytest.approx(K.alpha_tet)
    z = np.zeros(6)
    z[SPECIES.index("tetR")] = 3.0
    rep = production_rates(z, Y)[TRANSCRIPTS.index("lacI")]
    assert rep == pytest.approx(K.alpha_tet / (1 + K.K_tet1 * 9.0))


def test_inducer_binding_conserves_protein():
    z = CircuitState.from_array([2.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    dz = eval_rhs(z, np.zeros((8, 4)), inducers=InducerCondition(IPTG=100.0, aTc=0.0))
    bind = K.Kf * 2.0 * 100.0
    assert dz[0] == pytest.approx(-K.K_deglacI * 2.0 - bind)
    assert dz[1] == pytest.approx(bind)


def test_nonfinite_state_rejected():
    with pytest.raises(DomainError):
        eval_rhs([math.nan, 0, 0, 0, 0, 0], np.zeros((8, 4)))
    with pytest.raises(DomainError):
        InducerCondition(IPTG=-1.0)


def test_design_vector_helpers():
    d = DesignVector.from_pairs([("Plac1", "tetR"), ("Ptet2", "lacI")], (1.5,))
    assert d.active_pairs == 2
    assert set(d.matrix.pairs()) == {("Plac1", "tetR"), ("Ptet2", "lacI")}
    assert d.key() == DesignVector(d.y, (1.5 + 1e-13,)).key()
    with pytest.raises(DomainError):
        d.check_bounds((2.0,), (3.0,))
    assert len(PROMOTERS) * len(TRANSCRIPTS) == N_PAIRS
