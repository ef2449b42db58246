"""Promoter/transcript library and the six-species circuit ODE model.

The superstructure is an 8x4 binary matrix ``Y``: rows are promoters, columns
are transcripts, and ``Y[i, j] = 1`` switches on production of transcript
``j`` from promoter ``i``.  The state vector always uses the species order in
:data:`SPECIES`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .errors import DomainError

PROMOTERS = ("Plac1", "Plac2", "Plac3", "Plac4", "Plambda", "Ptet1", "Ptet2", "Para")
TRANSCRIPTS = ("tetR", "lacI", "cI", "araC")
SPECIES = ("lacI", "lacIIPTG", "tetR", "tetRaTc", "cI", "araC")

N_PROMOTERS = len(PROMOTERS)
N_TRANSCRIPTS = len(TRANSCRIPTS)
N_PAIRS = N_PROMOTERS * N_TRANSCRIPTS
N_SPECIES = len(SPECIES)

LACI, LACI_IPTG, TETR, TETR_ATC, CI, ARAC = range(N_SPECIES)
# state index of the protein encoded by each transcript column
TRANSCRIPT_SPECIES = np.array([TETR, LACI, CI, ARAC], dtype=np.int64)

_PROMOTER_ALIASES = {"Plambda": 4, "Pλ": 4, "Plam": 4}


@dataclass(frozen=True)
class KineticParameters:
    """Rate, affinity and degradation constants and their default values."""

    alpha_lac: float = 0.215
    alpha_tet: float = 1.215
    alpha_lambda: float = 2.92
    alpha_ara: float = 1.215
    K_lambda: float = 0.33
    K_tet1: float = 0.014
    K_tet2: float = 1.4
    K_lac1: float = 10.0
    K_lac2: float = 0.01
    K_lac3: float = 0.001
    K_lac4: float = 0.00001
    K_araC: float = 2.5
    K_deglacI: float = 0.0346
    K_degtetR: float = 0.0346
    K_degcI: float = 0.0693
    K_degaraC: float = 0.0115
    K_degcpx: float = 0.0693
    Kf: float = 0.05
    Kb: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"parameter {f.name} must be finite and > 0, got {v!r}")

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.names()], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def with_overrides(self, overrides: Mapping[str, float] | None) -> KineticParameters:
        if not overrides:
            return self
        unknown = set(overrides) - set(self.names())
        if unknown:
            raise DomainError(f"unknown parameter name(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    @classmethod
    def from_json(cls, path: str | Path) -> KineticParameters:
        """Load parameter overrides from a flat JSON object keyed by symbol name."""
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise DomainError(f"{path}: expected a JSON object of parameter overrides")
        return cls().with_overrides(data)


PARAM_INDEX = {name: i for i, name in enumerate(KineticParameters.names())}


@dataclass(frozen=True)
class InducerCondition:
    IPTG: float = 0.0
    aTc: float = 0.0

    def __post_init__(self):
        for name in ("IPTG", "aTc"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"inducer {name} must be finite and >= 0, got {v!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.IPTG, self.aTc], dtype=np.float64)


@dataclass(frozen=True)
class CircuitState:
    lacI: float = 0.0
    lacIIPTG: float = 0.0
    tetR: float = 0.0
    tetRaTc: float = 0.0
    cI: float = 0.0
    araC: float = 0.0

    @classmethod
    def from_array(cls, z: Sequence[float]) -> CircuitState:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (N_SPECIES,):
            raise DomainError(f"state must have {N_SPECIES} entries, got shape {z.shape}")
        return cls(*(float(v) for v in z))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, s) for s in SPECIES], dtype=np.float64)


class SuperstructureMatrix:
    """The 8x4 promoter-by-transcript activation matrix.

    ``flatten`` stacks columns, so bit ``j * 8 + i`` of the design vector is
    entry ``(i, j)`` with zero-based indices.
    """

    __slots__ = ("_bits",)

    def __init__(self, entries=None):
        if entries is None:
            bits = np.zeros((N_PROMOTERS, N_TRANSCRIPTS), dtype=np.uint8)
        else:
            arr = np.asarray(entries)
            if arr.shape != (N_PROMOTERS, N_TRANSCRIPTS):
                raise DomainError(f"superstructure must be 8x4, got shape {arr.shape}")
            if not np.all((arr == 0) | (arr == 1)):
                raise DomainError("superstructure entries must be 0 or 1")
            bits = arr.astype(np.uint8)
        bits.setflags(write=False)
        self._bits = bits

    @classmethod
    def from_pairs(cls, pairs) -> SuperstructureMatrix:
        """Build from ``(promoter, transcript)`` pairs given by name or zero-based index."""
        bits = np.zeros((N_PROMOTERS, N_TRANSCRIPTS), dtype=np.uint8)
        for p, t in pairs:
            bits[promoter_index(p), transcript_index(t)] = 1
        return cls(bits)

    @classmethod
    def unflatten(cls, y) -> SuperstructureMatrix:
        y = np.asarray(y)
        if y.shape != (N_PAIRS,):
            raise DomainError(f"design bit vector must have length {N_PAIRS}, got {y.shape}")
        return cls(y.reshape((N_PROMOTERS, N_TRANSCRIPTS), order="F"))

    def flatten(self) -> np.ndarray:
        return self._bits.flatten(order="F")

    @property
    def entries(self) -> np.ndarray:
        return self._bits

    def pairs(self) -> list[tuple[str, str]]:
        rows, cols = np.nonzero(self._bits.T)
        # column-major order, matching flatten()
        return [(PROMOTERS[i], TRANSCRIPTS[j]) for j, i in zip(rows, cols)]

    def __eq__(self, other):
        return isinstance(other, SuperstructureMatrix) and np.array_equal(self._bits, other._bits)

    def __hash__(self):
        return hash(self._bits.tobytes())

    def __repr__(self):
        return f"SuperstructureMatrix(pairs={self.pairs()})"


def promoter_index(p) -> int:
    if isinstance(p, (int, np.integer)):
        if not 0 <= p < N_PROMOTERS:
            raise DomainError(f"promoter index {p} out of range")
        return int(p)
    if p in _PROMOTER_ALIASES:
        return _PROMOTER_ALIASES[p]
    try:
        return PROMOTERS.index(p)
    except ValueError:
        raise DomainError(f"unknown promoter {p!r}") from None


def transcript_index(t) -> int:
    if isinstance(t, (int, np.integer)):
        if not 0 <= t < N_TRANSCRIPTS:
            raise DomainError(f"transcript index {t} out of range")
        return int(t)
    for j, name in enumerate(TRANSCRIPTS):
        if t.lower() == name.lower():
            return j
    raise DomainError(f"unknown transcript {t!r}")


def as_matrix(Y) -> SuperstructureMatrix:
    if isinstance(Y, SuperstructureMatrix):
        return Y
    arr = np.asarray(Y)
    if arr.shape == (N_PAIRS,):
        return SuperstructureMatrix.unflatten(arr)
    return SuperstructureMatrix(arr)


def active_pair_count(Y) -> int:
    return int(as_matrix(Y).entries.sum())


def num_configurations(p: int, M: int) -> int:
    """Number of circuits with exactly ``M`` of ``p`` pairs active (exact binomial)."""
    if p < 0 or not 0 <= M <= p:
        raise DomainError(f"need 0 <= M <= p, got p={p}, M={M}")
    return math.comb(p, M)


# -- compiled kernels --------------------------------------------------------
# Parameter vector layout follows KineticParameters field order.

@njit(cache=True, nogil=True)
def _promoter_activity(z, k, out):
    lac = z[0] ** 4
    out[0] = k[0] / (1.0 + k[7] * lac)
    out[1] = k[0] / (1.0 + k[8] * lac)
    out[2] = k[0] / (1.0 + k[9] * lac)
    out[3] = k[0] / (1.0 + k[10] * lac)
    out[4] = k[2] / (1.0 + k[4] * z[4] * z[4])
    tet = z[2] * z[2]
    out[5] = k[1] / (1.0 + k[5] * tet)
    out[6] = k[1] / (1.0 + k[6] * tet)
    out[7] = k[3] / (1.0 + k[11] * z[5] * z[5])


@njit(cache=True, nogil=True)
def _production(z, Y, k, act, V):
    _promoter_activity(z, k, act)
    for j in range(4):
        s = 0.0
        for i in range(8):
            if Y[i, j] != 0.0:
                s += Y[i, j] * act[i]
        V[j] = s


@njit(cache=True, nogil=True)
def _rhs(z, Y, k, inducers, act, V, loss, dz):
    """Fill ``V`` (production), ``loss`` (removal net of binding) and ``dz = gain - loss``."""
    _production(z, Y, k, act, V)
    iptg = inducers[0]
    atc = inducers[1]
    kf = k[17]
    kb = k[18]
    bind_lac = kf * z[0] * iptg - kb * z[1]
    bind_tet = kf * z[2] * atc - kb * z[3]
    loss[0] = bind_lac + k[12] * z[0]
    loss[1] = -bind_lac + k[16] * z[1]
    loss[2] = bind_tet + k[13] * z[2]
    loss[3] = -bind_tet + k[16] * z[3]
    loss[4] = k[14] * z[4]
    loss[5] = k[15] * z[5]
    dz[0] = V[1] - loss[0]
    dz[1] = -loss[1]
    dz[2] = V[0] - loss[2]
    dz[3] = -loss[3]
    dz[4] = V[2] - loss[4]
    dz[5] = V[3] - loss[5]


def _state_array(state) -> np.ndarray:
    if isinstance(state, CircuitState):
        z = state.as_array()
    else:
        z = np.asarray(state, dtype=np.float64)
        if z.shape != (N_SPECIES,):
            raise DomainError(f"state must have {N_SPECIES} entries, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise DomainError("state contains non-finite values")
    return z


def production_rates(state, Y, params: KineticParameters | None = None) -> np.ndarray:
    """Per-transcript production rates ``V_j`` in column order (tetR, lacI, cI, araC)."""
    z = _state_array(state)
    k = (params or KineticParameters()).as_array()
    V = np.zeros(N_TRANSCRIPTS)
    _production(z, as_matrix(Y).entries.astype(np.float64), k, np.empty(N_PROMOTERS), V)
    return V


def eval_rhs(state, Y, params: KineticParameters | None = None,
             inducers: InducerCondition | None = None) -> np.ndarray:
    """Time derivative of the six species (order :data:`SPECIES`)."""
    z = _state_array(state)
    k = (params or KineticParameters()).as_array()
    u = (inducers or InducerCondition()).as_array()
    dz = np.empty(N_SPECIES)
    _rhs(z, as_matrix(Y).entries.astype(np.float64), k, u,
         np.empty(N_PROMOTERS), np.empty(N_TRANSCRIPTS), np.empty(N_SPECIES), dz)
    return dz


@dataclass(frozen=True)
class DesignVector:
    """One candidate circuit: the flattened superstructure ``y`` plus tunables ``x``.

    Both parts are stored as tuples so designs are hashable and compare by value.
    """

    y: tuple[int, ...]
    x: tuple[float, ...] = ()

    def __post_init__(self):
        y = tuple(int(b) for b in self.y)
        if len(y) != N_PAIRS or any(b not in (0, 1) for b in y):
            raise DomainError(f"y must be {N_PAIRS} bits in {{0, 1}}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))

    @classmethod
    def zeros(cls, x=()) -> DesignVector:
        return cls((0,) * N_PAIRS, tuple(x))

    @classmethod
    def from_pairs(cls, pairs, x=()) -> DesignVector:
        return cls(tuple(SuperstructureMatrix.from_pairs(pairs).flatten()), tuple(x))

    @classmethod
    def from_matrix(cls, Y, x=()) -> DesignVector:
        return cls(tuple(as_matrix(Y).flatten()), tuple(x))

    @property
    def matrix(self) -> SuperstructureMatrix:
        return SuperstructureMatrix.unflatten(np.array(self.y, dtype=np.uint8))

    @property
    def active_pairs(self) -> int:
        return sum(self.y)

    def bits(self) -> str:
        return "".join(str(b) for b in self.y)

    def key(self, quantum: float = 1e-9) -> tuple:
        return self.y, tuple(round(v / quantum) for v in self.x)

    def with_y(self, y) -> DesignVector:
        return DesignVector(tuple(y), self.x)

    def with_x(self, x) -> DesignVector:
        return DesignVector(self.y, tuple(x))

    def check_bounds(self, lower, upper) -> None:
        if len(self.x) != len(lower):
            raise DomainError(f"design has {len(self.x)} tunables, problem declares {len(lower)}")
        for v, lo, hi in zip(self.x, lower, upper):
            if not lo <= v <= hi:
                raise DomainError(f"tunable value {v} outside [{lo}, {hi}]")
