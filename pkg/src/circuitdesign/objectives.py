"""Design criteria computed from simulations, packaged as objective vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, IntegrationError, SteadyStateNotReached
from .model import (
    LACI,
    PARAM_INDEX,
    SPECIES,
    TETR,
    DesignVector,
    InducerCondition,
    KineticParameters,
)
from .simulator import (
    IntegratorConfig,
    StepResponse,
    Trajectory,
    induction_run,
    step_response,
)

SENTINEL = 1e9


@dataclass(frozen=True)
class ObjectiveVector:
    """Evaluated criteria of one design.

    Every criterion is minimised.  When ``feasible`` is False each value is
    replaced by :data:`SENTINEL`; whatever was computed before the design was
    rejected is kept in ``raw``.
    """

    names: tuple[str, ...]
    values: tuple[float, ...]
    feasible: bool = True
    raw: tuple[float, ...] | None = None
    reason: str = ""
    diagnostics: Mapping[str, float] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise DomainError("names and values differ in length")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.raw is None:
            object.__setattr__(self, "raw", self.values)
        if self.feasible and not all(math.isfinite(v) for v in self.values):
            raise DomainError("feasible objective vector with non-finite values")

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)

    def infeasible(self, reason: str) -> ObjectiveVector:
        """Copy of this vector marked infeasible, keeping the computed values in ``raw``."""
        return ObjectiveVector(self.names, (SENTINEL,) * len(self.names), False,
                               raw=self.raw, reason=reason, diagnostics=self.diagnostics)

    @classmethod
    def rejected(cls, names: Sequence[str], reason: str, **diagnostics) -> ObjectiveVector:
        names = tuple(names)
        return cls(names, (SENTINEL,) * len(names), False,
                   raw=(math.nan,) * len(names), reason=reason, diagnostics=diagnostics)

    def as_dict(self) -> dict:
        return {
            "names": list(self.names),
            "values": list(self.values),
            "feasible": self.feasible,
            "raw": list(self.raw),
            "reason": self.reason,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True)
class Protocol:
    """Simulation protocol constants for the design criteria.

    ``inducer_dose`` is applied alone (the other inducer at zero) in each of
    the two induction runs; ``t_cost`` is the common horizon of the cost
    integral; ``p_max`` bounds the adaptation precision deviation.
    """

    inducer_dose: float = 100.0
    t_cost: float = 500.0
    eps_floor: float = 1e-6
    p_max: float = 20.0

    def __post_init__(self):
        for name in ("inducer_dose", "t_cost", "eps_floor", "p_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"Protocol.{name} must be finite and > 0, got {v!r}")


def _contrast(high: float, low: float, eps_floor: float) -> float:
    # an unexpressed reporter scores a fully failed contrast
    if high < eps_floor:
        return -1.0
    return (high - low) / high


def performance_Z(ss_aTc, ss_IPTG, eps_floor: float = 1e-6) -> float:
    """Inducer-specific response score; 1 is a perfect switch.

    Each reporter's contrast is normalised by its induced (high) level:
    lacI should be high under aTc and low under IPTG, tetR the reverse.
    """
    a = np.asarray(getattr(ss_aTc, "as_array", lambda: ss_aTc)(), dtype=float)
    i = np.asarray(getattr(ss_IPTG, "as_array", lambda: ss_IPTG)(), dtype=float)
    lac = _contrast(a[LACI], i[LACI], eps_floor)
    tet = _contrast(i[TETR], a[TETR], eps_floor)
    return 0.5 * (lac + tet)


def is_dead(ss_aTc, ss_IPTG, eps_floor: float = 1e-6) -> bool:
    a = np.asarray(getattr(ss_aTc, "as_array", lambda: ss_aTc)(), dtype=float)
    i = np.asarray(getattr(ss_IPTG, "as_array", lambda: ss_IPTG)(), dtype=float)
    return a[LACI] < eps_floor and i[TETR] < eps_floor


def production_cost(traj_aTc: Trajectory, traj_IPTG: Trajectory) -> float:
    """Total production over both induction runs, read at their common final time."""
    t_a, t_i = traj_aTc.times[-1], traj_IPTG.times[-1]
    if not math.isclose(t_a, t_i, rel_tol=1e-12, abs_tol=1e-12):
        raise DomainError(f"trajectories end at different times ({t_a} vs {t_i})")
    return float(traj_aTc.production_integral[-1].sum() + traj_IPTG.production_integral[-1].sum())


def adaptation_metrics(resp: StepResponse) -> tuple[float, float]:
    """Sensitivity (peak minus baseline) and precision deviation (final minus baseline)."""
    return resp.peak - resp.baseline, resp.final - resp.baseline


class _TunableObjective:
    names: tuple[str, ...] = ()

    def __init__(self, params: KineticParameters | None = None, tunables: Sequence[str] = (),
                 protocol: Protocol | None = None, cfg: IntegratorConfig | None = None):
        self.params = params or KineticParameters()
        self.tunables = tuple(tunables)
        for name in self.tunables:
            if name not in PARAM_INDEX:
                raise DomainError(f"unknown tunable parameter {name!r}")
        self.protocol = protocol or Protocol()
        self.cfg = cfg or IntegratorConfig()
        self._k = self.params.as_array()
        self._tunable_idx = [PARAM_INDEX[n] for n in self.tunables]

    def kinetic_array(self, d: DesignVector) -> np.ndarray:
        if len(d.x) != len(self.tunables):
            raise DomainError(f"design carries {len(d.x)} tunables, expected {len(self.tunables)}")
        k = self._k.copy()
        for idx, v in zip(self._tunable_idx, d.x):
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"tunable value must be finite and > 0, got {v}")
            k[idx] = v
        return k

    def overrides(self, d: DesignVector) -> dict[str, float]:
        return dict(zip(self.tunables, d.x))


class PerformanceCostObjective(_TunableObjective):
    """Criteria ``(-Z, C)`` from two induction runs (IPTG alone, aTc alone).

    Designs whose runs fail to settle, whose clipping exceeds the integrator's
    limit, or whose reporters are both unexpressed are infeasible.
    """

    names = ("neg_Z", "cost")

    def __call__(self, d: DesignVector) -> ObjectiveVector:
        k = self.kinetic_array(d)
        Ym = d.matrix.entries.astype(np.float64)
        dose = self.protocol.inducer_dose
        runs = {}
        try:
            for label, u in (("IPTG", (dose, 0.0)), ("aTc", (0.0, dose))):
                runs[label] = induction_run(Ym, k, np.array(u), self.cfg, self.protocol.t_cost)
        except IntegrationError as exc:
            return ObjectiveVector.rejected(self.names, f"integration failed: {exc}")
        r_i, r_a = runs["IPTG"], runs["aTc"]
        clip = r_i.clip_mass + r_a.clip_mass
        diag = {"t_ss_IPTG": r_i.t_ss, "t_ss_aTc": r_a.t_ss,
                "clip_count": r_i.clip_count + r_a.clip_count, "clip_mass": clip}
        cost = float(r_i.production_at_mark.sum() + r_a.production_at_mark.sum())
        if not (r_i.converged and r_a.converged):
            return ObjectiveVector(self.names, (math.nan, cost), False, reason="no steady state",
                                   diagnostics=diag).infeasible("no steady state")
        eps = self.protocol.eps_floor
        z = performance_Z(r_a.steady_state, r_i.steady_state, eps)
        diag.update({
            "lacI_aTc": float(r_a.steady_state[LACI]), "lacI_IPTG": float(r_i.steady_state[LACI]),
            "tetR_aTc": float(r_a.steady_state[TETR]), "tetR_IPTG": float(r_i.steady_state[TETR]),
        })
        out = ObjectiveVector(self.names, (-z, cost), True, diagnostics=diag)
        if clip > self.cfg.clip_limit:
            return out.infeasible("excessive negative clipping")
        if is_dead(r_a.steady_state, r_i.steady_state, eps):
            return out.infeasible("no reporter expressed")
        return out


class AdaptationObjective(_TunableObjective):
    """Criteria ``(-S, |P|)`` of the output's response to a sustained inducer step.

    The step applies aTc at the protocol dose after equilibration without
    inducers.  Raw signed precision is kept in the diagnostics.
    """

    names = ("neg_S", "abs_P")

    def __init__(self, *args, output: str = "lacI", **kwargs):
        super().__init__(*args, **kwargs)
        if output not in SPECIES:
            raise DomainError(f"unknown output species {output!r}")
        self.output = output

    def response(self, d: DesignVector) -> StepResponse:
        return step_response(d.matrix, self.overrides(d),
                             InducerCondition(IPTG=0.0, aTc=self.protocol.inducer_dose),
                             self.output, self.cfg, params=self.params)

    def __call__(self, d: DesignVector) -> ObjectiveVector:
        self.kinetic_array(d)
        try:
            resp = self.response(d)
        except (IntegrationError, SteadyStateNotReached) as exc:
            return ObjectiveVector.rejected(self.names, str(exc))
        s, p = adaptation_metrics(resp)
        diag = {"S": s, "P": p, "baseline": resp.baseline, "peak": resp.peak,
                "t_peak": resp.t_peak, "final": resp.final, "t_final": resp.t_final,
                "clip_count": resp.trajectory.clip_count, "clip_mass": resp.trajectory.clip_mass}
        out = ObjectiveVector(self.names, (-s, abs(p)), True, diagnostics=diag)
        if not resp.converged:
            return out.infeasible("no post-step steady state")
        if resp.trajectory.clip_mass > self.cfg.clip_limit:
            return out.infeasible("excessive negative clipping")
        return out
