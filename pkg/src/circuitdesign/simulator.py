"""Trajectory integration, steady-state search and step-response experiments."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import _dopri
from .errors import DomainError, IntegrationError, SteadyStateNotReached
from .model import (
    N_SPECIES,
    SPECIES,
    CircuitState,
    InducerCondition,
    KineticParameters,
    as_matrix,
)

TRAJECTORY_HEADER = ("t",) + SPECIES


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 50.0
    t_max: float = 10000.0
    ss_tol: float = 1e-9

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "t_max", "ss_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"IntegratorConfig.{name} must be finite and > 0, got {v!r}")

    @property
    def clip_limit(self) -> float:
        """Cumulative clipped mass above which a run is considered unreliable."""
        return 100.0 * self.abs_tol


@dataclass
class Trajectory:
    """Accepted integration steps of one run.

    ``production_integral[:, j]`` is the running integral of ``V_j`` (columns in
    transcript order tetR, lacI, cI, araC); ``loss_integral`` is the running
    integral of degradation plus net binding for each species.
    """

    times: np.ndarray
    states: np.ndarray
    production_integral: np.ndarray
    loss_integral: np.ndarray
    clip_count: int = 0
    clip_mass: float = 0.0

    @classmethod
    def _from_rows(cls, rows, n_clip, clip_mass):
        ns, nv = _dopri.NS, _dopri.NV
        return cls(
            times=rows[:, 0].copy(),
            states=rows[:, 1:1 + ns].copy(),
            production_integral=rows[:, 1 + ns:1 + ns + nv].copy(),
            loss_integral=rows[:, 1 + ns + nv:].copy(),
            clip_count=int(n_clip),
            clip_mass=float(clip_mass),
        )

    @property
    def final_state(self) -> CircuitState:
        return CircuitState.from_array(self.states[-1])

    def species(self, name: str) -> np.ndarray:
        return self.states[:, SPECIES.index(name)]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRAJECTORY_HEADER)
            for t, z in zip(self.times, self.states):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in z])
        return path


@dataclass
class StepResponse:
    baseline: float
    peak: float
    t_peak: float
    final: float
    t_final: float
    converged: bool
    output: str
    trajectory: Trajectory
    baseline_state: CircuitState = field(default_factory=CircuitState)


@dataclass
class InductionResult:
    """Outcome of one induction run from the zero state (see :func:`induction_run`)."""

    steady_state: np.ndarray | None
    t_ss: float
    production_at_mark: np.ndarray
    clip_count: int
    clip_mass: float
    residual: float

    @property
    def converged(self) -> bool:
        return self.steady_state is not None


def _params(params, overrides) -> np.ndarray:
    base = params if params is not None else KineticParameters()
    return base.with_overrides(overrides).as_array()


def _z0(z0) -> np.ndarray:
    if z0 is None:
        return np.zeros(N_SPECIES)
    z = z0.as_array() if isinstance(z0, CircuitState) else np.asarray(z0, dtype=np.float64)
    if z.shape != (N_SPECIES,):
        raise DomainError(f"initial state must have {N_SPECIES} entries")
    if not np.all(np.isfinite(z)) or np.any(z < 0):
        raise DomainError("initial state must be finite and nonnegative")
    return z


def _run(z0, Y, k, u, t_end, cfg, *, t_mark=0.0, stop_at_ss=False, record=False,
         out_idx=-1, phase=None):
    out = _dopri.integrate_kernel(
        z0, Y, k, u, float(t_end), float(t_mark), cfg.rel_tol, cfg.abs_tol, cfg.max_step,
        cfg.ss_tol, stop_at_ss, record, out_idx)
    status, t = out[0], out[1]
    if status == _dopri.STATUS_UNDERFLOW:
        raise IntegrationError("step size underflow", t, phase)
    if status == _dopri.STATUS_NONFINITE:
        raise IntegrationError("non-finite state", t, phase)
    return out


def integrate(Y, overrides: Mapping[str, float] | None = None,
              inducers: InducerCondition | None = None, z0=None, horizon: float = 100.0,
              cfg: IntegratorConfig | None = None, *,
              params: KineticParameters | None = None) -> Trajectory:
    """Integrate the circuit from ``z0`` over ``[0, horizon]``, recording every accepted step."""
    if not horizon > 0:
        raise DomainError("horizon must be > 0")
    cfg = cfg or IntegratorConfig()
    Ym = as_matrix(Y).entries.astype(np.float64)
    u = (inducers or InducerCondition()).as_array()
    out = _run(_z0(z0), Ym, _params(params, overrides), u, horizon, cfg, record=True)
    return Trajectory._from_rows(out[10], out[6], out[7])


def find_steady_state(Y, overrides: Mapping[str, float] | None = None,
                      inducers: InducerCondition | None = None, z0=None,
                      cfg: IntegratorConfig | None = None, *,
                      params: KineticParameters | None = None) -> tuple[CircuitState, float]:
    """First accepted state whose residual falls below ``cfg.ss_tol``.

    Raises :class:`SteadyStateNotReached` if none is found by ``cfg.t_max``.
    """
    cfg = cfg or IntegratorConfig()
    Ym = as_matrix(Y).entries.astype(np.float64)
    u = (inducers or InducerCondition()).as_array()
    out = _run(_z0(z0), Ym, _params(params, overrides), u, cfg.t_max, cfg, stop_at_ss=True)
    t_ss = out[3]
    if t_ss < 0:
        raise SteadyStateNotReached(cfg.t_max, out[12])
    return CircuitState.from_array(out[4][:N_SPECIES]), float(t_ss)


def induction_run(Ym: np.ndarray, k: np.ndarray, inducers: np.ndarray,
                  cfg: IntegratorConfig, t_cost: float) -> InductionResult:
    """Run from the zero state until a steady state is found and ``t_cost`` is passed.

    Array-level entry point used by the objective evaluators.  Production
    integrals are reported at exactly ``t_cost``; a run that never settles
    within ``cfg.t_max`` returns ``steady_state=None``.
    """
    t_end = max(cfg.t_max, t_cost)
    out = _run(np.zeros(N_SPECIES), Ym, k, inducers, t_end, cfg, t_mark=t_cost, stop_at_ss=True)
    t_ss = float(out[3])
    ss = out[4][:N_SPECIES].copy() if t_ss >= 0 else None
    return InductionResult(
        steady_state=ss,
        t_ss=t_ss,
        production_at_mark=out[5][_dopri.NS:_dopri.NS + _dopri.NV].copy(),
        clip_count=int(out[6]),
        clip_mass=float(out[7]),
        residual=float(out[12]),
    )


def step_response(Y, overrides: Mapping[str, float] | None = None,
                  step_inducers: InducerCondition | None = None, output: str = "lacI",
                  cfg: IntegratorConfig | None = None, *,
                  params: KineticParameters | None = None) -> StepResponse:
    """Equilibrate without inducers, then apply ``step_inducers`` as a sustained step.

    The baseline is the pre-step steady level of ``output``; the peak is the
    maximum over the post-step trajectory (refined between accepted steps) and
    the final level is taken at the post-step steady state, or at ``t_max``
    when none is reached (``converged`` is then False).
    """
    if output not in SPECIES:
        raise DomainError(f"unknown output species {output!r}")
    cfg = cfg or IntegratorConfig()
    Ym = as_matrix(Y).entries.astype(np.float64)
    k = _params(params, overrides)
    idx = SPECIES.index(output)

    pre = _run(np.zeros(N_SPECIES), Ym, k, np.zeros(2), cfg.t_max, cfg,
               stop_at_ss=True, phase="pre-equilibration")
    if pre[3] < 0:
        raise SteadyStateNotReached(cfg.t_max, pre[12], phase="pre-equilibration")
    z_base = pre[4][:N_SPECIES].copy()

    u = (step_inducers or InducerCondition()).as_array()
    post = _run(z_base, Ym, k, u, cfg.t_max, cfg, stop_at_ss=True, record=True,
                out_idx=idx, phase="step")
    traj = Trajectory._from_rows(post[10], post[6] + pre[6], post[7] + pre[7])
    converged = post[3] >= 0
    if converged:
        final, t_final = float(post[4][idx]), float(post[3])
    else:
        final, t_final = float(post[2][idx]), float(post[1])
    return StepResponse(
        baseline=float(z_base[idx]),
        peak=float(post[8]),
        t_peak=float(post[9]),
        final=final,
        t_final=t_final,
        converged=bool(converged),
        output=output,
        trajectory=traj,
        baseline_state=CircuitState.from_array(z_base),
    )
