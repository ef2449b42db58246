"""Experiment configuration and the runners behind the command line."""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .errors import DomainError, EmptyFrontError, IntegrationError, SteadyStateNotReached
from .model import (
    PARAM_INDEX,
    DesignVector,
    InducerCondition,
    KineticParameters,
    SuperstructureMatrix,
    num_configurations,
)
from .objectives import AdaptationObjective, PerformanceCostObjective, Protocol
from .pareto import ParetoFront, epsilon_constraint_front, solve
from .simulator import IntegratorConfig, integrate
from .solvers import SOLVER_CONFIGS, Band, ProblemSpec, SolverReport

KINDS = ("simulate", "optimize", "pareto", "adapt", "census")
SEEDED_KINDS = ("optimize", "pareto", "adapt")
OBJECTIVES = ("performance", "adaptation")


class ConfigError(DomainError):
    """Invalid experiment configuration; ``line`` points into the source file when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        loc = source or "<config>"
        if line is not None:
            loc = f"{loc}:{line}"
        super().__init__(f"{loc}: {message}")
        self.line = line


@dataclass
class SolverSettings:
    name: str = "scatter"
    max_evals: int = 5000
    max_time: float | None = None
    options: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    """One experiment, loaded from a JSON document.

    Missing keys take the defaults below.  ``tunables`` maps parameter names to
    ``[lower, upper]`` search bounds; ``parameters`` overrides kinetic defaults.
    """

    kind: str
    seeds: list[int] | None = None
    output: str = "results"
    workers: int = 1
    parameters: dict[str, float] = field(default_factory=dict)
    protocol: dict[str, float] = field(default_factory=dict)
    integrator: dict[str, float] = field(default_factory=dict)
    objective: str | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)
    m_min: int = 0
    m_max: int | None = None
    tunables: dict[str, list[float]] = field(default_factory=dict)
    eps_step: float | None = None
    # optimize: 0 minimises the first criterion, 1 the second (among designs with J1 < 0)
    primary: int = 0
    # simulate
    pairs: list[list[str]] = field(default_factory=list)
    inducers: dict[str, float] = field(default_factory=dict)
    z0: list[float] | None = None
    horizon: float = 1000.0
    # census
    p: int = 32

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict, text: str | None = None, source: str | None = None,
                  kind: str | None = None) -> ExperimentConfig:
        return _parse(data, text, source, kind)

    @classmethod
    def load(cls, path, kind: str | None = None) -> ExperimentConfig:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno,
                              str(path)) from None
        return _parse(data, text, str(path), kind)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    # resolved settings -------------------------------------------------

    def resolved_objective(self) -> str:
        return self.objective or ("adaptation" if self.kind == "adapt" else "performance")

    def resolved_m_max(self) -> int:
        if self.m_max is not None:
            return self.m_max
        return 6 if self.kind == "adapt" else 2

    def resolved_step(self) -> float:
        if self.eps_step is not None:
            return self.eps_step
        return 5.0 if self.resolved_objective() == "adaptation" else 50.0

    def resolved_tunables(self) -> dict[str, list[float]]:
        if self.tunables or self.resolved_objective() != "adaptation":
            return self.tunables
        return {"alpha_tet": [0.1, 10.0]}


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _parse(data: Any, text: str | None, source: str | None, kind: str | None) -> ExperimentConfig:
    def err(msg: str, key: str | None = None):
        return ConfigError(msg, _line_of(text, key) if key else None, source)

    if not isinstance(data, dict):
        raise err("top level must be a JSON object")
    data = dict(data)
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for k in data:
        if k not in names:
            raise err(f"unknown key {k!r}", k)
    if kind is not None:
        if "kind" in data and data["kind"] != kind:
            raise err(f"config kind {data['kind']!r} does not match subcommand {kind!r}", "kind")
        data["kind"] = kind
    if data.get("kind") not in KINDS:
        raise err(f"kind must be one of {', '.join(KINDS)}", "kind")

    def number(key, value, *, positive=False, integer=False):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if integer:
            ok = ok and float(value).is_integer()
        if not ok or not math.isfinite(value) or (positive and value <= 0):
            what = "an integer" if integer else "a number"
            raise err(f"{key} must be {what}{' > 0' if positive else ''}, got {value!r}", key)
        return int(value) if integer else float(value)

    solver = data.get("solver", {})
    if isinstance(solver, str):
        solver = {"name": solver}
    if not isinstance(solver, dict):
        raise err("solver must be an object or a name", "solver")
    for k in solver:
        if k not in ("name", "max_evals", "max_time", "options"):
            raise err(f"unknown solver key {k!r}", k)
    s = SolverSettings(**solver)
    if s.name not in ("exhaustive", *SOLVER_CONFIGS):
        raise err(f"unknown solver {s.name!r}", "name")
    s.max_evals = number("max_evals", s.max_evals, positive=True, integer=True)
    if s.max_time is not None:
        s.max_time = number("max_time", s.max_time, positive=True)
    if s.name in SOLVER_CONFIGS:
        known = {f.name for f in dataclasses.fields(SOLVER_CONFIGS[s.name])}
        for k in s.options:
            if k not in known or k in ("max_evals", "max_time", "workers", "refine_cfg"):
                raise err(f"unknown {s.name} option {k!r}", k)
    data["solver"] = s

    for k in ("parameters", "protocol", "integrator", "tunables", "inducers"):
        if not isinstance(data.get(k, {}), dict):
            raise err(f"{k} must be an object", k)
    for name, v in data.get("parameters", {}).items():
        if name not in PARAM_INDEX:
            raise err(f"unknown parameter {name!r}", name)
        number(name, v, positive=True)
    proto_fields = {f.name for f in dataclasses.fields(Protocol)}
    for name, v in data.get("protocol", {}).items():
        if name not in proto_fields:
            raise err(f"unknown protocol constant {name!r}", name)
        number(name, v, positive=True)
    integ_fields = {f.name for f in dataclasses.fields(IntegratorConfig)}
    for name, v in data.get("integrator", {}).items():
        if name not in integ_fields:
            raise err(f"unknown integrator setting {name!r}", name)
        number(name, v, positive=True)
    for name, b in data.get("tunables", {}).items():
        if name not in PARAM_INDEX:
            raise err(f"unknown tunable parameter {name!r}", name)
        if (not isinstance(b, list) or len(b) != 2
                or not all(isinstance(v, (int, float)) and v > 0 for v in b) or b[0] > b[1]):
            raise err(f"tunable {name!r} needs bounds [lower, upper] with 0 < lower <= upper", name)
    for name, v in data.get("inducers", {}).items():
        if name not in ("IPTG", "aTc"):
            raise err(f"unknown inducer {name!r}", name)
        if not isinstance(v, (int, float)) or v < 0:
            raise err(f"inducer {name!r} must be >= 0", name)

    if data.get("objective") is not None and data["objective"] not in OBJECTIVES:
        raise err(f"objective must be one of {', '.join(OBJECTIVES)}", "objective")
    seeds = data.get("seeds")
    if seeds is not None:
        if not isinstance(seeds, list) or not seeds or not all(
                isinstance(v, int) and not isinstance(v, bool) and 0 <= v < 2**64 for v in seeds):
            raise err("seeds must be a nonempty list of unsigned integers", "seeds")
    if data["kind"] in SEEDED_KINDS and seeds is None:
        raise err(f"seeds are required for {data['kind']} experiments")
    for k in ("m_min", "workers", "p", "primary"):
        if k in data:
            data[k] = number(k, data[k], integer=True)
    if data.get("m_max") is not None:
        data["m_max"] = number("m_max", data["m_max"], integer=True)
    if not 0 <= data.get("m_min", 0) <= (data.get("m_max") or 32) <= 32:
        raise err("need 0 <= m_min <= m_max <= 32", "m_max" if "m_max" in data else "m_min")
    if data.get("workers", 1) < 1:
        raise err("workers must be >= 1", "workers")
    if data.get("primary", 0) not in (0, 1):
        raise err("primary must be 0 or 1", "primary")
    if data.get("eps_step") is not None:
        data["eps_step"] = number("eps_step", data["eps_step"], positive=True)
    if "horizon" in data:
        data["horizon"] = number("horizon", data["horizon"], positive=True)
    if not 1 <= data.get("p", 32) <= 1024:
        raise err("p must lie in [1, 1024]", "p")
    pairs = data.get("pairs", [])
    if not isinstance(pairs, list) or not all(isinstance(pr, list) and len(pr) == 2 for pr in pairs):
        raise err("pairs must be a list of [promoter, transcript]", "pairs")
    try:
        SuperstructureMatrix.from_pairs([tuple(pr) for pr in pairs])
    except (DomainError, KeyError, IndexError, TypeError) as exc:
        raise err(f"bad pair: {exc}", "pairs") from None
    if data.get("z0") is not None:
        z0 = data["z0"]
        if not isinstance(z0, list) or len(z0) != 6 or not all(
                isinstance(v, (int, float)) and v >= 0 for v in z0):
            raise err("z0 must list 6 nonnegative concentrations", "z0")
    return ExperimentConfig(**data)


# runners ---------------------------------------------------------------

def _params(cfg: ExperimentConfig) -> KineticParameters:
    return KineticParameters().with_overrides(cfg.parameters)


def _objective(cfg: ExperimentConfig):
    kwargs = dict(params=_params(cfg), tunables=tuple(cfg.resolved_tunables()),
                  protocol=Protocol(**cfg.protocol), cfg=IntegratorConfig(**cfg.integrator))
    if cfg.resolved_objective() == "adaptation":
        return AdaptationObjective(**kwargs)
    return PerformanceCostObjective(**kwargs)


def build_problem(cfg: ExperimentConfig) -> ProblemSpec:
    """Problem shared by the optimise and Pareto runners."""
    obj = _objective(cfg)
    tun = cfg.resolved_tunables()
    bands = ()
    if cfg.resolved_objective() == "adaptation":
        bands = (Band(1, 0.0, obj.protocol.p_max),)
    return ProblemSpec(obj, m_min=cfg.m_min, m_max=cfg.resolved_m_max(),
                       x_lower=tuple(b[0] for b in tun.values()),
                       x_upper=tuple(b[1] for b in tun.values()),
                       x_names=tuple(tun), bands=bands, rng_seed=cfg.seeds[0] if cfg.seeds else 0)


def _secondary_band(cfg: ExperimentConfig, p: ProblemSpec) -> Band:
    # adaptation: require a sensitivity above the concentration floor, not just round-off
    if cfg.resolved_objective() == "adaptation":
        return Band(0, -math.inf, -p.objective.objective.protocol.eps_floor)
    return Band(0, -math.inf, 0.0)


def _solver_cfg(cfg: ExperimentConfig):
    s = cfg.solver
    if s.name == "exhaustive":
        return None
    return SOLVER_CONFIGS[s.name](max_evals=s.max_evals, max_time=s.max_time,
                                  workers=cfg.workers, **s.options)


def emit_front_plotdata(front: ParetoFront, path) -> Path:
    """Write ``J2,J1,band`` rows sorted by ascending J2 (ties by J1)."""
    if not len(front):
        raise DomainError("cannot plot an empty front")
    rows = sorted(((pt.values[1], pt.values[0], pt.band) for pt in front),
                  key=lambda r: (r[0], r[1]))
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("J2", "J1", "band"))
        for j2, j1, band in rows:
            w.writerow((repr(j2), repr(j1), "" if band is None else band))
    return path


def census_rows(p: int = 32) -> list[tuple[int, int, int]]:
    """``(M, circuits with exactly M pairs, circuits with at most M pairs)`` for M = 0..p."""
    rows, total = [], 0
    for m in range(p + 1):
        n = num_configurations(p, m)
        total += n
        rows.append((m, n, total))
    return rows


class ExperimentFailed(RuntimeError):
    """A numerical failure; ``partial`` holds whatever results were produced."""

    def __init__(self, message: str, partial: dict):
        super().__init__(message)
        self.partial = partial


def _write_manifest(out: Path, cfg: ExperimentConfig, files: list[str], status: str,
                    error: str | None = None) -> Path:
    manifest = {
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "seeds": cfg.seeds,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "status": status,
        "outputs": sorted(files),
    }
    if error is not None:
        manifest["error"] = error
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_experiment(cfg: ExperimentConfig, log=print) -> list[Path]:
    """Run ``cfg`` and write its artifacts plus ``manifest.json`` into ``cfg.output``.

    Numerical failures raise :class:`ExperimentFailed` after a partial report
    and a manifest with status ``failed`` have been written.
    """
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    partial: dict = {}
    runner = {"simulate": _run_simulate, "optimize": _run_optimize, "pareto": _run_pareto,
              "adapt": _run_adapt, "census": _run_census}[cfg.kind]
    try:
        runner(cfg, out, written, partial, log)
    except (IntegrationError, SteadyStateNotReached, EmptyFrontError, DomainError) as exc:
        if isinstance(exc, ConfigError):
            raise
        partial["error"] = str(exc)
        path = out / "partial_report.json"
        path.write_text(json.dumps(partial, indent=2, sort_keys=True, default=str) + "\n")
        written.append(path)
        _write_manifest(out, cfg, [p.name for p in written], "failed", str(exc))
        raise ExperimentFailed(str(exc), partial) from exc
    written.append(_write_manifest(out, cfg, [p.name for p in written], "ok"))
    return written


def _run_simulate(cfg, out, written, partial, log):
    Y = SuperstructureMatrix.from_pairs([tuple(pr) for pr in cfg.pairs])
    tr = integrate(Y, cfg.parameters, InducerCondition(**cfg.inducers), cfg.z0, cfg.horizon,
                   IntegratorConfig(**cfg.integrator))
    written.append(tr.to_csv(out / "trajectory.csv"))
    log(f"simulated {len(tr.times)} points to t={tr.times[-1]:g}")


def _run_optimize(cfg, out, written, partial, log):
    p = build_problem(cfg)
    if cfg.primary == 1:
        p = p.with_primary(1).with_bands(_secondary_band(cfg, p))
    best: SolverReport | None = None
    for s in cfg.seeds if cfg.solver.name != "exhaustive" else cfg.seeds[:1]:
        r = solve(p, cfg.solver.name, (s,), _solver_cfg(cfg))
        partial.setdefault("runs", []).append(r.to_dict())
        log(f"seed {s}: best {r.best_value!r} after {r.evaluations} evaluations")
        if best is None or (r.found and (not best.found or r.best_value < best.best_value)):
            best = r
    if not best.found:
        raise DomainError("no feasible design found")
    written.append(best.to_json(out / "report.json"))
    written.append(best.convergence_csv(out / "convergence.csv"))
    log("best design: " + ", ".join(f"{a}->{b}" for a, b in best.best_design.matrix.pairs()))


def _front(cfg, out, written, partial, log) -> ParetoFront:
    p = build_problem(cfg)

    def progress(k, r):
        partial.setdefault("bands", {})[str(k)] = r.to_dict()
        log(f"band {k}: {'gap' if not r.found else repr(r.best_objective.values)}")

    front = epsilon_constraint_front(p, cfg.resolved_step(), cfg.solver.name, tuple(cfg.seeds),
                                     _solver_cfg(cfg), workers=cfg.workers, progress=progress,
                                     secondary_band=_secondary_band(cfg, p))
    front.to_csv(out / "front.csv")
    front.to_json(out / "front.json")
    written += [out / "front.csv", out / "front.json"]
    written.append(emit_front_plotdata(front, out / "front_plot.csv"))
    log(f"front with {len(front)} points")
    return front


def _run_pareto(cfg, out, written, partial, log):
    _front(cfg, out, written, partial, log)


def _run_adapt(cfg, out, written, partial, log):
    front = _front(cfg, out, written, partial, log)
    obj = build_problem(cfg).objective.objective
    for i, pt in enumerate(front):
        resp = obj.response(pt.design)
        written.append(resp.trajectory.to_csv(out / f"step_response_{i}.csv"))
        s, pr = resp.peak - resp.baseline, resp.final - resp.baseline
        log(f"member {i}: S={s:.4g} P={pr:.4g} t_peak={resp.t_peak:.4g}")


def _run_census(cfg, out, written, partial, log):
    path = out / "census.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("M", "num_configurations", "cumulative"))
        w.writerows(census_rows(cfg.p))
    written.append(path)
    log(f"census for p={cfg.p} written")


def design_from_report(path) -> DesignVector:
    """Best design stored in a report JSON written by the optimise runner."""
    data = json.loads(Path(path).read_text())
    return DesignVector(tuple(int(c) for c in data["best"]["y_bits"]), tuple(data["best"]["x"]))
