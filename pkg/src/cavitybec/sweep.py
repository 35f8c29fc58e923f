"""Parameter-grid sweeps with checkpoint/resume.

Grid points are independent deterministic tasks dispatched to a process
pool; records are assembled in row-major grid order regardless of completion
order, so the final result is identical for any worker count. The checkpoint
is an append-only JSON-lines log keyed by grid index whose header carries a
hash of the sweep configuration; resuming against a different configuration
is refused.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classify import ClassifyRules, classify_phase
from .dynamics import IntegratorConfig, evolve_meanfield
from .errors import CavityBECError, ParameterError, ResumeMismatch
from .model import ModelParams, SystemState, validate_params
from .stability import analyze_stability, departs_in_time
from .steady import analytic_critical_pump, imaginary_time_solve

AXIS_NAMES = ("eta", "delta_c", "u0n", "g1d")
TASKS = ("classify", "stability", "steady")


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis: a recognized parameter name and a uniform range."""

    name: str
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """A two-axis grid, fixed base parameters and the per-point task list."""

    axis1: AxisSpec
    axis2: AxisSpec
    base: ModelParams = ModelParams()
    tasks: tuple = ("classify",)
    integrator: IntegratorConfig = IntegratorConfig()
    rules: ClassifyRules = ClassifyRules()
    seed_a0: float = 1e-3
    departure_check: bool = False
    checkpoint_interval: int = 1
    workers: Optional[int] = None

    def validated(self) -> "SweepSpec":
        for ax in (self.axis1, self.axis2):
            if ax.name not in AXIS_NAMES:
                raise ParameterError(f"unknown axis {ax.name!r}; valid: {AXIS_NAMES}")
            if ax.count < 1:
                raise ParameterError(f"axis count must be >= 1, got {ax.count}")
        if self.axis1.name == self.axis2.name:
            raise ParameterError("sweep axes must be distinct parameters")
        for t in self.tasks:
            if t not in TASKS:
                raise ParameterError(f"unknown task {t!r}; valid: {TASKS}")
        validate_params(self.base)
        return self

    def grid(self):
        """Row-major (axis1 outer, axis2 inner) sequence of (index, v1, v2)."""
        v1 = self.axis1.values()
        v2 = self.axis2.values()
        out = []
        idx = 0
        for a in v1:
            for b in v2:
                out.append((idx, float(a), float(b)))
                idx += 1
        return out

    def point_params(self, v1: float, v2: float) -> ModelParams:
        return self.base.with_(**{self.axis1.name: v1, self.axis2.name: v2})

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["tasks"] = list(self.tasks)
        return d


def spec_hash(spec: SweepSpec) -> str:
    blob = json.dumps(spec.to_dict(), sort_keys=True, default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


@dataclass
class SweepResult:
    """Row-major records, one per grid point, plus provenance."""

    spec: SweepSpec
    records: list
    provenance: dict

    FIELDS = (
        "index",
        "axis1",
        "axis2",
        "delta_c",
        "u0n",
        "kappa",
        "eta",
        "g1d",
        "label",
        "ipr",
        "mean_intensity",
        "dominant_frequency",
        "max_growth",
        "departs",
        "theta_ss",
        "intensity_ss",
        "mu",
        "residual",
        "extrapolated",
        "eta_c_analytic",
        "error",
    )

    def grid_shape(self):
        return (self.spec.axis1.count, self.spec.axis2.count)

    def column(self, name: str) -> np.ndarray:
        vals = []
        for r in self.records:
            v = r.get(name)
            if v is None:
                v = np.nan
            vals.append(v)
        return np.asarray(vals)


def _empty_record(index: int, v1: float, v2: float, params: ModelParams) -> dict:
    eta_c = analytic_critical_pump(params)
    return {
        "index": index,
        "axis1": v1,
        "axis2": v2,
        "delta_c": params.delta_c,
        "u0n": params.u0n,
        "kappa": params.kappa,
        "eta": params.eta,
        "g1d": params.g1d,
        "label": None,
        "ipr": None,
        "mean_intensity": None,
        "dominant_frequency": None,
        "max_growth": None,
        "departs": None,
        "theta_ss": None,
        "intensity_ss": None,
        "mu": None,
        "residual": None,
        "extrapolated": None,
        "eta_c_analytic": eta_c,
        "error": None,
    }


def run_point(spec: SweepSpec, index: int, v1: float, v2: float) -> dict:
    """Execute the configured tasks at one grid point (errors contained)."""
    params = spec.point_params(v1, v2)
    rec = _empty_record(index, v1, v2, params)
    try:
        if "classify" in spec.tasks:
            state = SystemState.seeded(params, a0=spec.seed_a0)
            traj = evolve_meanfield(state, params, spec.integrator)
            lab = classify_phase(traj, params, spec.rules)
            rec["label"] = lab.label
            rec["ipr"] = None if np.isnan(lab.ipr) else lab.ipr
            rec["mean_intensity"] = lab.mean_intensity
            rec["dominant_frequency"] = (
                None if np.isnan(lab.dominant_frequency) else lab.dominant_frequency
            )
        if "steady" in spec.tasks or "stability" in spec.tasks:
            ss = imaginary_time_solve(params)
            rec["theta_ss"] = ss.theta
            rec["intensity_ss"] = abs(ss.a) ** 2
            rec["mu"] = ss.mu
            rec["residual"] = ss.residual
            rec["extrapolated"] = ss.extrapolated
            if "stability" in spec.tasks:
                report = analyze_stability(ss, params)
                rec["max_growth"] = report.max_growth
                if spec.departure_check:
                    rec["departs"] = departs_in_time(ss, params)
    except CavityBECError as exc:
        rec["label"] = "ERROR"
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def _point_job(args):
    spec, index, v1, v2 = args
    return run_point(spec, index, v1, v2)


def _load_checkpoint(path, expected_hash: str) -> dict:
    done = {}
    if not os.path.exists(path):
        return done
    with open(path) as fh:
        first = fh.readline()
        if not first:
            return done
        header = json.loads(first)
        if header.get("config_hash") != expected_hash:
            raise ResumeMismatch(
                f"checkpoint {path} was written for config {header.get('config_hash')}, "
                f"current config is {expected_hash}"
            )
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            done[entry["index"]] = entry["record"]
    return done


def run_sweep(
    spec: SweepSpec,
    checkpoint: Optional[str] = None,
    workers: Optional[int] = None,
    max_points: Optional[int] = None,
) -> SweepResult:
    """Run all grid points, optionally journaling to a resumable checkpoint.

    ``max_points`` limits how many missing points are executed this call
    (used to exercise interrupted runs); the checkpoint then lets a later
    call finish the grid with a final result identical to an uninterrupted
    run.
    """
    from .twa import default_workers

    spec = spec.validated()
    h = spec_hash(spec)
    grid = spec.grid()
    done = {}
    ck = None
    if checkpoint:
        done = _load_checkpoint(checkpoint, h)
        need_header = not os.path.exists(checkpoint) or os.path.getsize(checkpoint) == 0
        ck = open(checkpoint, "a")
        if need_header:
            ck.write(json.dumps({"kind": "header", "config_hash": h}) + "\n")
            ck.flush()

    todo = [(spec, i, v1, v2) for (i, v1, v2) in grid if i not in done]
    if max_points is not None:
        todo = todo[:max_points]

    n_workers = workers if workers is not None else (spec.workers or default_workers())
    try:
        if n_workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                futures = {pool.submit(_point_job, job): job[1] for job in todo}
                pending = 0
                for fut in as_completed(futures):
                    rec = fut.result()
                    done[rec["index"]] = rec
                    if ck:
                        ck.write(json.dumps({"index": rec["index"], "record": rec}, default=_json_default) + "\n")
                        pending += 1
                        if pending >= spec.checkpoint_interval:
                            ck.flush()
                            pending = 0
        else:
            for job in todo:
                rec = _point_job(job)
                done[rec["index"]] = rec
                if ck:
                    ck.write(json.dumps({"index": rec["index"], "record": rec}, default=_json_default) + "\n")
                    ck.flush()
    finally:
        if ck:
            ck.flush()
            ck.close()

    records = [done[i] for (i, _, _) in grid if i in done]
    records.sort(key=lambda r: r["index"])
    from . import __version__

    provenance = {
        "package_version": __version__,
        "config_hash": h,
        "spec": spec.to_dict(),
        "complete": len(records) == len(grid),
    }
    return SweepResult(spec=spec, records=records, provenance=provenance)
