"""Command-line interface.

Subcommands: ``evolve``, ``steady``, ``stability``, ``classify``, ``twa``,
``sweep``. Values come from an optional JSON config file (sections
``params``, ``integrator``, ``seed``, ``ensemble``, ``sweep``) with
``--set key=value`` overrides on top. With ``--out`` the command writes the
delimited table (CSV by default, JSON with ``--format json``) and renders a
figure next to it unless ``--no-plot``.

Exit codes: 0 success, 1 usage/parameter error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .classify import ClassifyRules, chi_orbit, classify_phase, intensity_spectrum
from .dynamics import IntegratorConfig, evolve_meanfield
from .errors import CavityBECError, NumericalError, ParameterError
from .model import ModelParams, SystemState, validate_params
from .stability import analyze_stability
from .steady import analytic_critical_pump, imaginary_time_solve
from .sweep import AxisSpec, SweepSpec, run_sweep, spec_hash
from .twa import EnsembleConfig, default_workers, run_ensemble

PARAM_KEYS = ("delta_c", "u0n", "kappa", "eta", "g1d", "atom_number", "n_max", "grid_points")
INTEGRATOR_KEYS = ("t_end", "rtol", "atol", "stride", "ramp_time")
SEED_KEYS = ("a0", "eps")
ENSEMBLE_KEYS = (
    "n_traj",
    "master_seed",
    "dt",
    "t_end",
    "stride",
    "include_initial_noise",
    "include_dynamical_noise",
    "a0",
)
STEADY_KEYS = ("tol", "seed_eps", "dtau")


class _Parser(argparse.ArgumentParser):
    """argparse reserves exit code 2 for usage errors; remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _collect_sets(pairs, allowed) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise _UsageError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in allowed:
            raise _UsageError(f"unknown key {key!r}; recognized keys: {', '.join(sorted(allowed))}")
        out[key] = _parse_value(value.strip())
    return out


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _section(cfg: dict, name: str, allowed) -> dict:
    sec = cfg.get(name, {})
    bad = set(sec) - set(allowed)
    if bad:
        raise _UsageError(f"unknown {name} config keys: {sorted(bad)}; recognized: {sorted(allowed)}")
    return dict(sec)


def _split(overrides: dict, keys) -> dict:
    return {k: overrides[k] for k in overrides if k in keys}


def _build_params(cfg: dict, overrides: dict) -> ModelParams:
    values = _section(cfg, "params", PARAM_KEYS)
    values.update(_split(overrides, PARAM_KEYS))
    if "n_max" in values:
        values["n_max"] = int(values["n_max"])
    if "grid_points" in values:
        values["grid_points"] = int(values["grid_points"])
    return validate_params(ModelParams(**values))


def _build_integrator(cfg: dict, overrides: dict) -> IntegratorConfig:
    values = _section(cfg, "integrator", INTEGRATOR_KEYS)
    values.update(_split(overrides, INTEGRATOR_KEYS))
    return IntegratorConfig(**values).validated()


def _build_seed(cfg: dict, overrides: dict) -> dict:
    values = {"a0": 1e-3, "eps": 0.0}
    values.update(_section(cfg, "seed", SEED_KEYS))
    values.update(_split(overrides, SEED_KEYS))
    return values


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
    sub.add_argument("--out", help="output table path (CSV or JSON)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--seed", type=int, help="master random seed (stochastic commands)")
    sub.add_argument("--threads", type=int, help="worker process count")
    sub.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def build_parser() -> _Parser:
    parser = _Parser(prog="cavitybec", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("evolve", "integrate one deterministic trajectory"),
        ("steady", "solve for a self-consistent stationary state"),
        ("stability", "linear stability of the stationary state"),
        ("classify", "integrate and label the long-time phase"),
        ("twa", "run a truncated-Wigner ensemble"),
        ("sweep", "run a two-axis parameter grid"),
    ):
        sub = subs.add_parser(name, help=help_text)
        _add_common(sub)
        if name == "twa":
            sub.add_argument("--ntraj", type=int, help="number of trajectories")
        if name == "sweep":
            sub.add_argument("--axis1", metavar="NAME:START:STOP:COUNT")
            sub.add_argument("--axis2", metavar="NAME:START:STOP:COUNT")
            sub.add_argument("--checkpoint", help="JSONL checkpoint path (enables resume)")
            sub.add_argument("--tasks", help="comma-separated: classify,stability,steady")
    return parser


def _write_table(path, fmt, records, fieldnames, meta=None):
    from . import reports

    if fmt == "json":
        reports.write_json(path, {"records": records, "meta": meta or {}})
    else:
        comment = json.dumps(meta) if meta else None
        reports.write_records_csv(path, records, fieldnames, comment)


def _plot_if_wanted(args, render):
    if args.out and not args.no_plot:
        from . import reports

        render(reports.figure_path(args.out))


def _cmd_evolve(args, cfg, overrides) -> int:
    params = _build_params(cfg, overrides)
    icfg = _build_integrator(cfg, overrides)
    seed = _build_seed(cfg, overrides)
    state = SystemState.seeded(params, a0=seed["a0"], eps=seed["eps"])
    traj = evolve_meanfield(state, params, icfg)
    print(
        f"evolved to t={traj.times[-1]:g}: final I={traj.intensity[-1]:.6g}, "
        f"theta={traj.theta[-1]:.6g}, bmean={traj.bmean[-1]:.6g}"
        + (f", truncation alarm at t={traj.alarm_time:g}" if traj.alarm_time else "")
    )
    if args.out:
        if args.format == "json":
            from . import reports

            reports.write_json(
                args.out,
                {
                    "t": traj.times,
                    "intensity": traj.intensity,
                    "theta": traj.theta,
                    "bmean": traj.bmean,
                    "ekin": traj.ekin,
                },
            )
        else:
            traj.to_csv(args.out)
    from . import reports

    _plot_if_wanted(args, lambda p: reports.plot_trajectory(traj, p))
    return 0


def _steady_record(params, ss) -> dict:
    eta_c = analytic_critical_pump(params)
    return {
        "delta_c": params.delta_c,
        "u0n": params.u0n,
        "kappa": params.kappa,
        "eta": params.eta,
        "g1d": params.g1d,
        "theta": ss.theta,
        "bmean": ss.bmean,
        "intensity": abs(ss.a) ** 2,
        "re_a": ss.a.real,
        "im_a": ss.a.imag,
        "mu": ss.mu,
        "energy": ss.energy,
        "residual": ss.residual,
        "extrapolated": ss.extrapolated,
        "eta_c_analytic": eta_c,
    }


def _cmd_steady(args, cfg, overrides) -> int:
    params = _build_params(cfg, overrides)
    solver = _section(cfg, "steady", STEADY_KEYS)
    solver.update(_split(overrides, STEADY_KEYS))
    ss = imaginary_time_solve(params, **solver)
    print(
        f"steady state: theta={ss.theta:.6g}, bmean={ss.bmean:.6g}, "
        f"|a|^2={abs(ss.a)**2:.6g}, mu={ss.mu:.6g}, residual={ss.residual:.3g}"
        + (" (extrapolated)" if ss.extrapolated else "")
    )
    rec = _steady_record(params, ss)
    if args.out:
        _write_table(args.out, args.format, [rec], list(rec))
    from . import reports

    _plot_if_wanted(args, lambda p: reports.plot_steady(ss, params, p))
    return 0


def _cmd_stability(args, cfg, overrides) -> int:
    params = _build_params(cfg, overrides)
    ss = imaginary_time_solve(params)
    report = analyze_stability(ss, params)
    print(
        f"max growth rate = {report.max_growth:.6g} "
        f"({'stable' if report.stable else 'unstable'})"
    )
    rec = _steady_record(params, ss)
    rec["max_growth"] = report.max_growth
    rec["stable"] = report.stable
    if args.out:
        _write_table(args.out, args.format, [rec], list(rec))
    from . import reports

    _plot_if_wanted(args, lambda p: reports.plot_stability(report.eigenvalues, p))
    return 0


def _cmd_classify(args, cfg, overrides) -> int:
    params = _build_params(cfg, overrides)
    icfg = _build_integrator(cfg, overrides)
    seed = _build_seed(cfg, overrides)
    state = SystemState.seeded(params, a0=seed["a0"], eps=seed["eps"])
    traj = evolve_meanfield(state, params, icfg)
    rules = ClassifyRules(window=(max(0.75 * icfg.t_end, icfg.t_end - 500.0), icfg.t_end))
    lab = classify_phase(traj, params, rules)
    print(f"label {lab.label}")
    print(
        f"  mean I={lab.mean_intensity:.4g}, IPR={lab.ipr:.4g}, "
        f"dominant freq={lab.dominant_frequency:.4g}, confident={lab.confident}"
    )
    rec = {
        "delta_c": params.delta_c,
        "u0n": params.u0n,
        "kappa": params.kappa,
        "eta": params.eta,
        "g1d": params.g1d,
        "label": lab.label,
        "ipr": lab.ipr,
        "mean_intensity": lab.mean_intensity,
        "dominant_frequency": lab.dominant_frequency,
        "confident": lab.confident,
    }
    if args.out:
        _write_table(args.out, args.format, [rec], list(rec))
    spec = None
    if lab.label in ("SL", "C"):
        spec = intensity_spectrum(traj, rules.window)
    from . import reports

    _plot_if_wanted(args, lambda p: reports.plot_classification(traj, lab.label, spec, p))
    return 0


def _cmd_twa(args, cfg, overrides) -> int:
    params = _build_params(cfg, overrides)
    values = _section(cfg, "ensemble", ENSEMBLE_KEYS)
    values.update(_split(overrides, ENSEMBLE_KEYS))
    if args.ntraj is not None:
        values["n_traj"] = args.ntraj
    if args.seed is not None:
        values["master_seed"] = args.seed
    t_end = values.get("t_end", EnsembleConfig.t_end)
    if "window" not in values and t_end < EnsembleConfig.window[1]:
        values["window"] = (0.75 * t_end, t_end)
    ecfg = EnsembleConfig(**values)
    if args.threads:
        ecfg = dataclasses.replace(ecfg, n_workers=args.threads)
    stats = run_ensemble(params, ecfg)
    term = stats.terminal_mean_intensity
    print(
        f"ensemble of {stats.n_trajectories} trajectories "
        f"({stats.n_excluded} excluded): window-mean I = {term.mean():.6g} "
        f"+- {term.std(ddof=1) / np.sqrt(term.size):.2g}"
    )
    if args.out:
        records = [
            {
                "t": float(t),
                "mean_intensity": float(mi),
                "sem_intensity": float(se),
                "mean_theta": float(mt),
            }
            for t, mi, se, mt in zip(
                stats.times, stats.mean_intensity, stats.sem_intensity, stats.mean_theta
            )
        ]
        meta = {"n_traj": stats.n_trajectories, "master_seed": ecfg.master_seed}
        _write_table(args.out, args.format, records, ["t", "mean_intensity", "sem_intensity", "mean_theta"], meta)
    from . import reports

    _plot_if_wanted(args, lambda p: reports.plot_ensemble(stats, p))
    return 0


def _parse_axis(text: str) -> AxisSpec:
    parts = text.split(":")
    if len(parts) != 4:
        raise _UsageError(f"axis must be NAME:START:STOP:COUNT, got {text!r}")
    return AxisSpec(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))


def _cmd_sweep(args, cfg, overrides) -> int:
    params = _build_params(cfg, overrides)
    icfg = _build_integrator(cfg, overrides)
    sweep_cfg = cfg.get("sweep", {})
    if args.axis1:
        axis1 = _parse_axis(args.axis1)
    elif "axis1" in sweep_cfg:
        axis1 = AxisSpec(**sweep_cfg["axis1"])
    else:
        raise _UsageError("sweep needs --axis1 or a sweep.axis1 config entry")
    if args.axis2:
        axis2 = _parse_axis(args.axis2)
    elif "axis2" in sweep_cfg:
        axis2 = AxisSpec(**sweep_cfg["axis2"])
    else:
        raise _UsageError("sweep needs --axis2 or a sweep.axis2 config entry")
    if args.tasks:
        tasks = tuple(t.strip() for t in args.tasks.split(",") if t.strip())
    else:
        tasks = tuple(sweep_cfg.get("tasks", ["classify"]))
    spec = SweepSpec(
        axis1=axis1,
        axis2=axis2,
        base=params,
        tasks=tasks,
        integrator=icfg,
        departure_check=bool(sweep_cfg.get("departure_check", False)),
        workers=sweep_cfg.get("workers"),
    )
    workers = args.threads if args.threads else None
    result = run_sweep(spec, checkpoint=args.checkpoint, workers=workers)
    n_done = len(result.records)
    print(
        f"sweep {spec.axis1.name} x {spec.axis2.name}: {n_done} points, "
        f"config hash {spec_hash(spec)}"
    )
    if args.out:
        from . import reports

        if args.format == "json":
            reports.write_json(args.out, {"records": result.records, "meta": result.provenance})
        else:
            reports.write_records_csv(
                args.out,
                result.records,
                list(result.FIELDS),
                json.dumps({"config_hash": result.provenance["config_hash"]}),
            )
            reports.write_json(str(args.out) + ".meta.json", result.provenance)
    from . import reports

    _plot_if_wanted(args, lambda p: reports.plot_sweep(result, p))
    return 0


_COMMANDS = {
    "evolve": (_cmd_evolve, PARAM_KEYS + INTEGRATOR_KEYS + SEED_KEYS),
    "steady": (_cmd_steady, PARAM_KEYS + STEADY_KEYS),
    "stability": (_cmd_stability, PARAM_KEYS),
    "classify": (_cmd_classify, PARAM_KEYS + INTEGRATOR_KEYS + SEED_KEYS),
    "twa": (_cmd_twa, PARAM_KEYS + ENSEMBLE_KEYS),
    "sweep": (_cmd_sweep, PARAM_KEYS + INTEGRATOR_KEYS + SEED_KEYS),
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler, allowed = _COMMANDS[args.command]
        cfg = _load_config(args.config)
        overrides = _collect_sets(args.set, allowed)
        return handler(args, cfg, overrides)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParameterError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except CavityBECError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
