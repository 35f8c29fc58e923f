"""Delimited output and figure rendering for the CLI report path.

Every command that writes a table can also render a matplotlib figure next
to it (same stem, ``.png``); rendering uses the Agg backend so it works
headless.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .classify import IntensitySpectrum, Orbit
from .dynamics import Trajectory
from .model import ModelParams, density_profile
from .steady import SteadyState
from .sweep import SweepResult
from .twa import EnsembleStats


def write_records_csv(path, records, fieldnames, header_comment=None) -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            for line in header_comment.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            writer.writerow({k: _fmt(rec.get(k)) for k in fieldnames})


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return v


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_coerce)
        fh.write("\n")


def _json_coerce(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return repr(obj)


def figure_path(out_path) -> str:
    stem, _ = os.path.splitext(str(out_path))
    return stem + ".png"


def plot_trajectory(traj: Trajectory, path) -> None:
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    axes[0].plot(traj.times, traj.intensity, lw=0.7, color="tab:blue")
    axes[0].set_ylabel(r"$|\alpha|^2/N$")
    axes[1].plot(traj.times, traj.theta, lw=0.7, color="tab:red", label=r"$\Theta$")
    axes[1].plot(traj.times, traj.bmean, lw=0.7, color="tab:green", label=r"$\mathcal{B}$")
    axes[1].set_xlabel(r"$t\,\omega_R$")
    axes[1].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_classification(traj: Trajectory, label: str, spec: IntensitySpectrum | None, path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    axes[0].plot(traj.times, traj.intensity, lw=0.6)
    axes[0].set_xlabel(r"$t\,\omega_R$")
    axes[0].set_ylabel(r"$|\alpha|^2/N$")
    axes[0].set_title(f"phase: {label}")
    if spec is not None and not spec.degenerate:
        axes[1].semilogy(spec.freqs, np.maximum(spec.power, 1e-16), lw=0.7)
        axes[1].set_xlabel(r"$\omega/\omega_R$")
        axes[1].set_ylabel("normalized power")
        axes[1].set_xlim(0, min(spec.freqs[-1], 15.0))
    else:
        axes[1].text(0.5, 0.5, "degenerate spectrum", ha="center", va="center")
        axes[1].set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_orbits(orbits: list, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    colors = ("tab:red", "tab:blue", "tab:green")
    for orbit, color in zip(orbits, colors):
        ax.plot(orbit.values.real, orbit.values.imag, lw=0.5, color=color)
    n = orbits[0].n if orbits else 1
    ax.set_xlabel(rf"Re $\chi_{n}$")
    ax.set_ylabel(rf"Im $\chi_{n}$")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_steady(ss: SteadyState, params: ModelParams, path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    x = np.linspace(0, 2 * np.pi, params.grid_points, endpoint=False)
    axes[0].plot(x, density_profile(ss.condensate, params.grid_points))
    axes[0].set_xlabel(r"$k_c x$")
    axes[0].set_ylabel(r"$\rho(x)$")
    n = params.mode_numbers()
    axes[1].semilogy(n, np.maximum(np.abs(ss.condensate.c), 1e-18), "o-", ms=3, lw=0.7)
    axes[1].set_xlabel("n")
    axes[1].set_ylabel(r"$|c_n|$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_stability(eigenvalues: np.ndarray, path) -> None:
    fig, ax = plt.subplots(figsize=(4.8, 4))
    ax.scatter(eigenvalues.real, eigenvalues.imag, s=12, alpha=0.8)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel(r"Re $\lambda$")
    ax.set_ylabel(r"Im $\lambda$ (growth)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ensemble(stats: EnsembleStats, path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    axes[0].plot(stats.times, stats.mean_intensity, lw=0.7)
    axes[0].fill_between(
        stats.times,
        stats.mean_intensity - stats.sem_intensity,
        stats.mean_intensity + stats.sem_intensity,
        alpha=0.3,
    )
    axes[0].set_xlabel(r"$t\,\omega_R$")
    axes[0].set_ylabel(r"$\langle|\alpha|^2/N\rangle$")
    if stats.mean_spectrum is not None and stats.mean_spectrum.size:
        axes[1].semilogy(stats.spectrum_freqs, np.maximum(stats.mean_spectrum, 1e-16), lw=0.7)
        axes[1].set_xlabel(r"$\omega/\omega_R$")
        axes[1].set_ylabel("mean power")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_LABEL_CODES = {"N": 0, "S": 1, "SL": 2, "AL": 3, "C": 4, "ERROR": 5, None: 5}


def plot_sweep(result: SweepResult, path) -> None:
    spec = result.spec
    n1, n2 = result.grid_shape()
    v1 = spec.axis1.values()
    v2 = spec.axis2.values()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    have_labels = any(r.get("label") for r in result.records)
    if have_labels:
        ipr = np.full((n1, n2), np.nan)
        codes = np.full((n1, n2), np.nan)
        for r in result.records:
            i, j = divmod(r["index"], n2)
            if r.get("ipr") is not None:
                ipr[i, j] = r["ipr"]
            codes[i, j] = _LABEL_CODES.get(r.get("label"), 5)
        pc = ax.pcolormesh(v1, v2, ipr.T, shading="nearest", vmin=0, vmax=1, cmap="viridis")
        fig.colorbar(pc, ax=ax, label="IPR")
        markers = {0: (".", "w"), 1: ("s", "gray"), 3: ("^", "k"), 5: ("x", "r")}
        for code, (mk, color) in markers.items():
            ii, jj = np.nonzero(codes == code)
            if ii.size:
                ax.scatter(v1[ii], v2[jj], marker=mk, c=color, s=14)
    else:
        growth = np.full((n1, n2), np.nan)
        for r in result.records:
            i, j = divmod(r["index"], n2)
            if r.get("max_growth") is not None:
                growth[i, j] = r["max_growth"]
        pc = ax.pcolormesh(v1, v2, growth.T, shading="nearest", cmap="magma")
        fig.colorbar(pc, ax=ax, label="max growth rate")
    etac = result.column("eta_c_analytic")
    axis_is_eta = (spec.axis1.name == "eta", spec.axis2.name == "eta")
    if axis_is_eta[1] and not axis_is_eta[0]:
        line = [etac[i * n2] for i in range(n1)]
        ax.plot(v1, line, "r-", lw=1.2, label=r"analytic $\eta_c$")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel(spec.axis1.name)
    ax.set_ylabel(spec.axis2.name)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
