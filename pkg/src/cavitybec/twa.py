"""Truncated-Wigner ensembles: vacuum-noise sampling and stochastic runs.

Initial states carry half a quantum per mode (per-quadrature variance
``1/(4N)`` in the normalized amplitudes, including the macroscopic
zero-momentum mode and the cavity); the cavity additionally receives a
delta-correlated complex noise drive tied to its decay rate. Trajectory
streams are seeded from ``(master_seed, index)`` so results are bitwise
independent of scheduling and worker count; aggregation reduces in fixed
index order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import NonFiniteState, ParameterError
from .model import CondensateState, ModelParams, SystemState, validate_params

_BLOCK_SAMPLES = 400


@dataclass(frozen=True)
class EnsembleConfig:
    """Stochastic ensemble controls.

    ``dt`` is the fixed step of the semi-implicit midpoint scheme; the
    sampling ``stride`` must be an integer multiple of it. ``window`` is the
    stationary segment used for per-trajectory spectra and terminal means.
    """

    n_traj: int = 500
    master_seed: int = 2024
    dt: float = 2e-4
    include_initial_noise: bool = True
    include_dynamical_noise: bool = True
    t_end: float = 2000.0
    stride: float = 0.25
    window: tuple = (1500.0, 2000.0)
    a0: complex = 1e-3
    ramp_time: float = 0.0
    midpoint_iterations: int = 2
    n_workers: Optional[int] = None

    def validated(self) -> "EnsembleConfig":
        if self.n_traj < 1:
            raise ParameterError(f"n_traj must be >= 1, got {self.n_traj}")
        if self.dt <= 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        per = self.stride / self.dt
        if abs(per - round(per)) > 1e-9 or round(per) < 1:
            raise ParameterError(f"stride {self.stride} is not a multiple of dt {self.dt}")
        if not (0.0 <= self.window[0] < self.window[1] <= self.t_end + 1e-9):
            raise ParameterError(f"window {self.window} outside run span [0, {self.t_end}]")
        return self


@dataclass
class EnsembleStats:
    """Index-ordered deterministic reduction of a stochastic ensemble."""

    times: np.ndarray
    mean_intensity: np.ndarray
    sem_intensity: np.ndarray
    mean_theta: np.ndarray
    spectrum_freqs: np.ndarray
    mean_spectrum: np.ndarray
    terminal_mean_intensity: np.ndarray
    n_trajectories: int
    n_excluded: int
    config: EnsembleConfig
    params: ModelParams


def sample_wigner_initial(
    params: ModelParams,
    rng: np.random.Generator,
    mean: Optional[SystemState] = None,
) -> SystemState:
    """Draw one Wigner initial state around a mean-field seed.

    Every atomic mode and the cavity receive independent complex Gaussians of
    per-quadrature variance ``1/(4N)``; the atomic vector is renormalized
    afterwards. As N grows the draw collapses onto the mean-field seed.
    """
    params = validate_params(params)
    if mean is None:
        mean = SystemState.seeded(params)
    sigma = np.sqrt(1.0 / (4.0 * params.atom_number))
    k = params.n_modes
    dc = sigma * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
    da = sigma * complex(rng.standard_normal(), rng.standard_normal())
    c = mean.condensate.c + dc
    c = c / np.sqrt(np.sum(np.abs(c) ** 2))
    return SystemState(CondensateState(c), mean.a + da, mean.t)


def noise_increment(rng: np.random.Generator, dt: float, params: ModelParams) -> complex:
    """One cavity noise increment: complex, zero mean, |dW|^2 = kappa*dt/N."""
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    s = np.sqrt(params.kappa * dt / (2.0 * params.atom_number))
    return s * complex(rng.standard_normal(), rng.standard_normal())


def _noise_block(rng: np.random.Generator, n: int, dt: float, params: ModelParams) -> np.ndarray:
    s = np.sqrt(params.kappa * dt / (2.0 * params.atom_number))
    g = rng.standard_normal(2 * n)
    return s * (g[0::2] + 1j * g[1::2])


def _run_one(args):
    params, cfg, idx = args
    rng = np.random.default_rng([cfg.master_seed, idx])
    mean = SystemState.seeded(params, a0=cfg.a0)
    state = sample_wigner_initial(params, rng, mean) if cfg.include_initial_noise else mean

    per = int(round(cfg.stride / cfg.dt))
    n_samples = int(round(cfg.t_end / cfg.stride)) + 1
    obs = np.empty((n_samples, K.N_OBS))
    y = np.empty(params.n_modes + 1, dtype=np.complex128)
    y[:-1] = state.condensate.c
    y[-1] = state.a
    K._record_obs(y, params.n_max, obs, 0)

    row = 1
    t = 0.0
    status = K.STATUS_OK
    while row < n_samples:
        n_rows = min(_BLOCK_SAMPLES, n_samples - row)
        n_steps = n_rows * per
        if cfg.include_dynamical_noise:
            noise = _noise_block(rng, n_steps, cfg.dt, params)
        else:
            noise = np.zeros(n_steps, dtype=np.complex128)
        status, t = K.integrate_sde_block(
            y,
            t,
            cfg.dt,
            per,
            cfg.midpoint_iterations,
            noise,
            obs,
            row,
            n_rows,
            params.n_max,
            params.u0n,
            params.eta,
            params.delta_c,
            params.kappa,
            params.g1d,
            cfg.ramp_time,
        )
        if status != K.STATUS_OK:
            break
        row += n_rows

    if status != K.STATUS_OK:
        return idx, None

    times = cfg.stride * np.arange(n_samples)
    i0 = int(np.searchsorted(times, cfg.window[0] - 1e-9))
    i1 = int(np.searchsorted(times, cfg.window[1] + 1e-9))
    inten = obs[:, K.OBS_INTENSITY]
    seg = inten[i0:i1]
    x = seg - seg.mean()
    power = np.abs(np.fft.rfft(x)) ** 2
    power = power[1:]
    total = power.sum()
    if total > 0.0:
        power = power / total
    return idx, (
        inten.copy(),
        obs[:, K.OBS_THETA].copy(),
        power,
        float(seg.mean()),
    )


def default_workers() -> int:
    env = os.environ.get("CAVITYBEC_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_ensemble(params: ModelParams, cfg: EnsembleConfig) -> EnsembleStats:
    """Integrate the ensemble and reduce it deterministically.

    Trajectories whose state leaves the representable range are excluded and
    counted; the run fails if more than 1% are lost.
    """
    params = validate_params(params)
    cfg = cfg.validated()
    workers = cfg.n_workers if cfg.n_workers is not None else default_workers()
    jobs = [(params, cfg, i) for i in range(cfg.n_traj)]

    results = {}
    if workers > 1 and cfg.n_traj > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for idx, payload in pool.map(_run_one, jobs, chunksize=4):
                results[idx] = payload
    else:
        for job in jobs:
            idx, payload = _run_one(job)
            results[idx] = payload

    n_samples = int(round(cfg.t_end / cfg.stride)) + 1
    times = cfg.stride * np.arange(n_samples)
    sum_i = np.zeros(n_samples)
    sum_i2 = np.zeros(n_samples)
    sum_th = np.zeros(n_samples)
    sum_spec = None
    terminal = []
    n_ok = 0
    for i in range(cfg.n_traj):
        payload = results[i]
        if payload is None:
            continue
        inten, theta, power, term = payload
        sum_i += inten
        sum_i2 += inten * inten
        sum_th += theta
        if sum_spec is None:
            sum_spec = np.zeros_like(power)
        sum_spec += power
        terminal.append(term)
        n_ok += 1

    n_excluded = cfg.n_traj - n_ok
    if n_ok == 0 or n_excluded > 0.01 * cfg.n_traj:
        raise NonFiniteState(
            f"{n_excluded}/{cfg.n_traj} trajectories diverged; ensemble rejected"
        )

    mean_i = sum_i / n_ok
    var_i = np.maximum(sum_i2 / n_ok - mean_i**2, 0.0)
    sem_i = np.sqrt(var_i / n_ok)
    i0 = int(np.searchsorted(times, cfg.window[0] - 1e-9))
    i1 = int(np.searchsorted(times, cfg.window[1] + 1e-9))
    n_win = i1 - i0
    freqs = 2.0 * np.pi * np.fft.rfftfreq(n_win, cfg.stride)[1:]
    return EnsembleStats(
        times=times,
        mean_intensity=mean_i,
        sem_intensity=sem_i,
        mean_theta=sum_th / n_ok,
        spectrum_freqs=freqs,
        mean_spectrum=sum_spec / n_ok,
        terminal_mean_intensity=np.array(terminal),
        n_trajectories=n_ok,
        n_excluded=n_excluded,
        config=cfg,
        params=params,
    )
