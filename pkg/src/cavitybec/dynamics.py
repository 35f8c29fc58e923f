"""Real-time integration of the coupled condensate/cavity equations.

The drift is integrated with an adaptive embedded Runge-Kutta pair at tight
tolerances (limit-cycle period extraction needs phase accuracy over thousands
of recoil times); stochastic runs use the fixed-step scheme in :mod:`.twa`.
Observables are sampled on an exact uniform grid so spectral analysis
downstream never sees jitter.

Snapshot file layout (version 1, little-endian): magic ``b"CBEC"``, uint32
version, int32 n_max, float64 t, float64 Re(a), float64 Im(a), then
``2*(2*n_max+1)`` float64 values holding Re/Im interleaved mode amplitudes
in ascending n order.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import (
    GridTooCoarse,
    MissingObservable,
    NonFiniteState,
    NumericalError,
    ParameterError,
    StepSizeUnderflow,
    UnnormalizedState,
)
from .model import (
    DOMAIN_LENGTH,
    CondensateState,
    ModelParams,
    SystemState,
    density_profile,
    field_on_grid,
    order_parameters,
    validate_params,
)

_SNAPSHOT_MAGIC = b"CBEC"
_SNAPSHOT_VERSION = 1


class TruncationAlarm(UserWarning):
    """Edge-mode occupation exceeded the configured threshold (non-fatal)."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-stepping controls.

    ``method`` is "adaptive" for deterministic runs; the stochastic ensemble
    driver uses the fixed step ``dt``. ``stride`` is the observable sampling
    interval; the default resolves the fastest atomic-cycle frequency with
    >30 points per period. ``ramp_time`` > 0 ramps the pump linearly from
    zero over that interval (off by default; long-time behavior is
    insensitive to it).
    """

    method: str = "adaptive"
    rtol: float = 1e-10
    atol: float = 1e-12
    dt: float = 2e-4
    stride: float = 0.05
    t_end: float = 2000.0
    ramp_time: float = 0.0
    store_states: bool = False
    state_every: int = 20
    alarm_threshold: float = 1e-6
    max_steps: int = 2_000_000_000

    def validated(self) -> "IntegratorConfig":
        if self.rtol <= 0 or self.atol <= 0:
            raise ParameterError(f"tolerances must be positive, got rtol={self.rtol}, atol={self.atol}")
        if self.dt <= 0:
            raise ParameterError(f"stochastic step must be positive, got dt={self.dt}")
        if self.stride <= 0:
            raise ParameterError(f"sampling stride must be positive, got {self.stride}")
        if self.method not in ("adaptive", "stochastic"):
            raise ParameterError(f"unknown integrator method {self.method!r}")
        return self


@dataclass
class Trajectory:
    """Uniformly sampled time series of states and derived observables."""

    times: np.ndarray
    intensity: np.ndarray
    theta: np.ndarray
    bmean: np.ndarray
    ekin: np.ndarray
    a: np.ndarray
    chi: dict
    boundary: np.ndarray
    params: ModelParams
    config: IntegratorConfig
    final_state: SystemState
    states: Optional[list] = None
    alarm_time: Optional[float] = None

    @property
    def stride(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def window(self, t0: float, t1: float) -> slice:
        """Index slice covering sample times in [t0, t1]."""
        i0 = int(np.searchsorted(self.times, t0 - 1e-9))
        i1 = int(np.searchsorted(self.times, t1 + 1e-9))
        return slice(i0, i1)

    def chi_series(self, n: int) -> np.ndarray:
        if n in self.chi:
            return self.chi[n]
        raise MissingObservable(
            f"chi_{n} was not recorded (available: {sorted(self.chi)}); "
            "store states and recompute, or record it during the run"
        )

    def to_csv(self, path) -> None:
        """Columnar text export with one header row naming observables/units."""
        cols = [
            ("t", self.times),
            ("intensity", self.intensity),
            ("theta", self.theta),
            ("bmean", self.bmean),
            ("ekin", self.ekin),
            ("re_a", self.a.real),
            ("im_a", self.a.imag),
            ("re_chi1", self.chi[1].real),
            ("im_chi1", self.chi[1].imag),
            ("re_chi2", self.chi[2].real),
            ("im_chi2", self.chi[2].imag),
            ("boundary_occ", self.boundary),
        ]
        data = np.column_stack([v for _, v in cols])
        header = (
            "units: t in 1/omega_R; intensity=|alpha|^2/N; theta, bmean, chi dimensionless; "
            "ekin in omega_R per particle\n" + ",".join(name for name, _ in cols)
        )
        np.savetxt(path, data, delimiter=",", header=header, comments="# ", fmt="%.12g")


def _state_to_vector(state: SystemState) -> np.ndarray:
    y = np.empty(state.condensate.c.size + 1, dtype=np.complex128)
    y[:-1] = state.condensate.c
    y[-1] = state.a
    return y


def _vector_to_state(y: np.ndarray, t: float) -> SystemState:
    return SystemState(CondensateState(y[:-1].copy()), complex(y[-1]), t)


def coupled_rhs(state: SystemState, params: ModelParams):
    """Deterministic drift (dC/dt, da/dt) of the coupled equations.

    The atomic part is generated by a Hermitian instantaneous coupling matrix
    (kinetic ladder, AC-Stark cos^2 bands, pump-scattering cos band), so the
    total occupation is conserved analytically. The cubic interaction is
    evaluated pseudo-spectrally on the anti-aliased real-space grid.
    """
    params = validate_params(params)
    c = state.condensate.c
    n_max = state.condensate.n_max
    if n_max != params.n_max:
        raise ParameterError(f"state truncation {n_max} != params n_max {params.n_max}")
    a = complex(state.a)
    n = params.mode_numbers()
    inten = abs(a) ** 2
    d1 = params.eta * a.real  # (eta/2)(a + a*)
    d2 = 0.25 * params.u0n * inten

    dc = (n**2 + 0.5 * params.u0n * inten).astype(np.complex128) * c
    dc[1:] += d1 * c[:-1]
    dc[:-1] += d1 * c[1:]
    dc[2:] += d2 * c[:-2]
    dc[:-2] += d2 * c[2:]
    if params.g1d != 0.0:
        g = params.grid_points
        psi = field_on_grid(state.condensate, g)
        w = np.fft.fft(np.abs(psi) ** 2 * psi) / g
        dc += params.g1d * np.concatenate([w[-n_max:], w[: n_max + 1]])

    op = order_parameters(state.condensate)
    da = (params.delta_c + params.u0n * op.bmean - 1j * params.kappa) * a + params.eta * op.theta
    return -1j * dc, -1j * da


def build_coupling_matrix(a: complex, params: ModelParams) -> np.ndarray:
    """Instantaneous Hermitian atomic coupling matrix at cavity amplitude a."""
    from .model import delta_matrix

    n = params.mode_numbers()
    inten = abs(a) ** 2
    m = np.diag((n**2 + 0.5 * params.u0n * inten).astype(float))
    m = m + params.eta * np.real(a) * delta_matrix(1, params.n_max)
    m = m + 0.25 * params.u0n * inten * delta_matrix(2, params.n_max)
    return m.astype(np.complex128)


def evolve_meanfield(
    state: SystemState,
    params: ModelParams,
    config: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    """Integrate the deterministic equations and sample observables.

    Raises
    ------
    StepSizeUnderflow
        The controller could not maintain accuracy (stiff blowup).
    NonFiniteState
        The state left the representable range.
    """
    params = validate_params(params)
    config = config.validated()
    state.condensate.require_normalized()
    t0 = float(state.t)
    n_samples = int(round((config.t_end - t0) / config.stride)) + 1
    if n_samples < 2:
        raise ParameterError(f"t_end={config.t_end} leaves no room after t0={t0}")
    sample_times = t0 + config.stride * np.arange(n_samples)

    y = _state_to_vector(state)
    obs = np.empty((n_samples, K.N_OBS))
    if config.store_states:
        n_stored = (n_samples + config.state_every - 1) // config.state_every
        states_buf = np.empty((n_stored, y.size), dtype=np.complex128)
        state_every = config.state_every
    else:
        states_buf = np.empty((0, 0), dtype=np.complex128)
        state_every = 0

    status, n_steps, alarm_time = K.integrate_adaptive(
        y,
        t0,
        sample_times,
        config.rtol,
        config.atol,
        params.n_max,
        params.u0n,
        params.eta,
        params.delta_c,
        params.kappa,
        params.g1d,
        config.ramp_time,
        obs,
        states_buf,
        state_every,
        config.alarm_threshold,
        config.max_steps,
    )
    if status == K.STATUS_UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow at t={sample_times[0]}..{sample_times[-1]}")
    if status == K.STATUS_NONFINITE:
        raise NonFiniteState("state became non-finite during integration")
    if status == K.STATUS_MAXSTEPS:
        raise NumericalError(f"step budget {config.max_steps} exhausted")

    if alarm_time >= 0:
        warnings.warn(
            f"edge-mode occupation exceeded {config.alarm_threshold:g} at t={alarm_time:g}; "
            "increase n_max",
            TruncationAlarm,
            stacklevel=2,
        )

    stored = None
    if config.store_states:
        stored = [
            _vector_to_state(states_buf[i], float(sample_times[i * config.state_every]))
            for i in range(states_buf.shape[0])
        ]
    return Trajectory(
        times=sample_times,
        intensity=obs[:, K.OBS_INTENSITY].copy(),
        theta=obs[:, K.OBS_THETA].copy(),
        bmean=obs[:, K.OBS_BMEAN].copy(),
        ekin=obs[:, K.OBS_EKIN].copy(),
        a=(obs[:, K.OBS_REA] + 1j * obs[:, K.OBS_IMA]),
        chi={
            1: obs[:, K.OBS_RECHI1] + 1j * obs[:, K.OBS_IMCHI1],
            2: obs[:, K.OBS_RECHI2] + 1j * obs[:, K.OBS_IMCHI2],
        },
        boundary=obs[:, K.OBS_BOUNDARY].copy(),
        params=params,
        config=config,
        final_state=_vector_to_state(y, float(sample_times[-1])),
        states=stored,
        alarm_time=(float(alarm_time) if alarm_time >= 0 else None),
    )


@dataclass(frozen=True)
class PhaseSlip:
    """A density node accompanied by a pi phase jump."""

    x: float
    x_lo: float
    x_hi: float
    phase_jump: float


def detect_phase_slips(
    state: CondensateState,
    grid_points: int,
    density_floor: float,
    phase_tol: float = 0.2,
) -> list:
    """Locate phase singularities: density dips below ``density_floor`` whose
    enclosing phase difference is pi within ``phase_tol`` radians.

    Dips are contiguous (circularly wrapped) grid runs; the phase jump is
    measured between the grid points flanking the run.
    """
    n_max = state.n_max
    if grid_points < 4 * n_max:
        raise GridTooCoarse(f"grid_points={grid_points} < 4*n_max={4 * n_max}")
    rho = density_profile(state, grid_points)
    psi = field_on_grid(state, grid_points)
    mask = rho < density_floor
    if not mask.any() or mask.all():
        return []
    g = grid_points
    x = DOMAIN_LENGTH * np.arange(g) / g
    # start scanning at a grid point outside any dip so runs never wrap
    start = int(np.argmin(mask))
    slips = []
    i = 0
    while i < g:
        j = (start + i) % g
        if not mask[j]:
            i += 1
            continue
        run = [j]
        i += 1
        while i < g and mask[(start + i) % g]:
            run.append((start + i) % g)
            i += 1
        left = (run[0] - 1) % g
        right = (run[-1] + 1) % g
        dphi = float(np.angle(psi[right] * np.conj(psi[left])))
        if abs(abs(dphi) - np.pi) <= phase_tol:
            lo = x[run[0]]
            hi = x[run[-1]]
            span = (hi - lo) % DOMAIN_LENGTH
            center = (lo + 0.5 * span) % DOMAIN_LENGTH
            slips.append(PhaseSlip(x=center, x_lo=lo, x_hi=hi, phase_jump=dphi))
    return slips


def save_snapshot(state: SystemState, path) -> None:
    """Write a versioned little-endian binary snapshot (layout in module doc)."""
    c = state.condensate.c
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIi", _SNAPSHOT_MAGIC, _SNAPSHOT_VERSION, state.condensate.n_max))
        fh.write(struct.pack("<ddd", float(state.t), state.a.real, state.a.imag))
        interleaved = np.empty(2 * c.size)
        interleaved[0::2] = c.real
        interleaved[1::2] = c.imag
        fh.write(interleaved.astype("<f8").tobytes())


def load_snapshot(path) -> SystemState:
    with open(path, "rb") as fh:
        magic, version, n_max = struct.unpack("<4sIi", fh.read(12))
        if magic != _SNAPSHOT_MAGIC:
            raise ParameterError(f"not a snapshot file (magic {magic!r})")
        if version != _SNAPSHOT_VERSION:
            raise ParameterError(f"unsupported snapshot version {version}")
        t, a_re, a_im = struct.unpack("<ddd", fh.read(24))
        k = 2 * n_max + 1
        raw = np.frombuffer(fh.read(16 * k), dtype="<f8")
        c = raw[0::2] + 1j * raw[1::2]
    return SystemState(CondensateState(c), complex(a_re, a_im), t)
