"""Dimensionless model definition, shared domain types and pointwise observables.

Unit system: hbar = 1, recoil frequency = 1 (energies/frequencies in recoil
units, time in inverse recoil units), cavity wave number = 1 (lengths in its
inverse). The cavity amplitude is stored normalized, ``a = alpha / sqrt(N)``,
so the coupled dynamics depends on the collective quantities ``u0n`` and
``eta`` only; the bare atom number enters nothing but stochastic noise scales.

The condensate lives on a periodic domain of one cavity wavelength,
``L = 2*pi``, expanded over integer plane waves ``exp(i n x)`` with
``n in [-n_max, n_max]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import isfinite

import numpy as np

from .errors import (
    GridTooCoarse,
    NonFiniteValue,
    NonPositiveKappa,
    TruncationTooSmall,
    UnnormalizedState,
)

#: Periodic domain length (one cavity wavelength in units of 1/k_c).
DOMAIN_LENGTH = 2.0 * np.pi

#: Norm deviation beyond which states are rejected as unnormalized.
NORM_TOL = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """All dimensionless physical and numerical parameters.

    Attributes
    ----------
    delta_c : float
        Cavity detuning (recoil units).
    u0n : float
        Collective light shift U0*N (recoil units, negative for red detuning).
    kappa : float
        Cavity field decay rate (recoil units), strictly positive.
    eta : float
        Effective two-photon pump rate (recoil units).
    g1d : float
        Contact interaction strength g_aa*N/L in recoil energy units.
    atom_number : float
        Atom number N; enters only the truncated-Wigner noise scales.
    n_max : int
        Momentum truncation; modes n = -n_max..n_max are retained.
    grid_points : int
        Real-space grid size over one period, used for the cubic term and
        density diagnostics. Must be at least ``4*n_max`` (anti-aliasing).
    """

    delta_c: float = 10.0
    u0n: float = -12.0
    kappa: float = 10.0
    eta: float = 4.0
    g1d: float = 0.0
    atom_number: float = 1e5
    n_max: int = 16
    grid_points: int = 128

    @property
    def delta0(self) -> float:
        """Bare effective detuning delta_c + u0n/2 (homogeneous condensate)."""
        return self.delta_c + 0.5 * self.u0n

    @property
    def n_modes(self) -> int:
        return 2 * self.n_max + 1

    def mode_numbers(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def effective_detuning(self, bmean: float) -> float:
        """Effective cavity detuning delta_c + u0n * B at grating overlap B."""
        return self.delta_c + self.u0n * bmean

    def with_(self, **kwargs) -> "ModelParams":
        """Return a copy with the given fields replaced (re-validated)."""
        return validate_params(replace(self, **kwargs))


def validate_params(raw: ModelParams) -> ModelParams:
    """Validate a parameter set and return it unchanged.

    Raises
    ------
    NonPositiveKappa, TruncationTooSmall, GridTooCoarse, NonFiniteValue
    """
    scalars = (raw.delta_c, raw.u0n, raw.kappa, raw.eta, raw.g1d, raw.atom_number)
    if not all(isfinite(float(v)) for v in scalars):
        raise NonFiniteValue(f"non-finite model parameter in {raw}")
    if raw.kappa <= 0.0:
        raise NonPositiveKappa(f"cavity decay must be positive, got {raw.kappa}")
    if raw.n_max < 2:
        raise TruncationTooSmall(f"need n_max >= 2, got {raw.n_max}")
    if raw.grid_points < 4 * raw.n_max:
        raise GridTooCoarse(
            f"grid_points={raw.grid_points} < 4*n_max={4 * raw.n_max}; "
            "the cubic term would alias"
        )
    if raw.atom_number < 1:
        raise NonFiniteValue(f"atom_number must be >= 1, got {raw.atom_number}")
    return raw


def _as_locked(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CondensateState:
    """Complex plane-wave amplitudes c_n, n in [-n_max, n_max], unit norm."""

    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", _as_locked(self.c))
        if self.c.ndim != 1 or self.c.size % 2 == 0:
            raise UnnormalizedState(
                f"amplitude vector must have odd length 2*n_max+1, got shape {self.c.shape}"
            )

    @property
    def n_max(self) -> int:
        return (self.c.size - 1) // 2

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.c) ** 2))

    def amplitude(self, n: int) -> complex:
        """Amplitude of the plane wave exp(i n x)."""
        return complex(self.c[n + self.n_max])

    def boundary_occupation(self) -> float:
        """Largest occupation of the two edge modes (truncation health)."""
        return float(max(abs(self.c[0]) ** 2, abs(self.c[-1]) ** 2))

    def require_normalized(self, tol: float = NORM_TOL) -> None:
        dev = abs(self.norm_sq - 1.0)
        if dev > tol:
            raise UnnormalizedState(f"norm deviates from 1 by {dev:.3e}")

    @classmethod
    def homogeneous(cls, n_max: int) -> "CondensateState":
        c = np.zeros(2 * n_max + 1, dtype=np.complex128)
        c[n_max] = 1.0
        return cls(c)

    @classmethod
    def from_modes(cls, n_max: int, amplitudes: dict, normalize: bool = False) -> "CondensateState":
        """Build a state from a {n: amplitude} mapping."""
        c = np.zeros(2 * n_max + 1, dtype=np.complex128)
        for n, amp in amplitudes.items():
            if abs(n) > n_max:
                raise TruncationTooSmall(f"mode {n} outside [-{n_max}, {n_max}]")
            c[n + n_max] = amp
        if normalize:
            c /= np.sqrt(np.sum(np.abs(c) ** 2))
        return cls(c)


@dataclass(frozen=True)
class SystemState:
    """Condensate plus normalized cavity amplitude at a time stamp."""

    condensate: CondensateState
    a: complex
    t: float = 0.0

    @property
    def intensity(self) -> float:
        """Renormalized cavity intensity |alpha|^2 / N = |a|^2."""
        return abs(self.a) ** 2

    @classmethod
    def seeded(
        cls,
        params: ModelParams,
        a0: complex = 1e-3,
        eps: float = 0.0,
        t: float = 0.0,
    ) -> "SystemState":
        """Homogeneous condensate with a small cavity seed.

        ``eps`` admixes a symmetry-breaking amplitude into the n = +-1 modes
        (used to select one of the two ordered branches deterministically).
        """
        c = np.zeros(params.n_modes, dtype=np.complex128)
        c[params.n_max] = 1.0
        if eps:
            c[params.n_max - 1] = eps
            c[params.n_max + 1] = eps
            c /= np.sqrt(np.sum(np.abs(c) ** 2))
        return cls(CondensateState(c), complex(a0), t)


@dataclass(frozen=True)
class OrderParams:
    """Density-grating order parameters.

    ``theta`` is the overlap of the density with cos(x) in [-1, 1];
    ``bmean`` the overlap with cos^2(x) in [0, 1]. A homogeneous condensate
    has theta = 0 and bmean = 1/2.
    """

    theta: float
    bmean: float


def delta_matrix(j: int, n_max: int) -> np.ndarray:
    """Band matrix with elements 1 where |n - n'| = j, on [-n_max, n_max]."""
    k = 2 * n_max + 1
    out = np.zeros((k, k))
    idx = np.arange(k)
    if j == 0:
        out[idx, idx] = 1.0
    else:
        out[idx[:-j], idx[:-j] + j] = 1.0
        out[idx[:-j] + j, idx[:-j]] = 1.0
    return out


def order_parameters(state: CondensateState) -> OrderParams:
    """Compute (theta, bmean) from the quadratic forms of the mode vector.

    Evaluated directly as neighbor sums so that dynamics and stability
    analysis share bit-identical values with the banded coupling matrices.
    """
    state.require_normalized()
    c = state.c
    theta = float(np.sum((np.conj(c[:-1]) * c[1:]).real))
    bmean = 0.5 + 0.5 * float(np.sum((np.conj(c[:-2]) * c[2:]).real))
    return OrderParams(theta=theta, bmean=bmean)


def z2_transform(state: SystemState) -> SystemState:
    """Half-period translation: c_n -> (-1)^n c_n together with a -> -a.

    An exact involution; it flips the sign of theta (and of the cavity
    amplitude) while preserving bmean, intensity and kinetic energy.
    """
    cond = state.condensate
    n = np.arange(-cond.n_max, cond.n_max + 1)
    signs = np.where(n % 2 == 0, 1.0, -1.0)
    return SystemState(CondensateState(signs * cond.c), -state.a, state.t)


def field_on_grid(state: CondensateState, grid_points: int) -> np.ndarray:
    """Condensate field (sum of c_n exp(i n x)) on a uniform periodic grid.

    Normalized so that sum |psi_j|^2 / grid_points = sum |c_n|^2.
    """
    n_max = state.n_max
    if grid_points < 4 * n_max:
        raise GridTooCoarse(f"grid_points={grid_points} < 4*n_max={4 * n_max}")
    coeff = np.zeros(grid_points, dtype=np.complex128)
    coeff[: n_max + 1] = state.c[n_max:]
    coeff[-n_max:] = state.c[:n_max]
    return np.fft.ifft(coeff) * grid_points


def density_profile(state: CondensateState, grid_points: int) -> np.ndarray:
    """Normalized atomic density on a uniform grid over one period.

    The trapezoidal (= rectangle, on a periodic grid) integral equals the
    state norm exactly, so a normalized state integrates to one.
    """
    state.require_normalized()
    psi = field_on_grid(state, grid_points)
    return np.abs(psi) ** 2 / DOMAIN_LENGTH


def kinetic_energy(state: CondensateState) -> float:
    """Mean kinetic energy per particle, sum_n n^2 |c_n|^2 (recoil units)."""
    state.require_normalized()
    n = np.arange(-state.n_max, state.n_max + 1)
    return float(np.sum(n**2 * np.abs(state.c) ** 2))


def chi_correlation(state: CondensateState, n: int) -> complex:
    """Momentum-space correlation c_0 * (c_n^* + c_-n^*)."""
    if abs(n) > state.n_max:
        raise TruncationTooSmall(f"mode {n} outside truncation {state.n_max}")
    m = state.n_max
    return complex(state.c[m] * (np.conj(state.c[m + n]) + np.conj(state.c[m - n])))
