"""Linear stability of stationary states.

The fluctuation vector is ``[dc, dc*, da, da*]`` with the cavity deviation in
normalized units, giving a dense non-Hermitian matrix of size
``2*(2*n_max+1) + 2``. With the convention ``i d/dt dpsi = S dpsi`` a mode
grows at rate ``Im(lambda)``; the neutral global-phase direction produces
exact zero eigenvalues, so growth below a small clamp threshold is reported
as stable rather than projected out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadSteadyState, EigenSolverFailure, InteractionUnsupported
from .model import ModelParams, delta_matrix, validate_params
from .steady import SteadyState

#: growth rates below this are numerical zero (separates the neutral
#: global-phase mode from true growth at double precision)
GROWTH_CLAMP = 1e-6


@dataclass(frozen=True)
class StabilityReport:
    """Eigenvalues and the growth verdict for one stationary state."""

    eigenvalues: np.ndarray
    max_growth: float
    stable: bool


def build_stability_matrix(ss: SteadyState, params: ModelParams, residual_gate: float = 1e-6) -> np.ndarray:
    """Assemble the linearization around a stationary state.

    Only the non-interacting model is supported (the cubic term would add
    extra Bogoliubov blocks). The steady state must be converged: its
    residual is checked against ``residual_gate``.
    """
    params = validate_params(params)
    if params.g1d != 0.0:
        raise InteractionUnsupported("stability analysis requires g1d = 0")
    if ss.residual > residual_gate:
        raise BadSteadyState(
            f"steady-state residual {ss.residual:.3e} above gate {residual_gate:.1e}"
        )

    from .dynamics import build_coupling_matrix

    n_max = params.n_max
    k = params.n_modes
    c = ss.condensate.c
    a = complex(ss.a)
    mu = float(ss.mu)

    m = build_coupling_matrix(a, params)
    d_b = 0.5 * delta_matrix(0, n_max) + 0.25 * delta_matrix(2, n_max)
    q = a * params.u0n * d_b + 0.5 * params.eta * delta_matrix(1, n_max)
    q = q.astype(np.complex128)
    delta_eff = params.delta_c + params.u0n * ss.bmean

    s = np.zeros((2 * k + 2, 2 * k + 2), dtype=np.complex128)
    eye = np.eye(k)
    s[:k, :k] = m - mu * eye
    s[k : 2 * k, k : 2 * k] = -np.conj(m) + mu * eye
    s[:k, 2 * k] = np.conj(q) @ c
    s[:k, 2 * k + 1] = q @ c
    s[k : 2 * k, 2 * k] = -np.conj(q) @ np.conj(c)
    s[k : 2 * k, 2 * k + 1] = -q @ np.conj(c)
    s[2 * k, :k] = np.conj(c) @ q
    s[2 * k, k : 2 * k] = c @ q
    s[2 * k + 1, :k] = -np.conj(c) @ np.conj(q)
    s[2 * k + 1, k : 2 * k] = -c @ np.conj(q)
    s[2 * k, 2 * k] = delta_eff - 1j * params.kappa
    s[2 * k + 1, 2 * k + 1] = -delta_eff - 1j * params.kappa
    return s


def max_growth_rate(s: np.ndarray, clamp: float = GROWTH_CLAMP) -> float:
    """Largest growth rate, max Im(lambda), clamped to zero below ``clamp``."""
    try:
        lam = np.linalg.eigvals(s)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from exc
    growth = float(np.max(lam.imag))
    return 0.0 if growth <= clamp else growth


def analyze_stability(ss: SteadyState, params: ModelParams, clamp: float = GROWTH_CLAMP) -> StabilityReport:
    s = build_stability_matrix(ss, params)
    try:
        lam = np.linalg.eigvals(s)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from exc
    growth = float(np.max(lam.imag))
    growth = 0.0 if growth <= clamp else growth
    return StabilityReport(eigenvalues=lam, max_growth=growth, stable=growth == 0.0)


def perturbation_from_matrix(s: np.ndarray, k: int, size: float = 1e-5):
    """Physical (dc, da) perturbation built from the dominant eigenvector.

    Folds the eigenvector of the maximally growing mode back onto a physical
    field fluctuation; falls back to a deterministic pseudo-random direction
    when the folded vector degenerates.
    """
    lam, vecs = np.linalg.eig(s)
    v = vecs[:, int(np.argmax(lam.imag))]
    dc = v[:k] + np.conj(v[k : 2 * k])
    da = v[2 * k] + np.conj(v[2 * k + 1])
    norm = np.sqrt(np.sum(np.abs(dc) ** 2) + abs(da) ** 2)
    if norm < 1e-12:
        rng = np.random.default_rng(7)
        dc = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        da = complex(rng.standard_normal() + 1j * rng.standard_normal())
        norm = np.sqrt(np.sum(np.abs(dc) ** 2) + abs(da) ** 2)
    return dc * (size / norm), da * (size / norm)


def departs_in_time(
    ss: SteadyState,
    params: ModelParams,
    t_end: float = 500.0,
    size: float = 1e-5,
    threshold: float = 1e-3,
) -> bool:
    """Time-domain instability check: does a small kick grow past threshold?

    Perturbs the stationary state along the dominant linear mode, evolves the
    full nonlinear equations, and reports whether theta ever departs from its
    stationary value by more than ``threshold``.
    """
    from .dynamics import IntegratorConfig, evolve_meanfield
    from .model import CondensateState, SystemState

    s = build_stability_matrix(ss, params)
    dc, da = perturbation_from_matrix(s, params.n_modes, size)
    c = ss.condensate.c + dc
    c = c / np.sqrt(np.sum(np.abs(c) ** 2))
    state = SystemState(CondensateState(c), ss.a + da, 0.0)
    cfg = IntegratorConfig(t_end=t_end, stride=0.1, alarm_threshold=np.inf)
    traj = evolve_meanfield(state, params, cfg)
    return bool(np.max(np.abs(traj.theta - ss.theta)) > threshold)
