import warnings

import numpy as np
import pytest

import cavitybec as cb

#: parameter points marked in the phase diagram figure (delta_c = 9, u0n = -12)
DOT_ETAS = {"I": 5.2, "II": 6.4, "III": 8.8, "IV": 14.0}
DOT_LABELS = {"I": "S", "II": "SL", "III": "AL", "IV": "C"}


def dot_params(dot: str, **overrides) -> cb.ModelParams:
    base = dict(delta_c=9.0, u0n=-12.0, kappa=10.0, eta=DOT_ETAS[dot])
    base.update(overrides)
    return cb.ModelParams(**base)


def evolve_seeded(params, t_end=2000.0, a0=1e-3, **cfg_kwargs):
    state = cb.SystemState.seeded(params, a0=a0)
    cfg = cb.IntegratorConfig(t_end=t_end, **cfg_kwargs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", cb.TruncationAlarm)
        return cb.evolve_meanfield(state, params, cfg)


@pytest.fixture(scope="session")
def dot_trajectories():
    """Long trajectories at the four reference dots, shared across tests."""
    return {dot: evolve_seeded(dot_params(dot)) for dot in DOT_ETAS}


@pytest.fixture(scope="session")
def dot_steady_states():
    return {dot: cb.imaginary_time_solve(dot_params(dot)) for dot in ("I", "II")}


def random_normalized_modes(rng, n_max):
    c = rng.standard_normal(2 * n_max + 1) + 1j * rng.standard_normal(2 * n_max + 1)
    return c / np.linalg.norm(c)
