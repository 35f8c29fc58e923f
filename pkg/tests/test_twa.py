import dataclasses

import numpy as np
import pytest

import cavitybec as cb

from conftest import dot_params, evolve_seeded


@pytest.fixture()
def params():
    return dot_params("I")


def test_wigner_sampling_mean_recovers_seed(params):
    rng = np.random.default_rng(10)
    draws = [cb.sample_wigner_initial(params, rng) for _ in range(10_000)]
    c_mean = np.mean([d.condensate.c for d in draws], axis=0)
    n = params.atom_number
    sse = np.sqrt(1.0 / (4 * n) / len(draws))  # standard error per quadrature
    m = params.n_max
    assert abs(c_mean[m] - 1.0) < 20 * sse  # zero-mode dominates, small norm bias
    off = np.delete(c_mean, m)
    assert np.max(np.abs(off.real)) < 4 * sse
    assert np.max(np.abs(off.imag)) < 4 * sse


def test_wigner_sampling_cavity_variance(params):
    rng = np.random.default_rng(11)
    re_a = np.array([cb.sample_wigner_initial(params, rng).a.real for _ in range(100_000)])
    assert re_a.var() == pytest.approx(1.0 / (4 * params.atom_number), rel=0.05)
    assert re_a.mean() == pytest.approx(1e-3, abs=4 * re_a.std() / np.sqrt(re_a.size))


def test_wigner_large_n_limit(params):
    rng = np.random.default_rng(12)
    big = params.with_(atom_number=1e12)
    d = cb.sample_wigner_initial(big, rng)
    assert abs(d.condensate.amplitude(0) - 1.0) < 1e-5
    assert abs(d.a - 1e-3) < 1e-4


def test_noise_increment_variance(params):
    rng = np.random.default_rng(13)
    dt = 2e-4
    n = 1_000_000
    s = np.sqrt(params.kappa * dt / (2.0 * params.atom_number))
    g = rng.standard_normal(2 * n)
    incs = s * (g[0::2] + 1j * g[1::2])
    ratio = np.mean(np.abs(incs) ** 2) / (params.kappa * dt / params.atom_number)
    assert 0.99 <= ratio <= 1.01
    # circular symmetry: non-conjugate second moment vanishes
    second = np.mean(incs**2)
    assert abs(second) < 4 * np.mean(np.abs(incs) ** 2) / np.sqrt(n)


def test_noise_increment_scales_with_dt(params):
    rng = np.random.default_rng(14)
    v1 = np.mean([abs(cb.noise_increment(rng, 2e-4, params)) ** 2 for _ in range(50_000)])
    v2 = np.mean([abs(cb.noise_increment(rng, 1e-4, params)) ** 2 for _ in range(50_000)])
    assert v1 / v2 == pytest.approx(2.0, rel=0.05)


def test_noise_increment_rejects_bad_dt(params):
    with pytest.raises(cb.ParameterError):
        cb.noise_increment(np.random.default_rng(0), 0.0, params)


def _small_cfg(**kw):
    base = dict(
        n_traj=6,
        master_seed=99,
        t_end=40.0,
        stride=0.25,
        window=(20.0, 40.0),
        n_workers=1,
    )
    base.update(kw)
    return cb.EnsembleConfig(**base)


def test_ensemble_bitwise_reproducible(params):
    s1 = cb.run_ensemble(params, _small_cfg())
    s2 = cb.run_ensemble(params, _small_cfg())
    assert np.array_equal(s1.mean_intensity, s2.mean_intensity)
    assert np.array_equal(s1.mean_spectrum, s2.mean_spectrum)
    assert np.array_equal(s1.terminal_mean_intensity, s2.terminal_mean_intensity)


def test_ensemble_worker_count_invariant(params):
    s1 = cb.run_ensemble(params, _small_cfg(n_workers=1))
    s2 = cb.run_ensemble(params, _small_cfg(n_workers=2))
    assert np.array_equal(s1.mean_intensity, s2.mean_intensity)
    assert np.array_equal(s1.mean_theta, s2.mean_theta)


def test_ensemble_noiseless_limit_matches_meanfield(params):
    cfg = _small_cfg(
        n_traj=1, include_initial_noise=False, include_dynamical_noise=False, t_end=50.0
    )
    stats = cb.run_ensemble(params, cfg)
    traj = evolve_seeded(params, t_end=50.0, stride=0.25)
    assert np.max(np.abs(stats.mean_intensity - traj.intensity)) < 1e-5


def test_ensemble_error_bars_shrink_like_sqrt_n(params):
    cfg_small = _small_cfg(n_traj=8, t_end=30.0, window=(15.0, 30.0))
    cfg_large = _small_cfg(n_traj=32, t_end=30.0, window=(15.0, 30.0))
    s_small = cb.run_ensemble(params, cfg_small)
    s_large = cb.run_ensemble(params, cfg_large)
    sl = slice(80, 121)  # stationary segment
    ratio = np.median(s_small.sem_intensity[sl] / s_large.sem_intensity[sl])
    assert ratio == pytest.approx(2.0, rel=0.5)


def test_ensemble_initial_noise_only_keeps_oscillation_phase_spread():
    p = dot_params("II")
    cfg = _small_cfg(
        n_traj=4,
        t_end=300.0,
        window=(150.0, 300.0),
        include_dynamical_noise=False,
    )
    stats = cb.run_ensemble(p, cfg)
    # single trajectories keep oscillating; check the mean spectrum peak is at
    # the mean-field frequency even with initial noise on
    traj = evolve_seeded(p, t_end=300.0, stride=0.25)
    ref = cb.dominant_frequency(traj.times[600:], traj.intensity[600:])
    k = int(np.argmax(stats.mean_spectrum))
    got = stats.spectrum_freqs[k]
    assert got == pytest.approx(ref, rel=0.05)


def test_ensemble_config_validation():
    with pytest.raises(cb.ParameterError):
        cb.EnsembleConfig(n_traj=0).validated()
    with pytest.raises(cb.ParameterError):
        cb.EnsembleConfig(stride=0.25, dt=3e-4).validated()
    with pytest.raises(cb.ParameterError):
        cb.EnsembleConfig(window=(100.0, 50.0)).validated()
