import numpy as np
import pytest

import cavitybec as cb

from conftest import dot_params, evolve_seeded, random_normalized_modes


def test_rhs_homogeneous_is_phase_only():
    p = cb.ModelParams(delta_c=9, eta=5.0)
    state = cb.SystemState(cb.CondensateState.homogeneous(p.n_max), 0.0, 0.0)
    dc, da = cb.coupled_rhs(state, p)
    # theta = 0 and a = 0: cavity stays dark, condensate picks up no gradient
    assert da == 0.0
    assert np.max(np.abs(dc)) == pytest.approx(0.0, abs=1e-15)


def test_rhs_pump_matrix_element():
    # for real a the neighbor coupling is -i * eta * a * c_0 (cos expansion
    # carries the 1/2 that cancels the a + a* doubling)
    p = cb.ModelParams(delta_c=9, eta=6.4)
    state = cb.SystemState(cb.CondensateState.homogeneous(p.n_max), 0.25, 0.0)
    dc, _ = cb.coupled_rhs(state, p)
    assert dc[p.n_max + 1] == pytest.approx(-1j * p.eta * 0.25, abs=1e-14)
    assert dc[p.n_max - 1] == pytest.approx(-1j * p.eta * 0.25, abs=1e-14)


def test_rhs_coupling_matrix_hermitian():
    rng = np.random.default_rng(11)
    p = cb.ModelParams(delta_c=9, eta=6.4)
    c = random_normalized_modes(rng, p.n_max)
    m = cb.build_coupling_matrix(0.3 - 0.2j, p)
    assert np.max(np.abs(m - m.conj().T)) == 0.0
    assert abs(np.vdot(c, m @ c).imag) < 1e-12


def test_rhs_kernel_matches_public_with_interaction():
    rng = np.random.default_rng(12)
    from cavitybec import _kernels as K

    p = cb.ModelParams(delta_c=9, eta=6.4, g1d=0.5)
    c = random_normalized_modes(rng, p.n_max)
    a = complex(0.31, -0.17)
    dc_pub, da_pub = cb.coupled_rhs(cb.SystemState(cb.CondensateState(c), a, 0.0), p)
    y = np.concatenate([c, [a]])
    out = np.empty_like(y)
    rho = np.zeros(4 * p.n_max + 1, dtype=np.complex128)
    K._drift(0.0, y, out, rho, p.n_max, p.u0n, p.eta, p.delta_c, p.kappa, p.g1d, 0.0)
    assert np.max(np.abs(out[:-1] - dc_pub)) < 1e-13
    assert abs(out[-1] - da_pub) < 1e-13


def test_cavity_decays_at_kappa_without_pump():
    p = cb.ModelParams(delta_c=9, eta=0.0)
    traj = evolve_seeded(p, t_end=1.0, stride=0.01)
    envelope = np.abs(traj.a[-1]) / np.abs(traj.a[0])
    assert envelope == pytest.approx(np.exp(-p.kappa * 1.0), rel=1e-2)
    assert np.max(np.abs(traj.theta)) < 1e-12


def test_norm_conserved_moderate_horizon():
    p = dot_params("II")
    traj = evolve_seeded(p, t_end=200.0)
    drift = abs(np.sum(np.abs(traj.final_state.condensate.c) ** 2) - 1.0)
    assert drift <= 1e-9


def test_z2_equivariance_of_evolution():
    p = dot_params("II")
    cfg = cb.IntegratorConfig(t_end=100.0)
    s0 = cb.SystemState.seeded(p, a0=1e-3)
    tr1 = cb.evolve_meanfield(s0, p, cfg)
    tr2 = cb.evolve_meanfield(cb.z2_transform(s0), p, cfg)
    assert np.max(np.abs(tr1.theta + tr2.theta)) <= 1e-6
    assert np.max(np.abs(tr1.intensity - tr2.intensity)) <= 1e-6
    assert np.max(np.abs(tr1.a + tr2.a)) <= 1e-6


def test_global_phase_gauge_invariance():
    p = dot_params("I")
    s0 = cb.SystemState.seeded(p, a0=1e-3)
    phase = np.exp(1j * 0.7)
    s1 = cb.SystemState(cb.CondensateState(phase * s0.condensate.c), s0.a, 0.0)
    cfg = cb.IntegratorConfig(t_end=500.0)
    tr0 = cb.evolve_meanfield(s0, p, cfg)
    tr1 = cb.evolve_meanfield(s1, p, cfg)
    for name in ("intensity", "theta", "bmean", "ekin"):
        assert np.max(np.abs(getattr(tr0, name) - getattr(tr1, name))) <= 1e-8, name


def test_trajectory_sampling_uniform_and_monotone():
    p = dot_params("I")
    traj = evolve_seeded(p, t_end=5.0, stride=0.05)
    dt = np.diff(traj.times)
    assert np.all(dt > 0)
    assert np.allclose(dt, 0.05, rtol=1e-9)
    assert traj.intensity.size == traj.times.size
    assert np.all(traj.intensity >= 0)


def test_adiabatic_following_in_s_phase(dot_trajectories):
    traj = dot_trajectories["I"]
    p = dot_params("I")
    sl = traj.window(1500.0, 2000.0)
    a_pred = np.array(
        [
            cb.adiabatic_cavity(th, bm, p)
            for th, bm in zip(traj.theta[sl][::200], traj.bmean[sl][::200])
        ]
    )
    a_actual = traj.a[sl][::200]
    rel = np.abs(a_actual - a_pred) / np.abs(a_actual)
    assert np.max(rel) < 0.05


def test_momentum_locality_nonchaotic(dot_trajectories):
    for dot in ("I", "II", "III"):
        traj = dot_trajectories[dot]
        sl = traj.window(1500.0, 2000.0)
        assert np.max(traj.boundary[sl]) < 1e-6, dot
        assert traj.alarm_time is None, dot


def test_truncation_alarm_warns():
    p = dot_params("II", n_max=4, grid_points=16)
    s0 = cb.SystemState.seeded(p, a0=1e-3)
    with pytest.warns(cb.TruncationAlarm):
        cb.evolve_meanfield(s0, p, cb.IntegratorConfig(t_end=50.0, alarm_threshold=1e-10))


def test_ramped_pump_reaches_same_attractor():
    p = dot_params("I")
    ramped = evolve_seeded(p, t_end=400.0, ramp_time=50.0)
    direct = evolve_seeded(p, t_end=400.0)
    assert ramped.intensity[-1] == pytest.approx(direct.intensity[-1], rel=1e-3)


def test_phase_slips_absent_for_homogeneous():
    c = cb.CondensateState.homogeneous(8)
    assert cb.detect_phase_slips(c, 128, 1e-3) == []


def test_phase_slips_of_sine_mode():
    c = cb.CondensateState.from_modes(8, {1: 1 / np.sqrt(2), -1: -1 / np.sqrt(2)})
    slips = cb.detect_phase_slips(c, 256, 1e-4)
    assert len(slips) == 2
    xs = sorted(s.x for s in slips)
    assert xs[0] == pytest.approx(0.0, abs=0.1) or xs[0] == pytest.approx(
        cb.DOMAIN_LENGTH, abs=0.1
    )
    assert xs[1] == pytest.approx(np.pi, abs=0.1)
    for s in slips:
        assert abs(abs(s.phase_jump) - np.pi) <= 0.2


def test_phase_slips_need_density_zero():
    c = cb.CondensateState.from_modes(8, {0: 0.99, 1: np.sqrt(1 - 0.99**2)})
    g = 128
    rho = cb.density_profile(c, g)
    floor = 1e-3
    assert rho.min() > floor  # density never dips: oracle for the empty answer
    assert cb.detect_phase_slips(c, g, floor) == []


def test_snapshot_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    c = random_normalized_modes(rng, 6)
    state = cb.SystemState(cb.CondensateState(c), complex(0.12, -0.98), 17.25)
    path = tmp_path / "state.bin"
    cb.save_snapshot(state, path)
    loaded = cb.load_snapshot(path)
    assert np.array_equal(loaded.condensate.c, state.condensate.c)
    assert loaded.a == state.a
    assert loaded.t == state.t


def test_snapshot_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + b"\0" * 64)
    with pytest.raises(cb.ParameterError):
        cb.load_snapshot(path)


def test_trajectory_csv_export(tmp_path):
    p = dot_params("I")
    traj = evolve_seeded(p, t_end=2.0, stride=0.1)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    text = path.read_text().splitlines()
    assert text[0].startswith("# units:")
    assert "intensity" in text[1]
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    assert data.shape == (traj.times.size, 12)
    assert np.allclose(data[:, 0], traj.times)


def test_restart_from_snapshot_continues(tmp_path):
    p = dot_params("I")
    full = evolve_seeded(p, t_end=20.0, stride=0.1)
    half = evolve_seeded(p, t_end=10.0, stride=0.1)
    path = tmp_path / "ck.bin"
    cb.save_snapshot(half.final_state, path)
    resumed = cb.evolve_meanfield(
        cb.load_snapshot(path), p, cb.IntegratorConfig(t_end=20.0, stride=0.1)
    )
    i_full = full.intensity[full.window(10.0, 20.0)]
    i_res = resumed.intensity[resumed.window(10.0, 20.0)]
    assert np.max(np.abs(i_full - i_res)) < 1e-8
