"""Compiled inner loops shared by the dynamics, steady-state and TWA drivers.

Everything here works on a packed state vector ``y`` of length ``2*n_max+2``:
the first ``2*n_max+1`` entries are the plane-wave amplitudes ``c_n`` in
ascending ``n`` order, the last entry is the normalized cavity amplitude.

The cubic interaction is evaluated as the exact Galerkin double convolution,
which for band-limited states is identical to the anti-aliased pseudo-spectral
product used by the public API (cross-checked in the tests).

Observable rows written by the samplers (column layout, see OBS_* constants):
intensity, theta, bmean, kinetic energy, Re/Im chi_1, Re/Im chi_2,
Re/Im a, boundary occupation.
"""

import numpy as np
from numba import njit

N_OBS = 11
OBS_INTENSITY = 0
OBS_THETA = 1
OBS_BMEAN = 2
OBS_EKIN = 3
OBS_RECHI1 = 4
OBS_IMCHI1 = 5
OBS_RECHI2 = 6
OBS_IMCHI2 = 7
OBS_REA = 8
OBS_IMA = 9
OBS_BOUNDARY = 10

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_MAXSTEPS = 3


@njit(cache=True)
def _order_params(c):
    k = c.size
    th = 0.0
    bm = 0.0
    for i in range(k - 1):
        th += (c[i].conjugate() * c[i + 1]).real
    for i in range(k - 2):
        bm += (c[i].conjugate() * c[i + 2]).real
    return th, 0.5 + 0.5 * bm


@njit(cache=True)
def _apply_coupling(c, out, n_max, diag_shift, d1, d2):
    # out = [(n^2 + diag_shift) delta0 + d1 delta1 + d2 delta2] c
    k = 2 * n_max + 1
    for i in range(k):
        n = i - n_max
        acc = (n * n + diag_shift) * c[i]
        if i >= 1:
            acc += d1 * c[i - 1]
        if i + 1 < k:
            acc += d1 * c[i + 1]
        if i >= 2:
            acc += d2 * c[i - 2]
        if i + 2 < k:
            acc += d2 * c[i + 2]
        out[i] = acc


@njit(cache=True)
def _add_cubic(c, out, rho, n_max, g1d):
    # out += g1d * (|phi|^2 phi)_n via rho_m = sum_k c_k c*_{k-m}
    two = 2 * n_max
    for m in range(-two, two + 1):
        s = 0.0 + 0.0j
        klo = -n_max if m < 0 else m - n_max
        khi = n_max if m > 0 else m + n_max
        for kk in range(klo, khi + 1):
            s += c[kk + n_max] * c[kk - m + n_max].conjugate()
        rho[m + two] = s
    for n in range(-n_max, n_max + 1):
        s = 0.0 + 0.0j
        for m in range(n - n_max, n + n_max + 1):
            s += rho[m + two] * c[n - m + n_max]
        out[n + n_max] += g1d * s


@njit(cache=True)
def _drift(t, y, out, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time):
    k = 2 * n_max + 1
    eta_t = eta
    if ramp_time > 0.0 and t < ramp_time:
        eta_t = eta * (t / ramp_time)
    a = y[k]
    inten = a.real * a.real + a.imag * a.imag
    d0 = 0.5 * u0n * inten
    d1 = eta_t * a.real  # (eta/2)(a + a*)
    d2 = 0.25 * u0n * inten
    _apply_coupling(y[:k], out[:k], n_max, d0, d1, d2)
    if g1d != 0.0:
        _add_cubic(y[:k], out[:k], rho, n_max, g1d)
    th, bm = _order_params(y[:k])
    out[k] = (delta_c + u0n * bm - 1j * kappa) * a + eta_t * th
    for i in range(k + 1):
        out[i] = -1j * out[i]


@njit(cache=True)
def _record_obs(y, n_max, obs, row):
    k = 2 * n_max + 1
    a = y[k]
    th, bm = _order_params(y[:k])
    ek = 0.0
    for i in range(k):
        n = i - n_max
        ek += n * n * (y[i].real * y[i].real + y[i].imag * y[i].imag)
    c0 = y[n_max]
    chi1 = c0 * (y[n_max + 1].conjugate() + y[n_max - 1].conjugate())
    chi2 = c0 * (y[n_max + 2].conjugate() + y[n_max - 2].conjugate())
    lo = y[0].real * y[0].real + y[0].imag * y[0].imag
    hi = y[k - 1].real * y[k - 1].real + y[k - 1].imag * y[k - 1].imag
    obs[row, OBS_INTENSITY] = a.real * a.real + a.imag * a.imag
    obs[row, OBS_THETA] = th
    obs[row, OBS_BMEAN] = bm
    obs[row, OBS_EKIN] = ek
    obs[row, OBS_RECHI1] = chi1.real
    obs[row, OBS_IMCHI1] = chi1.imag
    obs[row, OBS_RECHI2] = chi2.real
    obs[row, OBS_IMCHI2] = chi2.imag
    obs[row, OBS_REA] = a.real
    obs[row, OBS_IMA] = a.imag
    obs[row, OBS_BOUNDARY] = lo if lo > hi else hi


@njit(cache=True)
def _all_finite(y):
    for i in range(y.size):
        v = y[i]
        if not (np.isfinite(v.real) and np.isfinite(v.imag)):
            return False
    return True


# Dormand-Prince 5(4) tableau.
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_H_MIN = 1e-13


@njit(cache=True)
def integrate_adaptive(
    y,
    t0,
    sample_times,
    rtol,
    atol,
    n_max,
    u0n,
    eta,
    delta_c,
    kappa,
    g1d,
    ramp_time,
    obs,
    states,
    state_every,
    alarm_threshold,
    max_steps,
):
    """Adaptive embedded Runge-Kutta drive, sampling exactly at sample_times.

    ``y`` is advanced in place to the final sample time. ``obs`` must have
    shape (len(sample_times), N_OBS); ``states`` either (0, 0) when state
    storage is off or (ceil(n_samples / state_every), len(y)).

    Returns (status, n_steps, alarm_time) where alarm_time is the first
    sample time at which the edge-mode occupation exceeded alarm_threshold
    (-1.0 when it never did).
    """
    dim = y.size
    k = dim - 1
    rho = np.zeros(4 * n_max + 1, dtype=np.complex128)
    k1 = np.empty(dim, dtype=np.complex128)
    k2 = np.empty(dim, dtype=np.complex128)
    k3 = np.empty(dim, dtype=np.complex128)
    k4 = np.empty(dim, dtype=np.complex128)
    k5 = np.empty(dim, dtype=np.complex128)
    k6 = np.empty(dim, dtype=np.complex128)
    k7 = np.empty(dim, dtype=np.complex128)
    ytmp = np.empty(dim, dtype=np.complex128)
    ynew = np.empty(dim, dtype=np.complex128)

    t = t0
    h_prop = 1e-4
    n_steps = 0
    alarm_time = -1.0
    _drift(t, y, k1, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time)

    for s in range(sample_times.size):
        tt = sample_times[s]
        while tt - t > 1e-12:
            if n_steps >= max_steps:
                return STATUS_MAXSTEPS, n_steps, alarm_time
            h = h_prop
            clipped = False
            if t + h > tt:
                h = tt - t
                clipped = True

            while True:
                # stages (k1 holds f(t, y) via FSAL)
                for i in range(dim):
                    ytmp[i] = y[i] + h * (_A21 * k1[i])
                _drift(t + _C2 * h, ytmp, k2, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time)
                for i in range(dim):
                    ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
                _drift(t + _C3 * h, ytmp, k3, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time)
                for i in range(dim):
                    ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
                _drift(t + _C4 * h, ytmp, k4, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time)
                for i in range(dim):
                    ytmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
                _drift(t + _C5 * h, ytmp, k5, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time)
                for i in range(dim):
                    ytmp[i] = y[i] + h * (
                        _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
                    )
                _drift(t + h, ytmp, k6, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time)
                for i in range(dim):
                    ynew[i] = y[i] + h * (
                        _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
                    )
                _drift(t + h, ynew, k7, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time)

                finite = _all_finite(ynew)
                err = 2.0
                if finite:
                    acc = 0.0
                    for i in range(dim):
                        e = h * (
                            _E1 * k1[i]
                            + _E3 * k3[i]
                            + _E4 * k4[i]
                            + _E5 * k5[i]
                            + _E6 * k6[i]
                            + _E7 * k7[i]
                        )
                        ay = abs(y[i])
                        an = abs(ynew[i])
                        sc = atol + rtol * (ay if ay > an else an)
                        q = abs(e) / sc
                        acc += q * q
                    err = np.sqrt(acc / dim)

                n_steps += 1
                if err <= 1.0:
                    t = t + h
                    for i in range(dim):
                        y[i] = ynew[i]
                        k1[i] = k7[i]
                    if err <= 1e-30:
                        fac = 5.0
                    else:
                        fac = 0.9 * err ** (-0.2)
                        if fac > 5.0:
                            fac = 5.0
                        elif fac < 0.2:
                            fac = 0.2
                    if not clipped:
                        h_prop = h * fac
                    break
                # rejected
                if not finite:
                    fac = 0.25
                else:
                    fac = 0.9 * err ** (-0.2)
                    if fac < 0.1:
                        fac = 0.1
                h = h * fac
                clipped = False
                h_prop = h
                if h < _H_MIN:
                    return (STATUS_NONFINITE if not finite else STATUS_UNDERFLOW), n_steps, alarm_time
                if n_steps >= max_steps:
                    return STATUS_MAXSTEPS, n_steps, alarm_time

        t = tt
        _record_obs(y, n_max, obs, s)
        if alarm_time < 0.0 and obs[s, OBS_BOUNDARY] > alarm_threshold:
            alarm_time = tt
        if state_every > 0 and s % state_every == 0:
            row = s // state_every
            for i in range(dim):
                states[row, i] = y[i]

    return STATUS_OK, n_steps, alarm_time


@njit(cache=True)
def integrate_sde_block(
    y,
    t0,
    dt,
    per,
    n_iter,
    noise,
    obs,
    row0,
    n_rows,
    n_max,
    u0n,
    eta,
    delta_c,
    kappa,
    g1d,
    ramp_time,
):
    """Fixed-step semi-implicit midpoint drift + additive cavity noise.

    Advances ``n_rows`` output strides of ``per`` steps each; ``noise`` holds
    one pre-scaled complex increment per step (length n_rows*per). Observables
    are written to rows row0..row0+n_rows-1 after each stride. Returns
    (status, t_end).
    """
    dim = y.size
    k = dim - 1
    rho = np.zeros(4 * n_max + 1, dtype=np.complex128)
    f = np.empty(dim, dtype=np.complex128)
    ymid = np.empty(dim, dtype=np.complex128)
    idx = 0
    cnt = 0
    for r in range(n_rows):
        for _ in range(per):
            t_mid = t0 + (cnt + 0.5) * dt
            for i in range(dim):
                ymid[i] = y[i]
            for _it in range(n_iter):
                _drift(t_mid, ymid, f, rho, n_max, u0n, eta, delta_c, kappa, g1d, ramp_time)
                for i in range(dim):
                    ymid[i] = y[i] + 0.5 * dt * f[i]
            for i in range(dim):
                y[i] = y[i] + dt * f[i]
            y[k] = y[k] + noise[idx]
            idx += 1
            cnt += 1
        if not _all_finite(y):
            return STATUS_NONFINITE, t0 + cnt * dt
        _record_obs(y, n_max, obs, row0 + r)
    return STATUS_OK, t0 + cnt * dt


@njit(cache=True)
def relax_imaginary(
    c,
    n_max,
    u0n,
    eta,
    delta_c,
    kappa,
    g1d,
    dtau,
    tol,
    max_steps,
    mixing,
    settle_hits,
):
    """Imaginary-time relaxation with the cavity eliminated adiabatically.

    ``c`` is relaxed in place (renormalized every step); the cavity amplitude
    is re-evaluated from the instantaneous order parameters each step, blended
    with factor ``mixing`` (1.0 = fully explicit update). Convergence requires
    ``settle_hits`` consecutive steps whose (theta, bmean, mu) drift is below
    ``tol`` and whose phase-removed real-time drift max|Mc - mu c| is below
    ``5*tol``. Returns (converged, steps, theta, bmean, mu, a).
    """
    k = 2 * n_max + 1
    mc = np.empty(k, dtype=np.complex128)
    rho = np.zeros(4 * n_max + 1, dtype=np.complex128)
    a = 0.0 + 0.0j
    th_p = 1e300
    bm_p = 1e300
    mu_p = 1e300
    hits = 0
    th = 0.0
    bm = 0.5
    mu = 0.0
    steps = 0
    for step in range(max_steps):
        steps = step + 1
        th, bm = _order_params(c)
        deff = delta_c + u0n * bm
        a_new = -eta * th / (deff - 1j * kappa)
        a = a + mixing * (a_new - a)
        inten = a.real * a.real + a.imag * a.imag
        d0 = 0.5 * u0n * inten
        d1 = eta * a.real
        d2 = 0.25 * u0n * inten
        _apply_coupling(c, mc, n_max, d0, d1, d2)
        if g1d != 0.0:
            _add_cubic(c, mc, rho, n_max, g1d)
        mu = 0.0
        for i in range(k):
            mu += (c[i].conjugate() * mc[i]).real
        res = 0.0
        for i in range(k):
            d = mc[i] - mu * c[i]
            m = d.real * d.real + d.imag * d.imag
            if m > res:
                res = m
        res = np.sqrt(res)
        if (
            res < 5.0 * tol
            and abs(th - th_p) < tol
            and abs(bm - bm_p) < tol
            and abs(mu - mu_p) < tol
        ):
            hits += 1
            if hits >= settle_hits:
                return True, steps, th, bm, mu, a
        else:
            hits = 0
        th_p = th
        bm_p = bm
        mu_p = mu
        nr = 0.0
        for i in range(k):
            c[i] = c[i] - dtau * mc[i]
            nr += c[i].real * c[i].real + c[i].imag * c[i].imag
        inv = 1.0 / np.sqrt(nr)
        for i in range(k):
            c[i] = c[i] * inv
    return False, steps, th, bm, mu, a


@njit(cache=True)
def probe_imaginary_growth(
    c,
    n_max,
    u0n,
    eta,
    delta_c,
    kappa,
    g1d,
    dtau,
    n_steps,
    record_every,
    theta_out,
):
    """Fixed-length imaginary-time run recording |theta| every record_every steps.

    Used to decide whether an infinitesimal grating seed grows (above the
    organization threshold) or decays (below) without waiting for full
    convergence, which slows down critically near the threshold.
    """
    k = 2 * n_max + 1
    mc = np.empty(k, dtype=np.complex128)
    rho = np.zeros(4 * n_max + 1, dtype=np.complex128)
    a = 0.0 + 0.0j
    row = 0
    for step in range(n_steps):
        th, bm = _order_params(c)
        if step % record_every == 0 and row < theta_out.size:
            theta_out[row] = abs(th)
            row += 1
        deff = delta_c + u0n * bm
        a = -eta * th / (deff - 1j * kappa)
        inten = a.real * a.real + a.imag * a.imag
        d0 = 0.5 * u0n * inten
        d1 = eta * a.real
        d2 = 0.25 * u0n * inten
        _apply_coupling(c, mc, n_max, d0, d1, d2)
        if g1d != 0.0:
            _add_cubic(c, mc, rho, n_max, g1d)
        nr = 0.0
        for i in range(k):
            c[i] = c[i] - dtau * mc[i]
            nr += c[i].real * c[i].real + c[i].imag * c[i].imag
        inv = 1.0 / np.sqrt(nr)
        for i in range(k):
            c[i] = c[i] * inv
    return row
