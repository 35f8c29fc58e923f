"""Long-time phase classification and orbit diagnostics.

The five labels: N (empty cavity, static homogeneous condensate), S (constant
superradiant intensity), SL (superradiant limit cycle), AL (atomic limit
cycle: empty cavity, grating oscillating through even-momentum interference),
C (chaos). SL and C are separated by the inverse participation ratio of the
intensity power spectrum.

For limit cycles essentially all spectral weight sits in a handful of lines,
but a rectangular window whose length is incommensurate with the cycle leaks
tone power across bins and destroys that concentration. ``intensity_spectrum``
therefore crops the analysis window to a whole number of dominant periods
(measured from a first-pass transform) before the final transform, which pins
the lines onto bins without touching broadband signals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .errors import (
    DegenerateSpectrum,
    IncompatibleOrbits,
    MissingObservable,
    NonuniformSampling,
    TrajectoryTooShort,
    WindowTooShort,
)
from .dynamics import Trajectory
from .model import ModelParams

PHASES = ("N", "S", "SL", "AL", "C")


@dataclass(frozen=True)
class IntensitySpectrum:
    """One-sided unit-normalized power of the mean-subtracted signal."""

    freqs: np.ndarray
    power: np.ndarray
    window: tuple
    degenerate: bool

    def dominant_frequency(self) -> float:
        if self.degenerate:
            raise DegenerateSpectrum("spectrum carries no power")
        return float(self.freqs[int(np.argmax(self.power))])


def _uniform_dt(times: np.ndarray) -> float:
    dt = np.diff(times)
    if dt.size == 0:
        raise WindowTooShort("window contains fewer than two samples")
    if not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-12):
        raise NonuniformSampling("sample spacing varies inside the window")
    return float(dt[0])


def _refined_peak_bin(x: np.ndarray) -> float:
    """Fractional peak-bin location of a mean-free real series.

    Jacobsen's complex-bin estimator corrects the argmax bin for the
    fractional offset of a rectangular-window tone.
    """
    spec = np.fft.rfft(x)
    amp = np.abs(spec)
    if amp.size < 3 or np.max(amp[1:]) <= 0.0:
        raise DegenerateSpectrum("no oscillation in series")
    k = int(np.argmax(amp[1:])) + 1
    delta = 0.0
    if 1 <= k < amp.size - 1:
        denom = 2.0 * spec[k] - spec[k - 1] - spec[k + 1]
        if abs(denom) > 0:
            delta = float(np.clip(((spec[k - 1] - spec[k + 1]) / denom).real, -0.5, 0.5))
    return k + delta


def dominant_frequency(times: np.ndarray, series: np.ndarray) -> float:
    """Dominant angular frequency of a real series (refined peak bin)."""
    dt = _uniform_dt(times)
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    kf = _refined_peak_bin(x)
    return 2.0 * np.pi * kf / (x.size * dt)


def intensity_spectrum(
    traj: Trajectory,
    window: tuple = (1500.0, 2000.0),
    series: Optional[np.ndarray] = None,
    lock_period: bool = True,
    min_length: float = 50.0,
) -> IntensitySpectrum:
    """Power spectrum of the cavity intensity over an analysis window.

    ``series`` overrides the signal (same sampling as the trajectory).
    ``lock_period=False`` skips the whole-period cropping (used when spectra
    from many trajectories must share bins).
    """
    sl = traj.window(*window)
    times = traj.times[sl]
    x = (traj.intensity if series is None else np.asarray(series, float))[sl]
    if times.size < 2 or times[-1] - times[0] < min_length:
        raise WindowTooShort(
            f"window [{window[0]}, {window[1]}] spans less than {min_length} recoil times"
        )
    dt = _uniform_dt(times)
    x = x - x.mean()

    scale = max(float(np.max(np.abs(x))), 0.0)
    level = float(np.mean(np.abs(traj.intensity[sl]))) if series is None else float(np.mean(np.abs(x)))
    if scale <= 1e-14 * max(level, 1.0):
        freqs = 2.0 * np.pi * np.fft.rfftfreq(x.size, dt)[1:]
        return IntensitySpectrum(freqs, np.zeros_like(freqs), (times[0], times[-1]), True)

    n_keep = x.size
    if lock_period:
        # two passes: estimate the tone, crop to whole periods, re-estimate
        for _ in range(2):
            seg = x[:n_keep] - x[:n_keep].mean()
            try:
                kf = _refined_peak_bin(seg)
            except DegenerateSpectrum:
                break
            period = n_keep * dt / kf
            m = int(np.floor((n_keep - 1) * dt / period))
            if m < 3:
                break
            n_new = int(round(m * period / dt)) + 1
            if 16 <= n_new <= x.size:
                n_keep = n_new
    xw = x[:n_keep] - x[:n_keep].mean()
    power = np.abs(np.fft.rfft(xw)) ** 2
    power = power[1:]
    freqs = 2.0 * np.pi * np.fft.rfftfreq(n_keep, dt)[1:]
    total = power.sum()
    if total <= 0.0:
        return IntensitySpectrum(freqs, np.zeros_like(power), (times[0], times[n_keep - 1]), True)
    return IntensitySpectrum(freqs, power / total, (times[0], times[n_keep - 1]), False)


def spectral_ipr(spec: IntensitySpectrum) -> float:
    """Inverse participation ratio of the unit-normalized power.

    One occupied bin gives 1, K equally occupied bins give 1/K; limit cycles
    sit near 1 and chaos well below 1/2.
    """
    if spec.degenerate:
        raise DegenerateSpectrum("all-zero power spectrum")
    total = spec.power.sum()
    if total <= 0.0:
        raise DegenerateSpectrum("all-zero power spectrum")
    p = spec.power / total
    return float(np.sum(p * p))


@dataclass(frozen=True)
class ClassifyRules:
    """Decision thresholds for the long-time labels."""

    window: tuple = (1500.0, 2000.0)
    intensity_floor: float = 1e-3
    constancy_rel_std: float = 1e-3
    activity_std: float = 1e-4
    ipr_split: float = 0.5
    low_confidence_band: float = 0.1


@dataclass(frozen=True)
class PhaseLabel:
    """Label plus the diagnostics the decision was based on."""

    label: str
    ipr: float
    mean_intensity: float
    intensity_rel_std: float
    theta_std: float
    chi2_std: float
    dominant_frequency: float
    confident: bool
    window: tuple


def classify_phase(
    traj: Trajectory,
    params: Optional[ModelParams] = None,
    rules: ClassifyRules = ClassifyRules(),
) -> PhaseLabel:
    """Label the long-time dynamics of a trajectory.

    Decision order: intensity floor first (N/AL candidates), then the
    static-vs-oscillating atomic test, then the intensity constancy test (S),
    and finally the spectral IPR split between SL and C.
    """
    t0, t1 = rules.window
    if traj.times[-1] < t1 - 1e-9:
        raise TrajectoryTooShort(
            f"trajectory ends at t={traj.times[-1]:g} before the analysis window [{t0}, {t1}]"
        )
    sl = traj.window(t0, t1)
    inten = traj.intensity[sl]
    theta = traj.theta[sl]
    chi2 = traj.chi_series(2)[sl]
    mean_i = float(inten.mean())
    rel_std = float(inten.std() / mean_i) if mean_i > 0 else 0.0
    theta_std = float(theta.std())
    chi2_std = float(np.sqrt(chi2.real.var() + chi2.imag.var()))

    ipr = float("nan")
    dom = float("nan")
    confident = True

    if mean_i < rules.intensity_floor:
        active = theta_std > rules.activity_std or chi2_std > rules.activity_std
        if active:
            label = "AL"
            src = chi2.real if chi2_std >= theta_std else theta
            try:
                dom = dominant_frequency(traj.times[sl], src)
            except DegenerateSpectrum:
                dom = float("nan")
        else:
            label = "N"
        margin = max(theta_std, chi2_std) / rules.activity_std
        confident = margin > 2.0 or margin < 0.5
    elif rel_std < rules.constancy_rel_std:
        label = "S"
    else:
        spec = intensity_spectrum(traj, rules.window)
        ipr = spectral_ipr(spec)
        dom = spec.dominant_frequency()
        label = "SL" if ipr >= rules.ipr_split else "C"
        confident = abs(ipr - rules.ipr_split) > rules.low_confidence_band

    return PhaseLabel(
        label=label,
        ipr=ipr,
        mean_intensity=mean_i,
        intensity_rel_std=rel_std,
        theta_std=theta_std,
        chi2_std=chi2_std,
        dominant_frequency=dom,
        confident=confident,
        window=(t0, t1),
    )


@dataclass(frozen=True)
class Orbit:
    """Sampled orbit of one momentum-space correlation chi_n."""

    n: int
    times: np.ndarray
    values: np.ndarray
    closure: float
    symmetry: float
    period: float
    extent: float
    degenerate: bool


def _points(values: np.ndarray, max_points: int = 2000) -> np.ndarray:
    step = max(1, values.size // max_points)
    v = values[::step]
    return np.column_stack([v.real, v.imag])


def _hausdorff(p: np.ndarray, q: np.ndarray) -> float:
    return max(directed_hausdorff(p, q)[0], directed_hausdorff(q, p)[0])


def chi_orbit(traj: Trajectory, n: int, window: tuple = (1500.0, 2000.0)) -> Orbit:
    """Extract the chi_n orbit over a window and its closure/symmetry metrics.

    Closure is the median distance between samples one estimated period
    apart, relative to the orbit extent (near zero for a limit cycle, order
    one for chaos; exactly zero for a fixed point). Symmetry is the Hausdorff
    distance between the orbit and its pointwise negation, again relative.
    """
    values = traj.chi_series(n)
    sl = traj.window(*window)
    times = traj.times[sl]
    v = values[sl]
    if v.size < 8:
        raise TrajectoryTooShort("window holds too few samples for an orbit")
    extent = float(np.max(np.abs(v)))
    wobble = float(np.max(np.abs(v - v.mean())))
    if extent < 1e-9 or wobble < 1e-4 * max(extent, 1e-12):
        return Orbit(n, times, v, 0.0, float("nan"), float("nan"), extent, True)

    dt = _uniform_dt(times)
    try:
        omega = dominant_frequency(times, v.real)
        period = 2.0 * np.pi / omega
    except DegenerateSpectrum:
        omega = dominant_frequency(times, v.imag)
        period = 2.0 * np.pi / omega
    if period / dt < 10 or period >= 0.5 * (times[-1] - times[0]):
        closure = float("nan")
    else:
        # recurrence distance after one period, interpolated off the grid
        t_shift = times + period
        keep = t_shift <= times[-1]
        vre = np.interp(t_shift[keep], times, v.real)
        vim = np.interp(t_shift[keep], times, v.imag)
        d = np.abs((vre + 1j * vim) - v[keep])
        closure = float(np.median(d) / extent)
    pts = _points(v)
    symmetry = float(_hausdorff(pts, -pts) / extent)
    return Orbit(n, times, v, closure, symmetry, period, extent, False)


@dataclass(frozen=True)
class MergingReport:
    """Outcome of comparing the two symmetry-related orbits."""

    merged: bool
    degenerate: bool
    gap: float
    symmetry: float
    theta_period: float
    intensity_period: float


def detect_merging(
    orbit_plus: Orbit,
    orbit_minus: Orbit,
    traj_plus: Optional[Trajectory] = None,
    traj_minus: Optional[Trajectory] = None,
    tol: float = 0.1,
) -> MergingReport:
    """Decide whether the two mirror-branch orbits have merged into one.

    Merged means the two point sets coincide (relative Hausdorff gap below
    ``tol``) and the common orbit is itself symmetric under negation. When
    the source trajectories are supplied, the dominant periods of theta and
    of the intensity are included so callers can verify the period-doubling
    signature across the merge.
    """
    if orbit_plus.n != orbit_minus.n:
        raise IncompatibleOrbits(f"orbits track chi_{orbit_plus.n} and chi_{orbit_minus.n}")
    if abs(orbit_plus.times[0] - orbit_minus.times[0]) > 1e-6 or orbit_plus.times.size != orbit_minus.times.size:
        raise IncompatibleOrbits("orbits cover different windows")
    theta_period = float("nan")
    intensity_period = float("nan")
    if traj_plus is not None:
        sl = traj_plus.window(orbit_plus.times[0], orbit_plus.times[-1])
        theta_period = 2.0 * np.pi / dominant_frequency(traj_plus.times[sl], traj_plus.theta[sl])
        intensity_period = 2.0 * np.pi / dominant_frequency(traj_plus.times[sl], traj_plus.intensity[sl])
    if orbit_plus.degenerate or orbit_minus.degenerate:
        return MergingReport(False, True, float("nan"), float("nan"), theta_period, intensity_period)
    scale = max(orbit_plus.extent, orbit_minus.extent)
    p = _points(orbit_plus.values)
    q = _points(orbit_minus.values)
    gap = float(_hausdorff(p, q) / scale)
    symmetry = max(orbit_plus.symmetry, orbit_minus.symmetry)
    merged = gap < tol and symmetry < tol
    return MergingReport(merged, False, gap, symmetry, theta_period, intensity_period)
