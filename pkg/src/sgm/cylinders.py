"""Parabolic cylinders Q(z, r) = (x-r, x+r) x (t-r^4, t+r^4) and the
scale-invariant quantities built on them.

Quadrature rules (fixed, so tolerances elsewhere are meaningful):
  * space: trigonometric interpolation of the frames onto 64 Gauss-Legendre
    nodes per cylinder (two 32-node panels split at the centre, which also
    nails integrands with a kink there);
  * time: trapezoid over the stored frames inside the window, with the two
    window endpoints included by linear interpolation;
  * sup-in-time quantities: max over those same rows.
Fewer than 4 interior frames means the window is under-resolved and the
operation refuses rather than extrapolate.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


class TooFewFrames(RuntimeError):
    """Cylinder time window intersects fewer than 4 stored frames."""


class CylinderOutsideDomain(ValueError):
    """Cylinder escapes the trajectory's space-time domain."""


@dataclass(frozen=True)
class ParabolicCylinder:
    x0: float
    t0: float
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("cylinder radius must be positive")
        if 2.0 * self.r >= TWO_PI:
            raise ValueError(f"2r = {2*self.r:g} wraps the torus onto itself")

    @property
    def t_lo(self):
        return self.t0 - self.r ** 4

    @property
    def t_hi(self):
        return self.t0 + self.r ** 4

    @property
    def volume(self):
        return 4.0 * self.r ** 5

    def scaled(self, factor):
        return ParabolicCylinder(self.x0, self.t0, factor * self.r)


@dataclass(frozen=True)
class CylinderStats:
    """Scale-invariant cylinder quantities plus plain and sigma means."""

    x0: float
    t0: float
    r: float
    Y: float          # r^-2 int |u_x|^3
    A: float          # sup_t r^-1 int_ball u^2
    A_bar: float      # same with u centred by its ball mean
    E: float          # r^-1 int u_xx^2
    W: float          # r^-5 int |u|^3
    mean: float       # plain cylinder mean of u
    sigma_mean_cyl: float   # sigma-weighted cylinder mean

    CSV_COLUMNS = ("x0", "t0", "r", "Y", "A", "Abar", "E", "W", "mean")

    def csv_row(self):
        return (self.x0, self.t0, self.r, self.Y, self.A, self.A_bar,
                self.E, self.W, self.mean)


def write_stats_csv(stats, fh):
    """Write CylinderStats rows as CSV (column order is part of the format)."""
    own = isinstance(fh, (str, bytes))
    f = open(fh, "w", newline="") if own else fh
    try:
        w = csv.writer(f)
        w.writerow(CylinderStats.CSV_COLUMNS)
        for s in stats:
            w.writerow(s.csv_row())
    finally:
        if own:
            f.close()


def stats_csv_string(stats):
    buf = io.StringIO()
    write_stats_csv(stats, buf)
    return buf.getvalue()


# -- quadrature engine ------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _gl_panel(a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * _GL_NODES, half * _GL_WEIGHTS


def gl_nodes_weights(x0, r):
    """64 Gauss-Legendre nodes/weights on (x0-r, x0+r), split at the centre."""
    xl, wl = _gl_panel(x0 - r, x0)
    xr, wr = _gl_panel(x0, x0 + r)
    return np.concatenate([xl, xr]), np.concatenate([wl, wr])


def trig_eval_matrix(n_grid, points):
    """(n_points, n_grid) complex matrix: coeff rows @ M.T = field values.

    The Nyquist column evaluates as cos((n/2) x), matching the evaluation
    convention for real fields.
    """
    k = np.fft.fftfreq(n_grid, d=1.0 / n_grid).astype(float)
    M = np.exp(1j * np.outer(points, k))
    M[:, np.nonzero(k == -(n_grid // 2))[0]] = \
        np.cos((n_grid // 2) * points)[:, None]
    return M


def window_times(traj, Q, min_frames=4):
    """Frame times inside the cylinder window plus interpolated endpoints.

    Returns (ts, rows_spec) where rows_spec is a list of (j_lo, j_hi, w)
    triples: the row at that time is (1-w)*frame[j_lo] + w*frame[j_hi].
    """
    if Q.t_lo < traj.t_start - 1e-12 or Q.t_hi > traj.t_end + 1e-12:
        raise CylinderOutsideDomain(
            f"window ({Q.t_lo:g}, {Q.t_hi:g}) outside [{traj.t_start:g}, {traj.t_end:g}]")
    inside = np.nonzero((traj.times > Q.t_lo + 1e-14) & (traj.times < Q.t_hi - 1e-14))[0]
    if inside.size < min_frames:
        raise TooFewFrames(
            f"only {inside.size} frames in window of r={Q.r:g} (need >= {min_frames}); "
            f"shrink tau or grow r")
    ts = [Q.t_lo]
    spec = [_interp_spec(traj, Q.t_lo)]
    for j in inside:
        ts.append(traj.times[j])
        spec.append((j, j, 0.0))
    ts.append(Q.t_hi)
    spec.append(_interp_spec(traj, Q.t_hi))
    return np.array(ts), spec


def _interp_spec(traj, t):
    j = int(np.searchsorted(traj.times, t, side="right"))
    if j <= 0:
        return (0, 0, 0.0)
    if j >= traj.n_frames:
        return (traj.n_frames - 1, traj.n_frames - 1, 0.0)
    t0, t1 = traj.times[j - 1], traj.times[j]
    return (j - 1, j, (t - t0) / (t1 - t0))


def _coeff_rows(traj, order, spec):
    base = traj.deriv_coeffs(order)
    rows = np.empty((len(spec), traj.n_grid), dtype=complex)
    for i, (a, b, w) in enumerate(spec):
        rows[i] = (1.0 - w) * base[a] + w * base[b] if w else base[a]
    return rows


def _trapz_weights(ts):
    w = np.zeros_like(ts)
    w[:-1] += 0.5 * np.diff(ts)
    w[1:] += 0.5 * np.diff(ts)
    return w


class CylinderData:
    """Field values (u, u_x, u_xx) on the cylinder quadrature mesh."""

    def __init__(self, traj, Q, min_frames=4):
        self.Q = Q
        self.ts, spec = window_times(traj, Q, min_frames)
        self.w_t = _trapz_weights(self.ts)
        self.x_nodes, self.w_x = gl_nodes_weights(Q.x0, Q.r)
        M = trig_eval_matrix(traj.n_grid, self.x_nodes)
        self.u = (_coeff_rows(traj, 0, spec) @ M.T).real
        self.ux = (_coeff_rows(traj, 1, spec) @ M.T).real
        self.uxx = (_coeff_rows(traj, 2, spec) @ M.T).real

    def integral(self, values):
        """Space-time integral of a (n_times, n_nodes) value array."""
        return float(self.w_t @ (values @ self.w_x))

    def ball_integrals(self, values):
        """Per-frame spatial integrals, shape (n_times,)."""
        return values @ self.w_x


def cylinder_integral(traj, Q, integrand, min_frames=4):
    """Integrate integrand(u, u_x, u_xx) over the cylinder."""
    d = CylinderData(traj, Q, min_frames)
    return d.integral(integrand(d.u, d.ux, d.uxx))


def cyl_mean(traj, Q):
    """Plain cylinder average of u."""
    d = CylinderData(traj, Q)
    return d.integral(d.u) / Q.volume


class SigmaMeanSeries:
    """Per-frame sigma-weighted ball means; callable by linear interpolation."""

    def __init__(self, times, values):
        self.times = np.asarray(times)
        self.values = np.asarray(values)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


def _check_sigma(Q, sigma):
    if sigma.profile != "bump_space_only":
        raise ValueError("sigma must be a space-only cutoff")
    if sigma.r_space > Q.r + 1e-12:
        raise ValueError("sigma support must be subordinate to the cylinder")
    d = abs((sigma.x0 - Q.x0 + np.pi) % TWO_PI - np.pi)
    if d > 1e-9:
        raise ValueError("sigma must be centred on the cylinder")


def default_sigma(Q):
    """Spatial cutoff that is 1 on |x-x0| <= r/2 and 0 beyond r."""
    from .cutoffs import TestFunction
    return TestFunction((Q.x0, Q.t0), Q.r, 1.0, profile="bump_space_only",
                        plateau_fraction=0.5)


def sigma_means(traj, Q, sigma):
    """Ball and cylinder sigma-means.

    Returns (series, cyl_value): series holds the per-frame weighted ball
    means u_sigma(t) = int u sigma / int sigma, and cyl_value the cylinder
    analogue, which equals the (trapezoid) time average of the series by
    construction.
    """
    _check_sigma(Q, sigma)
    d = CylinderData(traj, Q)
    sig = sigma.value(d.x_nodes)
    denom = float(sig @ d.w_x)
    per_frame = (d.u * sig) @ d.w_x / denom
    cyl_value = float(d.w_t @ per_frame) / float(np.sum(d.w_t))
    return SigmaMeanSeries(d.ts, per_frame), cyl_value


def quantities(traj, Q, sigma_for_means=None):
    """All scale-invariant cylinder quantities in one sweep."""
    if sigma_for_means is None:
        sigma_for_means = default_sigma(Q)
    _check_sigma(Q, sigma_for_means)
    d = CylinderData(traj, Q)
    r = Q.r
    Y = d.integral(np.abs(d.ux) ** 3) / r ** 2
    E = d.integral(d.uxx ** 2) / r
    W = d.integral(np.abs(d.u) ** 3) / r ** 5
    ball_u2 = d.ball_integrals(d.u ** 2)
    A = float(np.max(ball_u2)) / r
    ball_means = d.ball_integrals(d.u) / (2.0 * r)
    centred = d.u - ball_means[:, None]
    A_bar = float(np.max(d.ball_integrals(centred ** 2))) / r
    mean = d.integral(d.u) / Q.volume
    sig = sigma_for_means.value(d.x_nodes)
    denom = float(sig @ d.w_x)
    sigma_mean = float(d.w_t @ ((d.u * sig) @ d.w_x)) / (denom * float(np.sum(d.w_t)))
    return CylinderStats(Q.x0, Q.t0, r, Y, A, A_bar, E, W, mean, sigma_mean)


def poincare_residual(traj, z0, r, eta):
    """Empirical constant in the nonlinear parabolic Poincare inequality.

    lhs   = r^-5 int over the half cylinder of |u - (cylinder mean)|^3,
    rhs   = Y(z0, r) + eta * Y(z0, r)^2,
    c_emp = lhs / rhs (0 when both vanish).

    eta = 1 for runs of the full equation, 0 for biharmonic runs.  A zero
    rhs with nonzero lhs cannot happen for fields satisfying the weak
    identity and raises.
    """
    x0, t0 = z0
    Q = ParabolicCylinder(x0, t0, r)
    Qh = ParabolicCylinder(x0, t0, 0.5 * r)
    d = CylinderData(traj, Qh)
    m = d.integral(d.u) / Qh.volume
    lhs = d.integral(np.abs(d.u - m) ** 3) / r ** 5
    dfull = CylinderData(traj, Q)
    Y = dfull.integral(np.abs(dfull.ux) ** 3) / r ** 2
    rhs = Y + eta * Y ** 2
    if rhs == 0.0:
        if lhs > 1e-12:
            raise RuntimeError(
                f"Poincare violation: lhs={lhs:g} with zero gradient load "
                "(quadrature or assumption bug)")
        return lhs, rhs, 0.0
    return lhs, rhs, lhs / rhs


def corollary_poincare_residual(traj, z0, r, sigma, eta):
    """Sigma-weighted variant over the full cylinder."""
    x0, t0 = z0
    Q = ParabolicCylinder(x0, t0, r)
    _check_sigma(Q, sigma)
    d = CylinderData(traj, Q)
    sig = sigma.value(d.x_nodes)
    denom = float(sig @ d.w_x)
    cyl_sigma_mean = float(d.w_t @ ((d.u * sig) @ d.w_x)) / (denom * float(np.sum(d.w_t)))
    lhs = d.integral(np.abs(d.u - cyl_sigma_mean) ** 3 * sig) / r ** 5
    Y = d.integral(np.abs(d.ux) ** 3) / r ** 2
    rhs = Y + eta * Y ** 2
    if rhs == 0.0:
        if lhs > 1e-12:
            raise RuntimeError("sigma-Poincare violation with zero gradient load")
        return lhs, rhs, 0.0
    return lhs, rhs, lhs / rhs


def interpolation_residuals(stats):
    """Defects and empirical constants of the two interpolation bounds.

    gap_W = (A^{11/8} E^{1/8} + A^{3/2}) - W      (after dividing by c = 1)
    gap_Y = Abar^{5/8} E^{7/8} - Y
    c_emp_W = W / (A^{11/8} E^{1/8} + A^{3/2}),  c_emp_Y = Y / (Abar^{5/8} E^{7/8})
    with 0/0 read as 0.
    """
    den_W = stats.A ** (11.0 / 8.0) * stats.E ** (1.0 / 8.0) + stats.A ** 1.5
    den_Y = stats.A_bar ** (5.0 / 8.0) * stats.E ** (7.0 / 8.0)
    gap_W = den_W - stats.W
    gap_Y = den_Y - stats.Y
    c_W = 0.0 if den_W == 0.0 else stats.W / den_W
    c_Y = 0.0 if den_Y == 0.0 else stats.Y / den_Y
    return gap_W, gap_Y, c_W, c_Y


def decay_ratio(traj, z, r, theta):
    """One-step decay probe Y(z, theta*r) / (theta^3 * Y(z, r)); 0 if Y(z,r)=0."""
    if not (0.0 < theta < 0.25):
        raise ValueError("theta must lie in (0, 1/4)")
    x0, t0 = z
    Y_big = quantities(traj, ParabolicCylinder(x0, t0, r)).Y
    if Y_big == 0.0:
        return 0.0
    Y_small = quantities(traj, ParabolicCylinder(x0, t0, theta * r)).Y
    return Y_small / (theta ** 3 * Y_big)


def shift_trajectory(traj, dx):
    """Rigid spatial shift of every frame (exact in spectral form)."""
    from .solver import Trajectory
    k = np.fft.fftfreq(traj.n_grid, d=1.0 / traj.n_grid)
    mult = np.exp(1j * k * dx)
    shifted = np.fft.ifft(traj.coeffs * mult * traj.n_grid, axis=1).real
    return Trajectory(traj.times, shifted, traj.tau, nonlinear=traj.nonlinear,
                      dealias=traj.dealias, dissipation=traj.dissipation)
