"""Implicit Euler time stepping for u_t + u_xxxx + (u_x^2)_xx = 0.

Each step solves

    (u_k - u_{k-1}) / tau = -u_k'''' - ((u_k')^2)''

by Picard iteration on u = (I + tau*D4)^{-1} (u_prev - tau * ((u')^2)''),
which is diagonal in Fourier space.  The biharmonic part is treated
exactly, so stiffness never limits tau; the iteration is contractive for
tau^(1/2) * ||u_x||_inf small, and a failing step is retried on internal
half steps before giving up.

Energies use the integral normalisation  ||u||^2 = int_T u^2 dx.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import fields
from .fields import FieldError, SpectralField

TWO_PI = 2.0 * np.pi


class NonConvergence(RuntimeError):
    """Picard iteration failed even after the allowed step halvings."""

    def __init__(self, msg, step_index=None):
        super().__init__(msg)
        self.step_index = step_index


@dataclass(frozen=True)
class SolverConfig:
    tau: float
    t_end: float
    picard_tol: float = 1e-12
    picard_max_iter: int = 200
    step_halving_max: int = 8
    dealias: bool = True
    nonlinear: bool = True    # False integrates the pure biharmonic flow

    def __post_init__(self):
        if not (0.0 < self.tau < self.t_end):
            raise ValueError(f"need 0 < tau < t_end, got tau={self.tau}, t_end={self.t_end}")
        if self.picard_tol <= 0:
            raise ValueError("picard_tol must be positive")


def _k_int(n):
    return np.fft.fftfreq(n, d=1.0 / n).astype(int)


def _energy(coeffs):
    """Integral L2 norm squared from coefficients."""
    return TWO_PI * float(np.sum(np.abs(coeffs) ** 2))


def _nonlinearity_coeffs(coeffs, k, dealias):
    """Coefficients of ((u')^2)'' with optional 2/3-rule dealiasing."""
    n = coeffs.shape[0]
    ik = 1j * k.astype(float)
    ik[k == -(n // 2)] = 0.0
    cx = coeffs * ik
    if dealias:
        mask = np.abs(k) <= n // 3
        cx = np.where(mask, cx, 0.0)
    gx = np.fft.ifft(cx * n).real
    prod = np.fft.fft(gx * gx) / n
    if dealias:
        prod = np.where(mask, prod, 0.0)
    return prod * (ik * ik)


def _picard(c_prev, tau, cfg, k):
    """One implicit Euler solve; returns (coeffs, iterations).

    Residual measure: max_k |rhat(k)| * sqrt(2 pi), i.e. the weak-form
    defect against unit-L2 Fourier test modes.
    """
    k4 = k.astype(float) ** 4
    denom = 1.0 + tau * k4
    c = c_prev / denom
    if not cfg.nonlinear:
        return c, 1
    sq2pi = math.sqrt(TWO_PI)
    c_old = c
    for it in range(1, cfg.picard_max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            nl = _nonlinearity_coeffs(c_old, k, cfg.dealias)
            c = (c_prev - tau * nl) / denom
        norm_c = np.linalg.norm(c)
        if not np.isfinite(norm_c):
            raise NonConvergence(f"Picard diverged at iteration {it}, tau={tau:g}")
        rel = np.linalg.norm(c - c_old) / max(norm_c, 1e-300)
        c_old = c
        if rel < cfg.picard_tol:
            nl_now = _nonlinearity_coeffs(c, k, cfg.dealias)
            res = (c - c_prev) / tau + k4 * c + nl_now
            # the difference quotient amplifies coefficient round-off by
            # 1/tau; no iteration can push the residual below that floor
            floor = 8.0 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(c)))) / tau
            tol = cfg.picard_tol * (1.0 + math.sqrt(_energy(c))) + sq2pi * floor
            if sq2pi * np.max(np.abs(res)) <= tol:
                return c, it
    raise NonConvergence(f"Picard stalled after {cfg.picard_max_iter} iterations at tau={tau:g}")


def _step_with_halving(c_prev, tau, cfg, k):
    """Advance by tau, splitting into half steps on Picard failure.

    Returns (coeffs, dissipation, iterations, halvings) where dissipation
    accumulates tau_i * ||u_i''||^2 over the internal sub-steps, so the
    per-step energy inequality survives halving.
    """
    k4 = k.astype(float) ** 4
    for h in range(cfg.step_halving_max + 1):
        n_sub = 2 ** h
        sub = tau / n_sub
        c = c_prev
        diss = 0.0
        iters = 0
        try:
            for _ in range(n_sub):
                c, it = _picard(c, sub, cfg, k)
                iters += it
                # tau * int (u'')^2 = tau * 2pi * sum k^4 |c|^2
                diss += sub * TWO_PI * float(np.sum(k4 * np.abs(c) ** 2))
            return c, diss, iters, h
        except NonConvergence:
            if h == cfg.step_halving_max:
                raise
    raise AssertionError("unreachable")


def implicit_euler_step(u_prev, tau, cfg):
    """Single implicit Euler step from a mean-zero field."""
    if not u_prev.is_mean_zero:
        raise FieldError("implicit Euler step requires a mean-zero field")
    k = _k_int(u_prev.n_grid)
    c, _, _, _ = _step_with_halving(u_prev.coeffs.astype(complex), tau, cfg, k)
    return fields.from_coeffs(c, symmetrize=True)


class Trajectory:
    """Time-ordered frames of a run, immutable once constructed.

    ``samples`` is the (n_frames, n_grid) matrix of grid values; ``times``
    the matching frame times.  ``dissipation[j]`` is the dissipation
    attributed to the step ending at frame j (zero for frame 0), and
    ``energy[j] = ||u_j||^2`` in the integral normalisation.

    Values between frames come from either the piecewise-linear
    interpolant or the piecewise-constant one (which holds the *next*
    frame on each step interval), chosen per query.
    """

    def __init__(self, times, samples, tau, nonlinear=True, dealias=True,
                 dissipation=None, picard_iters=None, halvings=None,
                 enforce_mean_zero=True):
        times = np.asarray(times, dtype=float)
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or samples.shape[0] != times.shape[0]:
            raise ValueError("samples must be (n_frames, n_grid) matching times")
        if np.any(np.diff(times) <= 0):
            raise ValueError("frame times must be strictly increasing")
        self.times = times
        self.samples = samples
        self.n_frames, self.n_grid = samples.shape
        self.tau = float(tau)
        self.nonlinear = bool(nonlinear)
        self.dealias = bool(dealias)
        self.dissipation = (np.zeros(self.n_frames) if dissipation is None
                            else np.asarray(dissipation, dtype=float))
        self.picard_iters = picard_iters
        self.halvings = halvings
        self._coeffs = None
        self._deriv_samples = {}
        if enforce_mean_zero:
            means = np.abs(np.mean(samples, axis=1))
            if np.any(means > 1e-12):
                raise ValueError(f"frame {int(np.argmax(means))} is not mean-zero")
        for arr in (self.times, self.samples, self.dissipation):
            arr.setflags(write=False)

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    @property
    def coeffs(self):
        if self._coeffs is None:
            self._coeffs = np.fft.fft(self.samples, axis=1) / self.n_grid
            self._coeffs.setflags(write=False)
        return self._coeffs

    @property
    def energy(self):
        return TWO_PI * np.sum(np.abs(self.coeffs) ** 2, axis=1)

    def deriv_samples(self, order):
        """Grid values of the order-th spatial derivative, all frames."""
        if order == 0:
            return self.samples
        if order not in self._deriv_samples:
            k = _k_int(self.n_grid)
            mult = (1j * k.astype(float)) ** order
            mult[k == -(self.n_grid // 2)] = 0.0
            out = np.fft.ifft(self.coeffs * mult * self.n_grid, axis=1).real
            out.setflags(write=False)
            self._deriv_samples[order] = out
        return self._deriv_samples[order]

    def deriv_coeffs(self, order):
        if order == 0:
            return self.coeffs
        k = _k_int(self.n_grid)
        mult = (1j * k.astype(float)) ** order
        mult[k == -(self.n_grid // 2)] = 0.0
        return self.coeffs * mult

    def frame(self, j):
        return fields.from_samples(self.samples[j])

    def sample_values(self, t, kind="piecewise_linear"):
        """Grid values at time t for the chosen interpolant."""
        if not (self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12):
            raise ValueError(f"t={t} outside trajectory range")
        j = int(np.searchsorted(self.times, t, side="right"))
        if j == 0:
            return self.samples[0].copy()
        if j >= self.n_frames:
            return self.samples[-1].copy()
        if kind == "piecewise_constant":
            return self.samples[j].copy()
        t0, t1 = self.times[j - 1], self.times[j]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.samples[j - 1] + w * self.samples[j]

    def field_at(self, t, kind="piecewise_linear"):
        return fields.from_samples(self.sample_values(t, kind))


def simulate(u0, cfg):
    """Run the scheme from a mean-zero initial field.

    Frames sit at k*tau with a shorter final step when t_end is not a
    multiple of tau.  Raises :class:`NonConvergence` (with the failing step
    index) if some step cannot be solved, and refuses initial data with
    nonzero mean rather than projecting it.
    """
    if not u0.is_mean_zero:
        raise FieldError(f"initial condition must be mean-zero, got mean {u0.mean:.3e}")
    n = u0.n_grid
    k = _k_int(n)
    n_steps = int(math.ceil(cfg.t_end / cfg.tau - 1e-12))
    times = [0.0]
    frames = [u0.samples.copy()]
    diss = [0.0]
    iters = [0]
    halv = [0]
    c = u0.coeffs.astype(complex)
    e_prev = _energy(c)
    e0 = e_prev
    diss_total = 0.0
    for j in range(1, n_steps + 1):
        t_next = min(j * cfg.tau, cfg.t_end)
        step = t_next - times[-1]
        try:
            c, d, it, h = _step_with_halving(c, step, cfg, k)
        except NonConvergence as exc:
            raise NonConvergence(f"step {j} (t={t_next:g}): {exc}", step_index=j) from None
        e = _energy(c)
        diss_total += d
        if e + diss_total > e0 * (1.0 + 1e-8) + 1e-300:
            raise RuntimeError(f"energy inequality violated at step {j}: "
                               f"{e + diss_total:.15e} > {e0:.15e}")
        e_prev = e
        times.append(t_next)
        frames.append(np.fft.ifft(c * n).real)
        diss.append(d)
        iters.append(it)
        halv.append(h)
    return Trajectory(np.array(times), np.array(frames), cfg.tau,
                      nonlinear=cfg.nonlinear, dealias=cfg.dealias,
                      dissipation=np.array(diss), picard_iters=np.array(iters),
                      halvings=np.array(halv))


def biharmonic_exact(u0, t):
    """Exact flow of u_t = -u_xxxx: uhat(k, t) = exp(-k^4 t) uhat0(k)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    k = _k_int(u0.n_grid).astype(float)
    return fields.from_coeffs(u0.coeffs * np.exp(-(k ** 4) * t), symmetrize=True)


def biharmonic_trajectory(u0, tau, t_end):
    """Trajectory sampled from the exact biharmonic flow (oracle object)."""
    n_steps = int(math.ceil(t_end / tau - 1e-12))
    times = np.minimum(np.arange(n_steps + 1) * tau, t_end)
    k4 = _k_int(u0.n_grid).astype(float) ** 4
    c0 = u0.coeffs
    frames = np.empty((n_steps + 1, u0.n_grid))
    for j, t in enumerate(times):
        frames[j] = np.fft.ifft(c0 * np.exp(-k4 * t) * u0.n_grid).real
    diss = np.zeros(n_steps + 1)
    diss[1:] = np.diff(times) * TWO_PI * np.sum(
        k4 * np.abs(c0) ** 2 * np.exp(-2.0 * k4 * times[1:, None]), axis=1)
    return Trajectory(times, frames, tau, nonlinear=False, dissipation=diss)


def constant_trajectory(field, t_lo, t_hi, n_frames, nonlinear=True,
                        enforce_mean_zero=True):
    """Time-constant synthetic trajectory (diagnostics and oracle use only)."""
    times = np.linspace(t_lo, t_hi, n_frames)
    return Trajectory(times, np.tile(field.samples, (n_frames, 1)),
                      times[1] - times[0], nonlinear=nonlinear,
                      enforce_mean_zero=enforce_mean_zero)


def interior_regularity_probe(v_traj, a, b, center=None):
    """Observed constant in the gradient bound for the biharmonic flow.

    Returns ||v_x||_Linf(Q_b) / (||v||_L2(Q_a) + ||v_x||_L2(Q_a)) for
    concentric cylinders; 0 when the denominator vanishes.  Only meaningful
    (and only accepted) for trajectories of the pure biharmonic flow.
    """
    from .cylinders import ParabolicCylinder, cylinder_integral

    if v_traj.nonlinear:
        raise ValueError("probe requires a trajectory of the pure biharmonic flow")
    if not (0.0 < b < a):
        raise ValueError(f"need 0 < b < a, got a={a}, b={b}")
    if center is None:
        center = (np.pi, 0.5 * (v_traj.t_start + v_traj.t_end))
    x0, t0 = center
    Qa = ParabolicCylinder(x0, t0, a)
    Qb = ParabolicCylinder(x0, t0, b)
    l2_v = math.sqrt(cylinder_integral(v_traj, Qa, lambda u, ux, uxx: u ** 2))
    l2_vx = math.sqrt(cylinder_integral(v_traj, Qa, lambda u, ux, uxx: ux ** 2))
    den = l2_v + l2_vx
    if den == 0.0:
        return 0.0
    sup = 0.0
    lo, hi = t0 - b ** 4, t0 + b ** 4
    xs = x0 + np.linspace(-b, b, 257)
    kvec = _k_int(v_traj.n_grid)
    body = kvec != -(v_traj.n_grid // 2)
    phases = np.exp(1j * np.outer(xs, kvec[body].astype(float)))
    cx = v_traj.deriv_coeffs(1)
    for j in np.nonzero((v_traj.times >= lo) & (v_traj.times <= hi))[0]:
        vals = (phases @ cx[j, body]).real
        sup = max(sup, float(np.max(np.abs(vals))))
    return sup / den


def weak_residual(traj, phi):
    """Absolute weak-form defect of the trajectory against one test function.

    Evaluates | int int ( u phi_t - u_xx phi_xx - u_x^2 phi_xx ) dx dt |
    over the support of phi: trapezoid in time over the frames, and in
    space the frames interpolated to a 4x grid are summed against the
    band-limited projection of the cut-off factors, which integrates the
    trigonometric-polynomial frames exactly.  The support must lie inside
    the trajectory's space-time domain.  For linear (biharmonic)
    trajectories the quadratic term is dropped, matching the equation the
    frames actually solve.
    """
    lo, hi = phi.t0 - phi.r_time, phi.t0 + phi.r_time
    if lo < traj.t_start - 1e-12 or hi > traj.t_end + 1e-12:
        raise ValueError("test function support escapes the trajectory time range")
    idx = np.nonzero((traj.times >= lo) & (traj.times <= hi))[0]
    if idx.size < 3:
        raise ValueError("too few frames under the test function support")
    factor = 4
    m = factor * traj.n_grid
    w_x = TWO_PI / m
    P = phi.projected_space_profiles(traj.n_grid, factor)
    ts = traj.times[idx]
    T0 = phi.time_profile(ts, 0)
    T1 = phi.time_profile(ts, 1)
    from .cutoffs import _fine_rows
    u = _fine_rows(traj.coeffs[idx], factor)
    uxx = _fine_rows(traj.deriv_coeffs(2)[idx], factor)
    flux = uxx
    if traj.nonlinear:
        ux = _fine_rows(traj.deriv_coeffs(1)[idx], factor)
        flux = uxx + ux ** 2
    g = w_x * ((u @ P[0]) * T1 - (flux @ P[2]) * T0)
    return abs(float(np.trapezoid(g, ts)))
