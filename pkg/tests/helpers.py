"""Shared builders for the test suite: random comparison instances,
Cantor dust, synthetic concentration profiles."""

import numpy as np

from sgm import SampledField, constant_trajectory, from_samples, grid, make_cutoff


def random_comparison_instances(n_total, seed, draws_per_field=10):
    """Mixed geometry sweep for the comparison-of-averages inequality.

    Yields (field, z, r, theta, p, kwargs): isotropic 2D, pure 1D, and
    parabolic (alpha=4) cases, all at scales the sample grids resolve.
    Each random field serves several draws to keep interpolator builds in
    check.
    """
    rng = np.random.default_rng(seed)
    xs = np.linspace(-1, 1, 401)
    ts = np.linspace(0, 1, 601)
    x1 = np.linspace(-1, 1, 2001)
    emitted = 0
    fld_idx = 0
    while emitted < n_total:
        a = rng.standard_normal(4)
        kind = fld_idx % 3
        fld_idx += 1
        if kind == 2:
            f = SampledField((x1,), a[0] * np.sin(3 * x1 + a[1]) + a[2] * x1 ** 2)
        else:
            V = (a[0] * np.sin(3 * xs[:, None] + a[1]) * np.cos(2 * np.pi * ts[None, :])
                 + a[2] * xs[:, None] ** 2 + a[3] * ts[None, :])
            f = SampledField((xs, ts), V)
        for _ in range(draws_per_field):
            if emitted >= n_total:
                return
            p = float(rng.choice([1.0, 2.0, 3.0]))
            if kind == 2:
                z = (rng.uniform(-0.4, 0.4),)
                yield f, z, rng.uniform(0.1, 0.5), rng.uniform(0.05, 1.0), p, dict(n1=1, n2=0)
            elif kind == 1:
                # parabolic scaling: keep theta*r resolvable in the slow axis
                r = rng.uniform(0.4, 0.55)
                z = (rng.uniform(-0.4, 0.4), rng.uniform(0.35, 0.65))
                yield f, z, r, rng.uniform(0.75, 1.0), p, dict(alpha=4)
            else:
                r = rng.uniform(0.15, 0.45)
                z = (rng.uniform(-0.4, 0.4), rng.uniform(r + 0.02, 1.0 - r - 0.02))
                yield f, z, r, rng.uniform(0.08, 1.0), p, dict(alpha=1)
            emitted += 1


def cantor_points(level, a=1.0, length=1.0, t=0.5):
    """Left endpoints of the level-`level` middle-thirds construction."""
    pts = np.array([0.0])
    for _ in range(level):
        pts = np.concatenate([pts / 3.0, pts / 3.0 + 2.0 / 3.0])
    return np.column_stack([a + length * pts, np.full(pts.size, t)])


def spike_field(n, x_star, width, amp):
    """Mean-zero concentration profile: bump at x_star with a tiny plateau,
    so every scanned ball around the centre sees curvature."""
    sig = make_cutoff((x_star, 0.0), width, 1.0, profile="bump_space_only",
                      plateau_fraction=0.1)
    v = amp * sig.value(grid(n))
    return from_samples(v - np.mean(v))
