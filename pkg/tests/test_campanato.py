import warnings

import numpy as np
import pytest

from sgm import (AnisotropicCylinder, SampledField, aniso_mean,
                 average_comparison_check, campanato_seminorm,
                 field_from_trajectory, holder_fit, holder_quotient)
from sgm.campanato import UnderResolved, oscillation_table


@pytest.fixture(scope="module")
def line_field():
    x = np.linspace(-1.0, 1.0, 4001)
    return SampledField((x,), x.copy())


@pytest.fixture(scope="module")
def sqrt_field():
    x = np.linspace(-1.0, 1.0, 8193)
    return SampledField((x,), np.sqrt(np.abs(x)))


def test_cylinder_type_validation():
    with pytest.raises(ValueError):
        AnisotropicCylinder(0, 1, 4, (0.0,), 0.1)
    with pytest.raises(ValueError):
        AnisotropicCylinder(1, 1, 4, (0.0,), 0.1)     # centre dim mismatch
    q = AnisotropicCylinder(1, 1, 4, (0.0, 0.5), 0.3)
    assert q.homogeneous_dim == 5
    assert q.radii() == [0.3, 0.3 ** 4]
    assert abs(q.volume - 4.0 * 0.3 ** 5) < 1e-15


def test_aniso_mean_constant():
    x = np.linspace(0.0, 1.0, 101)
    f = SampledField((x,), np.full(101, 3.7))
    mean, osc = aniso_mean(f, AnisotropicCylinder(1, 0, 4, (0.5,), 0.2), p=2)
    assert abs(mean - 3.7) < 1e-12
    assert osc < 1e-12


def test_aniso_mean_linear_oscillation(line_field):
    mean, osc = aniso_mean(line_field, AnisotropicCylinder(1, 0, 4, (0.3,), 0.25), p=1)
    assert abs(mean - 0.3) < 1e-7
    assert abs(osc - 0.125) < 1e-6


def test_aniso_mean_refined_oracle():
    x = np.linspace(0, 2, 1001)
    t = np.linspace(0, 1, 501)
    vals = np.sin(3 * x[:, None] + 0.5) * np.cos(2 * t[None, :]) + 0.3 * x[:, None] ** 2
    f = SampledField((x, t), vals)
    Q = AnisotropicCylinder(1, 1, 4, (1.0, 0.5), 0.6)
    m1, o1 = aniso_mean(f, Q, p=3)
    m2, o2 = aniso_mean(f, Q, p=3, refine=4)
    assert abs(m1 - m2) < 1e-7
    # |f - mean|^3 has kinks wherever f crosses the mean, capping panel
    # convergence below the smooth-integrand rate
    assert abs(o1 - o2) < 1e-6


def test_aniso_mean_under_resolved():
    x = np.linspace(0.0, 1.0, 11)
    f = SampledField((x,), x.copy())
    with pytest.raises(UnderResolved):
        aniso_mean(f, AnisotropicCylinder(1, 0, 4, (0.5,), 0.05))


def test_aniso_mean_domain_escape(line_field):
    with pytest.raises(ValueError):
        aniso_mean(line_field, AnisotropicCylinder(1, 0, 4, (0.95,), 0.2))


def test_comparison_constant_and_theta_one():
    x = np.linspace(0.0, 1.0, 101)
    t = np.linspace(0.0, 1.0, 101)
    f = SampledField((x, t), np.full((101, 101), 1.5))
    lhs, rhs = average_comparison_check(f, (0.5, 0.5), 0.3, 0.5, 2, alpha=1)
    assert lhs < 1e-12 and rhs < 1e-12
    g = SampledField((x, t), np.outer(x, np.ones(101)))
    lhs, rhs = average_comparison_check(g, (0.5, 0.5), 0.3, 1.0, 2, alpha=1)
    assert lhs < 1e-12          # same cylinder on both sides


def test_comparison_500_random_instances():
    from helpers import random_comparison_instances
    violations = 0
    for f, z, r, theta, p, kw in random_comparison_instances(500, seed=1):
        lhs, rhs = average_comparison_check(f, z, r, theta, p, **kw)
        if lhs > rhs + 1e-9:
            violations += 1
    assert violations == 0


def test_campanato_seminorm_constant():
    x = np.linspace(-1, 1, 201)
    f = SampledField((x,), np.full(201, 2.0))
    M = campanato_seminorm(f, 1, 0.7, [0.4, 0.2, 0.1], [(0.0,), (0.3,)], n1=1, n2=0)
    assert M < 1e-12


def test_campanato_seminorm_linear(line_field):
    M = campanato_seminorm(line_field, 1, 1.0, [0.4, 0.2, 0.1, 0.05],
                           [(-0.3,), (0.0,), (0.25,)], n1=1, n2=0)
    assert abs(M - 0.5) < 1e-5


def test_campanato_seminorm_sqrt_beta_separation(sqrt_field):
    zg = [(0.0,), (0.05,), (-0.08,)]
    r_small = [0.08 * 2 ** -j for j in range(5)]
    r_large = [0.4 * 2 ** -j for j in range(3)]
    M_half_small = campanato_seminorm(sqrt_field, 3, 0.5, r_small, zg, n1=1, n2=0)
    M_half_large = campanato_seminorm(sqrt_field, 3, 0.5, r_large, zg, n1=1, n2=0)
    # at beta = 1/2 the certified constant saturates at all scales
    assert 0.0 < M_half_small < 2.0 * M_half_large
    # at beta = 0.6 the cusp-centred constant grows like r^-0.1: the scan
    # detects the lack of convergence as the radii shrink
    at0 = [(0.0,)]
    M6_small = campanato_seminorm(sqrt_field, 3, 0.6, r_small, at0, n1=1, n2=0)
    M6_large = campanato_seminorm(sqrt_field, 3, 0.6, r_large, at0, n1=1, n2=0)
    assert M6_small > 1.3 * M6_large


def test_r_grid_density_enforced(line_field):
    with pytest.raises(ValueError):
        oscillation_table(line_field, 1, [0.4, 0.01], [(0.0,)], n1=1, n2=0)


def test_holder_fit_sqrt(sqrt_field):
    # probe at the cusp itself: away from it the field is smooth and the
    # large-radius rows would mix regimes into the slope
    r_grid = [0.1 * 2 ** -j for j in range(7)]
    fit = holder_fit(sqrt_field, 3, r_grid, [(0.0,)], n1=1, n2=0)
    assert abs(fit.beta_hat - 0.5) <= 0.05


def test_holder_fit_cos():
    x = np.linspace(-1.0, 1.0, 8193)
    f = SampledField((x,), np.cos(np.pi * x))
    r_grid = [0.15 * 2 ** -j for j in range(7)]
    zg = [(z,) for z in np.linspace(-0.5, 0.5, 9)]
    fit = holder_fit(f, 3, r_grid, zg, n1=1, n2=0)
    assert abs(fit.beta_hat - 1.0) <= 0.05


def test_holder_fit_step_flagged():
    x = np.linspace(-1.0, 1.0, 4001)
    f = SampledField((x,), (x > 0).astype(float))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = holder_fit(f, 3, [0.2 * 2 ** -j for j in range(5)],
                         [(0.0,), (0.11,)], n1=1, n2=0)
    assert fit.beta_hat == 0.0
    assert fit.warned


def test_seminorm_monotone_in_centre_set(sqrt_field):
    r_grid = [0.2, 0.1, 0.05]
    small = campanato_seminorm(sqrt_field, 3, 0.5, r_grid, [(0.3,)], n1=1, n2=0)
    big = campanato_seminorm(sqrt_field, 3, 0.5, r_grid, [(0.3,), (0.0,)], n1=1, n2=0)
    assert big >= small - 1e-15


def test_time_constant_field_matches_pure_space_fit():
    x = np.linspace(-1.0, 1.0, 2049)
    t = np.linspace(0.0, 1.0, 257)
    g = np.cos(np.pi * x)
    f2 = SampledField((x, t), np.tile(g[:, None], (1, 257)))
    f1 = SampledField((x,), g)
    r_grid = [0.15 * 2 ** -j for j in range(4)]
    zg2 = [(z, 0.5) for z in np.linspace(-0.4, 0.4, 5)]
    zg1 = [(z,) for z in np.linspace(-0.4, 0.4, 5)]
    _, w2 = oscillation_table(f2, 3, r_grid, zg2, n1=1, n2=1, alpha=1)
    _, w1 = oscillation_table(f1, 3, r_grid, zg1, n1=1, n2=0)
    assert np.max(np.abs(w2 - w1)) < 1e-8


def test_parabolic_rescaling_invariance():
    # resample u(x, t) -> u(2x, 16t): the metric is scaling homogeneous, so
    # the fitted exponent is unchanged
    x = np.linspace(0.0, 4.0, 4097)
    t = np.linspace(0.0, 2.0, 2049)
    vals = np.sin(2 * x)[:, None] * np.exp(-t)[None, :]
    f = SampledField((x, t), vals)
    xs = np.linspace(0.0, 2.0, 4097)
    ts = np.linspace(0.0, 0.125, 2049)
    vals_s = np.sin(2 * 2 * xs)[:, None] * np.exp(-16 * ts)[None, :]
    fs = SampledField((xs, ts), vals_s)
    r_grid = [0.55, 0.44, 0.35]        # slow-axis radii r^4 stay resolvable
    fit = holder_fit(f, 3, r_grid, [(2.0, 1.0), (1.3, 0.9)], n1=1, n2=1)
    r_grid_s = [r / 2 for r in r_grid]
    fit_s = holder_fit(fs, 3, r_grid_s, [(1.0, 1.0 / 16), (0.65, 0.9 / 16)], n1=1, n2=1)
    assert abs(fit.beta_hat - fit_s.beta_hat) < 0.05


def test_holder_quotient_consistency(sqrt_field):
    fit = holder_fit(sqrt_field, 3, [0.1 * 2 ** -j for j in range(7)],
                     [(0.0,), (0.1,)], n1=1, n2=0)
    q = holder_quotient(sqrt_field, fit.beta_hat, n_pairs=4000, n1=1,
                        rng=np.random.default_rng(3))
    assert np.isfinite(q)
    assert q <= 50.0 * fit.M_hat


def test_field_from_trajectory_periodic_wrap(small_sgm_run):
    f = field_from_trajectory(small_sgm_run)
    Q = AnisotropicCylinder(1, 1, 4, (6.1, 0.1), 0.45)   # wraps past 2*pi
    mean, osc = aniso_mean(f, Q, p=2)
    assert np.isfinite(mean) and np.isfinite(osc)
