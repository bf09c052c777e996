import numpy as np
import pytest

from sgm import (SolverConfig, biharmonic_trajectory, cosine_mode,
                 random_field, simulate)


@pytest.fixture(scope="session")
def small_sgm_run():
    """One modest run shared by analysis tests: amp 0.1, tau 1e-3, T 0.2."""
    u0 = random_field(128, n_modes=3, amp=0.1, rng=np.random.default_rng(11))
    return simulate(u0, SolverConfig(tau=1e-3, t_end=0.2))


@pytest.fixture(scope="session")
def linear_cos_traj():
    """Exact biharmonic flow of cos(x), long enough for unit cylinders."""
    return biharmonic_trajectory(cosine_mode(64, 1), 1e-3, 1.2)


def make_ensemble(n_runs, tau, n_grid, t_end=0.2, amp_lo=0.05, amp_hi=0.3, seed0=100):
    runs = []
    for i in range(n_runs):
        rng = np.random.default_rng(seed0 + i)
        amp = rng.uniform(amp_lo, amp_hi)
        u0 = random_field(n_grid, n_modes=3, amp=amp, rng=rng)
        runs.append(simulate(u0, SolverConfig(tau=tau, t_end=t_end)))
    return runs


@pytest.fixture(scope="session")
def refinement_ensembles():
    """20 runs at (tau, n) = (1e-4, 128) and the same data at (5e-5, 256).

    The refined run re-expresses the identical low-mode initial data on the
    finer grid, so coarse and fine trajectories approximate the same
    solution.  tau = 1e-4 resolves the half-cylinder windows of radii down
    to 0.3 that the Poincare diagnostics use.
    """
    from sgm import resample

    coarse, fine = [], []
    for i in range(20):
        rng = np.random.default_rng(300 + i)
        amp = rng.uniform(0.05, 0.25)
        u0 = random_field(128, n_modes=3, amp=amp, rng=rng)
        coarse.append(simulate(u0, SolverConfig(tau=1e-4, t_end=0.1)))
        fine.append(simulate(resample(u0, 256), SolverConfig(tau=5e-5, t_end=0.1)))
    return coarse, fine
