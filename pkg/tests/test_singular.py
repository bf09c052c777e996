import json
import warnings

import numpy as np
import pytest

from sgm import (Classification, ParabolicCylinder, SolverConfig, Thresholds,
                 box_dimension, classify_point_A, classify_point_E,
                 classify_point_Y, constant_trajectory, contained_in_dilate,
                 cosine_mode, cylinder_counts, from_samples, grid,
                 hausdorff_p1_upper, make_cutoff, neighbourhood_area,
                 random_field, regularity_report, scan_suspects, simulate,
                 vitali_disjointify, zero_field)
from sgm.singular import report_to_json
from helpers import cantor_points, spike_field

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="module")
def spike_traj():
    # width ~ 20 grid spacings keeps spectral ringing in u_xx negligible
    return constant_trajectory(spike_field(512, 3.0, 0.35, 1.5), 0.0, 0.2, 801)


@pytest.fixture(scope="module")
def zero_traj():
    return constant_trajectory(zero_field(128), 0.0, 0.2, 801)


def test_thresholds_validation():
    with pytest.raises(ValueError):
        Thresholds(eps0=-1.0)
    with pytest.raises(ValueError):
        Thresholds(r_scan=(0.3, 0.4))          # not decreasing
    with pytest.raises(ValueError):
        Thresholds(R0=0.4, r_scan=(0.45, 0.3))  # exceeds R0


def test_zero_trajectory_regular(zero_traj):
    th = Thresholds()
    for x in (0.5, 3.0):
        assert classify_point_Y(zero_traj, (x, 0.1), th) is Classification.REGULAR
        assert classify_point_E(zero_traj, (x, 0.1), th) is Classification.REGULAR
        assert classify_point_A(zero_traj, (x, 0.1), th) is Classification.REGULAR


def test_unclassifiable_near_time_boundary(zero_traj):
    th = Thresholds()
    assert classify_point_Y(zero_traj, (1.0, 0.001), th) is Classification.UNCLASSIFIABLE


def test_small_amplitude_run_regular():
    u0 = cosine_mode(128, 1, amp=0.1)
    traj = simulate(u0, SolverConfig(tau=1e-3, t_end=0.2))
    th = Thresholds(eps0=1e-3)
    for x in grid(128)[::16]:
        assert classify_point_Y(traj, (float(x), 0.1), th) is Classification.REGULAR


def test_biharmonic_mode_E_scaling_and_regular():
    from sgm import biharmonic_trajectory
    from sgm.singular import _quantity
    traj = biharmonic_trajectory(cosine_mode(128, 1, amp=0.3), 2e-5, 0.04)
    th = Thresholds(r_scan=(0.3, 0.25, 0.2))
    z = (0.0, 0.02)        # curvature extremum: E(r) ~ 4 u_xx(z)^2 r^4
    assert classify_point_E(traj, z, th) is Classification.REGULAR
    # smooth fields: E(r) = r^-1 * O(r^5), so E/r^4 is roughly constant
    ratios = [_quantity(traj, z, r, "E") / r ** 4 for r in th.r_scan]
    assert max(ratios) / min(ratios) < 1.5


def test_spike_suspect_at_center_regular_far(spike_traj):
    th = Thresholds()
    assert classify_point_Y(spike_traj, (3.0, 0.1), th) is Classification.SUSPECT
    assert classify_point_Y(spike_traj, (0.2, 0.1), th) is Classification.REGULAR
    assert classify_point_E(spike_traj, (3.0, 0.1), th) is Classification.SUSPECT
    assert classify_point_E(spike_traj, (0.2, 0.1), th) is Classification.REGULAR


def test_classification_monotone_in_eps(spike_traj):
    xs = np.linspace(2.0, 4.0, 9)
    th_lo = Thresholds(eps0=1e-4)
    th_hi = Thresholds(eps0=1e-1)
    for x in xs:
        lo = classify_point_Y(spike_traj, (float(x), 0.1), th_lo)
        hi = classify_point_Y(spike_traj, (float(x), 0.1), th_hi)
        if lo is Classification.REGULAR:
            assert hi is Classification.REGULAR


def test_scan_suspects_structure(spike_traj):
    th = Thresholds()
    sus = scan_suspects(spike_traj, th, "Y", np.linspace(0, TWO_PI, 16, endpoint=False),
                        [0.1])
    assert len(sus.points) >= 1
    assert len(sus.values) == len(sus.points)
    assert all(np.isfinite(v) for v in sus.values)
    assert all(abs(p[0] - 3.0) < 0.8 for p in sus.points)


def test_box_dimension_point_segment():
    d0 = box_dimension([(3.0, 0.5)], [0.1, 0.05, 0.025, 0.0125])
    assert abs(d0 - 0.0) <= 0.1
    xs = np.linspace(2.0, 3.0, 2001)
    seg = np.column_stack([xs, np.full_like(xs, 0.5)])
    d1 = box_dimension(seg, [0.05, 0.025, 0.0125, 0.00625])
    assert abs(d1 - 1.0) <= 0.1


def test_box_dimension_cantor_dust():
    d = box_dimension(cantor_points(8), [3.0 ** -k for k in range(2, 7)])
    assert abs(d - np.log(2) / np.log(3)) <= 0.15


def test_box_dimension_union_is_max():
    seg = np.column_stack([np.linspace(2.0, 3.0, 2001), np.full(2001, 0.5)])
    pt = np.array([[4.5, 0.5]])
    deltas = [0.05, 0.025, 0.0125, 0.00625]
    d_union = box_dimension(np.vstack([seg, pt]), deltas)
    d_max = max(box_dimension(seg, deltas), box_dimension(pt, deltas))
    assert abs(d_union - d_max) <= 0.15


def test_box_dimension_empty_set():
    assert box_dimension(np.empty((0, 2)), [0.1, 0.05]) == 0.0


def test_cylinder_counts_trivial():
    assert cylinder_counts([(1.0, 0.5)], 0.1) == (1, 1)
    two = [(1.0, 0.5), (1.0 + 0.25, 0.5)]
    M, N = cylinder_counts(two, 0.1, verify=True)
    assert M == 2


def test_cylinder_counts_cover_vs_pack_random():
    rng = np.random.default_rng(5)
    pts = np.column_stack([rng.uniform(0, TWO_PI, 100), rng.uniform(0.2, 0.8, 100)])
    for r in (0.05, 0.1, 0.2, 0.4):
        M_r, _ = cylinder_counts(pts, r, verify=True)
        _, N_2r = cylinder_counts(pts, 2 * r, verify=True)
        assert N_2r <= M_r


def test_vitali_single_and_nested():
    q = ParabolicCylinder(1.0, 0.5, 0.2)
    assert vitali_disjointify([q]) == [q]
    nest = [ParabolicCylinder(3.0, 0.5, 0.3 / 1.5 ** i) for i in range(6)]
    sel = vitali_disjointify(nest)
    assert len(sel) == 1 and sel[0].r == 0.3


def test_vitali_random_family_containment():
    rng = np.random.default_rng(6)
    cyls = [ParabolicCylinder(rng.uniform(0, TWO_PI), rng.uniform(0.3, 0.7),
                              rng.uniform(0.02, 0.3)) for _ in range(200)]
    sel = vitali_disjointify(cyls)
    for a in range(len(sel)):
        for b in range(a + 1, len(sel)):
            qa, qb = sel[a], sel[b]
            dx = abs(qa.x0 - qb.x0) % TWO_PI
            dx = min(dx, TWO_PI - dx)
            assert dx >= qa.r + qb.r or abs(qa.t0 - qb.t0) >= qa.r ** 4 + qb.r ** 4
    assert all(any(contained_in_dilate(q, s) for s in sel) for q in cyls)


def test_hausdorff_empty_and_single(spike_traj):
    th = Thresholds(r_scan=(0.45, 0.35, 0.25, 0.18, 0.12))
    empty = scan_suspects(spike_traj, th, "E", [0.3], [0.1])   # far from spike
    assert hausdorff_p1_upper(spike_traj, empty, th.eps1, 1.0) == 0.0
    one = scan_suspects(spike_traj, th, "E", [3.0], [0.1])
    assert len(one.points) == 1
    val = hausdorff_p1_upper(spike_traj, one, th.eps1, 1.0)
    assert 0.0 < val < 1.0
    assert val in [5.0 * r for r in th.r_scan]     # one cylinder: 5x a scanned radius


def test_hausdorff_reclassifies_when_no_radius_fits(spike_traj):
    th = Thresholds()
    sus = scan_suspects(spike_traj, th, "E", [3.0], [0.1])
    assert len(sus.points) == 1
    with pytest.warns(UserWarning, match="no admissible radius"):
        # delta below 5x the smallest scanned radius leaves no choice
        val = hausdorff_p1_upper(spike_traj, sus, th.eps1, 5 * 0.25 * 0.99)
    assert val == 0.0


def test_hausdorff_sum_nonincreasing_in_delta():
    # spike train: three separated concentration points
    n = 1024
    rows = sum(spike_field(n, x0, 0.35, 1.5).samples for x0 in (1.0, 3.0, 5.0))
    # frame spacing resolves the smallest scanned window (0.12^4)
    traj = constant_trajectory(from_samples(rows - rows.mean()), 0.0, 0.2, 4001)
    th = Thresholds(r_scan=(0.45, 0.35, 0.25, 0.18, 0.12))
    sus = scan_suspects(traj, th, "E",
                        [1.0, 3.0, 5.0], [0.08, 0.12])
    assert len(sus.points) >= 3
    deltas = [2.5, 1.25, 0.625]
    sums = [hausdorff_p1_upper(traj, sus, th.eps1, d) for d in deltas]
    assert all(s > 0 for s in sums)
    assert all(a >= b - 1e-12 for a, b in zip(sums, sums[1:]))


def test_counting_bound_chain_on_synthetic_set():
    # neighbourhood area of the suspects at delta = r^4 is controlled by
    # 2^7 r^5 N_r, the covering arithmetic behind the dimension bound
    rng = np.random.default_rng(9)
    pts = np.column_stack([rng.uniform(1.0, 5.0, 60), rng.uniform(0.4, 0.6, 60)])
    for r in (0.55, 0.65):
        _, N_r = cylinder_counts(pts, r)
        area = neighbourhood_area(pts, r ** 4, pixels_per_delta=8)
        assert area <= 2 ** 7 * r ** 5 * N_r * 1.1


def test_regularity_report_json(spike_traj):
    th = Thresholds(r_scan=(0.45, 0.35, 0.25, 0.18, 0.12))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = regularity_report(spike_traj, th, "E",
                                np.linspace(0, TWO_PI, 16, endpoint=False), [0.1])
    text = report_to_json(rep)
    back = json.loads(text)
    for key in ("criterion", "thresholds", "grid", "suspect_points", "counts",
                "dimension_estimate", "p1_upper", "warnings"):
        assert key in back
    assert back["criterion"] == "E"
    assert len(back["suspect_points"]) >= 1
    assert back["p1_upper"] is not None


def test_report_empty_for_zero(zero_traj):
    rep = regularity_report(zero_traj, Thresholds(), "E", [1.0, 3.0], [0.1])
    assert rep["suspect_points"] == []
    assert rep["p1_upper"] == 0.0
    assert rep["dimension_estimate"] == 0.0
