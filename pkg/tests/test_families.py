import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from rdlab.families import (Dataset, InconsistentDataError, Kind, consistency_prob,
                            consistency_region, discrepancy_prob, draw_dataset, excess_loss,
                            family_from_id, family_from_spec, flip_labels, gaussian_location,
                            halfspace_angle_2d, halfspace_sphere, interval_1d, is_consistent,
                            label, label_matrix, labeling_cells, noisy_wrap, sample_inputs,
                            sample_prior, sphere_coordinate_entropy, zero_hit_upper_bound)

unit = st.floats(0.0, 1.0, allow_nan=False)
angle = st.floats(0.0, 1.0, exclude_max=True, allow_nan=False)


def ds(pairs):
    x, y = zip(*pairs) if pairs else ((), ())
    return Dataset(np.array(x, dtype=float), np.array(y, dtype=np.int8))


# ---------------------------------------------------------------------------
# constructors


def test_family_constants():
    f = interval_1d()
    assert (f.d_w, f.d_vc, f.mu, f.prior_entropy) == (1, 1, 1.0, 0.0)
    g = halfspace_angle_2d()
    assert (g.d_w, g.d_vc, g.dim) == (1, 2, 2)
    assert g.mu == pytest.approx(1 / math.pi)
    s = halfspace_sphere(4)
    assert (s.d_w, s.d_vc, s.dim) == (3, 4, 4)
    gl = gaussian_location(1.0, 2.0)
    assert not gl.realizable
    assert gl.prior_entropy == pytest.approx(0.5 * math.log(2 * math.pi * math.e * 4.0))


def test_sphere_coordinate_entropy_d2_is_log_half_pi():
    # uniform angle on the circle: first coordinate cos(theta) has entropy log(pi/2)
    assert sphere_coordinate_entropy(2) == pytest.approx(math.log(math.pi / 2), abs=1e-12)


def test_sphere_coordinate_entropy_mc_d3():
    # for d=3, (w1, w2) is uniform on the unit disk / projected sphere; its density
    # is 1 / (2 pi sqrt(1 - r^2)); Monte Carlo of -log density
    rng = np.random.default_rng(1)
    g = rng.standard_normal((400_000, 3))
    w = g / np.linalg.norm(g, axis=1, keepdims=True)
    r2 = w[:, 0] ** 2 + w[:, 1] ** 2
    vals = np.log(2 * math.pi * np.sqrt(1 - r2))
    assert sphere_coordinate_entropy(3) == pytest.approx(vals.mean(), abs=4 * vals.std() / 632)


@pytest.mark.parametrize("fam", [interval_1d(), halfspace_angle_2d(), halfspace_sphere(3),
                                 gaussian_location(2.0, 0.5)])
def test_family_id_round_trip(fam):
    assert family_from_id(fam.id) == fam


def test_family_from_spec():
    assert family_from_spec({"kind": "HalfSpaceUnitSphere", "d": 5}) == halfspace_sphere(5)
    with pytest.raises(ValueError):
        family_from_spec({"kind": "Nope"})


# ---------------------------------------------------------------------------
# sampling and labels


def test_sample_prior_support(rng):
    w = sample_prior(interval_1d(), rng)
    assert 0.0 <= w <= 1.0
    v = sample_prior(halfspace_sphere(3), rng)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12


def test_sample_prior_mean(rng):
    w = sample_prior(interval_1d(), rng, 100_000)
    assert abs(w.mean() - 0.5) < 0.01


def test_label_examples():
    f = interval_1d()
    assert label(f, 0.8, 0.3) == 1
    assert label(f, 0.3, 0.3) == 1
    assert label(f, 0.2, 0.3) == 0
    s = halfspace_sphere(2)
    assert label(s, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1


def test_angle2d_label_is_a_half_plane(rng):
    # label 1 exactly on the half-plane {x : <x, n> >= 0} with normal at angle w + 1/4 turns
    f = halfspace_angle_2d()
    x = sample_inputs(f, 5000, rng)
    for w in rng.random(20):
        normal = np.array([math.cos(2 * math.pi * (w + 0.25)), math.sin(2 * math.pi * (w + 0.25))])
        margin = x @ normal
        keep = np.abs(margin) > 1e-9
        assert np.array_equal(label(f, x, w)[keep], (margin > 0)[keep].astype(np.int8))


def test_label_matrix_matches_label(rng):
    for f in (interval_1d(), halfspace_angle_2d(), halfspace_sphere(3)):
        x = sample_inputs(f, 30, rng)
        ws = sample_prior(f, rng, 7)
        m = label_matrix(f, x, ws)
        for i, w in enumerate(ws):
            assert np.array_equal(m[i], label(f, x, w).astype(bool))


def test_gaussian_label_needs_rng():
    with pytest.raises(ValueError):
        label(gaussian_location(), np.zeros(3), 0.0)


# ---------------------------------------------------------------------------
# discrepancy and excess loss


@given(unit, unit)
def test_interval_discrepancy_symmetric(w, v):
    f = interval_1d()
    d = discrepancy_prob(f, w, v)
    assert d == discrepancy_prob(f, v, w)
    assert 0.0 <= d <= 1.0
    assert discrepancy_prob(f, w, w) == 0.0


@given(angle, angle)
def test_angle_discrepancy_properties(w, v):
    f = halfspace_angle_2d()
    d = discrepancy_prob(f, w, v)
    assert d == pytest.approx(discrepancy_prob(f, v, w), abs=1e-15)
    assert 0.0 <= d <= 1.0
    assert discrepancy_prob(f, w, w) == 0.0


def test_interval_discrepancy_example():
    assert discrepancy_prob(interval_1d(), 0.3, 0.5) == pytest.approx(0.2, abs=1e-15)


def test_interval_discrepancy_matches_mc(rng):
    f = interval_1d()
    x = rng.random(100_000)
    for w, v in rng.random((5, 2)):
        p = discrepancy_prob(f, w, v)
        mc = np.mean(label(f, x, w) != label(f, x, v))
        assert abs(mc - p) <= 3 * math.sqrt(max(p * (1 - p), 1e-12) / x.size) + 1e-12


def test_angle_discrepancy_matches_arccos(rng):
    # against the R^2 half-space formula arccos(<n_w, n_v>) / pi
    f = halfspace_angle_2d()
    x = sample_inputs(f, 200_000, rng)
    for w, v in rng.random((5, 2)):
        a, b = 2 * math.pi * w, 2 * math.pi * v
        arccos = math.acos(max(-1.0, min(1.0, math.cos(a - b)))) / math.pi
        assert discrepancy_prob(f, w, v) == pytest.approx(arccos, abs=1e-12)
        mc = np.mean(label(f, x, w) != label(f, x, v))
        assert abs(mc - arccos) < 4 * math.sqrt(0.25 / x.size)


def test_sphere_discrepancy_example_and_mc(rng):
    s = halfspace_sphere(2)
    assert discrepancy_prob(s, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.5)
    s3 = halfspace_sphere(3)
    x = sample_inputs(s3, 200_000, rng)
    w, v = sample_prior(s3, rng, 2)
    mc = np.mean(label(s3, x, w) != label(s3, x, v))
    assert abs(mc - discrepancy_prob(s3, w, v)) < 4 * math.sqrt(0.25 / x.size)


@pytest.mark.parametrize("d", [2, 3, 5, 10])
def test_sphere_sensitivity_inequality(d):
    # arccos(<w, v>) / pi >= ||w - v||_inf / pi on random unit pairs
    rng = np.random.default_rng(d)
    s = halfspace_sphere(d)
    for _ in range(1000):
        w, v = sample_prior(s, rng, 2)
        assert discrepancy_prob(s, w, v) >= np.max(np.abs(w - v)) / math.pi - 1e-15


def test_discrepancy_rejects_out_of_support():
    with pytest.raises(ValueError):
        discrepancy_prob(interval_1d(), 1.5, 0.2)
    with pytest.raises(ValueError):
        discrepancy_prob(gaussian_location(), 0.0, 1.0)


def test_excess_loss_realizable_exact():
    e = excess_loss(interval_1d(), 0.3, 0.5)
    assert e.exact and e.value == pytest.approx(0.2, abs=1e-15)
    assert excess_loss(interval_1d(), 0.4, 0.4).value == 0.0


def test_excess_loss_noisy_sandwich():
    nf = noisy_wrap(interval_1d(), 0.1)
    e = excess_loss(nf, 0.3, 0.5, mc_budget=1_000_000, rng=np.random.default_rng(7))
    lo, hi = e.sandwich
    assert (lo, hi) == pytest.approx((0.16, 0.2))
    assert lo - 3 * e.std_error <= e.value <= hi + 3 * e.std_error
    # with i.i.d. flips the excess loss sits exactly at the lower end
    assert abs(e.value - lo) < 4 * e.std_error


def test_excess_loss_gaussian_log_loss():
    g = gaussian_location(2.0, 1.0)
    e = excess_loss(g, 0.0, 1.0, mc_budget=200_000, rng=np.random.default_rng(3))
    # KL(N(0, s^2) || N(1, s^2)) = 1 / (2 s^2)
    assert abs(e.value - 1 / 8) < 4 * e.std_error


def test_excess_loss_small_budget_rejected():
    with pytest.raises(ValueError):
        excess_loss(noisy_wrap(interval_1d(), 0.1), 0.1, 0.2, mc_budget=10,
                    rng=np.random.default_rng(0))


# ---------------------------------------------------------------------------
# consistency sets


def test_interval_region_example():
    f = interval_1d()
    r = consistency_region(f, ds([(0.2, 0), (0.8, 1)]))
    assert (r.lo, r.hi, r.lo_closed, r.hi_closed) == (0.2, 0.8, False, True)
    assert r.mass == pytest.approx(0.6)
    grid = np.linspace(0, 1, 10_001)
    data = ds([(0.2, 0), (0.8, 1)])
    brute = np.mean([is_consistent(f, data, w) for w in grid])
    assert brute == pytest.approx(0.6, abs=2e-4)
    assert all(r.contains(w) == is_consistent(f, data, w) for w in grid)


def test_interval_region_empty_data():
    r = consistency_region(interval_1d(), Dataset.empty(interval_1d()))
    assert (r.lo, r.hi, r.mass) == (0.0, 1.0, 1.0)


def test_interval_region_inconsistent():
    with pytest.raises(InconsistentDataError):
        consistency_region(interval_1d(), ds([(0.5, 0), (0.4, 1)]))


@given(st.lists(st.floats(0.0, 1.0, exclude_max=True), min_size=1, max_size=12),
       st.floats(0.0, 1.0, exclude_max=True))
def test_angle_region_matches_labeling(angles, w):
    # boundary-aligned configurations have probability zero; keep away from them
    cuts = np.mod(np.concatenate([angles, np.add(angles, 0.5)]), 1.0)
    d = np.abs(np.subtract.outer(cuts, np.append(cuts, w)))
    d = np.minimum(d, 1 - d)
    d[np.arange(cuts.size), np.arange(cuts.size)] = 1.0
    d[np.arange(len(angles)), np.arange(len(angles)) + len(angles)] = 1.0
    d[np.arange(len(angles)) + len(angles), np.arange(len(angles))] = 1.0
    assume(d.min() > 1e-9)
    f = halfspace_angle_2d()
    th = 2 * math.pi * np.array(angles)
    x = np.column_stack([np.cos(th), np.sin(th)])
    data = Dataset(x, label(f, x, w))
    r = consistency_region(f, data)
    assert r.contains(w)
    grid = (np.arange(2000) + 0.37) / 2000
    inside = np.array([r.contains(v) for v in grid])
    truth = np.array([is_consistent(f, data, v) for v in grid])
    assert np.array_equal(inside, truth)
    assert abs(inside.mean() - r.mass) <= 2.5 / 2000


def test_angle_region_inconsistent():
    f = halfspace_angle_2d()
    x = np.array([[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(InconsistentDataError):
        consistency_region(f, Dataset(x, np.array([1, 1], dtype=np.int8)))


def test_consistency_prob_examples(rng):
    f = interval_1d()
    assert consistency_prob(f, ds([(0.2, 0), (0.8, 1)])).prob == pytest.approx(0.6)
    assert consistency_prob(f, Dataset.empty(f)).prob == 1.0


def test_consistency_prob_closed_form_matches_mc(rng):
    f = interval_1d()
    for _ in range(5):
        data = draw_dataset(f, rng.random(), 6, rng)
        exact = consistency_prob(f, data).prob
        ws = rng.random(100_000)
        ok = np.all(label_matrix(f, data.x, ws) == data.y.astype(bool)[None, :], axis=1)
        se = math.sqrt(exact * (1 - exact) / ws.size)
        assert abs(ok.mean() - exact) <= 3 * se + 1e-12


def test_sphere_consistency_prob_against_big_oracle():
    rng = np.random.default_rng(11)
    s = halfspace_sphere(3)
    w = sample_prior(s, rng)
    data = draw_dataset(s, w, 5, rng)
    est = consistency_prob(s, data, 20_000, np.random.default_rng(2))
    oracle = consistency_prob(s, data, 1_000_000, np.random.default_rng(3))
    assert not est.exact and not est.flagged
    assert abs(est.prob - oracle.prob) <= 3 * math.hypot(est.std_error, oracle.std_error)


def test_zero_hit_flagging():
    s = halfspace_sphere(3)
    rng = np.random.default_rng(0)
    data = draw_dataset(s, sample_prior(s, rng), 400, rng)
    est = consistency_prob(s, data, 100, rng)
    assert est.flagged and est.hits == 0
    assert est.prob == pytest.approx(zero_hit_upper_bound(100))
    # one-sided 95% bound: P(0 hits | p = bound) = 0.05
    assert (1 - zero_hit_upper_bound(100)) ** 100 == pytest.approx(0.05)


def test_labeling_cells_partition(rng):
    for f in (interval_1d(), halfspace_angle_2d()):
        x = sample_inputs(f, 9, rng)
        masses, labels, mids = labeling_cells(f, x)
        assert masses.sum() == pytest.approx(1.0)
        assert labels.shape == (masses.size, 9)
        for m, lab in zip(mids, labels):
            assert np.array_equal(label(f, x, m).astype(bool), lab)


# ---------------------------------------------------------------------------
# label noise


def test_noisy_wrap_limits(rng):
    f = interval_1d()
    y = label(f, rng.random(1000), 0.4)
    assert np.array_equal(flip_labels(y, 0.0, rng), y)
    assert noisy_wrap(f, 0.5).margin == 0.0
    with pytest.raises(ValueError):
        noisy_wrap(f, 0.6)
    with pytest.raises(ValueError):
        noisy_wrap(gaussian_location(), 0.1)


def test_flip_rate(rng):
    nf = noisy_wrap(interval_1d(), 0.1)
    noisy, clean = nf.draw(0.3, 100_000, rng)
    assert np.array_equal(noisy.x, clean.x)
    assert abs(np.mean(noisy.y != clean.y) - 0.1) < 0.005


def test_kind_enum_values():
    assert {k.value for k in Kind} == {"Interval1D", "HalfSpaceAngle2D",
                                        "HalfSpaceUnitSphere", "GaussianLocation"}
