import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from halfsens._bits import ResourceCapError, make_rng
from halfsens.boolfn import LinearThresholdFunction, dictator, parity, truth_table
from halfsens.constructions import random_intersection
from halfsens.learner import (LowDegreePolynomial, agnostic_learn, brute_force_l1,
                              default_sample_count, degree_for, feature_count, feature_masks,
                              full_cube_source, l1_regress, parity_features, read_dataset_csv,
                              uniform_source, write_dataset_csv)


def test_degree_for_examples():
    assert degree_for(2, 1, 1) == 1
    assert degree_for(4, 0.5, 2) == 12  # ceil(2 ln 4 * 4) = ceil(11.09)
    assert degree_for(4, 0.5, 2, n=7) == 7
    for bad in [(2, 0.5, 0), (1, 0.5, 1), (2, 0, 1), (2, 1.5, 1)]:
        with pytest.raises(ValueError):
            degree_for(*bad)


def test_parity_features_examples():
    assert list(parity_features(5, 4, 0)) == [1]
    assert (parity_features(0b111, 3, 2) == 1).all()
    # x = (+1, -1) is index 0b01; masks {}, {1}, {2}, {1,2}
    assert list(parity_features(0b01, 2, 2)) == [1, 1, -1, -1]
    assert parity_features(np.arange(8), 3, 1).shape == (8, 4)


@given(st.integers(1, 8), st.data())
def test_feature_masks_order_and_count(n, data):
    d = data.draw(st.integers(0, n))
    masks = feature_masks(n, d)
    assert masks.size == feature_count(n, d)
    assert list(masks) == sorted(masks)
    assert all(bin(int(m)).count("1") <= d for m in masks)


def test_regress_zero_labels():
    p = l1_regress(np.arange(16), np.zeros(16), 4, 2)
    assert p.loss == pytest.approx(0, abs=1e-9)
    assert np.allclose(p.coeffs, 0, atol=1e-7)


def test_regress_dictator_interpolation():
    n = 5
    labels = truth_table(dictator(n)).values.astype(int)
    p = l1_regress(np.arange(1 << n), labels, n, 1)
    cmap = p.coefficient_map(atol=1e-7)
    assert cmap.keys() == {0, 1}
    assert cmap[0] == pytest.approx(0.5, abs=1e-7) and cmap[1] == pytest.approx(0.5, abs=1e-7)
    assert p.loss == pytest.approx(0, abs=1e-7)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_regress_parity_degree_one_matches_oracle(n):
    pts = np.arange(1 << n)
    labels = parity(n).values.astype(int)
    p = l1_regress(pts, labels, n, 1)
    assert p.loss == pytest.approx(brute_force_l1(pts, labels, n, 1), abs=1e-6)
    # parity is orthogonal to every degree-1 character, so the best is a constant
    assert p.loss == pytest.approx((1 << n) / 2, abs=1e-6)


@given(st.integers(1, 4), st.integers(0, 2), st.integers(1, 9), st.integers(0, 2**32 - 1),
       st.booleans())
def test_regress_matches_bruteforce(n, d, m, seed, real_labels):
    d = min(d, n)
    rng = make_rng(seed)
    pts = rng.integers(0, 1 << n, size=m)
    labels = rng.random(m) if real_labels else rng.integers(0, 2, size=m)
    p = l1_regress(pts, labels, n, d)
    assert p.loss == pytest.approx(brute_force_l1(pts, labels, n, d), abs=1e-6)


@given(st.integers(1, 4), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_full_degree_pointwise_fit_matches_bruteforce(n, m, seed):
    rng = make_rng(seed)
    pts = rng.integers(0, 1 << n, size=m)
    labels = rng.integers(0, 2, size=m)
    p = l1_regress(pts, labels, n, n)
    assert p.method == "pointwise median"
    assert p.loss == pytest.approx(brute_force_l1(pts, labels, n, n), abs=1e-6)


def _permute_index(x, perm):
    out = np.zeros_like(x)
    for i, j in enumerate(perm):
        out |= ((x >> i) & 1) << j
    return out


@given(st.permutations(range(4)), st.integers(0, 2**32 - 1))
def test_permutation_equivariance(perm, seed):
    n, d = 4, 2
    labels = make_rng(seed).integers(0, 2, size=1 << n)
    pts = np.arange(1 << n)
    p = l1_regress(pts, labels, n, d)
    q = l1_regress(_permute_index(pts, perm), labels, n, d)
    # optimal losses agree exactly (the LP is the same up to relabelling) ...
    assert q.loss == pytest.approx(p.loss, abs=1e-6)
    # ... and mapping p's masks through the relabelling gives an optimal fit of the permuted data
    moved = LowDegreePolynomial(n, d, _permute_index(p.masks, perm), p.coeffs)
    order = np.argsort(moved.masks)
    moved = LowDegreePolynomial(n, d, moved.masks[order], moved.coeffs[order])
    perm_pts = _permute_index(pts, perm)
    assert np.abs(moved(perm_pts) - labels).sum() == pytest.approx(q.loss, abs=1e-6)


def test_regress_errors():
    with pytest.raises(ValueError):
        l1_regress([], [], 3, 1)
    with pytest.raises(ValueError):
        l1_regress([1, 2], [0], 3, 1)
    with pytest.raises(ResourceCapError):
        l1_regress(np.arange(64), np.zeros(64), 6, 2, cap=100)
    with pytest.raises(ValueError):
        feature_masks(3, 4)


def test_polynomial_evaluation_paths_agree():
    n = 8
    rng = make_rng(3)
    masks = feature_masks(n, 3)
    p = LowDegreePolynomial(n, 3, masks, rng.standard_normal(masks.size))
    pts = np.arange(1 << n)
    direct = parity_features(pts, n, 3) @ p.coeffs
    assert np.allclose(p.cube_values(), direct)
    assert np.allclose(p(pts[:5]), direct[:5])
    assert p(7) == pytest.approx(direct[7])


def test_model_json_roundtrip():
    p = l1_regress(np.arange(8), [0, 1, 1, 0, 1, 0, 0, 1], 3, 1)
    q = LowDegreePolynomial.from_json(p.to_json())
    assert q.n == 3 and q.degree == 1 and q.method == p.method and q.tolerance == p.tolerance
    assert np.array_equal(q.masks, p.masks) and np.allclose(q.coeffs, p.coeffs)


def test_dataset_csv_roundtrip():
    pts, labels = uniform_source(dictator(5))(make_rng(0), 20)
    buf = io.StringIO()
    write_dataset_csv(pts, labels, buf)
    assert buf.getvalue().splitlines()[0] == "x,label"
    buf.seek(0)
    p2, l2 = read_dataset_csv(buf)
    assert np.array_equal(p2, pts) and np.array_equal(l2, labels)


def test_default_sample_count():
    assert default_sample_count(10, 1, 0.5) == 11 * 32


def test_learn_single_halfspace_full_cube():
    target = LinearThresholdFunction([3, 1, 1, 2, 1, 1, 1, 1, 2, 1], 1)
    rep = agnostic_learn(full_cube_source(target), 10, 1, 0.2)
    assert rep.degree == 10 and rep.samples == 1 << 10
    assert rep.holdout_error <= 0.2


def test_learn_two_unit_halfspaces_sampled():
    spec = random_intersection(12, 2, "unit", seed=1)
    rep = agnostic_learn(uniform_source(spec), 12, 2, 0.25, sample_count=10**4, seed=0)
    assert rep.samples == 10**4
    assert rep.holdout_error <= 0.25 + 0.05


def test_learn_low_degree_sampled_uses_lp():
    spec = random_intersection(10, 2, "unit", seed=4)
    rep = agnostic_learn(uniform_source(spec), 10, 2, 0.9, C=1.0, sample_count=3000, seed=2)
    assert rep.degree == 1 and "lp" in rep.method
    assert rep.holdout_error <= 0.9


def test_learn_parity_labels_reported_near_half():
    target = parity(10)
    rep = agnostic_learn(uniform_source(target), 10, 2, 0.9, C=1.0, sample_count=4000, seed=5)
    assert rep.degree == 1
    assert abs(rep.holdout_error - 0.5) < 0.05


def test_learn_noisy_labels_runs():
    spec = random_intersection(8, 2, "signs", seed=2)
    rep = agnostic_learn(uniform_source(spec, noise=0.1), 8, 2, 0.8, C=1.0, sample_count=2000,
                         seed=1)
    assert 0 <= rep.train_error <= 1 and math.isfinite(rep.train_loss)
