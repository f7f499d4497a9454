"""Low-degree L1 polynomial regression and the resulting agnostic learner.

The hypothesis class is ``p(x) = sum_{|S| <= d} c_S chi_S(x)``; the fit
minimizes the empirical L1 loss ``sum_j |p(x_j) - y_j|`` (a linear program),
and the predictor rounds ``p`` at 1/2.
"""
import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from ._bits import make_rng, popcount
from .boolfn import truth_table
from .fourier import character_coefficients, character_sum

FEATURE_SAMPLE_CAP = 2 * 10**8
LP_TOLERANCE = 1e-9


def degree_for(k, eps, C, n=None):
    """d = ceil(C ln(k) / eps^2), capped at n when given."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if C <= 0:
        raise ValueError("C must be positive")
    d = math.ceil(C * math.log(k) / eps**2)
    return min(d, n) if n is not None else d


def feature_masks(n, d):
    """Masks with |S| <= d in increasing mask order."""
    if not 0 <= d <= n:
        raise ValueError(f"degree must lie in [0, {n}], got {d}")
    if d == n:
        return np.arange(1 << n, dtype=np.int64)
    masks = sorted(sum(1 << i for i in c)
                   for j in range(d + 1) for c in itertools.combinations(range(n), j))
    return np.asarray(masks, dtype=np.int64)


def feature_count(n, d):
    return sum(math.comb(n, j) for j in range(d + 1))


def parity_features(x, n, d):
    """(chi_S(x)) for |S| <= d; ``x`` is a point index or an array of them."""
    masks = feature_masks(n, d)
    pts = np.atleast_1d(np.asarray(x, dtype=np.int64))
    # chi_S(x) = (-1)^{#coordinates of S where x is -1}
    odd = popcount(masks[None, :] & ~pts[:, None]) & 1
    out = (1 - 2 * odd).astype(np.int8)
    return out[0] if np.ndim(x) == 0 else out


@dataclass
class LowDegreePolynomial:
    n: int
    degree: int
    masks: np.ndarray
    coeffs: np.ndarray
    method: str = ""
    tolerance: float = 0.0
    loss: float = float("nan")

    def __call__(self, x):
        pts = np.atleast_1d(np.asarray(x, dtype=np.int64))
        if self.masks.size * pts.size > (self.n + 1) << self.n:
            vals = self.cube_values()[pts]
        else:
            vals = np.concatenate([self._features(pts[i:i + 4096]) @ self.coeffs
                                   for i in range(0, pts.size, 4096)])
        return vals[0] if np.ndim(x) == 0 else vals

    def cube_values(self):
        """p(x) at every cube point via the fast transform."""
        dense = np.zeros(1 << self.n)
        dense[self.masks] = self.coeffs
        return character_sum(dense, self.n)

    def _features(self, pts):
        odd = popcount(self.masks[None, :] & ~pts[:, None]) & 1
        return 1.0 - 2.0 * odd

    def coefficient_map(self, atol=0.0):
        return {int(m): float(c) for m, c in zip(self.masks, self.coeffs) if abs(c) > atol}

    def to_json(self):
        return json.dumps({
            "n": self.n, "degree": self.degree, "method": self.method,
            "tolerance": self.tolerance,
            "terms": [[int(m), float(c)] for m, c in zip(self.masks, self.coeffs)],
        })

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        terms = doc["terms"]
        return cls(doc["n"], doc["degree"],
                   np.array([t[0] for t in terms], dtype=np.int64),
                   np.array([t[1] for t in terms], dtype=np.float64),
                   doc.get("method", ""), doc.get("tolerance", 0.0))


@dataclass
class Hypothesis:
    polynomial: LowDegreePolynomial

    def predict(self, x):
        return (np.asarray(self.polynomial(x)) >= 0.5).astype(np.int8)


def l1_loss(poly, points, labels):
    return float(np.abs(poly(points) - np.asarray(labels, dtype=np.float64)).sum())


def _pointwise_fit(points, labels, n):
    """Optimal degree-n fit: every cube function is a degree-n polynomial, so the
    L1 optimum takes the median label at each sampled point independently.

    For 0/1 labels that is the majority label (1/2 on a tie); unsampled points
    get 0.  The coefficients come from one transform of the fitted values.
    """
    size = 1 << n
    values = np.zeros(size)
    if np.all((labels == 0) | (labels == 1)):
        ones = np.bincount(points, weights=labels, minlength=size)
        seen = np.bincount(points, minlength=size)
        values = np.sign(2 * ones - seen) * 0.5 + 0.5 * (seen > 0)
    else:
        order = np.lexsort((labels, points))
        pts, lab = points[order], labels[order]
        starts = np.flatnonzero(np.r_[True, pts[1:] != pts[:-1]])
        ends = np.r_[starts[1:], pts.size]
        for a, b in zip(starts, ends):
            values[pts[a]] = 0.5 * (lab[a + (b - a - 1) // 2] + lab[a + (b - a) // 2])
    return character_coefficients(values, n) / size


def l1_regress(points, labels, n, d, cap=FEATURE_SAMPLE_CAP):
    """Degree-<=d polynomial minimizing sum_j |p(x_j) - y_j|.

    Solved through the LP dual with HiGHS, which has one variable per distinct
    sample instead of one per feature plus two per sample.  When d = n the
    optimum is found pointwise without an LP.
    """
    points = np.asarray(points, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if points.size == 0:
        raise ValueError("cannot regress on an empty sample")
    if points.size != labels.size:
        raise ValueError("points and labels differ in length")
    masks = feature_masks(n, d)
    if d == n:
        coeffs = _pointwise_fit(points, labels, n)
        poly = LowDegreePolynomial(n, d, masks, coeffs, "pointwise median", 0.0)
        poly.loss = l1_loss(poly, points, labels)
        return poly
    # identical (point, label) rows collapse into one row of weight w
    key = points * 2 + (labels > 0.5)
    if not np.all((labels == 0) | (labels == 1)):
        key = np.arange(points.size)
    _, first, weight = np.unique(key, return_index=True, return_counts=True)
    upts, ulab = points[first], labels[first]
    nf, ns = masks.size, upts.size
    if nf * ns > cap:
        from ._bits import ResourceCapError

        raise ResourceCapError(f"{nf} features x {ns} samples exceeds the cap {cap}")
    phi = 1.0 - 2.0 * (popcount(masks[None, :] & ~upts[:, None]) & 1)
    # dual of min sum_j w_j |phi_j c - y_j|:  max y.z  s.t.  phi^T z = 0, |z_j| <= w_j;
    # the primal coefficients are the equality multipliers (up to sign)
    w = weight.astype(np.float64)
    opts = {"primal_feasibility_tolerance": LP_TOLERANCE,
            "dual_feasibility_tolerance": LP_TOLERANCE}
    method = "highs-ipm"
    res = linprog(-ulab, A_eq=phi.T, b_eq=np.zeros(nf), bounds=np.column_stack([-w, w]),
                  method=method, options=opts)
    if res.status != 0:
        method = "highs-ds"
        res = linprog(-ulab, A_eq=phi.T, b_eq=np.zeros(nf), bounds=np.column_stack([-w, w]),
                      method=method, options=opts)
    if res.status != 0:
        raise RuntimeError(f"L1 regression LP failed: {res.message}")
    coeffs = -np.asarray(res.eqlin.marginals, dtype=np.float64)
    poly = LowDegreePolynomial(n, d, masks, coeffs, f"{method} dual lp", LP_TOLERANCE)
    poly.loss = l1_loss(poly, points, labels)
    return poly


def brute_force_l1(points, labels, n, d):
    """Optimal L1 loss by enumerating basic solutions (tiny instances only).

    An optimum of the L1 fit interpolates ``rank`` samples exactly, so the
    minimum over all nonsingular square subsystems is the optimal loss.
    """
    points = np.asarray(points, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.float64)
    phi = parity_features(points, n, d).astype(np.float64)
    rank = np.linalg.matrix_rank(phi)
    best = math.inf
    for rows in itertools.combinations(range(points.size), rank):
        sub = phi[list(rows)]
        if np.linalg.matrix_rank(sub) < rank:
            continue
        coef, *_ = np.linalg.lstsq(sub, labels[list(rows)], rcond=None)
        best = min(best, float(np.abs(phi @ coef - labels).sum()))
    return best


# ------------------------------------------------------------------ sources

def full_cube_source(target):
    """Every cube point once, labelled by the target (noiseless)."""
    tt = truth_table(target)

    def draw(rng, count):
        pts = np.arange(1 << tt.n, dtype=np.int64)
        return pts, tt.values[pts].astype(np.int8)

    draw.n = tt.n
    draw.exhaustive = True
    return draw


def uniform_source(target, noise=0.0):
    """Uniform points labelled by the target, each label flipped w.p. ``noise``."""
    tt = truth_table(target)

    def draw(rng, count):
        pts = rng.integers(0, 1 << tt.n, size=count, dtype=np.int64)
        labels = tt.values[pts].astype(np.int8)
        if noise:
            labels ^= (rng.random(count) < noise).astype(np.int8)
        return pts, labels

    draw.n = tt.n
    draw.exhaustive = False
    return draw


def default_sample_count(n, d, eps):
    return feature_count(n, d) * math.ceil(8 / eps**2)


@dataclass
class LearnReport:
    n: int
    k: int
    eps: float
    C: float
    degree: int
    samples: int
    train_loss: float
    train_error: float
    holdout_error: float
    method: str
    hypothesis: Hypothesis = field(repr=False, default=None)


def agnostic_learn(source, n, k, eps, C=4.0, sample_count=None, seed=0, holdout=None):
    """Fit a degree-ceil(C ln k / eps^2) L1 polynomial and report its errors.

    ``k = 1`` is treated as ``k = 2`` inside the logarithm.  For exhaustive
    sources the held-out set is the cube itself; otherwise ``holdout`` fresh
    draws are used (default: as many as training samples).
    """
    d = degree_for(max(k, 2), eps, C, n=n)
    rng = make_rng(seed)
    count = default_sample_count(n, d, eps) if sample_count is None else sample_count
    pts, labels = source(rng, count)
    poly = l1_regress(pts, labels, n, d)
    hyp = Hypothesis(poly)
    train_error = float(np.mean(hyp.predict(pts) != labels))
    if getattr(source, "exhaustive", False):
        hpts, hlabels = pts, labels
    else:
        hpts, hlabels = source(make_rng(seed, stream=1), holdout or len(pts))
    holdout_error = float(np.mean(hyp.predict(hpts) != hlabels))
    return LearnReport(n, k, eps, C, d, len(pts), poly.loss / len(pts), train_error,
                       holdout_error, poly.method, hyp)


def write_dataset_csv(points, labels, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "label"])
    for p, y in zip(np.asarray(points).tolist(), np.asarray(labels).tolist()):
        w.writerow([p, y])


def read_dataset_csv(fh):
    rows = list(csv.DictReader(fh))
    return (np.array([int(r["x"]) for r in rows], dtype=np.int64),
            np.array([int(r["label"]) for r in rows], dtype=np.int8))
