"""Instance generators.

* extremal single halfspaces ``sum_i x_i > t`` with a prescribed lower bound on
  their mass,
* the randomized lower-bound family: an OR of randomly sign-flipped copies of
  one such halfspace,
* random intersections / unate unions for upper-bound experiments,
* the bin-splitting noise process and the restricted functions it induces.
"""
import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from ._bits import (check_table_n, make_rng, pairs, parallel_map, popcount,
                    signs_to_mask, xor_permute)
from .boolfn import (Combiner, CompositeSpec, LinearThresholdFunction, TruthTable,
                     flip_signs, truth_table)
from .sensitivity import average_sensitivity_exact

MAX_AUDIT_N = 22


# ---------------------------------------------------------------- binomial tails

@dataclass(frozen=True)
class BinomialTailTable:
    """tail[t] = Pr(sum_i x_i > t) for uniform x in {-1,+1}^n."""

    n: int
    tail: tuple  # index t + n + 1 for t in -n-1..n

    def __getitem__(self, t):
        if t < -self.n - 1:
            return Fraction(1)
        if t >= self.n:
            return Fraction(0)
        return self.tail[t + self.n + 1]


def binomial_tail(n):
    if not 0 <= n <= 64:
        raise ValueError(f"exact binomial tails support 0 <= n <= 64, got {n}")
    den = 1 << n
    tail = []
    for t in range(-n - 1, n + 1):
        # sum_i x_i = 2j - n with j plus-coordinates
        tail.append(Fraction(sum(comb(n, j) for j in range(n + 1) if 2 * j - n > t), den))
    return BinomialTailTable(n, tuple(tail))


def _largest_threshold(n, eps):
    tails = binomial_tail(n)
    theta = max(t for t in range(-n - 1, n + 1) if tails[t] >= eps)
    return theta, tails[theta]


def threshold_ltf(n, eps):
    """Unit-weight halfspace sum_i x_i > theta with theta as large as possible
    subject to mass >= eps.  Returns ``(ltf, achieved_mean)``.

    Accepts 2^-n <= eps < 1/2; at eps = 2^-n the answer is the single point
    (+1, ..., +1).
    """
    eps = Fraction(eps)
    if not Fraction(1, 1 << n) <= eps < Fraction(1, 2):
        raise ValueError(f"eps must satisfy 2^-n <= eps < 1/2, got {eps} for n={n}")
    theta, mean = _largest_threshold(n, eps)
    return LinearThresholdFunction([1] * n, theta), mean


def threshold_as_closed_form(n, theta):
    """as([sum x > theta]) = n * Pr(sum of n-1 signs hits the pivotal value)."""
    if n == 0:
        return Fraction(0)
    # flipping x_j matters iff the other n-1 coordinates sum to s with s+1 > theta >= s-1
    total = 0
    for j in range(n):
        s = 2 * j - (n - 1)
        if s - 1 <= theta < s + 1:
            total += comb(n - 1, j)
    return Fraction(n * total, 1 << (n - 1))


# --------------------------------------------------------- lower-bound family

@dataclass(frozen=True)
class LowerBoundFamily:
    n: int
    k: int
    m: int
    base: LinearThresholdFunction
    signs: tuple
    union: CompositeSpec
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def radius(self):
        """Each term is a Hamming ball of this radius around its sign vector."""
        return math.ceil((self.n - self.base.threshold) / 2) - 1

    @property
    def centers(self):
        return [signs_to_mask(s) for s in self.signs]


def nearest_tail_mass(n, eps):
    """Achievable mass Pr(sum x > t) in (0, 1) closest to eps (ties go to the larger)."""
    tails = binomial_tail(n)
    levels = sorted({tails[t] for t in range(-n, n)}, reverse=True)
    return min(levels, key=lambda v: (abs(v - eps), -v))


def _family_base(n, k):
    eps = Fraction(1, k)
    eps_used = nearest_tail_mass(n, eps)
    theta, mean = _largest_threshold(n, eps_used)
    meta = {
        "eps_requested": str(eps),
        "eps_clamped": str(eps_used),
        "clamped": eps_used != eps,
        "eps_range_ok": Fraction(1, 1 << n) < eps < Fraction(1, 2),
        "achieved_mean": str(mean),
        "theta": theta,
    }
    return LinearThresholdFunction([1] * n, theta), mean, meta


def family_size(mean, k):
    """m = floor(1 / (4 E[f])) capped at k; 1 when the base alone is used."""
    if mean > Fraction(1, 4):
        return 1
    return max(1, min(k, math.floor(1 / (4 * mean))))


def build_family(n, k, signs, seed=None):
    """Lower-bound family with explicitly given sign vectors."""
    base, mean, meta = _family_base(n, k)
    signs = tuple(tuple(int(v) for v in s) for s in signs)
    terms = [flip_signs(base, s) for s in signs]
    meta = dict(meta, seed=seed, m=len(signs), single_term=mean > Fraction(1, 4))
    return LowerBoundFamily(n, k, len(signs), base, signs,
                            CompositeSpec(n, Combiner.OR, terms), meta)


def lower_bound_family(n, k, seed, stream=0):
    """OR of m independent uniformly sign-flipped copies of the extremal halfspace."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > 1 << n:
        raise ValueError(f"k={k} exceeds 2^n={1 << n}")
    base, mean, _ = _family_base(n, k)
    m = family_size(mean, k)
    if mean > Fraction(1, 4):
        signs = [(1,) * n]
    else:
        rng = make_rng(seed, stream)
        draws = rng.integers(0, 2, size=(m, n)) * 2 - 1
        signs = [tuple(int(v) for v in row) for row in draws]
    return build_family(n, k, signs, seed=seed)


def hamming_ball(n, center, r):
    return popcount(np.arange(1 << n) ^ center) <= r


def _dilate(vals, n):
    out = vals.copy()
    for i in range(n):
        lo, hi = pairs(vals, i)
        olo, ohi = pairs(out, i)
        olo |= hi
        ohi |= lo
    return out


def family_table(family: LowerBoundFamily) -> TruthTable:
    """Truth table of the union, via translated balls or ball dilation."""
    n, r = family.n, family.radius
    check_table_n(n)
    centers = family.centers
    if r < 0 or not centers:
        return TruthTable.constant(n, 0)
    # gathers cost ~1 pass each, a dilation step ~n/6 passes
    if len(centers) * 6 <= (r + 1) * n:
        ball = hamming_ball(n, 0, r)
        acc = np.zeros(1 << n, dtype=bool)
        for c in centers:
            acc |= xor_permute(ball, c)
        return TruthTable(n, acc)
    acc = np.zeros(1 << n, dtype=bool)
    acc[np.asarray(centers, dtype=np.int64)] = True
    for _ in range(r):
        acc = _dilate(acc, n)
    return TruthTable(n, acc)


def cover_audit(family: LowerBoundFamily, samples, rng):
    """Fraction of sampled boundary edges (x in term i, y outside) where some
    other term contains x or y.  Returns ``(covered, sampled)``."""
    n, r, m = family.n, family.radius, family.m
    if m < 2 or r < 0 or r >= n:
        return 0, 0
    centers = np.asarray(family.centers, dtype=np.int64)
    covered = 0
    terms = rng.integers(0, m, size=samples)
    for t in range(samples):
        c = int(centers[terms[t]])
        order = rng.permutation(n)
        away = order[:r]             # coordinates where x disagrees with c
        toward = order[r + rng.integers(0, n - r)]  # agreeing coordinate flipped to leave the ball
        x = c
        for j in away.tolist():
            x ^= 1 << j
        y = x ^ (1 << int(toward))
        others = np.delete(centers, terms[t])
        dx = popcount(others ^ x)
        dy = popcount(others ^ y)
        covered += bool(np.any((dx <= r) | (dy <= r)))
    return covered, samples


@dataclass
class UnionAudit:
    n: int
    k: int
    m: int
    trials: int
    as_values: list
    mean_as: float
    ratio: float
    best_index: int
    best_family: LowerBoundFamily
    covered: int
    cover_samples: int

    @property
    def cover_probability(self):
        return self.covered / self.cover_samples if self.cover_samples else 0.0


def expected_union_sensitivity_audit(n, k, trials, seed, cover_samples=64, signs=None):
    """Exact as(F) over ``trials`` independently drawn sign families.

    ``signs`` forces one fixed family for every trial (used for controls).
    """
    check_table_n(n, cap=MAX_AUDIT_N, what="union audit")

    def one(t):
        if signs is None:
            fam = lower_bound_family(n, k, seed, stream=t)
        else:
            fam = build_family(n, k, signs, seed=seed)
        rep = average_sensitivity_exact(family_table(fam))
        cov = cover_audit(fam, cover_samples, make_rng(seed, stream=(1 << 32) + t))
        return fam, rep.as_exact, cov

    results = parallel_map(one, range(trials))
    values = [r[1] for r in results]
    mean_as = float(sum(values, Fraction(0)) / trials)
    best = max(range(trials), key=lambda t: (values[t], -t))
    lnk = math.log(k) if k > 1 else float("nan")
    return UnionAudit(
        n=n, k=k, m=results[0][0].m, trials=trials, as_values=values,
        mean_as=mean_as, ratio=mean_as / math.sqrt(n * lnk) if k > 1 else float("nan"),
        best_index=best, best_family=results[best][0],
        covered=sum(r[2][0] for r in results), cover_samples=sum(r[2][1] for r in results),
    )


def write_audit_csv(audit: UnionAudit, fh):
    """Per-trial rows (trial, as_num, as_den, ratio)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["trial", "as_num", "as_den", "ratio"])
    scale = math.sqrt(audit.n * math.log(audit.k)) if audit.k > 1 else float("nan")
    for t, v in enumerate(audit.as_values):
        w.writerow([t, v.numerator, v.denominator, repr(float(v) / scale)])


# ------------------------------------------------------------ random instances

WEIGHT_DISTS = ("unit", "signs", "gaussian")


def _draw_weights(rng, n, dist):
    if dist == "unit":
        return np.ones(n, dtype=np.int64)
    if dist == "signs":
        return rng.integers(0, 2, size=n) * 2 - 1
    if dist == "gaussian":
        w = np.rint(rng.standard_normal(n) * 8).astype(np.int64)
        if not w.any():
            w[0] = 1
        return w
    raise ValueError(f"unknown weight distribution {dist!r}; choose from {WEIGHT_DISTS}")


def sum_distribution(weights):
    """(values, probabilities) of sum_i w_i x_i for uniform x."""
    weights = [int(w) for w in weights]
    span = sum(abs(w) for w in weights)
    prob = np.zeros(2 * span + 1)
    prob[span] = 1.0
    for w in weights:
        if w == 0:
            continue
        a = abs(w)
        new = np.zeros_like(prob)
        new[a:] += prob[:-a] * 0.5
        new[:-a] += prob[a:] * 0.5
        prob = new
    return np.arange(-span, span + 1), prob


def threshold_for_cut(weights, q):
    """Threshold whose cut-off mass Pr(sum <= theta) is the largest not above q.

    Falls back to the smallest atom so the halfspace never becomes constant.
    """
    values, prob = sum_distribution(weights)
    support = prob > 0
    values, prob = values[support], prob[support]
    cdf = np.cumsum(prob)
    ok = np.nonzero(cdf <= q * (1 + 1e-12))[0]
    if ok.size:
        j = int(ok[-1])
        if j == len(values) - 1:
            j -= 1
        return int(values[max(j, 0)])
    return int(values[0])


def random_ltf(rng, n, dist, cut):
    w = _draw_weights(rng, n, dist)
    return LinearThresholdFunction(w.tolist(), threshold_for_cut(w, cut))


def random_intersection(n, k, weight_dist="signs", seed=0, band=(0.5, 1.5)):
    """AND of k random halfspaces, each cutting off mass about U(band)/k."""
    rng = make_rng(seed)
    terms = []
    for _ in range(k):
        q = min(0.5, rng.uniform(*band) / k)
        terms.append(random_ltf(rng, n, weight_dist, q))
    return CompositeSpec(n, Combiner.AND, terms)


def random_unate_term(rng, n, k):
    """sigma-reflection of an AND of two positive halfspaces on disjoint coordinate sets.

    The two halves are independent, so the term mass is the product of the
    halves' masses, each about sqrt(U(0.5, 1.5) / k).  Unate, and rarely an LTF.
    """
    sigma = rng.integers(0, 2, size=n) * 2 - 1
    order = rng.permutation(n)
    cut = max(1, n // 2)
    q = math.sqrt(min(0.5, rng.uniform(0.5, 1.5) / k))
    parts = []
    for coords in (order[:cut], order[cut:]):
        if coords.size == 0:
            continue
        w = np.zeros(n, dtype=np.int64)
        w[coords] = rng.integers(1, 6, size=coords.size)
        theta = threshold_for_cut(w[coords], 1 - q)
        parts.append(LinearThresholdFunction((sigma * w).tolist(), theta))
    return CompositeSpec(n, Combiner.AND, parts)


def random_unate_union_terms(n, k, seed):
    rng = make_rng(seed)
    return [random_unate_term(rng, n, k) for _ in range(k)]


def union_table(n, terms):
    acc = np.zeros(1 << n, dtype=bool)
    for t in terms:
        acc |= truth_table(t).values
    return TruthTable(n, acc)


def random_monotone(rng, n, generators=3, width=None):
    """Monotone closure of a few random generator points (a random up-set)."""
    from .boolfn import monotone_closure

    pts = []
    for _ in range(generators):
        w = int(rng.integers(1, n + 1)) if width is None else width
        coords = rng.permutation(n)[:w]
        pts.append(sum(1 << int(c) for c in coords))
    return monotone_closure(n, pts)


def random_unate_table(rng, n):
    """Either a random LTF table or a reflected random up-set."""
    if rng.random() < 0.5:
        w = rng.integers(-4, 5, size=n)
        theta = int(rng.integers(-abs(w).sum() - 1, abs(w).sum() + 1))
        return truth_table(LinearThresholdFunction(w.tolist(), theta))
    from .boolfn import apply_signs

    sigma = tuple(int(v) for v in rng.integers(0, 2, size=n) * 2 - 1)
    return apply_signs(random_monotone(rng, n, generators=int(rng.integers(1, 5))), sigma)


def tribes(n, width):
    """OR of disjoint ANDs of ``width`` coordinates (unate, noise-sensitive control)."""
    x = np.arange(1 << n)
    acc = np.zeros(1 << n, dtype=bool)
    for start in range(0, n - width + 1, width):
        mask = ((1 << width) - 1) << start
        acc |= (x & mask) == mask
    return TruthTable(n, acc)


# ------------------------------------------------------------ binning process

def round_noise_rate(eps):
    """Round eps down to 1/m with m = ceil(1/eps); returns (m, Fraction(1, m))."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError(f"noise rate must lie in (0, 1), got {eps}")
    m = math.ceil(1 / eps)
    return m, Fraction(1, m)


@dataclass(frozen=True)
class BinnedNoiseDraw:
    n: int
    m: int
    bins: tuple
    z: int
    b: tuple
    chosen: int
    x: int
    y: int


def bin_masks(bins, m):
    masks = [0] * m
    for i, j in enumerate(bins):
        masks[j] |= 1 << i
    return masks


def binned_transform(bins, m, z, b_mask, chosen):
    """Steps 3-4 of the process: scale z by per-bin signs, then flip one bin.

    ``b_mask`` has bit j set when b_j = +1.  Returns ``(x, y)`` as point indices.
    """
    masks = bin_masks(bins, m)
    flip = 0
    for j in range(m):
        if not (b_mask >> j) & 1:
            flip |= masks[j]
    x = z ^ flip
    return x, x ^ masks[chosen]


def binned_pair(n, m, seed, stream=0):
    """One draw of the four-step process: bins, z, per-bin signs, one flipped bin."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = make_rng(seed, stream)
    bins = tuple(int(v) for v in rng.integers(0, m, size=n))
    z = sum(1 << i for i, v in enumerate(rng.integers(0, 2, size=n).tolist()) if v)
    b_mask = int(rng.integers(0, 1 << m))
    chosen = int(rng.integers(0, m))
    x, y = binned_transform(bins, m, z, b_mask, chosen)
    b = tuple(1 if (b_mask >> j) & 1 else -1 for j in range(m))
    return BinnedNoiseDraw(n, m, bins, z, b, chosen, x, y)


def binning_joint_counts(n, m):
    """Counts of (x, y) over every realization of the process randomness."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if n > 6:
        raise ValueError("full enumeration of the binning process supports n <= 6")
    size = 1 << n
    counts = np.zeros(size * size, dtype=np.int64)
    z = np.arange(size)
    for bins in itertools.product(range(m), repeat=n):
        for b_mask in range(1 << m):
            for chosen in range(m):
                x0, y0 = binned_transform(bins, m, 0, b_mask, chosen)
                # the maps z -> x, z -> y are translations by x0, y0
                counts[(z ^ x0) * size + (z ^ y0)] += 1
    return counts.reshape(size, size)


def binning_distribution_check(n, m):
    """Exact total-variation distance between the process law of (x, y) and
    the direct law (x uniform, each coordinate flipped w.p. 1/m)."""
    counts = binning_joint_counts(n, m)
    total = m**n * (1 << n) * (1 << m) * m
    size = 1 << n
    x = np.arange(size)
    d = popcount(x[:, None] ^ x[None, :])
    # total * 2^-n * (1/m)^d (1 - 1/m)^(n-d) = 2^m * m * (m-1)^(n-d)
    expected = np.array([(1 << m) * m * (m - 1) ** (n - k) for k in range(n + 1)], dtype=np.int64)
    diff = int(np.abs(counts - expected[d]).sum())
    return Fraction(diff, 2 * total)


def restricted_spec(spec, bins, z, m):
    """Induced spec over the m bin signs: weights sum_{i in bin j} w_i z_i."""
    z_signs = [1 if (z >> i) & 1 else -1 for i in range(len(bins))]

    def induce(f):
        if isinstance(f, LinearThresholdFunction):
            w = [0] * m
            for i, (wi, j) in enumerate(zip(f.weights, bins)):
                w[j] += wi * z_signs[i]
            return LinearThresholdFunction(w, f.threshold)
        if isinstance(f, CompositeSpec):
            return CompositeSpec(m, f.combiner, [induce(t) for t in f.terms])
        raise TypeError("restriction needs LTF or composite-of-LTF specs")

    if len(bins) != spec.n:
        raise ValueError("bin assignment length must equal n")
    return induce(spec)


def restricted_function(spec, bins, z, m):
    """g(b) = f(b_{bin(1)} z_1, ..., b_{bin(n)} z_n) as a table over m variables."""
    check_table_n(m, cap=MAX_AUDIT_N, what="restricted function")
    if isinstance(spec, TruthTable):
        return restricted_function_bruteforce(spec, bins, z, m)
    return truth_table(restricted_spec(spec, bins, z, m))


def restricted_function_bruteforce(spec, bins, z, m):
    from .boolfn import _eval_bits

    vals = []
    for b_mask in range(1 << m):
        x, _ = binned_transform(bins, m, z, b_mask, 0)
        vals.append(_eval_bits(spec, x))
    return TruthTable(m, vals)


def _restricted_growth_strings(n, max_blocks):
    """Set partitions of range(n) into at most max_blocks blocks."""
    def rec(prefix, blocks):
        if len(prefix) == n:
            yield tuple(prefix), blocks
            return
        for j in range(min(blocks + 1, max_blocks)):
            yield from rec(prefix + [j], max(blocks, j + 1))
    yield from rec([], 0)


def _as_edge_sum_over_z(values, n, bins, blocks):
    """sum over all z of (boundary-edge count of g_z), for g over ``blocks`` variables."""
    size = 1 << n
    masks = bin_masks(bins, blocks)
    flips = np.zeros(1 << blocks, dtype=np.int64)
    for bm in range(1 << blocks):
        for j in range(blocks):
            if not (bm >> j) & 1:
                flips[bm] |= masks[j]
    z = np.arange(size)
    G = values[z[:, None] ^ flips[None, :]]
    edges = 0
    for j in range(blocks):
        v = G.reshape(size, -1, 2, 1 << j)
        edges += int(np.count_nonzero(v[:, :, 0, :] != v[:, :, 1, :]))
    return edges


def binned_average_sensitivity(tt: TruthTable, m) -> Fraction:
    """E_{bins, z}[as(g)] / m over the uniform bin assignment and uniform z.

    Bin relabelings permute the coordinates of g, so each set partition is
    weighted by the number of labeled assignments realizing it.
    """
    n = tt.n
    if n > 8:
        raise ValueError("exact binned average sensitivity supports n <= 8")
    total = 0
    for bins, blocks in _restricted_growth_strings(n, m):
        # empty bins are irrelevant variables of g: each doubles the edge count
        weight = math.perm(m, blocks) << (m - blocks)
        total += weight * _as_edge_sum_over_z(tt.values, n, bins, blocks)
    # as(g) = 2 * edges / 2^m; average over m^n assignments and 2^n values of z
    return Fraction(2 * total, (1 << m) * m**n * (1 << n) * m)


def binned_average_sensitivity_labeled(tt: TruthTable, m) -> Fraction:
    """Same quantity as :func:`binned_average_sensitivity`, enumerating labeled bins."""
    n = tt.n
    total = 0
    for bins in itertools.product(range(m), repeat=n):
        total += _as_edge_sum_over_z(tt.values, n, bins, m)
    return Fraction(2 * total, (1 << m) * m**n * (1 << n) * m)


def seeded_families(n, k, trials, seed):
    return parallel_map(lambda t: lower_bound_family(n, k, seed, stream=t), range(trials))
