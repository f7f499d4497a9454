"""Average and noise sensitivity, exact and Monte Carlo, plus proof audits.

The audits check, on concrete functions, the finite inequalities behind the
disjunction argument: the pointwise edge inequality for adding one unate term
and the per-term bound ``delta_as <= 2 E[S_m * sum_i sigma_i x_i]``.
"""
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from ._bits import check_table_n, make_rng, pairs, parallel_map, xor_permute
from .boolfn import (Combiner, CompositeSpec, LinearThresholdFunction, TruthTable,
                     orientation, truth_table)

MAX_EXACT_N = 26
MAX_NS_ENUM_N = 14
MC_CHUNK = 4096


@dataclass(frozen=True)
class SensitivityReport:
    n: int
    boundary_edges: int
    as_exact: Fraction
    mean: Fraction
    edge_counts: tuple = ()

    @property
    def influences(self):
        """Per-coordinate influences (edge count / 2^(n-1))."""
        return tuple(Fraction(c, 1 << (self.n - 1)) for c in self.edge_counts)


def average_sensitivity_exact(tt: TruthTable) -> SensitivityReport:
    """Count boundary edges direction by direction; as = B / 2^(n-1)."""
    check_table_n(tt.n, cap=MAX_EXACT_N, what="exact average sensitivity")
    counts = []
    for i in range(tt.n):
        lo, hi = pairs(tt.values, i)
        counts.append(int(np.count_nonzero(lo != hi)))
    b = sum(counts)
    as_exact = Fraction(2 * b, 1 << tt.n) if tt.n else Fraction(0)
    return SensitivityReport(tt.n, b, as_exact, tt.mean, tuple(counts))


def naive_average_sensitivity(tt: TruthTable) -> Fraction:
    """Per-point count of sensitive coordinates, averaged (slow oracle)."""
    n = tt.n
    total = 0
    for x in range(1 << n):
        fx = tt[x]
        total += sum(1 for i in range(n) if tt[x ^ (1 << i)] != fx)
    return Fraction(total, 1 << n)


def as_of(spec):
    return average_sensitivity_exact(truth_table(spec)).as_exact


# ----------------------------------------------------------------- Monte Carlo

@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int
    mode: str = ""


class BatchEvaluator:
    """Vectorized evaluation of a spec on batches of +-1 rows, without tables."""

    def __init__(self, spec):
        self.n = spec.n
        if isinstance(spec, (LinearThresholdFunction, TruthTable)):
            terms, self.combiner = [spec], Combiner.AND
        else:
            terms, self.combiner = list(spec.terms), spec.combiner
        # nested composites are materialized once and handled as table terms
        terms = [truth_table(t) if isinstance(t, CompositeSpec) else t for t in terms]
        ltfs = [t for t in terms if isinstance(t, LinearThresholdFunction)]
        self.tables = [t for t in terms if isinstance(t, TruthTable)]
        if ltfs:
            self.weights = np.array([t.weights for t in ltfs], dtype=np.float64).T
            self.thresholds = np.array([t.threshold for t in ltfs], dtype=np.float64)
        else:
            self.weights = np.zeros((self.n, 0))
            self.thresholds = np.zeros(0)
        self.need_index = bool(self.tables)
        if self.need_index and self.n > 62:
            raise ValueError("truth-table terms need n <= 62 for streaming evaluation")
        self._bitweights = (1 << np.arange(self.n, dtype=np.int64)) if self.need_index else None

    def prepare(self, X):
        """Linear forms (B x k) and point indices for a batch of rows."""
        sums = X @ self.weights if self.weights.shape[1] else np.zeros((X.shape[0], 0))
        idx = ((X > 0).astype(np.int64) @ self._bitweights) if self.need_index else None
        return sums, idx

    def decide(self, sums, idx):
        outs = [sums > self.thresholds] if sums.shape[1] else []
        for t in self.tables:
            outs.append(t.values[idx][:, None])
        if not outs:
            const = self.combiner is Combiner.AND
            return np.full(sums.shape[0], const)
        allv = np.concatenate(outs, axis=1)
        if self.combiner is Combiner.AND:
            return allv.all(axis=1)
        return allv.any(axis=1)

    def __call__(self, X):
        return self.decide(*self.prepare(X))


def _rows_per_chunk(n):
    return max(1, min(MC_CHUNK, (1 << 24) // max(n, 1)))


def _chunk_plan(samples, n):
    size = _rows_per_chunk(n)
    return [(j, min(size, samples - j * size)) for j in range((samples + size - 1) // size)]


def _combine(parts, samples, seed, mode, scale=1.0):
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / samples
    if samples > 1:
        var = max(0.0, (total_sq - samples * mean * mean) / (samples - 1))
    else:
        var = 0.0
    return MonteCarloEstimate(scale * mean, scale * math.sqrt(var / samples), samples, seed, mode)


def _random_rows(rng, rows, n):
    return rng.integers(0, 2, size=(rows, n), dtype=np.int8).astype(np.float64) * 2 - 1


def average_sensitivity_mc(spec, samples, seed, mode="direction"):
    """Unbiased estimate of E_x #{i : f(x) != f(x^i)}.

    ``mode="direction"`` draws one uniform coordinate per sample and scales
    the flip rate by n; ``mode="full"`` scans every neighbour of each sample.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if mode not in ("direction", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    ev = BatchEvaluator(spec)
    n = ev.n

    def run(chunk):
        j, rows = chunk
        rng = make_rng(seed, stream=j)
        X = _random_rows(rng, rows, n)
        sums, idx = ev.prepare(X)
        fx = ev.decide(sums, idx)
        if mode == "direction":
            dirs = rng.integers(0, n, size=rows)
            r = np.arange(rows)
            xi = X[r, dirs]
            s2 = sums - 2 * xi[:, None] * ev.weights[dirs, :]
            i2 = idx ^ (1 << dirs) if idx is not None else None
            z = (ev.decide(s2, i2) != fx).astype(np.float64)
        else:
            z = np.zeros(rows)
            for i in range(n):
                s2 = sums - 2 * X[:, i:i + 1] * ev.weights[i]
                i2 = idx ^ (1 << i) if idx is not None else None
                z += ev.decide(s2, i2) != fx
        return float(z.sum()), float((z * z).sum())

    parts = parallel_map(run, _chunk_plan(samples, n))
    return _combine(parts, samples, seed, mode, scale=n if mode == "direction" else 1.0)


def noise_sensitivity_mc(spec, eps, samples, seed):
    """Frequency of f(x) != f(y) with y an eps-noisy copy of uniform x."""
    if not 0 < eps < 1:
        raise ValueError(f"noise rate must lie in (0, 1), got {eps}")
    if samples < 1:
        raise ValueError("need at least one sample")
    ev = BatchEvaluator(spec)
    n = ev.n

    def run(chunk):
        j, rows = chunk
        rng = make_rng(seed, stream=j)
        X = _random_rows(rng, rows, n)
        flips = rng.random(size=(rows, n)) < eps
        Y = np.where(flips, -X, X)
        z = (ev(X) != ev(Y)).astype(np.float64)
        return float(z.sum()), float(z.sum())

    parts = parallel_map(run, _chunk_plan(samples, n))
    return _combine(parts, samples, seed, "pairs")


# --------------------------------------------------------- exact noise sensitivity

def _check_rho(rho):
    if not 0 < rho < 1:
        raise ValueError(f"noise rate must lie in (0, 1), got {rho}")


def disagreement_by_distance(tt: TruthTable):
    """D[d] = number of ordered pairs (x, y) at Hamming distance d with f(x) != f(y)."""
    check_table_n(tt.n, cap=MAX_NS_ENUM_N, what="pair enumeration")
    n = tt.n
    counts = [0] * (n + 1)
    for z in range(1 << n):
        shifted = xor_permute(tt.values, z)
        counts[z.bit_count()] += int(np.count_nonzero(shifted != tt.values))
    return counts


def noise_sensitivity_exact_enum(tt: TruthTable, rho) -> Fraction:
    """sum_{x,y} 2^-n rho^d(x,y) (1-rho)^(n-d(x,y)) [f(x) != f(y)], exactly."""
    _check_rho(rho)
    rho = Fraction(rho)
    n = tt.n
    counts = disagreement_by_distance(tt)
    total = sum((c * rho**d * (1 - rho) ** (n - d) for d, c in enumerate(counts)), Fraction(0))
    return total / (1 << n)


# --------------------------------------------------------------- proof audits

def correlation_statistic(s_tt: TruthTable, sigma=None) -> Fraction:
    """E[S(x) * sum_i sigma_i x_i], exactly."""
    n = s_tt.n
    sigma = (1,) * n if sigma is None else tuple(sigma)
    if len(sigma) != n:
        raise ValueError(f"sign vector has length {len(sigma)}, expected {n}")
    ones = s_tt.ones
    total = 0
    for i, s in enumerate(sigma):
        _, hi = pairs(s_tt.values, i)
        total += s * (2 * int(np.count_nonzero(hi)) - ones)
    return Fraction(total, 1 << n)


def claim_pointwise_check(f_prev: TruthTable, f_m: TruthTable, sigma=None):
    """All (x, i) violating the edge inequality for F_m = F_prev OR f_m.

    The inequality is
    |F_m(x)-F_m(x^i)| - |F_prev(x)-F_prev(x^i)|
        <= t_i * ((F_m(x)-F_m(x^i)) - (F_prev(x)-F_prev(x^i)))
    with t_i = sigma_i x_i.  Without ``sigma`` the coordinates are taken as
    given, so an unnormalized decreasing term shows up as violations.
    Non-unate ``f_m`` is rejected.
    """
    if f_prev.n != f_m.n:
        raise ValueError("dimension mismatch")
    if not orientation(f_m).unate:
        raise ValueError("f_m is not unate")
    n = f_m.n
    sigma = (1,) * n if sigma is None else tuple(sigma)
    fm_all = (f_prev.values | f_m.values).astype(np.int8)
    fp_all = f_prev.values.astype(np.int8)
    violations = []
    for i in range(n):
        m_lo, m_hi = pairs(fm_all, i)
        p_lo, p_hi = pairs(fp_all, i)
        dm = m_hi - m_lo
        dp = p_hi - p_lo
        lhs = np.abs(dm) - np.abs(dp)
        # both endpoints give the same inequality; evaluate at x_i = +1
        rhs = sigma[i] * (dm - dp)
        bad = np.nonzero((lhs > rhs).reshape(-1))[0]
        if bad.size:
            block = 1 << i
            lo_idx = (bad // block) * (2 * block) + bad % block
            for x in lo_idx.tolist():
                violations.append((x, i))
                violations.append((x | block, i))
    return sorted(violations)


@dataclass(frozen=True)
class LedgerRow:
    m: int
    p_m: Fraction
    delta_as: Fraction
    corr: Fraction
    bound: float


@dataclass
class TelescopingLedger:
    n: int
    rows: list = field(default_factory=list)
    as_total: Fraction = Fraction(0)
    mean_total: Fraction = Fraction(0)

    @property
    def inequality_holds(self):
        return all(r.delta_as <= r.corr for r in self.rows)

    @property
    def corr_sum(self):
        return sum((r.corr for r in self.rows), Fraction(0))


def height_bound(n, p, c=1.0):
    """c * p * sqrt(n ln(1/p)), with 0 at p in {0, 1}."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return c * p * math.sqrt(n * math.log(1.0 / p))


def telescoping_audit(terms, c=1.0) -> TelescopingLedger:
    """Add unate terms one at a time and record p_m, delta_as and the correlation bound."""
    terms = [truth_table(t) if not isinstance(t, TruthTable) else t for t in terms]
    if not terms:
        raise ValueError("need at least one term")
    n = terms[0].n
    check_table_n(n, cap=20, what="telescoping audit")
    ledger = TelescopingLedger(n)
    prev = TruthTable.constant(n, 0)
    prev_as = Fraction(0)
    for m, f in enumerate(terms, start=1):
        if f.n != n:
            raise ValueError("all terms must share the same dimension")
        o = orientation(f)
        if not o.unate:
            raise ValueError(f"term {m} is not unate")
        cur = prev | f
        s_m = TruthTable(n, cur.values & ~prev.values)
        p_m = s_m.mean
        cur_as = average_sensitivity_exact(cur).as_exact
        corr = 2 * correlation_statistic(s_m, o.sigma)
        ledger.rows.append(LedgerRow(m, p_m, cur_as - prev_as, corr, height_bound(n, p_m, c)))
        prev, prev_as = cur, cur_as
    ledger.as_total = prev_as
    ledger.mean_total = prev.mean
    return ledger


def threshold_height_ratio(n, t):
    """E[S sum x] / (p sqrt(n ln(1/p))) for S = [sum_i x_i > t]; None when p in {0, 1}."""
    heads = [j for j in range(n + 1) if 2 * j - n > t]
    ones = sum(comb(n, j) for j in heads)
    if ones in (0, 1 << n):
        return None
    corr = Fraction(sum(comb(n, j) * (2 * j - n) for j in heads), 1 << n)
    p = Fraction(ones, 1 << n)
    return float(corr) / height_bound(n, p)


# ------------------------------------------------------------------- CSV output

REPORT_COLUMNS = ["function_id", "n", "k", "B", "as_num", "as_den", "mean_num", "mean_den"]
LEDGER_COLUMNS = ["m", "p_m", "delta_as", "corr", "bound"]


def report_row(function_id, report, k):
    return [function_id, report.n, k, report.boundary_edges,
            report.as_exact.numerator, report.as_exact.denominator,
            report.mean.numerator, report.mean.denominator]


def write_reports_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    w.writerows(rows)


def write_ledger_csv(ledger, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(LEDGER_COLUMNS)
    for r in ledger.rows:
        w.writerow([r.m, str(r.p_m), str(r.delta_as), str(r.corr), repr(r.bound)])

