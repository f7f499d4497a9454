"""Reproducible experiment runner: config -> deterministic CSV (+ optional SVG).

Every run is a pure function of its config.  Instance seeds are derived from
``(seed, kind-specific grid coordinates)`` with :class:`numpy.random.SeedSequence`,
tasks are dispatched through :func:`parallel_map` and rows are written in grid
order, so the output bytes do not depend on ``HS_THREADS``.
"""
import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._bits import MAX_TABLE_N, ResourceCapError, check_table_n, make_rng, parallel_map
from .boolfn import Combiner, CompositeSpec, TruthTable, orientation, parity, truth_table
from .constructions import (MAX_AUDIT_N, WEIGHT_DISTS, binned_average_sensitivity,
                            binning_distribution_check, expected_union_sensitivity_audit,
                            random_intersection, random_unate_table, random_unate_union_terms,
                            round_noise_rate, union_table)
from .fourier import (ns_from_spectrum, degree_profile, smallest_passing_degree, tail_weight,
                      wht)
from .learner import agnostic_learn, degree_for, full_cube_source, uniform_source
from .sensitivity import (average_sensitivity_exact, average_sensitivity_mc,
                          claim_pointwise_check, noise_sensitivity_mc, telescoping_audit)

KINDS = ("as-upper", "as-lower", "ns-scaling", "claim-audit", "binning-check",
         "fourier-tail", "learn")
FAMILIES = WEIGHT_DISTS + ("unate-union", "parity")
DRIFT = 0.25


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


# ------------------------------------------------------------------ config

def _grid(value, name):
    """Accept a scalar, a list, or {"start", "stop", "step"} (stop inclusive)."""
    if value is None:
        raise ConfigError(f"missing grid {name!r}")
    if isinstance(value, dict):
        try:
            start, stop = value["start"], value["stop"]
        except KeyError as exc:
            raise ConfigError(f"grid {name!r} needs start and stop") from exc
        step = value.get("step", 1)
        mult = value.get("mult")
        out, v = [], start
        if mult:
            if mult <= 1 or start <= 0:
                raise ConfigError(f"grid {name!r}: mult must exceed 1 with a positive start")
            while v <= stop * (1 + 1e-12):
                out.append(v)
                v *= mult
        else:
            if step <= 0:
                raise ConfigError(f"grid {name!r}: step must be positive")
            while v <= stop:
                out.append(v)
                v += step
        return out
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError(f"grid {name!r} is empty")
        return list(value)
    return [value]


@dataclass
class ExperimentConfig:
    kind: str
    n: list
    k: list = field(default_factory=lambda: [2])
    eps: list = field(default_factory=list)
    trials: int = 1
    seed: int = 0
    mode: str = "exact"
    samples: int = 100_000
    families: list = field(default_factory=lambda: ["signs"])
    C: float = 4.0
    k_max: str = ""
    plot: bool = False
    options: dict = field(default_factory=dict)
    out: str = ""

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kind = doc.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
        cfg = cls(kind=kind, n=[int(v) for v in _grid(doc.get("n"), "n")])
        if "k" in doc:
            cfg.k = [int(v) for v in _grid(doc["k"], "k")]
        if "eps" in doc:
            cfg.eps = [float(v) for v in _grid(doc["eps"], "eps")]
        for key in ("trials", "seed", "samples"):
            if key in doc:
                cfg.__dict__[key] = int(doc[key])
        for key in ("mode", "k_max", "out"):
            if key in doc:
                cfg.__dict__[key] = str(doc[key])
        if "families" in doc:
            cfg.families = list(_grid(doc["families"], "families"))
        if "C" in doc:
            cfg.C = float(doc["C"])
        cfg.plot = bool(doc.get("plot", False))
        cfg.options = dict(doc.get("options", {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(doc)

    def validate(self):
        if self.mode not in ("exact", "mc"):
            raise ConfigError(f"mode must be 'exact' or 'mc', got {self.mode!r}")
        if self.trials < 1 or self.samples < 1:
            raise ConfigError("trials and samples must be positive")
        if any(n < 1 for n in self.n):
            raise ConfigError("every n must be positive")
        if any(k < 1 for k in self.k):
            raise ConfigError("every k must be positive")
        if any(not 0 < e < 1 for e in self.eps):
            raise ConfigError("every eps must lie in (0, 1)")
        bad = [f for f in self.families if f not in FAMILIES]
        if bad:
            raise ConfigError(f"unknown families {bad}; choose from {FAMILIES}")
        if self.k_max not in ("", "sqrt"):
            raise ConfigError("k_max must be '' or 'sqrt' (k <= 2^(n/2))")
        if self.kind in ("ns-scaling", "fourier-tail", "learn") and not self.eps:
            raise ConfigError(f"{self.kind} needs an eps grid")
        if self.C <= 0:
            raise ConfigError("C must be positive")
        self.check_resources()

    def check_resources(self):
        """Refuse oversize exact work before anything runs."""
        nmax = max(self.n)
        exact_tables = self.kind in ("claim-audit", "binning-check", "fourier-tail", "learn") or (
            self.kind in ("as-upper", "as-lower") and self.mode == "exact")
        if self.kind == "as-lower" or (self.kind == "as-upper" and self.mode == "exact"
                                      and "unate-union" in self.families):
            check_table_n(nmax, cap=MAX_AUDIT_N, what="union audit")
        if self.kind == "claim-audit":
            check_table_n(nmax, cap=20, what="claim audit")
        if self.kind == "binning-check":
            check_table_n(nmax, cap=6, what="binning enumeration")
        if self.kind == "ns-scaling" and self.mode == "exact":
            check_table_n(nmax, cap=MAX_TABLE_N, what="spectrum")
        if exact_tables:
            check_table_n(nmax, what="truth table")

    def echo(self):
        """Canonical JSON of the config (without the output directory)."""
        doc = {k: v for k, v in self.__dict__.items() if k != "out"}
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def k_values(self, n):
        ks = [k for k in self.k if self.k_max != "sqrt" or k <= 2 ** (n / 2)]
        return ks


def instance_seed(seed, *parts):
    """Deterministic 63-bit seed from the run seed and grid coordinates."""
    state = np.random.SeedSequence([int(seed)] + [int(p) for p in parts]).generate_state(2)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)


# ------------------------------------------------------------------ output

def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, columns, rows, config):
    buf = io.StringIO()
    buf.write(f"# config: {config.echo()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path):
    """Rows of a CSV written by :func:`write_csv` (header comment skipped)."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# ------------------------------------------------------------------ fitting

@dataclass
class RatioFit:
    a: float
    xs: list
    ys: list
    ratios: list
    flags: list
    labels: list

    @property
    def max_ratio(self):
        return max(self.ratios)

    @property
    def min_ratio(self):
        return min(self.ratios)

    @property
    def excess(self):
        """Points above the fitted curve by more than the drift allowance."""
        return [lab for lab, r in zip(self.labels, self.ratios) if r > 1 + DRIFT]

    @property
    def shortfall(self):
        return [lab for lab, r in zip(self.labels, self.ratios) if r < 1 - DRIFT]


def model_value(model, point):
    """sqrt(n ln k) or sqrt(eps ln k)."""
    if model == "sqrt_n_lnk":
        n, k = point
        return math.sqrt(n * math.log(k))
    if model == "sqrt_eps_lnk":
        eps, k = point
        return math.sqrt(eps * math.log(k))
    raise ValueError(f"unknown model {model!r}")


def fit_ratio(points, values, model="sqrt_n_lnk", labels=None, drift=DRIFT):
    """Least-squares ``a`` in ``y ~ a * model(point)`` with per-point ratios.

    The ratio at a point is ``y / (a * model)``; points whose ratio differs
    from 1 by more than ``drift`` are flagged.  Needs at least three distinct
    grid points (k = 1 has ln k = 0 and is not a usable point).
    """
    points = [tuple(p) for p in points]
    if len(points) != len(values):
        raise ValueError("points and values differ in length")
    if len(set(points)) < 3:
        raise ValueError("degenerate grid: need at least 3 distinct points")
    xs = [model_value(model, p) for p in points]
    if any(x <= 0 for x in xs):
        raise ValueError("degenerate grid: model value must be positive (k >= 2)")
    ys = [float(v) for v in values]
    a = sum(x * y for x, y in zip(xs, ys)) / sum(x * x for x in xs)
    ratios = []
    for x, y in zip(xs, ys):
        if a == 0:
            ratios.append(1.0 if y == 0 else math.inf)
        else:
            ratios.append(y / (a * x))
    flags = [abs(r - 1) > drift for r in ratios]
    return RatioFit(a, xs, ys, ratios, flags, list(labels) if labels else points)


# ------------------------------------------------------------------ svg

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
            "#7f7f7f", "#bcbd22", "#e377c2")


def svg_plot(series, title="", xlabel="", ylabel="", width=640, height=400):
    """Minimal SVG line/point chart; ``series`` is [(label, xs, ys), ...]."""
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(0.0, min(p[1] for p in pts)), max(p[1] for p in pts)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    ml, mr, mt, mb = 60, 130, 30, 45
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
           f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>']
    for j in range(5):
        xv, yv = x0 + (x1 - x0) * j / 4, y0 + (y1 - y0) * j / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{mt + ph + 15}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{ml - 5}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{ylabel}</text>')
    for idx, (label, xs, ys) in enumerate(series):
        colour = _PALETTE[idx % len(_PALETTE)]
        coords = [(sx(x), sy(y)) for x, y in zip(xs, ys) if math.isfinite(y)]
        if len(coords) > 1:
            path = " ".join(f"{cx:.1f},{cy:.1f}" for cx, cy in coords)
            out.append(f'<polyline points="{path}" fill="none" stroke="{colour}"/>')
        for cx, cy in coords:
            out.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="3" fill="{colour}"/>')
        ly = mt + 14 * idx
        out.append(f'<rect x="{ml + pw + 10}" y="{ly}" width="10" height="10" fill="{colour}"/>')
        out.append(f'<text x="{ml + pw + 25}" y="{ly + 9}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _series_by(rows, group, x, y):
    groups = {}
    for r in rows:
        g = groups.setdefault(r[group], ([], []))
        g[0].append(float(r[x]))
        g[1].append(float(r[y]))
    return [(f"{group}={key}", xs, ys) for key, (xs, ys) in groups.items()]


# ------------------------------------------------------------------ instances

def make_instance(family, n, k, seed):
    """Spec for one generated instance of ``family``."""
    if family in WEIGHT_DISTS:
        return random_intersection(n, k, family, seed=seed)
    if family == "unate-union":
        return CompositeSpec(n, Combiner.OR, random_unate_union_terms(n, k, seed))
    if family == "parity":
        return parity(n)
    raise ValueError(f"unknown family {family!r}")


def _instance_table(spec):
    if isinstance(spec, CompositeSpec) and spec.combiner is Combiner.OR:
        return union_table(spec.n, spec.terms)
    return truth_table(spec)


# ------------------------------------------------------------------ kinds

AS_UPPER_COLUMNS = ["n", "k", "seed", "mode", "family", "trial", "instance_seed",
                    "as", "stderr", "ratio"]


def _as_upper(cfg):
    tasks = [(n, k, fi, fam, t) for n in cfg.n for k in cfg.k_values(n)
             for fi, fam in enumerate(cfg.families) for t in range(cfg.trials)
             if k >= 2 or fam == "parity"]

    def one(task):
        n, k, fi, fam, t = task
        iseed = instance_seed(cfg.seed, 1, n, k, fi, t)
        spec = make_instance(fam, n, k, iseed)
        if cfg.mode == "exact":
            value, err = average_sensitivity_exact(_instance_table(spec)).as_exact, 0.0
        else:
            est = average_sensitivity_mc(spec, cfg.samples, iseed)
            value, err = est.estimate, est.stderr
        ratio = float(value) / math.sqrt(n * math.log(k)) if k >= 2 else math.nan
        return {"n": n, "k": k, "seed": cfg.seed, "mode": cfg.mode, "family": fam, "trial": t,
                "instance_seed": iseed, "as": value, "stderr": err, "ratio": ratio}

    rows = parallel_map(one, tasks)
    return {"as-upper.csv": (AS_UPPER_COLUMNS, rows)}, rows


AS_LOWER_COLUMNS = ["n", "k", "seed", "mode", "trials", "m", "mean_as", "min_as", "max_as",
                    "ratio", "cover_probability", "eps_clamped", "clamped"]


def _as_lower(cfg):
    rows = []
    for n in cfg.n:
        for k in cfg.k_values(n):
            if k < 2:
                continue
            cover = int(cfg.options.get("cover_samples", 64))
            au = expected_union_sensitivity_audit(n, k, cfg.trials, instance_seed(cfg.seed, 2, n, k),
                                                  cover_samples=cover)
            meta = au.best_family.metadata
            rows.append({"n": n, "k": k, "seed": cfg.seed, "mode": "exact", "trials": cfg.trials,
                         "m": au.m, "mean_as": au.mean_as, "min_as": min(au.as_values),
                         "max_as": max(au.as_values), "ratio": au.ratio,
                         "cover_probability": au.cover_probability,
                         "eps_clamped": meta.get("eps_clamped", ""),
                         "clamped": bool(meta.get("clamped", False))})
    return {"as-lower.csv": (AS_LOWER_COLUMNS, rows)}, rows


NS_COLUMNS = ["n", "k", "seed", "mode", "family", "trial", "eps", "m", "eps_rounded",
              "samples", "ns", "stderr", "ratio"]


def _ns_scaling(cfg):
    tasks = [(n, k, fi, fam, t, e) for n in cfg.n for k in cfg.k_values(n) if k >= 2
             for fi, fam in enumerate(cfg.families) for t in range(cfg.trials) for e in cfg.eps]
    specs = {}

    def spec_for(n, k, fi, fam, t):
        key = (n, k, fi, t)
        if key not in specs:
            specs[key] = make_instance(fam, n, k, instance_seed(cfg.seed, 3, n, k, fi, t))
        return specs[key]

    for n, k, fi, fam, t, _ in tasks:
        spec_for(n, k, fi, fam, t)

    def one(task):
        n, k, fi, fam, t, e = task
        m, rho = round_noise_rate(Fraction(e).limit_denominator(1 << 30))
        spec = specs[(n, k, fi, t)]
        if cfg.mode == "exact":
            value, err, samples = ns_from_spectrum(wht(_instance_table(spec)), rho), 0.0, 0
        else:
            est = noise_sensitivity_mc(spec, float(rho), cfg.samples,
                                       instance_seed(cfg.seed, 4, n, k, fi, t, m))
            value, err, samples = est.estimate, est.stderr, cfg.samples
        ratio = float(value) / math.sqrt(float(rho) * math.log(k))
        return {"n": n, "k": k, "seed": cfg.seed, "mode": cfg.mode, "family": fam, "trial": t,
                "eps": e, "m": m, "eps_rounded": rho, "samples": samples, "ns": value,
                "stderr": err, "ratio": ratio}

    rows = [one(task) for task in tasks] if cfg.mode == "mc" else parallel_map(one, tasks)
    return {"ns-scaling.csv": (NS_COLUMNS, rows)}, rows


CLAIM_COLUMNS = ["n", "k", "seed", "mode", "trial", "term", "p_m", "delta_as", "corr",
                 "inequality_holds", "claim_violations"]


def random_unate_family(n, k, seed):
    """k random unate tables (LTFs or reflected up-sets) for the proof audits."""
    rng = make_rng(seed)
    return [random_unate_table(rng, n) for _ in range(k)]


def _claim_audit(cfg):
    tasks = [(n, k, t) for n in cfg.n for k in cfg.k_values(n) for t in range(cfg.trials)]

    def one(task):
        n, k, t = task
        terms = random_unate_family(n, k, instance_seed(cfg.seed, 5, n, k, t))
        ledger = telescoping_audit(terms)
        out, prev = [], TruthTable.constant(n, 0)
        for row, f in zip(ledger.rows, terms):
            bad = claim_pointwise_check(prev, f, orientation(f).sigma)
            out.append({"n": n, "k": k, "seed": cfg.seed, "mode": "exact", "trial": t,
                        "term": row.m, "p_m": row.p_m, "delta_as": row.delta_as, "corr": row.corr,
                        "inequality_holds": row.delta_as <= row.corr,
                        "claim_violations": len(bad) // 2})
            prev = prev | f
        return out

    rows = [r for group in parallel_map(one, tasks) for r in group]
    return {"claim-audit.csv": (CLAIM_COLUMNS, rows)}, rows


TV_COLUMNS = ["n", "m", "seed", "mode", "tv"]
IDENTITY_COLUMNS = ["n", "k", "seed", "mode", "trial", "m", "ns", "binned_as_over_m", "equal"]


def _binning_check(cfg):
    tv_rows = [{"n": n, "m": m, "seed": cfg.seed, "mode": "exact",
                "tv": binning_distribution_check(n, m)}
               for n in cfg.n if n <= 5 for m in range(1, n + 1)]
    tasks = [(n, k, fi, fam, t) for n in cfg.n for k in cfg.k_values(n)
             for fi, fam in enumerate(cfg.families) for t in range(cfg.trials)]

    def one(task):
        n, k, fi, fam, t = task
        spec = make_instance(fam, n, max(k, 1), instance_seed(cfg.seed, 6, n, k, fi, t))
        tt = _instance_table(spec)
        spec_w = wht(tt)
        out = []
        for m in range(2, n + 1):
            ns = ns_from_spectrum(spec_w, Fraction(1, m))
            bas = binned_average_sensitivity(tt, m)
            out.append({"n": n, "k": k, "seed": cfg.seed, "mode": "exact", "trial": t, "m": m,
                        "ns": ns, "binned_as_over_m": bas, "equal": ns == bas})
        return out

    id_rows = [r for group in parallel_map(one, tasks) for r in group]
    return {"binning-tv.csv": (TV_COLUMNS, tv_rows),
            "binning-identity.csv": (IDENTITY_COLUMNS, id_rows)}, tv_rows + id_rows


TAIL_COLUMNS = ["n", "k", "seed", "mode", "family", "trial", "eps", "d_star", "c_min", "C",
                "degree", "tail", "passes"]


def _fourier_tail(cfg):
    tasks = [(n, k, fi, fam, t) for n in cfg.n for k in cfg.k_values(n) if k >= 2
             for fi, fam in enumerate(cfg.families) for t in range(cfg.trials)]

    def one(task):
        n, k, fi, fam, t = task
        spec = make_instance(fam, n, k, instance_seed(cfg.seed, 1, n, k, fi, t))
        profile = degree_profile(wht(_instance_table(spec)))
        out = []
        for e in cfg.eps:
            d_star = smallest_passing_degree(profile, Fraction(e))
            # smallest C with ceil(C ln k / eps^2) >= d_star
            c_min = max(d_star - 1, 0) * e * e / math.log(k)
            d = degree_for(k, e, cfg.C, n=n)
            tail = tail_weight(profile, d)
            out.append({"n": n, "k": k, "seed": cfg.seed, "mode": "exact", "family": fam,
                        "trial": t, "eps": e, "d_star": d_star, "c_min": c_min, "C": cfg.C,
                        "degree": d, "tail": float(tail), "passes": tail < Fraction(e)})
        return out

    rows = [r for group in parallel_map(one, tasks) for r in group]
    return {"fourier-tail.csv": (TAIL_COLUMNS, rows)}, rows


LEARN_COLUMNS = ["n", "k", "seed", "mode", "family", "trial", "eps", "C", "degree", "samples",
                 "method", "train_loss", "train_error", "holdout_error", "passes"]


def _learn(cfg):
    full = cfg.options.get("source", "full-cube") == "full-cube"
    noise = float(cfg.options.get("noise", 0.0))
    tasks = [(n, k, fi, fam, t, e) for n in cfg.n for k in cfg.k_values(n)
             for fi, fam in enumerate(cfg.families) for t in range(cfg.trials) for e in cfg.eps]

    def one(task):
        n, k, fi, fam, t, e = task
        iseed = instance_seed(cfg.seed, 7, n, k, fi, t)
        target = make_instance(fam, n, k, iseed)
        src = full_cube_source(target) if full else uniform_source(target, noise)
        rep = agnostic_learn(src, n, k, e, C=cfg.C,
                             sample_count=None if full else cfg.samples, seed=iseed)
        return {"n": n, "k": k, "seed": cfg.seed, "mode": "exact" if full else "mc",
                "family": fam, "trial": t, "eps": e, "C": cfg.C, "degree": rep.degree,
                "samples": rep.samples, "method": rep.method, "train_loss": rep.train_loss,
                "train_error": rep.train_error, "holdout_error": rep.holdout_error,
                "passes": rep.holdout_error <= e}

    rows = [one(task) for task in tasks]
    return {"learn.csv": (LEARN_COLUMNS, rows)}, rows


_RUNNERS = {"as-upper": _as_upper, "as-lower": _as_lower, "ns-scaling": _ns_scaling,
            "claim-audit": _claim_audit, "binning-check": _binning_check,
            "fourier-tail": _fourier_tail, "learn": _learn}

_PLOTS = {"as-upper": ("k", "n", "ratio", "as(F) / sqrt(n ln k)"),
          "as-lower": ("k", "n", "ratio", "mean as(F) / sqrt(n ln k)"),
          "ns-scaling": ("k", "m", "ratio", "ns / sqrt(eps ln k)  vs  1/eps")}


@dataclass
class RunResult:
    config: ExperimentConfig
    files: list
    rows: list


def run(config, out_dir=None):
    """Execute ``config`` and write its CSV (and SVG) files into ``out_dir``."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    out_dir = out_dir or config.out
    if not out_dir:
        raise ConfigError("no output directory given")
    os.makedirs(out_dir, exist_ok=True)
    tables, rows = _RUNNERS[config.kind](config)
    files = []
    for name, (columns, trows) in tables.items():
        path = os.path.join(out_dir, name)
        write_csv(path, columns, trows, config)
        files.append(path)
    if config.plot and config.kind in _PLOTS:
        group, x, y, title = _PLOTS[config.kind]
        plot_rows = [r for r in rows if r.get("family") != "parity" and math.isfinite(r[y])]
        path = os.path.join(out_dir, f"{config.kind}.svg")
        with open(path, "w") as fh:
            fh.write(svg_plot(_series_by(plot_rows, group, x, y), title, x, "ratio"))
        files.append(path)
    return RunResult(config, files, rows)


__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "RatioFit", "ResourceCapError",
           "fit_ratio", "instance_seed", "make_instance", "model_value", "read_csv", "run",
           "svg_plot", "write_csv"]
