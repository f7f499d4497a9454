"""Command-line entry point: ``halfsens analyze | construct | experiment | learn``.

Exit codes: 0 success, 2 invalid input or config, 3 resource cap exceeded.
The worker pool size is read from ``HS_THREADS``.
"""
import argparse
import json
import sys
from fractions import Fraction

from ._bits import ResourceCapError
from .boolfn import CompositeSpec, dumps_spec, loads_spec, truth_table
from .constructions import lower_bound_family
from .experiments import ConfigError, ExperimentConfig, run
from .fourier import degree_profile, ns_from_spectrum, wht
from .learner import agnostic_learn, full_cube_source, uniform_source
from .sensitivity import (average_sensitivity_exact, average_sensitivity_mc,
                          noise_sensitivity_mc)

EXIT_OK, EXIT_CONFIG, EXIT_CAP = 0, 2, 3


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _load_spec(path):
    try:
        with open(path) as fh:
            return loads_spec(fh.read())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: malformed spec ({exc})") from exc


def cmd_analyze(args):
    spec, meta = _load_spec(args.spec)
    out = {"n": spec.n, "k": spec.k if isinstance(spec, CompositeSpec) else 1}
    need_table = args.mc is None or args.fourier or (args.ns is not None and args.mc is None)
    tt = truth_table(spec) if need_table else None
    if args.mc is None:
        rep = average_sensitivity_exact(tt)
        out.update(mode="exact", average_sensitivity=rep.as_exact, as_float=float(rep.as_exact),
                   boundary_edges=rep.boundary_edges, mean=rep.mean)
    else:
        est = average_sensitivity_mc(spec, args.mc, args.seed)
        out.update(mode="mc", average_sensitivity=est.estimate, stderr=est.stderr,
                   samples=est.samples, seed=args.seed)
    spectrum = wht(tt) if (args.fourier or (args.ns is not None and args.mc is None)) else None
    if args.ns is not None:
        if args.mc is None:
            ns = ns_from_spectrum(spectrum, Fraction(args.ns).limit_denominator(1 << 30))
            out["noise_sensitivity"] = {"eps": args.ns, "value": ns, "float": float(ns)}
        else:
            est = noise_sensitivity_mc(spec, args.ns, args.mc, args.seed)
            out["noise_sensitivity"] = {"eps": args.ns, "value": est.estimate,
                                        "stderr": est.stderr}
    if args.fourier:
        out["degree_weights"] = list(degree_profile(spectrum).weights)
    if meta is not None:
        out["metadata"] = meta
    print(json.dumps(_jsonable(out), indent=2))
    return EXIT_OK


def cmd_construct(args):
    fam = lower_bound_family(args.n, args.k, args.seed)
    meta = dict(_jsonable(fam.metadata), n=fam.n, k=fam.k, m=fam.m, seed=args.seed,
                radius=fam.radius)
    text = dumps_spec(fam.union, metadata=meta)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_experiment(args):
    cfg = ExperimentConfig.load(args.config)
    result = run(cfg, args.out)
    for path in result.files:
        print(path)
    return EXIT_OK


def cmd_learn(args):
    target, _ = _load_spec(args.target)
    n = target.n
    if args.samples is None:
        source = full_cube_source(target)
    else:
        source = uniform_source(target, args.noise)
    rep = agnostic_learn(source, n, args.k, args.eps, C=args.C, sample_count=args.samples,
                         seed=args.seed)
    if args.model_out:
        with open(args.model_out, "w") as fh:
            fh.write(rep.hypothesis.polynomial.to_json() + "\n")
    out = {k: v for k, v in rep.__dict__.items() if k != "hypothesis"}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="halfsens", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="sensitivity / Fourier report for a spec file")
    a.add_argument("spec")
    g = a.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="exact enumeration (default)")
    g.add_argument("--mc", type=int, metavar="N", help="Monte Carlo with N samples")
    a.add_argument("--ns", type=float, metavar="EPS", help="also report noise sensitivity")
    a.add_argument("--fourier", action="store_true", help="report degree weight profile")
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("construct", help="build a named construction")
    csub = c.add_subparsers(dest="construction", required=True)
    lb = csub.add_parser("lower-bound", help="random union of Hamming-ball thresholds")
    lb.add_argument("--n", type=int, required=True)
    lb.add_argument("--k", type=int, required=True)
    lb.add_argument("--seed", type=int, default=0)
    lb.add_argument("--out", help="write the spec JSON here instead of stdout")
    lb.set_defaults(func=cmd_construct)

    e = sub.add_parser("experiment", help="run an experiment config")
    e.add_argument("config")
    e.add_argument("--out", required=True, metavar="DIR")
    e.set_defaults(func=cmd_experiment)

    ln = sub.add_parser("learn", help="fit the low-degree L1 learner to a target spec")
    ln.add_argument("--target", required=True)
    ln.add_argument("--k", type=int, required=True)
    ln.add_argument("--eps", type=float, required=True)
    ln.add_argument("--samples", type=int, help="uniform samples (default: the full cube)")
    ln.add_argument("--seed", type=int, default=0)
    ln.add_argument("--C", type=float, default=4.0)
    ln.add_argument("--noise", type=float, default=0.0, help="label flip rate")
    ln.add_argument("--model-out", help="write the fitted polynomial as JSON")
    ln.set_defaults(func=cmd_learn)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"halfsens: resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, ValueError, OSError) as exc:
        print(f"halfsens: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
