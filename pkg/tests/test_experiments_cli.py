import json
import math
import os

import numpy as np
import pytest

from halfsens.boolfn import dumps_spec, loads_spec, majority
from halfsens.cli import main
from halfsens.constructions import random_intersection
from halfsens.experiments import (ConfigError, ExperimentConfig, fit_ratio, instance_seed,
                                  read_csv, run, svg_plot)


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ------------------------------------------------------------------ config

@pytest.mark.parametrize("doc", [
    [1, 2],
    {"kind": "nope", "n": [4]},
    {"kind": "as-upper"},
    {"kind": "as-upper", "n": [4], "bogus": 1},
    {"kind": "as-upper", "n": [4], "mode": "fast"},
    {"kind": "as-upper", "n": [4], "families": ["cauchy"]},
    {"kind": "as-upper", "n": [], "k": [2]},
    {"kind": "ns-scaling", "n": [8], "k": [2]},
    {"kind": "learn", "n": [8], "k": [2], "eps": [1.5]},
    {"kind": "as-upper", "n": {"start": 4}},
    {"kind": "as-upper", "n": [4], "k_max": "cube"},
])
def test_config_rejects(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(doc)


def test_config_grids():
    cfg = ExperimentConfig.from_dict({"kind": "as-lower", "n": {"start": 12, "stop": 16, "step": 2},
                                      "k": {"start": 4, "stop": 64, "mult": 2},
                                      "k_max": "sqrt"})
    assert cfg.n == [12, 14, 16] and cfg.k == [4, 8, 16, 32, 64]
    assert cfg.k_values(12) == [4, 8, 16, 32, 64] and cfg.k_values(10) == [4, 8, 16, 32]
    assert json.loads(cfg.echo())["kind"] == "as-lower"


def test_instance_seed_is_stable():
    assert instance_seed(0, 1, 2) == instance_seed(0, 1, 2)
    assert instance_seed(0, 1, 2) != instance_seed(0, 2, 1)
    assert 0 <= instance_seed(7, 3) < 1 << 63


# ------------------------------------------------------------------ fit_ratio

def test_fit_ratio_single_k_column():
    pts = [(8, 4), (16, 4), (24, 4)]
    ys = [2.0, 3.0, 3.5]
    fit = fit_ratio(pts, ys)
    xs = np.sqrt([8 * math.log(4), 16 * math.log(4), 24 * math.log(4)])
    a_ref = np.linalg.lstsq(xs[:, None], np.array(ys), rcond=None)[0][0]
    assert fit.a == pytest.approx(a_ref, rel=1e-12)
    assert fit.ratios == pytest.approx(list(np.array(ys) / (a_ref * xs)), rel=1e-12)


def test_fit_ratio_exact_model_has_unit_ratios():
    pts = [(12, 2), (14, 8), (20, 64)]
    fit = fit_ratio(pts, [1.7 * math.sqrt(n * math.log(k)) for n, k in pts])
    assert fit.a == pytest.approx(1.7)
    assert not any(fit.flags) and fit.excess == [] and fit.shortfall == []


def test_fit_ratio_constant_zero():
    fit = fit_ratio([(8, 2), (10, 2), (12, 2)], [0, 0, 0])
    assert fit.a == 0 and fit.ratios == [1.0, 1.0, 1.0]


def test_fit_ratio_degenerate():
    with pytest.raises(ValueError):
        fit_ratio([(8, 2), (8, 2), (10, 2)], [1, 1, 1])
    with pytest.raises(ValueError):
        fit_ratio([(8, 1), (10, 2), (12, 2)], [1, 1, 1])
    with pytest.raises(ValueError):
        fit_ratio([(8, 2), (10, 2)], [1, 1, 1])


def test_fit_ratio_flags_parity_control(tmp_path):
    res = run({"kind": "as-upper", "n": [8, 10, 12], "k": [2, 4],
               "families": ["signs", "parity"], "trials": 2}, str(tmp_path))
    rows = res.rows
    fit = fit_ratio([(r["n"], r["k"]) for r in rows], [float(r["as"]) for r in rows],
                    labels=[r["family"] for r in rows])
    flagged = {lab for lab, f in zip(fit.labels, fit.flags) if f}
    assert "parity" in flagged
    for r in rows:
        if r["family"] == "parity":
            assert r["as"] == r["n"]


def test_fit_ratio_other_model():
    fit = fit_ratio([(0.25, 2), (0.125, 4), (0.5, 8)], [1, 1, 1], model="sqrt_eps_lnk")
    assert fit.a > 0 and len(fit.ratios) == 3


# ------------------------------------------------------------------ run

def test_run_examples_small(tmp_path):
    lower = run({"kind": "as-lower", "n": {"start": 12, "stop": 14, "step": 2}, "k": [4, 16],
                 "trials": 3}, str(tmp_path / "lo"))
    assert [(r["n"], r["k"]) for r in lower.rows] == [(12, 4), (12, 16), (14, 4), (14, 16)]
    assert all(r["ratio"] > 0 for r in lower.rows)
    claim = run({"kind": "claim-audit", "n": [8], "k": [5], "trials": 50}, str(tmp_path / "cl"))
    assert sum(r["claim_violations"] for r in claim.rows) == 0
    assert all(r["inequality_holds"] for r in claim.rows)
    binning = run({"kind": "binning-check", "n": [3, 4, 5], "k": [1], "trials": 1},
                  str(tmp_path / "bin"))
    tv = read_csv(str(tmp_path / "bin" / "binning-tv.csv"))
    assert len(tv) == 3 + 4 + 5 and {r["tv"] for r in tv} == {"0"}
    assert all(r.get("equal", True) for r in binning.rows)


def test_run_csv_header_echoes_config(tmp_path):
    res = run({"kind": "fourier-tail", "n": [8], "k": [2], "eps": [0.3]}, str(tmp_path))
    with open(res.files[0]) as fh:
        first, header = fh.readline(), fh.readline()
    assert first.startswith("# config: ") and '"kind":"fourier-tail"' in first
    assert header.strip().split(",")[:4] == ["n", "k", "seed", "mode"]


def test_run_learn_and_ns(tmp_path):
    res = run({"kind": "learn", "n": [8], "k": [2], "eps": [0.2]}, str(tmp_path / "l"))
    assert res.rows[0]["passes"]
    res = run({"kind": "ns-scaling", "n": [200], "k": [2, 8], "eps": [0.25], "mode": "mc",
               "samples": 4000}, str(tmp_path / "ns"))
    assert all(0 <= r["ns"] <= 1 for r in res.rows)


def test_run_emits_svg(tmp_path):
    res = run({"kind": "as-upper", "n": [8, 10], "k": [2, 4], "plot": True}, str(tmp_path))
    svg = [f for f in res.files if f.endswith(".svg")]
    assert len(svg) == 1
    text = open(svg[0]).read()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>") and "<circle" in text


def test_svg_empty_series():
    assert "<svg" in svg_plot([])


def _outputs(path):
    return {name: open(os.path.join(path, name), "rb").read() for name in sorted(os.listdir(path))}


@pytest.mark.parametrize("doc", [
    {"kind": "as-upper", "n": [8, 10], "k": [2, 4], "families": ["signs", "unate-union"],
     "trials": 2},
    {"kind": "ns-scaling", "n": [100], "k": [4], "eps": [0.25, 0.125], "mode": "mc",
     "samples": 3000},
    {"kind": "as-lower", "n": [12], "k": [4, 8], "trials": 3},
])
def test_rerun_and_thread_count_byte_identical(tmp_path, monkeypatch, doc):
    outs = []
    for i, threads in enumerate(["1", "1", "8"]):
        monkeypatch.setenv("HS_THREADS", threads)
        run(doc, str(tmp_path / str(i)))
        outs.append(_outputs(tmp_path / str(i)))
    assert outs[0] == outs[1] == outs[2]


def test_run_without_out_dir():
    with pytest.raises(ConfigError):
        run({"kind": "as-upper", "n": [4], "k": [2]})


# ------------------------------------------------------------------ cli

def test_cli_analyze_exact(tmp_path, capsys):
    path = _write(tmp_path, "maj.json", json.loads(dumps_spec(majority(3))))
    assert main(["analyze", path, "--ns", "0.25", "--fourier"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["average_sensitivity"] == "3/2"
    assert out["noise_sensitivity"]["value"] == "19/64"
    assert out["degree_weights"] == ["1/4", "3/16", "0", "1/16"]


def test_cli_analyze_mc(tmp_path, capsys):
    spec = random_intersection(40, 3, "signs", seed=2)
    path = tmp_path / "big.json"
    path.write_text(dumps_spec(spec))
    assert main(["analyze", str(path), "--mc", "2000", "--seed", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mode"] == "mc" and out["samples"] == 2000


def test_cli_construct_roundtrip(tmp_path, capsys):
    out = tmp_path / "lb.json"
    assert main(["construct", "lower-bound", "--n", "10", "--k", "8", "--seed", "1",
                 "--out", str(out)]) == 0
    spec, meta = loads_spec(out.read_text())
    assert spec.n == 10 and meta["k"] == 8 and meta["seed"] == 1
    assert main(["construct", "lower-bound", "--n", "10", "--k", "8", "--seed", "1"]) == 0
    assert capsys.readouterr().out.strip() == out.read_text().strip()


def test_cli_experiment_and_learn(tmp_path, capsys):
    cfg = _write(tmp_path, "cfg.json", {"kind": "binning-check", "n": [3], "k": [1]})
    assert main(["experiment", cfg, "--out", str(tmp_path / "o")]) == 0
    assert "binning-tv.csv" in capsys.readouterr().out
    target = tmp_path / "t.json"
    target.write_text(dumps_spec(random_intersection(8, 2, "unit", seed=3)))
    model = tmp_path / "m.json"
    assert main(["learn", "--target", str(target), "--k", "2", "--eps", "0.3",
                 "--model-out", str(model)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["holdout_error"] <= 0.3 and json.loads(model.read_text())["n"] == 8
    assert main(["learn", "--target", str(target), "--k", "2", "--eps", "0.9", "--C", "1",
                 "--samples", "500"]) == 0


def test_cli_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, "bad.json", {"kind": "as-upper", "n": [4], "mode": "fast"})
    assert main(["experiment", bad, "--out", str(tmp_path / "x")]) == 2
    notjson = tmp_path / "nj.json"
    notjson.write_text("{nope")
    assert main(["analyze", str(notjson)]) == 2
    assert main(["analyze", str(tmp_path / "missing.json")]) == 2
    huge = _write(tmp_path, "huge.json", {"kind": "as-upper", "n": [30], "k": [2]})
    assert main(["experiment", huge, "--out", str(tmp_path / "y")]) == 3
    big = tmp_path / "big.json"
    big.write_text(dumps_spec(majority(31)))
    assert main(["analyze", str(big)]) == 3
    err = capsys.readouterr().err
    assert "resource cap" in err
