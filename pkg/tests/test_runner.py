import json
import os
import subprocess
import sys

import numpy as np
import pytest

from maxenergy import geometry, rearrange
from maxenergy.energy import DensityField
from maxenergy.pointset import Configuration
from maxenergy.runner import io
from maxenergy.runner.cli import EXIT_FAIL, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from maxenergy.runner.config import ConfigError, ExperimentConfig, build_domain, load_json, resolve_bounds

RECIPES = os.path.join(os.path.dirname(__file__), os.pardir, "recipes")

SMALL = {
    "domain": {"shape": "interval", "a": -1.0, "b": 1.0, "n_cells": 300},
    "kernel": {"family": "exponential", "sigma": 1.0},
    "bounds": {"rho_plus": 1.0, "rho_minus": 0.25},
    "solver": {"seed": 4},
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def read_bytes(d):
    out = {}
    for root, _, files in os.walk(d):
        for f in files:
            p = os.path.join(root, f)
            out[os.path.relpath(p, d)] = open(p, "rb").read()
    return out


def test_solve_density_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["solve-density", write_cfg(tmp_path, SMALL), "--out", str(out), "--snapshot-every", "1"]) == EXIT_OK
    names = set(os.listdir(out))
    assert {"density.csv", "density.pgm", "trace.csv", "report.json", "config.echo.json", "snapshots"} <= names
    rep = json.loads((out / "report.json").read_text())
    assert rep["stop_reason"] == "stationary_set"
    assert rep["rho_plus"] == 1.0 and rep["rho_minus"] == 0.25
    assert rep["tie_break"] == "ascending node index"
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,energy,l1_change,set_changed"
    assert len(trace) == rep["iterations"] + 2
    assert len(os.listdir(out / "snapshots")) == 2 * rep["iterations"]
    echo = json.loads((out / "config.echo.json").read_text())
    assert echo["solver"]["max_iter"] == 500


def test_eval_energy_round_trip(tmp_path, capsys):
    out = tmp_path / "out"
    main(["solve-density", write_cfg(tmp_path, SMALL), "--out", str(out)])
    rep = json.loads((out / "report.json").read_text())
    kpath = write_cfg(tmp_path, SMALL["kernel"], "kernel.json")
    capsys.readouterr()
    assert main(["eval-energy", str(out / "density.csv"), str(out / "density.csv"), kpath]) == EXIT_OK
    res = json.loads(capsys.readouterr().out)
    assert res["energy"] == pytest.approx(rep["final_energy"], rel=1e-12)
    assert res["mass"] == pytest.approx(1.0, abs=1e-12)


def test_rerun_is_byte_identical_across_threads(tmp_path):
    cfg = dict(SMALL, domain={"shape": "mask", "mask": "disk", "resolution": 30}, bounds={"mass_fraction": 0.25})
    cfg["solver"] = {"seed": 1, "method": "direct"}
    path = write_cfg(tmp_path, cfg)
    outs = []
    for threads in ("1", "2", "1"):
        d = tmp_path / f"t{len(outs)}"
        assert main(["solve-density", path, "--out", str(d), "--threads", threads]) == EXIT_OK
        outs.append(read_bytes(d))
    assert outs[0] == outs[1] == outs[2]


def test_pgm_layout(tmp_path):
    D = geometry.build_mask_region(geometry.disk(1.0), 20)
    rp, rm = rearrange.bounds_from_fraction(D, 0.25)
    rho = rearrange.blob_init(D, (0.0, 0.0), rp, rm)
    p = str(tmp_path / "d.pgm")
    io.write_pgm(p, D, rho)
    img = io.read_pgm(p)
    assert img.shape == (20, 20)
    assert img[10, 10] == 255 and img[0, 0] == 0
    # top row is the largest y
    rho = rearrange.blob_init(D, (0.0, 0.9), rp, rm)
    io.write_pgm(p, D, rho)
    img = io.read_pgm(p)
    assert img[:5].sum() > img[-5:].sum()


def test_domain_csv_round_trip(tmp_path):
    D = geometry.build_mask_region(geometry.clover(), 24)
    p = str(tmp_path / "dom.csv")
    v = np.random.default_rng(0).random(D.n_nodes)
    io.write_domain_csv(p, D, v)
    E = io.read_domain_csv(p)
    assert np.array_equal(E.nodes, D.nodes) and np.array_equal(E.weights, D.weights)
    assert E.lattice is not None and E.lattice.shape == D.lattice.shape
    assert np.array_equal(io.read_field_csv(p, D.n_nodes), v)
    with pytest.raises(ValueError):
        io.read_field_csv(p, 3)


def test_configuration_csv_round_trip(tmp_path):
    X = Configuration([-0.3, 0.1, 0.7])
    p = str(tmp_path / "x.csv")
    io.write_configuration_csv(p, X)
    assert np.array_equal(io.read_configuration_csv(p).points, X.points)


def test_init_from_file(tmp_path):
    D = build_domain(SMALL["domain"])
    rho = rearrange.random_admissible_init(D, 1.0, 0.25, seed=9)
    io.write_domain_csv(str(tmp_path / "init.csv"), D, rho.values)
    cfg = dict(SMALL, solver={"init": "file", "init_file": "init.csv"})
    assert main(["solve-density", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    io.write_domain_csv(str(tmp_path / "init.csv"), D, np.full(D.n_nodes, 2.0))
    assert main(["solve-density", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE


@pytest.mark.parametrize(
    "patch",
    [
        {"extra": 1},
        {"solver": {"sede": 1}},
        {"solver": {"init": "magic"}},
        {"solver": {"init": "file"}},
        {"solver": {"init": "blob"}},
        {"solver": {"max_iter": 0}},
        {"domain": {"shape": "hexagon"}},
        {"domain": {"shape": "interval", "a": -1.0}},
        {"kernel": {"family": "exponential", "tau": 1.0}},
        {"bounds": {"rho_plus": 1.0}},
        {"output": {"dir": None, "every": 2}},
    ],
)
def test_config_strictness(tmp_path, patch):
    cfg = dict(SMALL, **patch)
    assert main(["solve-density", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_missing_top_key():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"domain": SMALL["domain"], "kernel": SMALL["kernel"]})


def test_nan_rejected(tmp_path):
    p = tmp_path / "nan.json"
    p.write_text('{"a": NaN}')
    with pytest.raises(ConfigError):
        load_json(str(p))
    assert main(["solve-density", str(p)]) == EXIT_USAGE
    assert main(["solve-density", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_infeasible_bounds_exit(tmp_path):
    cfg = dict(SMALL, bounds={"rho_plus": 0.4, "rho_minus": 0.25})
    assert main(["solve-density", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_INFEASIBLE


def test_bounds_forms():
    D = build_domain(SMALL["domain"])
    assert resolve_bounds({"r": 1.0, "R": 2.0, "d": 1}, D) == pytest.approx((1.0, 0.25))
    rp, rm = resolve_bounds({"mass_fraction": 0.5, "rho_minus_scale": 0.8}, D)
    assert rm == pytest.approx(0.4)
    with pytest.raises(ConfigError):
        resolve_bounds({"r": 1.0, "R": 2.0, "d": 2}, D)
    with pytest.raises(ConfigError):
        resolve_bounds({"mass_fraction": 0.5, "rho_plus": 1.0}, D)


def test_non_stationary_exit(tmp_path):
    cfg = dict(SMALL, solver={"seed": 4, "max_iter": 1})
    assert main(["solve-density", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_INFEASIBLE


def test_solve_discrete(tmp_path):
    out = tmp_path / "d"
    assert main(["solve-discrete", os.path.join(RECIPES, "points4_case_ii.json"), "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["admissible"]
    assert rep["reference"]["case"] == "ii"
    assert rep["energy"] >= rep["reference"]["energy"] - 1e-12
    X = io.read_configuration_csv(str(out / "configuration.csv"))
    assert np.allclose(np.sort(X.points[:, 0]), rep["points"])
    assert main(["solve-discrete", os.path.join(RECIPES, "points4_infeasible.json"), "--out", str(out)]) == EXIT_INFEASIBLE


def test_solve_discrete_bad_n(tmp_path):
    cfg = {"n": 9, "r": 0.5, "R": 1.0, "kernel": {"family": "constant"}}
    assert main(["solve-discrete", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_verify_cli(tmp_path, capsys):
    assert main(["verify-analytic", "two-interval", "--out", str(tmp_path)]) == EXIT_OK
    table = json.loads((tmp_path / "verify.json").read_text())
    assert table["passed"] and len(table["checks"]) == 11
    assert main(["verify-analytic", "nope"]) == EXIT_USAGE
    assert EXIT_FAIL == 1


def test_recipes_parse():
    for f in sorted(os.listdir(RECIPES)):
        raw = load_json(os.path.join(RECIPES, f))
        assert raw.get("description")
        if "domain" in raw:
            cfg = ExperimentConfig.from_dict(raw, RECIPES)
            resolve_bounds(cfg.bounds, build_domain(cfg.domain))


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "maxenergy", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("maxenergy ")
    out = subprocess.run([sys.executable, "-m", "maxenergy"], capture_output=True, text=True)
    assert out.returncode == EXIT_USAGE


def test_density_gray_fractional():
    rho = DensityField(np.array([0.25, 1.0, 0.625]), 0.25, 1.0)
    assert io.density_gray(rho).tolist() == [0, 255, 128]
