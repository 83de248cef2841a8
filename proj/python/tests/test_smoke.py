import math
import os

import numpy as np
import pytest

import blab


def test_version_and_registry():
    assert blab.__version__ == "1.0.0"
    assert "wkb/" in blab.module_versions()
    names = {s["name"] for s in blab.scenarios()}
    assert {"null-plane-wave-minkowski", "regime-rates", "determinism"} <= names
    covered = sorted(k for s in blab.scenarios() for k in s["criteria"])
    assert covered == list(range(1, 12))


def test_box_apply_kills_null_plane_wave():
    g = blab.SpacetimeGrid(n=1, T=1.0, L=2 * math.pi, Nt=64, Nx=64)
    t = np.linspace(0.0, g.T, g.Nt + 1)[:, None]
    x = (np.arange(g.Nx) * g.dx)[None, :]
    u = np.sin(x - t)
    box = blab.box_apply(g, blab.minkowski(1), u)
    assert box.shape == (g.Nt + 1, g.Nx)
    # interior rows: second-order stencils on an exact solution
    assert np.abs(box[2:-2]).max() < 1e-2
    # a non-solution is not annihilated: box sin(x) sin(t) = 0 but box sin(x) = sin(x)
    assert np.abs(blab.box_apply(g, blab.minkowski(1), np.sin(x) + 0 * t)[2:-2]).max() > 0.9


def test_evolve_linear_matches_exact_solution():
    g = blab.SpacetimeGrid(n=1, T=1.0, L=2 * math.pi, Nt=32, Nx=128)
    x = np.arange(g.Nx) * g.dx
    u, v = blab.evolve_linear(blab.minkowski(1), g, np.sin(x), -np.cos(x))
    exact = np.sin(x - g.T)
    assert u.shape == (g.Nt + 1, g.Nx)
    assert np.abs(u[-1] - exact).max() < 1e-3
    assert np.abs(v[-1] + np.cos(x - g.T)).max() < 1e-3


def test_eikonal_plane_phase_on_minkowski():
    g = blab.SpacetimeGrid(n=1, T=1.0, L=2 * math.pi, Nt=16, Nx=32)
    ph = blab.eikonal(blab.minkowski(1), g, [1.0])
    t = np.linspace(0.0, g.T, g.Nt + 1)[:, None]
    x = (np.arange(g.Nx) * g.dx)[None, :]
    assert not ph["caustic"]
    assert np.abs(ph["phi"] - (x - t)).max() < 1e-8
    assert np.allclose(ph["dphi"][0], -1.0) and np.allclose(ph["dphi"][1], 1.0)


def test_nullform_and_slope_fit():
    g = blab.SpacetimeGrid(n=1, T=math.pi, L=2 * math.pi, Nt=256, Nx=256)
    dev, per_level = blab.nullform_deviation(g, "crossing-null", [1 / 8, 1 / 16, 1 / 32])
    assert dev < 0.05 and len(per_level) == 3
    ctrl, _ = blab.nullform_deviation(g, "spatial-phase", [1 / 8, 1 / 16, 1 / 32])
    assert ctrl > 0.5  # cos^2(x / eps) does not tend to zero weakly
    slope, hw = blab.fit_loglog([1, 0.5, 0.25, 0.125], [1, 0.25, 0.0625, 0.015625])
    assert slope == pytest.approx(2.0) and hw == pytest.approx(0.0, abs=1e-9)


def test_config_errors_are_value_errors():
    with pytest.raises(blab.ConfigError):
        blab.canonical_config(config="[run]\nscenario = regime-rates\n[partition]\ndelta1 = 0.4\n")
    with pytest.raises(ValueError):
        blab.canonical_config(scenario="no-such-scenario")
    text, h = blab.canonical_config("solver-order")
    assert "run.scenario = solver-order" in text and len(h) == 16


def test_run_report_and_dump(tmp_path):
    rec = blab.run("solver-order", out=str(tmp_path), seed=5)
    assert rec["passed"] and rec["seed"] == 5
    assert {c["status"] for c in rec["checks"]} == {"PASS"}
    verdict = os.path.join(rec["dir"], "verdict.csv")
    text, csv, code = blab.report([verdict])
    assert code == 0 and "solver-order" in csv and rec["config_hash"] in csv

    rec = blab.run("null-plane-wave-minkowski", out=str(tmp_path))
    head, arrays = blab.read_dump(os.path.join(rec["dir"], "amplitude.blab"))
    assert head["config_hash"] == rec["config_hash"]
    assert arrays[0].shape == (head["Nt"] + 1, head["Nx"])
    assert arrays[0].max() == pytest.approx(1.0, rel=0.05)
