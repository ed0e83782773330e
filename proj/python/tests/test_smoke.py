import json
import math

import numpy as np
import pytest

import splab


def test_model_validation_and_density():
    ar1 = splab.SpectralModel(1, 0)
    theta = ar1.validate(np.array([0.5]))
    assert theta.validated
    assert ar1.spectral_density(theta, 0.0) == pytest.approx(2.0 / math.pi)
    with pytest.raises(splab.SplabError):
        ar1.validate(np.array([1.5]))
    assert not ar1.is_valid(np.array([1.5]))


def test_autocovariances_match_closed_form():
    ar1 = splab.SpectralModel(1, 0)
    theta = ar1.validate(np.array([0.5]))
    gamma = ar1.autocovariances(theta, 2)
    assert gamma[0] == pytest.approx(4.0 / 3.0)
    assert gamma[1] == pytest.approx(2.0 / 3.0)
    quad = ar1.autocovariances(theta, 2, method="quadrature")
    assert np.allclose(gamma, quad, atol=1e-10)


def test_sample_path_determinism_and_fit():
    cs = splab.SpectralModel.constant_spectrum()
    init = cs.validate(np.array([1.0]))
    x1 = splab.sample_path(cs, init, 64, seed=42)
    x2 = splab.sample_path(cs, init, 64, seed=42)
    assert np.array_equal(x1, x2)

    fit = splab.fit_mle(cs, x1, init)
    closed = float(np.dot(x1, x1)) / (2.0 * math.pi * 64)
    assert fit["theta_hat"][0] == pytest.approx(closed, rel=1e-7)


def test_geometry_values():
    cs = splab.SpectralModel.constant_spectrum()
    g = splab.geometry(cs, cs.validate(np.array([1.0])))
    assert g["g"][0, 0] == pytest.approx(0.5, abs=1e-10)
    assert g["T"][0, 0, 0] == pytest.approx(1.0, abs=1e-10)

    ar1 = splab.SpectralModel(1, 0)
    ga = splab.geometry(ar1, ar1.validate(np.array([0.5])))
    assert ga["g"][0, 0] == pytest.approx(4.0 / 3.0, abs=1e-8)


def test_kl_divergence_constant_fields():
    one = np.ones(256)
    two = 2.0 * np.ones(256)
    expected = 0.5 * (0.5 - 1.0 + math.log(2.0))
    assert splab.kl_divergence(one, two) == pytest.approx(expected, abs=1e-12)


def test_asymptotic_risk_sign():
    ar1 = splab.SpectralModel(1, 0)
    theta = ar1.validate(np.array([0.4]))
    base = splab.asymptotic_risk(ar1, theta)
    assert base["diff_vs_jeffreys"] == 0.0
    arc = splab.asymptotic_risk(ar1, theta, h="arcsine")
    assert arc["diff_vs_jeffreys"] > 0.0


def test_superharmonic_check_ar2():
    ar2 = splab.SpectralModel(2, 0)
    rep = splab.check_superharmonic(
        ar2, "one_plus_a2", lo=[-1.5, -0.8], hi=[1.5, 0.8], count=[7, 7],
        clearance=0.1)
    assert rep["pass"]
    assert rep["max_laplacian"] < 0.0


def test_small_dominance_run():
    ar2 = splab.SpectralModel(2, 0)
    theta = ar2.validate(np.array([0.3, 0.2]))
    res = splab.dominance_experiment(
        ar2, theta, "one_plus_a2", lo=[-1.5, -0.8], hi=[1.5, 0.8],
        count=[7, 7], n_grid=[64], seed=7, reps=60, threads=2)
    assert res["h_pass"]
    cell = res["cells"][0]
    assert cell["diff"] > 0.0
    assert cell["asymptote"] > 0.0


def test_run_experiment_json(tmp_path):
    cfg = {
        "seed": 5,
        "omega_nodes": 128,
        "jobs": [
            {
                "kind": "geometry-table",
                "name": "geo",
                "model": {"p": 1, "q": 0},
                "theta_points": [[0.5]],
            }
        ],
    }
    out = tmp_path / "reports"
    digest, ok = splab.run_experiment_json(json.dumps(cfg), str(out))
    assert ok
    assert (out / "geo.csv").exists()
    assert (out / "summary.json").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config_hash"] == digest
