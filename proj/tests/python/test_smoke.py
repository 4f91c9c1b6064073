import json
import math

import numpy as np
import pytest

import anisolrd as al


def test_green_backends_agree():
    for model in ("3n", "4n"):
        v = al.green(model, 0.9, 2, 1)
        assert abs(al.green(model, 0.9, 2, 1, backend="fft") - v) < 1e-8
        assert abs(al.green(model, 0.9, 2, 1, backend="line") - v) < 1e-10
    # transition-matrix oracle
    assert al.green("4n", 0.9, 0, 0) == pytest.approx(1.4518426733757879, rel=1e-12)


def test_limit_kernels_and_ladder():
    assert al.h3(1, 1, 1) == pytest.approx(0.032814006253460086, rel=1e-12)
    rows = al.scaling_limit_probe("4n", 1, 0, 1, [100, 400])
    assert rows[1]["rel_err"] < rows[0]["rel_err"]


def test_spectral_functions():
    assert al.kappa_sq(0.25) == pytest.approx(6.684342065682668, rel=1e-12)
    m = al.SpectralModel.type_ii(0.2, 0.2)
    assert al.H_of_gamma(m, 1.0).H == pytest.approx(1.4)
    assert al.limit_variance(m, 1.0) == pytest.approx(al.kappa_sq(0.2) ** 2, rel=1e-6)
    assert math.isnan(m.gamma0)
    assert al.H_table("4n", 2, 0.4, 1).H == pytest.approx(1.6)
    with pytest.raises(ValueError):
        al.kappa_sq(0.7)


def test_simulation_and_estimation():
    m = al.SpectralModel.type_ii(0.2, 0.2)
    f = al.simulate_gaussian(m, 64, 32, seed=3)
    assert f.shape == (32, 64)
    assert np.array_equal(f, al.simulate_gaussian(m, 64, 32, seed=3))
    noise = [al.white_noise(128, 128, seed=al.field_seed(5, i)) for i in range(16)]
    est = al.estimate_H(noise, 1.0)
    assert abs(est["H"] - 1.0) < 0.05
    assert est["rows"][0]["n"] == 2
    with pytest.raises(MemoryError):
        al.simulate_gaussian(m, 80, 80, method="cholesky")


def test_classification_report():
    rep = json.loads(al.classify_spectral(al.SpectralModel.type_ii(0.2, 0.2), [0.5, 1, 2]))
    assert rep["verdict"] == "TypeII"
    assert [p["gamma"] for p in rep["ladder"]] == [0.5, 1, 2]
