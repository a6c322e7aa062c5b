"""Smoke tests for the compiled extension: build a small instance, run the
main operations, and check the headline behaviors end to end."""

import json

import numpy as np
import pytest

import mmwsar

C = 299792458.0
Z0 = 0.23


def radar_on_bin(z0=Z0, bin_=25, n=256, fs=5e6):
    tau = 2.0 * z0 / C
    return mmwsar.RadarConfig(f0=77e9, slope=(bin_ * fs / n) / tau, fs=fs, n_samples=n)


def make_operator(n=8, d=2e-3, z0=Z0, materialize=True):
    origin = (-0.5 * (n - 1) * d, -0.5 * (n - 1) * d)
    aperture = mmwsar.ApertureGrid(nx=n, ny=n, dx=d, dy=d, origin=origin)
    image = mmwsar.ImageGrid(nx=n, ny=n, dx=d, dy=d, origin=origin, z0=z0)
    return mmwsar.PropagationOperator(radar_on_bin(z0), aperture, image,
                                      materialize=materialize)


def test_chirp_is_unit_modulus():
    p = mmwsar.synth_chirp(radar_on_bin())
    assert p.shape == (256,)
    assert np.allclose(np.abs(p), 1.0, atol=1e-12)
    assert p[0] == 1.0 + 0.0j


def test_adjoint_identity():
    H = make_operator()
    rng = np.random.default_rng(1)
    x = rng.standard_normal(H.voxels()) + 1j * rng.standard_normal(H.voxels())
    y = rng.standard_normal(H.looks()) + 1j * rng.standard_normal(H.looks())
    lhs = np.vdot(y, H.apply(x))
    rhs = np.vdot(H.adjoint(y).ravel(), x)
    assert abs(lhs - rhs) < 1e-8 * np.linalg.norm(x) * np.linalg.norm(y)


def test_bpa_peaks_at_the_target_voxel():
    H = make_operator()
    alpha = np.zeros(H.voxels(), dtype=complex)
    alpha[3 * 8 + 5] = 0.005
    y = H.apply(alpha)
    img, _ = mmwsar.reconstruct("bpa", H, y)
    assert img.shape == (8, 8)
    iy, ix = np.unravel_index(np.argmax(np.abs(img)), img.shape)
    assert (iy, ix) == (3, 5)


def test_soft_threshold():
    assert mmwsar.soft_threshold(3.0 + 0.0j, 1.0) == 2.0 + 0.0j
    assert mmwsar.soft_threshold(0.5j, 1.0) == 0.0 + 0.0j


def test_conceal_attack_blanks_the_image():
    H = make_operator(n=8, d=6e-3, z0=0.15)
    scene = mmwsar.Scene.shape("pair", mmwsar.ImageGrid(
        nx=8, ny=8, dx=6e-3, dy=6e-3, origin=(-0.021, -0.021), z0=0.15))
    y = H.synthesize(scene, seed=3)
    D = mmwsar.InjectionOperator(radar_on_bin(0.15), mmwsar.ApertureGrid(
        nx=8, ny=8, dx=6e-3, dy=6e-3, origin=(-0.021, -0.021)),
        mmwsar.Vec3(0.05, 0.0, 0.15))
    clean, _ = mmwsar.reconstruct("bpa", H, y)

    result = mmwsar.dia_optimize("bpa", H, y, D, np.zeros_like(clean),
                                 lambda_=1e-6, iters=300, tol=0.0)
    assert np.linalg.norm(result["adv_image"]) < 1e-2 * np.linalg.norm(clean)
    assert result["power_ratio"] == pytest.approx(
        np.sum(np.abs(result["w"]) ** 2), rel=1e-12)
    trace = result["objective_trace"]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(trace, trace[1:]))


def test_metrics():
    a = np.random.default_rng(0).random((16, 16))
    assert mmwsar.ssim(a, a) == pytest.approx(1.0)
    assert np.isinf(mmwsar.psnr(a.ravel(), a.ravel()))
    b = a + 0.1
    assert mmwsar.psnr(a.ravel(), b.ravel()) == pytest.approx(20.0)


def test_run_experiment_deterministic():
    config = {
        "radar": {"f0": 77e9, "slope": 3.1824e14, "fs": 5e6, "n_samples": 256},
        "aperture": {"nx": 8, "ny": 8, "dx": 2e-3, "dy": 2e-3},
        "image": {"nx": 8, "ny": 8, "dx": 2e-3, "dy": 2e-3, "z0": 0.23},
        "scene": {"shape": "triangle"},
        "reconstructor": {"variant": "bpa"},
        "attack": {"strategy": "conceal",
                   "dia": {"lambda": 1e-6, "iters": 60, "tol": 1e-10}},
        "snr_db": 30,
        "seed": 5,
    }
    text = json.dumps(config)
    r1 = mmwsar.run_experiment(text)
    r2 = mmwsar.run_experiment(text)
    assert r1["metrics_json"] == r2["metrics_json"]
    assert r1["metrics"]["ssim_at"] > r1["metrics"]["ssim_ac"]

    echoed = mmwsar.resolved_config(text)
    r3 = mmwsar.run_experiment(echoed)
    assert r3["metrics_json"] == r1["metrics_json"]


def test_unknown_config_key_raises():
    with pytest.raises(mmwsar.ConfigError):
        mmwsar.run_experiment('{"radar": {"nope": 1}}')
