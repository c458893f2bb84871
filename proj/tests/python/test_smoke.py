"""Smoke tests for the pybind11 module: a few independent numpy oracles."""

import numpy as np
import pytest

import hybridrecon as hr


def numpy_nudft(image, kx, ky):
    m0, m1 = image.shape
    u0 = np.arange(m0) - m0 // 2
    u1 = np.arange(m1) - m1 // 2
    uu0, uu1 = np.meshgrid(u0, u1, indexing="ij")
    out = np.zeros(kx.shape, dtype=complex)
    for idx in np.ndindex(kx.shape):
        phase = -2j * np.pi * (ky[idx] * uu0 + kx[idx] * uu1)
        out[idx] = np.sum(image * np.exp(phase))
    return out


def test_spiral_geometry():
    t = hr.gen_spiral(80, 32, 48)
    assert t["kx"].shape == (80, 32)
    r = np.hypot(t["kx"], t["ky"])
    assert r.max() == pytest.approx(0.5, abs=1e-12)
    assert t["kx"][0, 0] == 0.0 and t["ky"][0, 0] == 0.0


def test_golden_radial_angle():
    t = hr.gen_golden_radial(48, 17, 64, 4)
    assert t["kx"].shape == (48 * 17, 64)
    a0 = np.arctan2(t["ky"][0, -1], t["kx"][0, -1])
    a1 = np.arctan2(t["ky"][1, -1], t["kx"][1, -1])
    d = np.rad2deg(a1 - a0) % 180.0
    assert d == pytest.approx(111.246, abs=1e-3)
    assert hr.golden_angle_deg == pytest.approx(111.2461, abs=1e-4)


def test_nufft_matches_numpy_dft():
    rng = np.random.default_rng(3)
    img = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    kx = rng.uniform(-0.5, 0.5, (4, 12))
    ky = rng.uniform(-0.5, 0.5, (4, 12))
    got = hr.nufft_forward(img, kx, ky)
    want = numpy_nudft(img, kx, ky)
    assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-3
    # the bundled brute-force oracle agrees with numpy exactly
    oracle = hr.dft_oracle(img, kx, ky)
    np.testing.assert_allclose(oracle, want, atol=1e-9)


def test_nufft_round_trip():
    t = hr.gen_spiral(48, 52, 32)
    w = hr.density_compensation(t["kx"], t["ky"], 32, "spiral")
    y, x = np.meshgrid(np.arange(32) - 16, np.arange(32) - 16, indexing="ij")
    img = np.exp(-(x**2 + y**2) / 40.0).astype(complex)
    back = hr.nufft_adjoint(hr.nufft_forward(img, t["kx"], t["ky"]), t["kx"], t["ky"], 32, w)
    nmse = np.sum(np.abs(back - img) ** 2) / np.sum(np.abs(img) ** 2)
    assert nmse < 0.01


def test_look_locker_round_trip():
    a, b, t1s = hr.look_locker_params(1200.0, 5.0, 8.0)
    assert hr.t1_from_params(a, b, t1s) == pytest.approx(1200.0, rel=1e-12)
    times = np.linspace(100, 5000, 16)
    curve = [hr.signal_model(a, b, t1s, t) for t in times]
    fit = hr.lm_fit(curve, list(times))
    assert fit["converged"]
    assert fit["t1"] == pytest.approx(1200.0, rel=1e-3)


def test_basis_orthonormal():
    times = list(np.linspace(50, 4950, 48))
    grid = list(np.arange(100.0, 3000.0, 25.0))
    atoms = hr.build_dictionary(grid, times, 5.0, 8.0)
    u, sv = hr.extract_basis(atoms, 4)
    np.testing.assert_allclose(u.T @ u, np.eye(4), atol=1e-10)
    assert sv[0] > sv[3] > 0


def test_split_masks_partition():
    t = hr.gen_spiral(12, 30, 24)
    a, b = hr.split_readout(t["kx"], t["ky"], 0.7, 5)
    np.testing.assert_array_equal(a + b, np.ones_like(a))
    assert a.min() >= 0 and a.max() <= 1
    assert (a.sum(axis=1) >= 1).all() and (b.sum(axis=1) >= 1).all()


def test_metrics():
    rng = np.random.default_rng(5)
    x = rng.uniform(0.2, 1.0, (16, 16))
    assert hr.ssim(x, x, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert hr.nmse(x, x) == 0.0
    assert hr.mixed_l1_l2_loss(np.zeros_like(x), x) == pytest.approx(2.0, abs=1e-12)


def test_coil_maps_rss():
    maps = hr.gen_coil_sensitivities(4, 24, 7)
    rss = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    np.testing.assert_allclose(rss, 1.0, atol=1e-12)
    img = (np.random.default_rng(0).standard_normal((24, 24))
           + 1j * np.random.default_rng(1).standard_normal((24, 24)))
    combined = hr.coil_combine(maps * img[None, :, :], maps)
    np.testing.assert_allclose(combined, img, atol=1e-12)


def test_brain_series_consistency():
    times = list(np.linspace(200, 4800, 12))
    frames, t1_map, interior = hr.brain_ir_series(24, 3, times)
    assert frames.shape == (12, 24, 24)
    pix = np.argwhere((interior > 0) & (t1_map > 0))[::29]
    for iy, ix in pix:
        fit = hr.lm_fit(list(frames[:, iy, ix].real), times)
        assert fit["t1"] == pytest.approx(t1_map[iy, ix], rel=1e-3)
