import json

import numpy as np
import pytest

import roughflow as rf


def test_fbm_lift_chen():
    t, z = rf.sample_fbm(0.4, 64, seed=3, dim=2)
    assert z.shape == (65, 2)
    rp = rf.RoughPath.lift(z, t, p=2.6)
    assert len(rp) == 65 and rp.dim == 2
    assert np.abs(rp.chen_defect(0, 17, 64)).max() < 1e-12
    assert rp.geometric_defect() < 1e-12
    zz = rp.second_level(0, 64)
    inc = np.asarray(rp.increment(0, 64))
    assert np.allclose(zz + zz.T, np.outer(inc, inc), atol=1e-12)


def test_csv_round_trip():
    t, z = rf.sample_fbm(0.45, 32, seed=1, dim=2)
    rp = rf.RoughPath.lift(z, t)
    back = rf.RoughPath.from_csv(rp.to_csv())
    assert np.array_equal(back.values, rp.values)
    assert np.allclose(back.second_level(0, 32), rp.second_level(0, 32), atol=1e-15)


def test_p_variation_brute_force():
    x = np.array([0.0, 1.0, 0.2, 0.9, -0.4])
    r = rf.p_variation(x, 2.0)
    assert r["value"] == pytest.approx(1.0 + 0.64 + 0.49 + 1.69)
    assert r["argmax_partition"] == [0, 1, 2, 3, 4]
    text = "t,x\n" + "\n".join(f"{i},{v}" for i, v in enumerate(x))
    assert rf.pvar_csv(text, 2.0)["value"] == pytest.approx(r["value"])


def test_biot_savart_single_mode():
    n = 32
    g = 2 * np.pi * np.arange(n) / n
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    u1, u2 = rf.biot_savart(np.cos(x1))
    # u = (-d2, d1) of psi = -cos x1
    assert np.allclose(u1, 0.0, atol=1e-12)
    assert np.allclose(u2, np.sin(x1), atol=1e-12)


def test_steady_euler_and_deposit():
    t = np.linspace(0.0, 1.0, 17)
    rp = rf.RoughPath.lift(np.zeros((17, 1)), t)
    out = rf.solve_euler("cos:1,0,1", ["zero"], rp, resolution=16, particles_per_side=32, store_every=16)
    assert len(out["vorticity"]) == 2
    assert np.abs(out["vorticity"][-1] - out["vorticity"][0]).max() < 1e-10
    assert out["positions"].shape == (1024, 2)
    w = rf.deposit(out["positions"], out["weights"], 16)
    assert w.shape == (16, 16)


def test_snapshot_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pos = rng.uniform(0, 2 * np.pi, (10, 2))
    wts = rng.normal(size=10)
    path = str(tmp_path / "p.bin")
    rf.write_snapshot(path, 0.25, pos, wts)
    t, rec = rf.read_snapshot(path)
    assert t == 0.25
    assert np.array_equal(rec[:, :2], pos) and np.array_equal(rec[:, 2], wts)
    raw = open(path, "rb").read()
    assert raw[:8] == b"RFSNAP01" and int.from_bytes(raw[8:16], "little") == 10


def test_config_and_experiment(tmp_path):
    cfg = json.dumps({
        "experiment": "steady_check", "resolution": 16, "particles_per_side": 32,
        "sigma": [], "w0": "cos:1,0,1", "meshes": [16], "snapshots": 2,
    })
    norm = rf.normalize_config(cfg)
    assert rf.config_hash(norm) == rf.config_hash(cfg)
    res = rf.run_experiment(cfg, str(tmp_path))
    assert res["passed"], res["criteria"]
    assert (tmp_path / "steady_check" / "meta.json").exists()
    with pytest.raises(ValueError):
        rf.normalize_config(json.dumps({"experiment": "steady_check", "bogus": 1}))
