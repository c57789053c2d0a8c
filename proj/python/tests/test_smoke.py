import math

import numpy as np
import pytest

import hyrf


@pytest.fixture(scope="module")
def scene():
    return hyrf.synth(seed=3, n_gaussians=10, n_cameras=3, size=16)


def test_synth_views_are_renders(scene):
    ck, images = scene
    assert ck.n_gaussians == 10
    assert len(images) == 3
    for i, img in enumerate(images):
        assert img.shape == (16, 16, 3)
        np.testing.assert_array_equal(ck.render(ck.camera(i)), img)


def test_render_range_and_threads(scene):
    ck, _ = scene
    cam = ck.camera(0)
    a = ck.render(cam)
    b = ck.render(cam, threads=4)
    assert a.min() >= 0.0 and a.max() <= 1.0
    np.testing.assert_array_equal(a, b)
    t = ck.transmittance(cam)
    assert t.shape == (16, 16, 1)
    assert ((t >= 0) & (t <= 1)).all()


def test_camera_index_checked(scene):
    ck, _ = scene
    with pytest.raises(IndexError):
        ck.camera(99)


def test_metrics():
    rng = np.random.default_rng(0)
    a = rng.random((12, 10, 3))
    assert math.isinf(hyrf.psnr(a, a))
    assert hyrf.ssim(a, a) == pytest.approx(1.0, abs=1e-9)
    b = np.clip(a + 0.1, 0, 1)
    assert 0 < hyrf.psnr(a, b) < 40


def test_contract_bounds():
    for p in ([0, 0, 0], [1e6, -3, 2], [0.5, 0.1, -0.2]):
        c = hyrf.contract(np.array(p, dtype=float))
        assert ((c > 0) & (c < 1)).all()
    np.testing.assert_allclose(hyrf.contract(np.zeros(3)), [0.5, 0.5, 0.5])


def test_codec_round_trip(scene):
    ck, images = scene
    blob = hyrf.compress(ck, codebook=8)
    back = hyrf.decompress(blob)
    assert back.n_gaussians == ck.n_gaussians
    assert back.camera_names == ck.camera_names
    cam = ck.camera(1)
    assert hyrf.psnr(back.render(cam), ck.render(cam)) > 30
    with pytest.raises(hyrf.CorruptStream):
        hyrf.decompress(blob[: len(blob) // 2])


def test_cli(tmp_path):
    code, _, _ = hyrf.run(["synth", "--n", "8", "--cameras", "2", "--size", "16", "--out", str(tmp_path / "d")])
    assert code == 0
    code, out, _ = hyrf.run(
        ["eval", "--checkpoint", str(tmp_path / "d" / "gt.ckpt"), "--data", str(tmp_path / "d"), "--all"]
    )
    assert code == 0
    assert "inf" in out
    gt = hyrf.Checkpoint.load(str(tmp_path / "d" / "gt.ckpt"))
    assert gt.n_gaussians == 8
    code, _, err = hyrf.run(["render", "--nope"])
    assert code == 1 and err
