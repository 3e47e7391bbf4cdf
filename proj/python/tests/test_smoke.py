import json
import math

import numpy as np
import pytest

import adaptive_shell as ash

SPHERE = json.dumps(
    {
        "domain": {"min": [-1, -1, -1], "max": [1, 1, 1]},
        "root": {"type": "sphere", "center": [0, 0, 0], "radius": 0.5, "kernel_size": 0.001, "color": [0.8, 0.5, 0.3]},
    }
)


@pytest.fixture(scope="module")
def scene():
    return ash.Scene.from_json(SPHERE)


@pytest.fixture(scope="module")
def shell(scene):
    return ash.extract_shell(scene, grid_res=48)


def test_phi_and_alpha():
    assert ash.phi(0.0, 0.1) == pytest.approx(0.5)
    a = ash.alpha_interval(0.05, 0.1, -0.05, 0.1)
    expected = 1.0 - (1.0 / (1.0 + math.exp(0.5))) / (1.0 / (1.0 + math.exp(-0.5)))
    assert a == pytest.approx(expected, rel=1e-12)


def test_sample_count():
    assert ash.interval_sample_count(0.015) == 1
    assert ash.interval_sample_count(1.0) == 16
    with pytest.raises(ValueError):
        ash.interval_sample_count(-1.0)


def test_scene_round_trip(scene):
    again = ash.Scene.from_json(scene.to_json())
    assert again.sample([0.2, 0.1, 0.0])["f"] == pytest.approx(scene.sample([0.2, 0.1, 0.0])["f"])
    assert scene.sample([0.0, 0.0, 0.0])["f"] == pytest.approx(-0.5)


def test_bad_scene():
    with pytest.raises(ValueError):
        ash.Scene.from_json('{"root": {"type": "nothing"}}')


def test_shell_meshes(shell):
    verts, tris = shell.outer
    assert verts.shape[1] == 3 and tris.shape[1] == 3
    assert len(tris) > 0
    radii = np.linalg.norm(verts, axis=1)
    assert radii.min() > 0.45


def test_full_and_band(scene, shell):
    cam = ash.Camera(position=[0, 0, 3], width=32, height=32)
    full, full_mean = ash.render_full(scene, cam, samples=512, workers=1)
    band, band_mean = ash.render_band(scene, shell, cam, workers=1)
    assert full.shape == (32, 32, 3)
    assert band_mean < full_mean / 5
    assert ash.psnr(full, band) > 30
    assert math.isinf(ash.psnr(full, full))


def test_bad_camera():
    with pytest.raises(ValueError):
        ash.Camera(fov=0.0)


def test_cli(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text(SPHERE)
    code, out, _ = ash.run_cli(
        ["render-full", "--scene", str(path), "--out", str(tmp_path / "o"), "--width", "8", "--height", "8",
         "--samples", "16"]
    )
    assert code == 0
    assert (tmp_path / "o" / "full_00.ppm").exists()
    code, _, err = ash.run_cli(["render-full", "--scene", str(tmp_path / "missing.json")])
    assert code == 2
    assert "missing.json" in err
