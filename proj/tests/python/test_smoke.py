"""Smoke tests for the Python bindings: shapes, basic invariants, one loop."""

import math

import numpy as np
import pytest

import geoloop as gl


def desk_intrinsics(width=96, height=64, f=70.0):
    return gl.Intrinsics(
        fx=f, fy=f, cx=(width - 1) / 2, cy=(height - 1) / 2,
        width=width, height=height,
    )


@pytest.fixture(scope="module")
def scene():
    return gl.build_scene(7)


@pytest.fixture(scope="module")
def trajectory(scene):
    return gl.orbit_trajectory(scene, desk_intrinsics(), frames=12)


@pytest.fixture(scope="module")
def bank(scene, trajectory):
    b = gl.ViewBank()
    for i in gl.conditioning_frames("interpolation", len(trajectory)):
        color, depth = gl.raycast(scene, trajectory[i], threads=2)
        b.add(gl.CaptureFrame(trajectory[i], color, depth))
    return b


def test_scene_and_raycast_shapes(scene, trajectory):
    assert 4 <= scene.num_boxes <= 12
    color, depth = gl.raycast(scene, trajectory[0], threads=2)
    assert color.shape == (64, 96, 3) and color.dtype == np.uint8
    assert depth.shape == (64, 96) and depth.dtype == np.float32
    assert (depth > 0).all()  # indoor scene: every ray hits something


def test_project_unproject_roundtrip(trajectory):
    cam = trajectory[3]
    p = gl.unproject(cam, 40.0, 20.0, 2.5)
    u, v, depth = gl.project(cam, p)
    assert abs(u - 40.0) < 1e-9 and abs(v - 20.0) < 1e-9
    assert abs(depth - 2.5) < 1e-9


def test_memory_init_and_render(scene, trajectory, bank):
    mem = gl.init_from_captures(bank, stride=2)
    assert len(mem) == 3 * (96 // 2) * (64 // 2)
    assert mem.positions().shape == (len(mem), 3)
    assert set(np.unique(mem.source_ids())) == {0, 6, 11}

    out = gl.render_points(mem, trajectory[6], splat_radius=1)
    assert out.color.shape == (64, 96, 3)
    assert out.mask.shape == (64, 96)
    # the render must cover most of a conditioning view
    assert out.hole_fraction < 0.3
    assert out.depth[out.mask > 0].min() > 0


def test_scores_sum_to_one(scene, trajectory, bank):
    mem = gl.init_from_captures(bank, stride=2)
    scores = gl.score_segment(mem, [trajectory[4]], splat_radius=1)
    total = sum(s for _, s in scores)
    assert math.isclose(total, 1.0, abs_tol=1e-12)
    top = gl.select_topk(scores, k=2)
    assert len(top) <= 2 and all(isinstance(v, int) for v in top)


def test_attention_layout_invariants():
    layout = gl.build_layout(num_refs=3, num_targets=40, h_tokens=16, w_tokens=28)
    assert layout.frames() == 43
    assert layout.total_tokens() == 43 * 16 * 28
    assert gl.allowed_frame_pairs(layout, window=8) == 40 * 17 + 3 * 40 + 9
    assert 0 < gl.sparse_mask_density(layout, window=8) < 1


def test_schedule_and_sampler():
    assert gl.schedule_steps() == [1000.0, 750.0, 500.0, 250.0, 0.0]
    calls = []

    def generator(z, t):
        calls.append(t)
        return 0.5 * z

    _, steps = gl.sample_4step(generator, np.ones(3), deterministic=True)
    assert calls == [1000.0, 750.0, 500.0, 250.0]
    assert len(steps) == 4


def test_dmd_gradient_and_toy_training():
    student = np.array([0.3, -0.1])
    teacher = np.array([1.0, 2.0])
    critic = np.array([0.5, 0.5])
    grad = gl.dmd_generator_gradient(student, teacher, critic, eta=2.0,
                                     sigma_norm=0.5)
    np.testing.assert_allclose(grad, -2.0 / 0.5 * (teacher - critic))

    r = gl.toy_dmd_train(teacher_mean=2.0, teacher_std=0.5)
    assert r["converged"] and not r["aborted"]
    assert abs(r["m_final"] - 2.0) < 0.05
    assert abs(r["s_final"] - 0.5) < 0.05


def test_metrics_sanity(scene, trajectory):
    color, _ = gl.raycast(scene, trajectory[0])
    assert gl.psnr(color, color) == 99.0
    assert gl.ssim(color, color) == 1.0
    noisy = color.astype(np.int16)
    noisy[::2] += 4
    noisy = np.clip(noisy, 0, 255).astype(np.uint8)
    assert gl.psnr(color, noisy) < 99.0
    assert gl.ssim(color, noisy) < 1.0


def test_run_scenario_closes_the_loop(scene, trajectory):
    cond = gl.conditioning_frames("interpolation", len(trajectory))
    result = gl.run_scenario(scene, trajectory, cond, generator="oracle",
                             k=3, seg_len=6, stride=1, splat_radius=1,
                             threads=2)
    assert len(result["frames"]) == len(trajectory)
    assert result["frames"][0].shape == (64, 96, 3)
    assert result["mean_psnr"] >= 30.0
    assert result["generation_counter"] == len(result["segments"]) == 2
    for seg in result["segments"]:
        assert seg["mean_hole_after"] <= seg["mean_hole_before"]


def test_errors_surface_as_python_exceptions(scene):
    with pytest.raises(gl.IoError):
        gl.load_ply("/nonexistent/memory.ply")
    with pytest.raises(gl.SchemaError):
        gl.init_from_captures(gl.ViewBank(), stride=1)
    with pytest.raises(gl.SchemaError):
        gl.build_layout(num_refs=3, num_targets=0, h_tokens=4, w_tokens=4)
