"""Geometry-memory view generation loop: Python surface over the C++ core."""

from geoloop._core import (
    Camera,
    CaptureFrame,
    GeneratorContractError,
    GeoMemory,
    Intrinsics,
    IoError,
    Pose,
    RenderOutput,
    SchemaError,
    SequenceLayout,
    SyntheticScene,
    ViewBank,
    allowed_frame_pairs,
    build_layout,
    build_scene,
    conditioning_frames,
    critic_loss,
    dense_attention,
    dmd_generator_gradient,
    frames_attend,
    gaussian_posterior_mean,
    init_from_captures,
    load_ply,
    load_scene_json,
    load_trajectory,
    look_at,
    noisify,
    orbit_trajectory,
    project,
    psnr,
    raycast,
    reference_attention,
    render_points,
    run_loop,
    run_scenario,
    sample_4step,
    save_ply,
    save_scene_json,
    save_trajectory,
    schedule_steps,
    score_segment,
    select_topk,
    sparse_mask_density,
    ssim,
    toy_dmd_train,
    unproject,
    update_memory,
)

__all__ = [
    "Camera",
    "CaptureFrame",
    "GeneratorContractError",
    "GeoMemory",
    "Intrinsics",
    "IoError",
    "Pose",
    "RenderOutput",
    "SchemaError",
    "SequenceLayout",
    "SyntheticScene",
    "ViewBank",
    "allowed_frame_pairs",
    "build_layout",
    "build_scene",
    "conditioning_frames",
    "critic_loss",
    "dense_attention",
    "dmd_generator_gradient",
    "frames_attend",
    "gaussian_posterior_mean",
    "init_from_captures",
    "load_ply",
    "load_scene_json",
    "load_trajectory",
    "look_at",
    "noisify",
    "orbit_trajectory",
    "project",
    "psnr",
    "raycast",
    "reference_attention",
    "render_points",
    "run_loop",
    "run_scenario",
    "sample_4step",
    "save_ply",
    "save_scene_json",
    "save_trajectory",
    "schedule_steps",
    "score_segment",
    "select_topk",
    "sparse_mask_density",
    "ssim",
    "toy_dmd_train",
    "unproject",
    "update_memory",
]

__version__ = "0.1.0"
