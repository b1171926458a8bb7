#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "geoloop/camera.hpp"
#include "geoloop/image.hpp"
#include "geoloop/rng.hpp"

namespace geoloop {

enum class TextureKind : int { kChecker = 0, kGradient = 1, kStripes = 2 };

// Axis-aligned textured box. The room is the same type, viewed from inside.
struct BoxPrimitive {
  Eigen::Vector3d min_corner = Eigen::Vector3d::Zero();
  Eigen::Vector3d max_corner = Eigen::Vector3d::Zero();
  TextureKind texture = TextureKind::kChecker;
  Rgb palette_a = {200, 200, 200};
  Rgb palette_b = {40, 40, 40};
  double texture_freq = 1.0;  // pattern cells per scene unit
};

struct SyntheticScene {
  std::uint64_t seed = 0;
  BoxPrimitive room;
  std::vector<BoxPrimitive> boxes;
  Rgb background = {12, 12, 16};
};

// Ground-truth capture: exact color + depth from the ray caster.
struct CaptureFrame {
  Camera camera;
  ImageRGB color;
  DepthMap depth;  // 0 where no hit
};

// Deterministic procedural scene; same seed gives a bit-identical scene.
// Box count is uniform in [4, 12]; all primitives lie inside the room.
SyntheticScene build_scene(std::uint64_t seed);

// Per-pixel nearest ray/box intersection. Depth is camera-space z of the hit;
// pixels that miss every surface get the background color and depth 0.
CaptureFrame raycast(const SyntheticScene& scene, const Camera& cam,
                     int threads = 1);

// Analytic hit for a single ray through pixel (u, v); returns depth 0 on miss.
// Exposed so tests can check single rays without rendering a full frame.
struct RayHit {
  bool hit = false;
  double depth = 0.0;
  Rgb color = {0, 0, 0};
};
RayHit cast_ray(const SyntheticScene& scene, const Camera& cam, double u,
                double v);

// Training-pair sampling over a clip of cameras: frame 0 is always a
// reference; N in [2,4] extra references come from the first half of the clip
// with probability 0.5, otherwise from the whole clip. Targets are the whole
// clip.
struct TrainingPair {
  std::vector<int> reference_indices;  // sorted, starts with 0
  std::vector<int> target_indices;     // 0..clip-1
};
TrainingPair make_training_pair(const SyntheticScene& scene,
                                const std::vector<Camera>& clip_cameras,
                                Rng& rng);

// Inward-looking circular camera path around the scene center, view ids
// starting at first_view_id.
std::vector<Camera> orbit_trajectory(const SyntheticScene& scene,
                                     const Intrinsics& intr, int frames,
                                     int first_view_id, double radius_scale = 0.55);

void save_scene_json(const std::string& path, const SyntheticScene& scene);
SyntheticScene load_scene_json(const std::string& path);

}  // namespace geoloop
