#include "geoloop/scene_synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"
#include "geoloop/parallel.hpp"

namespace geoloop {

namespace {

constexpr double kRayEps = 1e-9;

// Parametric interval of a ray against an axis-aligned box. Returns false
// when the ray misses entirely.
bool ray_box_interval(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                      const BoxPrimitive& box, double* t_enter, double* t_exit) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-300) {
      if (origin[a] < box.min_corner[a] || origin[a] > box.max_corner[a]) {
        return false;
      }
      continue;
    }
    const double inv = 1.0 / dir[a];
    double ta = (box.min_corner[a] - origin[a]) * inv;
    double tb = (box.max_corner[a] - origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  *t_enter = t0;
  *t_exit = t1;
  return true;
}

// Nearest surface hit in front of the origin: t_enter from outside the box,
// t_exit when the origin is inside (the room case).
bool ray_box_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                 const BoxPrimitive& box, double* t_hit) {
  double t0, t1;
  if (!ray_box_interval(origin, dir, box, &t0, &t1)) return false;
  if (t0 > kRayEps) {
    *t_hit = t0;
    return true;
  }
  if (t1 > kRayEps) {
    *t_hit = t1;
    return true;
  }
  return false;
}

int hit_face_axis(const Eigen::Vector3d& p, const BoxPrimitive& box,
                  bool* positive_side) {
  int axis = 0;
  double best = std::numeric_limits<double>::infinity();
  bool pos = false;
  for (int a = 0; a < 3; ++a) {
    const double d_min = std::abs(p[a] - box.min_corner[a]);
    const double d_max = std::abs(p[a] - box.max_corner[a]);
    if (d_min < best) {
      best = d_min;
      axis = a;
      pos = false;
    }
    if (d_max < best) {
      best = d_max;
      axis = a;
      pos = true;
    }
  }
  *positive_side = pos;
  return axis;
}

Rgb lerp_rgb(Rgb a, Rgb b, double t) {
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    out[c] = static_cast<std::uint8_t>(
        std::lround(a[c] + (b[c] - static_cast<double>(a[c])) * t));
  }
  return out;
}

Rgb scale_rgb(Rgb c, double s) {
  Rgb out;
  for (int i = 0; i < 3; ++i) {
    out[i] = static_cast<std::uint8_t>(
        std::clamp(std::lround(c[i] * s), 0l, 255l));
  }
  return out;
}

// Flat per-face shading so adjacent faces of the same box are
// distinguishable in renders.
double face_shade(int axis, bool positive) {
  static constexpr double kShade[6] = {1.0, 0.82, 0.70, 0.90, 0.76, 0.62};
  return kShade[2 * axis + (positive ? 1 : 0)];
}

Rgb shade_surface(const BoxPrimitive& box, const Eigen::Vector3d& p) {
  bool positive;
  const int axis = hit_face_axis(p, box, &positive);
  const int ua = (axis + 1) % 3;
  const int va = (axis + 2) % 3;
  const double a = p[ua] * box.texture_freq;
  const double b = p[va] * box.texture_freq;
  Rgb base;
  switch (box.texture) {
    case TextureKind::kChecker: {
      const long cell = std::lround(std::floor(a)) + std::lround(std::floor(b));
      base = ((cell & 1) == 0) ? box.palette_a : box.palette_b;
      break;
    }
    case TextureKind::kGradient: {
      const double t = a - std::floor(a);
      base = lerp_rgb(box.palette_a, box.palette_b, t);
      break;
    }
    case TextureKind::kStripes: {
      const long cell = std::lround(std::floor(a + b));
      base = ((cell & 1) == 0) ? box.palette_a : box.palette_b;
      break;
    }
  }
  return scale_rgb(base, face_shade(axis, positive));
}

Rgb random_color(Rng& rng) {
  return {static_cast<std::uint8_t>(rng.uniform_int(40, 255)),
          static_cast<std::uint8_t>(rng.uniform_int(40, 255)),
          static_cast<std::uint8_t>(rng.uniform_int(40, 255))};
}

}  // namespace

SyntheticScene build_scene(std::uint64_t seed) {
  Rng rng = Rng(seed).substream("scene_synth");
  SyntheticScene scene;
  scene.seed = seed;

  const double half_x = rng.uniform(5.0, 8.0);
  const double half_y = rng.uniform(2.5, 4.0);
  const double half_z = rng.uniform(5.0, 8.0);
  scene.room.min_corner = Eigen::Vector3d(-half_x, -half_y, -half_z);
  scene.room.max_corner = Eigen::Vector3d(half_x, half_y, half_z);
  scene.room.texture = TextureKind::kChecker;
  scene.room.palette_a = random_color(rng);
  scene.room.palette_b = random_color(rng);
  scene.room.texture_freq = rng.uniform(0.4, 0.9);

  const int n_boxes = static_cast<int>(rng.uniform_int(4, 12));
  scene.boxes.reserve(n_boxes);
  for (int i = 0; i < n_boxes; ++i) {
    BoxPrimitive box;
    Eigen::Vector3d size(rng.uniform(0.4, 1.8), rng.uniform(0.4, 1.8),
                         rng.uniform(0.4, 1.8));
    Eigen::Vector3d center;
    for (int a = 0; a < 3; ++a) {
      const double room_half =
          0.5 * (scene.room.max_corner[a] - scene.room.min_corner[a]);
      const double margin = room_half - 0.5 * size[a] - 0.1;
      center[a] = rng.uniform(-margin, margin);
    }
    box.min_corner = center - 0.5 * size;
    box.max_corner = center + 0.5 * size;
    box.texture = static_cast<TextureKind>(rng.uniform_int(0, 2));
    box.palette_a = random_color(rng);
    box.palette_b = random_color(rng);
    box.texture_freq = rng.uniform(0.5, 3.0);
    scene.boxes.push_back(box);
  }
  return scene;
}

RayHit cast_ray(const SyntheticScene& scene, const Camera& cam, double u,
                double v) {
  const Intrinsics& in = cam.intrinsics;
  const Eigen::Vector3d dir_cam((u - in.cx) / in.fx, (v - in.cy) / in.fy, 1.0);
  const Eigen::Vector3d origin = cam.pose.center();
  const Eigen::Vector3d dir = cam.pose.rotation.transpose() * dir_cam;

  // dir_cam.z == 1, so the parametric t along dir equals camera-space depth.
  double best_t = std::numeric_limits<double>::infinity();
  const BoxPrimitive* best_box = nullptr;
  double t;
  if (ray_box_hit(origin, dir, scene.room, &t)) {
    best_t = t;
    best_box = &scene.room;
  }
  for (const BoxPrimitive& box : scene.boxes) {
    if (ray_box_hit(origin, dir, box, &t) && t < best_t) {
      best_t = t;
      best_box = &box;
    }
  }
  RayHit hit;
  if (!best_box) return hit;
  hit.hit = true;
  hit.depth = best_t;
  hit.color = shade_surface(*best_box, origin + best_t * dir);
  return hit;
}

CaptureFrame raycast(const SyntheticScene& scene, const Camera& cam,
                     int threads) {
  const int w = cam.intrinsics.width;
  const int h = cam.intrinsics.height;
  CaptureFrame frame;
  frame.camera = cam;
  frame.color = ImageRGB(w, h, scene.background);
  frame.depth = DepthMap(w, h, 0.0f);
  parallel_for(0, h, threads, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const RayHit hit = cast_ray(scene, cam, x, y);
      if (hit.hit) {
        frame.color.set(x, y, hit.color);
        frame.depth.at(x, y) = static_cast<float>(hit.depth);
      }
    }
  });
  return frame;
}

TrainingPair make_training_pair(const SyntheticScene& /*scene*/,
                                const std::vector<Camera>& clip_cameras,
                                Rng& rng) {
  const int clip = static_cast<int>(clip_cameras.size());
  if (clip < 2) {
    throw SchemaError("make_training_pair: clip must have at least 2 frames");
  }
  const int n_extra = static_cast<int>(rng.uniform_int(2, 4));
  const bool first_half_only = rng.uniform() < 0.5;
  const int pool_end = first_half_only ? std::max(2, clip / 2) : clip;

  TrainingPair pair;
  pair.reference_indices.push_back(0);
  // Sample distinct extra indices from [1, pool_end).
  std::vector<int> candidates;
  for (int i = 1; i < pool_end; ++i) candidates.push_back(i);
  const int take = std::min<int>(n_extra, static_cast<int>(candidates.size()));
  for (int i = 0; i < take; ++i) {
    const int j = static_cast<int>(
        rng.uniform_int(i, static_cast<int>(candidates.size()) - 1));
    std::swap(candidates[i], candidates[j]);
    pair.reference_indices.push_back(candidates[i]);
  }
  std::sort(pair.reference_indices.begin(), pair.reference_indices.end());

  pair.target_indices.resize(clip);
  for (int i = 0; i < clip; ++i) pair.target_indices[i] = i;
  return pair;
}

std::vector<Camera> orbit_trajectory(const SyntheticScene& scene,
                                     const Intrinsics& intr, int frames,
                                     int first_view_id, double radius_scale) {
  if (frames < 1) throw SchemaError("orbit_trajectory: frames must be >= 1");
  const Eigen::Vector3d center =
      0.5 * (scene.room.min_corner + scene.room.max_corner);
  const double rx = radius_scale * 0.5 *
                    (scene.room.max_corner.x() - scene.room.min_corner.x());
  const double rz = radius_scale * 0.5 *
                    (scene.room.max_corner.z() - scene.room.min_corner.z());
  std::vector<Camera> cams;
  cams.reserve(frames);
  for (int i = 0; i < frames; ++i) {
    const double angle = 2.0 * M_PI * i / frames;
    const Eigen::Vector3d eye =
        center + Eigen::Vector3d(rx * std::cos(angle), 0.0, rz * std::sin(angle));
    Camera cam;
    cam.intrinsics = intr;
    cam.pose = look_at(eye, center);
    cam.view_id = first_view_id + i;
    cams.push_back(cam);
  }
  return cams;
}

namespace {

Json box_to_json(const BoxPrimitive& box) {
  Json j;
  j["min"] = {box.min_corner.x(), box.min_corner.y(), box.min_corner.z()};
  j["max"] = {box.max_corner.x(), box.max_corner.y(), box.max_corner.z()};
  j["texture"] = static_cast<int>(box.texture);
  j["palette_a"] = {box.palette_a[0], box.palette_a[1], box.palette_a[2]};
  j["palette_b"] = {box.palette_b[0], box.palette_b[1], box.palette_b[2]};
  j["freq"] = box.texture_freq;
  return j;
}

BoxPrimitive box_from_json(const Json& j) {
  reject_unknown_keys(j, {"min", "max", "texture", "palette_a", "palette_b", "freq"},
                      "box");
  BoxPrimitive box;
  for (int a = 0; a < 3; ++a) {
    box.min_corner[a] = j.at("min").at(a).get<double>();
    box.max_corner[a] = j.at("max").at(a).get<double>();
  }
  const int tex = j.at("texture").get<int>();
  if (tex < 0 || tex > 2) throw SchemaError("box: texture id out of range");
  box.texture = static_cast<TextureKind>(tex);
  for (int c = 0; c < 3; ++c) {
    box.palette_a[c] = j.at("palette_a").at(c).get<std::uint8_t>();
    box.palette_b[c] = j.at("palette_b").at(c).get<std::uint8_t>();
  }
  box.texture_freq = j.at("freq").get<double>();
  return box;
}

}  // namespace

void save_scene_json(const std::string& path, const SyntheticScene& scene) {
  Json j;
  j["seed"] = scene.seed;
  j["room"] = box_to_json(scene.room);
  j["background"] = {scene.background[0], scene.background[1],
                     scene.background[2]};
  Json boxes = Json::array();
  for (const BoxPrimitive& box : scene.boxes) boxes.push_back(box_to_json(box));
  j["boxes"] = boxes;
  save_json_file(path, j);
}

SyntheticScene load_scene_json(const std::string& path) {
  const Json j = load_json_file(path);
  reject_unknown_keys(j, {"seed", "room", "background", "boxes"}, "scene");
  SyntheticScene scene;
  try {
    scene.seed = j.at("seed").get<std::uint64_t>();
    scene.room = box_from_json(j.at("room"));
    for (int c = 0; c < 3; ++c) {
      scene.background[c] = j.at("background").at(c).get<std::uint8_t>();
    }
    for (const Json& b : j.at("boxes")) scene.boxes.push_back(box_from_json(b));
  } catch (const Json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return scene;
}

}  // namespace geoloop
