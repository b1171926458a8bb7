#pragma once

#include <filesystem>
#include <string>

#include "geoloop/camera.hpp"
#include "geoloop/geometry_memory.hpp"
#include "geoloop/rng.hpp"

namespace testutil {

// Fresh directory under the system temp root; unique per call.
inline std::string temp_dir(const std::string& tag) {
  static int counter = 0;
  const std::filesystem::path p =
      std::filesystem::temp_directory_path() /
      ("geoloop_test_" + tag + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

inline geoloop::Intrinsics small_intrinsics(int width = 48, int height = 32,
                                            double f = 40.0) {
  geoloop::Intrinsics in;
  in.width = width;
  in.height = height;
  in.fx = f;
  in.fy = f;
  in.cx = (width - 1) / 2.0;
  in.cy = (height - 1) / 2.0;
  return in;
}

inline geoloop::Camera make_camera(const Eigen::Vector3d& eye,
                                   const Eigen::Vector3d& target,
                                   const geoloop::Intrinsics& in,
                                   int view_id = 0) {
  geoloop::Camera cam;
  cam.intrinsics = in;
  cam.pose = geoloop::look_at(eye, target);
  cam.view_id = view_id;
  return cam;
}

inline geoloop::Camera random_camera(geoloop::Rng& rng,
                                     const geoloop::Intrinsics& in,
                                     int view_id = 0) {
  const Eigen::Vector3d eye(rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0),
                            rng.uniform(-3.0, 3.0));
  Eigen::Vector3d target(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                         rng.uniform(-0.5, 0.5));
  if ((target - eye).norm() < 0.5) target = eye + Eigen::Vector3d(0, 0, 1);
  return make_camera(eye, target, in, view_id);
}

// Points scattered in the camera's view frustum between near and far depth,
// round-robin source view ids.
inline geoloop::GeoMemory random_memory(geoloop::Rng& rng,
                                        const geoloop::Camera& cam,
                                        int num_points, int num_views,
                                        double near_depth = 1.0,
                                        double far_depth = 8.0) {
  geoloop::GeoMemory mem;
  mem.points.reserve(num_points);
  const auto& in = cam.intrinsics;
  for (int i = 0; i < num_points; ++i) {
    const double u = rng.uniform(0.0, in.width - 1.0);
    const double v = rng.uniform(0.0, in.height - 1.0);
    const double d = rng.uniform(near_depth, far_depth);
    geoloop::GeoPoint p;
    p.position = geoloop::unproject(cam, u, v, d);
    p.color = {static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
               static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
               static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
    p.source_view_id = i % num_views;
    mem.points.push_back(p);
  }
  return mem;
}

}  // namespace testutil
