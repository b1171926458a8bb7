#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace geoloop {

// Conventions, fixed globally:
//   - poses map world -> camera, +z is the viewing direction,
//   - image origin top-left, u grows along the width, v along the height,
//   - pixel centers sit at integer coordinates: pixel (col, row) samples
//     the continuous position (u, v) = (col, row).

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 896;
  int height = 512;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 &&
           cy < height && width > 0 && height > 0;
  }
};

// Rigid world-to-camera transform: x_cam = rotation * x_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p_world) const {
    return rotation * p_world + translation;
  }

  // Camera origin expressed in world coordinates.
  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

  // ||R^T R - I||_inf < tol and det(R) > 0.
  bool orthonormal(double tol = 1e-6) const;
};

// compose(a, b): apply b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

// World-to-camera pose for an eye position looking at a target point.
Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
             const Eigen::Vector3d& up = Eigen::Vector3d(0, -1, 0));

struct Camera {
  Intrinsics intrinsics;
  Pose pose;
  int view_id = 0;
};

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // camera-space z, scene units
};

// Absent when the point is behind the camera (z <= 0) or projects outside
// [0, width) x [0, height).
std::optional<PixelDepth> project(const Camera& cam,
                                  const Eigen::Vector3d& p_world);

// Inverse of project on the visible domain. Throws SchemaError for depth <= 0.
Eigen::Vector3d unproject(const Camera& cam, double u, double v, double depth);

// Trajectory file: JSON array of
//   {view_id, fx, fy, cx, cy, width, height,
//    rotation: 9 numbers row-major, translation: 3 numbers}.
void save_trajectory(const std::string& path, const std::vector<Camera>& cams);
std::vector<Camera> load_trajectory(const std::string& path);

}  // namespace geoloop
