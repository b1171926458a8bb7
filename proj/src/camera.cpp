#include "geoloop/camera.hpp"

#include <cmath>
#include <fstream>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"

namespace geoloop {

bool Pose::orthonormal(double tol) const {
  const Eigen::Matrix3d err =
      rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  return err.cwiseAbs().maxCoeff() < tol && rotation.determinant() > 0.0;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose invert(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(p.rotation.transpose() * p.translation);
  return out;
}

Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
             const Eigen::Vector3d& up) {
  Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up).normalized();
  if (!right.allFinite() || right.norm() < 0.5) {
    // up parallel to the view direction; pick any perpendicular axis
    const Eigen::Vector3d alt =
        std::abs(forward.x()) < 0.9 ? Eigen::Vector3d(1, 0, 0)
                                    : Eigen::Vector3d(0, 0, 1);
    right = forward.cross(alt).normalized();
  }
  const Eigen::Vector3d down = forward.cross(right);

  Pose pose;
  // Rows are the camera axes expressed in world coordinates (x right,
  // y down, z forward).
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -(pose.rotation * eye);
  return pose;
}

std::optional<PixelDepth> project(const Camera& cam,
                                  const Eigen::Vector3d& p_world) {
  const Eigen::Vector3d p_cam = cam.pose.apply(p_world);
  const double z = p_cam.z();
  if (z <= 0.0) return std::nullopt;
  const Intrinsics& in = cam.intrinsics;
  const double u = in.fx * p_cam.x() / z + in.cx;
  const double v = in.fy * p_cam.y() / z + in.cy;
  if (u < 0.0 || u >= in.width || v < 0.0 || v >= in.height) return std::nullopt;
  return PixelDepth{u, v, z};
}

Eigen::Vector3d unproject(const Camera& cam, double u, double v, double depth) {
  if (!(depth > 0.0)) {
    throw SchemaError("unproject: depth must be positive, got " +
                      std::to_string(depth));
  }
  const Intrinsics& in = cam.intrinsics;
  const Eigen::Vector3d p_cam((u - in.cx) / in.fx * depth,
                              (v - in.cy) / in.fy * depth, depth);
  return cam.pose.rotation.transpose() * (p_cam - cam.pose.translation);
}

Json camera_to_json(const Camera& cam) {
  Json j;
  j["view_id"] = cam.view_id;
  j["fx"] = cam.intrinsics.fx;
  j["fy"] = cam.intrinsics.fy;
  j["cx"] = cam.intrinsics.cx;
  j["cy"] = cam.intrinsics.cy;
  j["width"] = cam.intrinsics.width;
  j["height"] = cam.intrinsics.height;
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(cam.pose.rotation(r, c));
  j["rotation"] = rot;
  j["translation"] = {cam.pose.translation.x(), cam.pose.translation.y(),
                      cam.pose.translation.z()};
  return j;
}

Camera camera_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"view_id", "fx", "fy", "cx", "cy", "width", "height",
                       "rotation", "translation"},
                      "camera");
  Camera cam;
  try {
    cam.view_id = j.at("view_id").get<int>();
    cam.intrinsics.fx = j.at("fx").get<double>();
    cam.intrinsics.fy = j.at("fy").get<double>();
    cam.intrinsics.cx = j.at("cx").get<double>();
    cam.intrinsics.cy = j.at("cy").get<double>();
    cam.intrinsics.width = j.at("width").get<int>();
    cam.intrinsics.height = j.at("height").get<int>();
    const auto& rot = j.at("rotation");
    const auto& tr = j.at("translation");
    if (rot.size() != 9 || tr.size() != 3) {
      throw SchemaError("camera: rotation must have 9 entries, translation 3");
    }
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        cam.pose.rotation(r, c) = rot[3 * r + c].get<double>();
    for (int i = 0; i < 3; ++i) cam.pose.translation(i) = tr[i].get<double>();
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("camera: ") + e.what());
  }
  if (!cam.intrinsics.valid()) {
    throw SchemaError("camera " + std::to_string(cam.view_id) +
                      ": invalid intrinsics");
  }
  if (!cam.pose.orthonormal()) {
    throw SchemaError("camera " + std::to_string(cam.view_id) +
                      ": rotation is not orthonormal");
  }
  return cam;
}

void save_trajectory(const std::string& path, const std::vector<Camera>& cams) {
  Json arr = Json::array();
  for (const Camera& cam : cams) arr.push_back(camera_to_json(cam));
  save_json_file(path, arr);
}

std::vector<Camera> load_trajectory(const std::string& path) {
  const Json arr = load_json_file(path);
  if (!arr.is_array()) {
    throw SchemaError("trajectory " + path + ": expected a JSON array");
  }
  std::vector<Camera> cams;
  cams.reserve(arr.size());
  for (const Json& j : arr) cams.push_back(camera_from_json(j));
  return cams;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return j;
}

void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed,
                         const std::string& context) {
  if (!j.is_object()) throw SchemaError(context + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const std::string& k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) throw SchemaError(context + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace geoloop
