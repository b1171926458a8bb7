#include "geoloop/bank_io.hpp"

#include <filesystem>
#include <iomanip>
#include <sstream>

#include "geoloop/errors.hpp"
#include "geoloop/image.hpp"

namespace geoloop {

std::string frame_basename(int view_id) {
  std::ostringstream ss;
  ss << "frame_" << std::setw(4) << std::setfill('0') << view_id;
  return ss.str();
}

void save_bank_dir(const std::string& dir,
                   const std::vector<CaptureFrame>& frames, bool ppm) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  std::vector<Camera> cams;
  cams.reserve(frames.size());
  for (const CaptureFrame& frame : frames) {
    const std::string base = dir + "/" + frame_basename(frame.camera.view_id);
    write_image(base + (ppm ? ".ppm" : ".png"), frame.color);
    write_depth(base + ".depth", frame.depth);
    cams.push_back(frame.camera);
  }
  save_trajectory(dir + "/cameras.json", cams);
}

ViewBank load_bank_dir(const std::string& dir) {
  const std::vector<Camera> cams = load_trajectory(dir + "/cameras.json");
  if (cams.empty()) throw SchemaError(dir + "/cameras.json: no cameras");
  ViewBank bank;
  for (const Camera& cam : cams) {
    const std::string base = dir + "/" + frame_basename(cam.view_id);
    CaptureFrame frame;
    frame.camera = cam;
    if (std::filesystem::exists(base + ".png")) {
      frame.color = read_image(base + ".png");
    } else if (std::filesystem::exists(base + ".ppm")) {
      frame.color = read_image(base + ".ppm");
    } else {
      throw IoError("missing frame image " + base + ".png");
    }
    frame.depth = read_depth(base + ".depth");
    if (frame.color.width != cam.intrinsics.width ||
        frame.color.height != cam.intrinsics.height ||
        frame.depth.width != cam.intrinsics.width ||
        frame.depth.height != cam.intrinsics.height) {
      throw SchemaError(base + ": frame dimensions disagree with intrinsics");
    }
    bank.add(std::move(frame));
  }
  return bank;
}

}  // namespace geoloop
