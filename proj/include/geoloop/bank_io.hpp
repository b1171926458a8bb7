#pragma once

#include <string>
#include <vector>

#include "geoloop/geometry_memory.hpp"

namespace geoloop {

// Capture directory layout:
//   dir/cameras.json              trajectory-format array, one entry per frame
//   dir/frame_<view_id>.png|.ppm  color
//   dir/frame_<view_id>.depth     depth
// view_id is zero-padded to 4 digits.
void save_bank_dir(const std::string& dir,
                   const std::vector<CaptureFrame>& frames, bool ppm = false);

ViewBank load_bank_dir(const std::string& dir);

std::string frame_basename(int view_id);

}  // namespace geoloop
