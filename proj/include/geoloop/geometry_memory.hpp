#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "geoloop/scene_synth.hpp"

namespace geoloop {

struct GeoPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Rgb color = {0, 0, 0};
  int source_view_id = -1;  // the view whose back-projection created this point
};

// Explicit geometry memory: a point cloud partitioned by source view. Updates
// rebuild the whole cloud from the augmented view bank (replacement, not
// append), so the partition always reflects the current bank.
struct GeoMemory {
  std::vector<GeoPoint> points;
  int generation_counter = 0;  // number of updates applied
  int stride = 1;              // pixel subsampling used at construction
};

struct ViewBank {
  std::vector<CaptureFrame> frames;

  // Throws SchemaError when the view_id is already present.
  void add(CaptureFrame frame);
  const CaptureFrame* find(int view_id) const;
  std::vector<int> view_ids() const;
  bool empty() const { return frames.empty(); }
  std::size_t size() const { return frames.size(); }
};

// One point per sampled pixel with depth > 0, at
// unproject(cam, col, row, depth), carrying the pixel color and the frame's
// view id. Pixels are visited every `stride` rows/columns; points are ordered
// by (view_id, row, col). Throws SchemaError on an empty bank or stride < 1.
GeoMemory init_from_captures(const ViewBank& bank, int stride);

// Replacement-style update: rebuilds from new_bank at the memory's stride and
// increments generation_counter. new_bank is expected to contain the original
// captures plus frames for the generated views.
GeoMemory update_memory(const GeoMemory& mem, const ViewBank& new_bank);

// Indices of the points attributed to view_id (the S_i partition member).
std::vector<std::size_t> source_subset(const GeoMemory& mem, int view_id);

// ASCII PLY with properties x,y,z (double), red,green,blue (uchar),
// source_view (int).
void save_ply(const std::string& path, const GeoMemory& mem);
GeoMemory load_ply(const std::string& path);

}  // namespace geoloop
