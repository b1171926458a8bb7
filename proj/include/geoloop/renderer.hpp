#pragma once

#include <string>
#include <vector>

#include "geoloop/geometry_memory.hpp"

namespace geoloop {

// Conditioning channels rendered from the geometry memory for one target
// camera: color, visibility mask, depth, and the per-pixel source-view
// attribution that drives view scoring.
struct RenderOutput {
  int width = 0;
  int height = 0;
  ImageRGB color;                  // black where the mask is empty
  std::vector<std::uint8_t> mask;  // 1 where at least one point splatted
  std::vector<double> depth;       // camera-space z of the winner, 0 if empty
  std::vector<int> source_index;   // winner's source_view_id, -1 if empty
  std::vector<int> winner_point;   // winner's index into memory, -1 if empty

  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  bool covered(int x, int y) const { return mask[idx(x, y)] != 0; }
};

// Z-buffer point splatting. Each point projects through the camera; its splat
// covers the square of Chebyshev radius `splat_radius` centered on the
// nearest pixel to the projection. Per pixel the smallest depth wins, ties
// broken by smaller point index. radius 0 = single-pixel splats.
RenderOutput render_points(const GeoMemory& mem, const Camera& cam,
                           int splat_radius);

// Fraction of pixels with no splatted point.
double hole_fraction(const RenderOutput& out);

// Writes prefix.png / prefix_mask.png / prefix_source.png (16-bit, ids
// offset by +1 so empty maps to 0) / prefix.depth. With ppm=true color and
// mask become P6 PPMs.
void save_render(const std::string& prefix, const RenderOutput& out,
                 bool ppm = false);

}  // namespace geoloop
