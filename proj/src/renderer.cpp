#include "geoloop/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "geoloop/errors.hpp"

namespace geoloop {

RenderOutput render_points(const GeoMemory& mem, const Camera& cam,
                           int splat_radius) {
  if (splat_radius < 0) {
    throw SchemaError("render_points: splat_radius must be >= 0");
  }
  const int w = cam.intrinsics.width;
  const int h = cam.intrinsics.height;
  RenderOutput out;
  out.width = w;
  out.height = h;
  out.color = ImageRGB(w, h);
  out.mask.assign(static_cast<std::size_t>(w) * h, 0);
  out.depth.assign(static_cast<std::size_t>(w) * h, 0.0);
  out.source_index.assign(static_cast<std::size_t>(w) * h, -1);
  out.winner_point.assign(static_cast<std::size_t>(w) * h, -1);

  for (std::size_t i = 0; i < mem.points.size(); ++i) {
    const GeoPoint& pt = mem.points[i];
    const auto proj = project(cam, pt.position);
    if (!proj) continue;
    const int px = static_cast<int>(std::lround(proj->u));
    const int py = static_cast<int>(std::lround(proj->v));
    const int x0 = std::max(0, px - splat_radius);
    const int x1 = std::min(w - 1, px + splat_radius);
    const int y0 = std::max(0, py - splat_radius);
    const int y1 = std::min(h - 1, py + splat_radius);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t idx = out.idx(x, y);
        // Strict < keeps the earlier (smaller-index) point on depth ties.
        if (out.mask[idx] && !(proj->depth < out.depth[idx])) continue;
        out.mask[idx] = 1;
        out.depth[idx] = proj->depth;
        out.source_index[idx] = pt.source_view_id;
        out.winner_point[idx] = static_cast<int>(i);
        out.color.set(x, y, pt.color);
      }
    }
  }
  return out;
}

double hole_fraction(const RenderOutput& out) {
  if (out.mask.empty()) return 1.0;
  std::size_t holes = 0;
  for (std::uint8_t m : out.mask) holes += (m == 0);
  return static_cast<double>(holes) / static_cast<double>(out.mask.size());
}

void save_render(const std::string& prefix, const RenderOutput& out, bool ppm) {
  const std::string ext = ppm ? ".ppm" : ".png";
  write_image(prefix + ext, out.color);

  ImageRGB mask_img(out.width, out.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const std::uint8_t v = out.covered(x, y) ? 255 : 0;
      mask_img.set(x, y, {v, v, v});
    }
  }
  write_image(prefix + "_mask" + ext, mask_img);

  // Source ids offset by +1 so "empty" (-1) maps to 0.
  std::vector<std::uint16_t> source(out.source_index.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    source[i] = static_cast<std::uint16_t>(out.source_index[i] + 1);
  }
  write_png_gray16(prefix + "_source.png", source, out.width, out.height);

  DepthMap depth(out.width, out.height);
  for (std::size_t i = 0; i < out.depth.size(); ++i) {
    depth.data[i] = static_cast<float>(out.depth[i]);
  }
  write_depth(prefix + ".depth", depth);
}

}  // namespace geoloop
