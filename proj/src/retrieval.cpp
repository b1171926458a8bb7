#include "geoloop/retrieval.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"

namespace geoloop {

double ScoreTable::score_of(int view_id) const {
  for (const ScoreEntry& e : entries) {
    if (e.view_id == view_id) return e.score;
  }
  return 0.0;
}

VisibleSet visible_set(const GeoMemory& mem, const std::vector<Camera>& cams,
                       int splat_radius) {
  if (cams.empty()) throw SchemaError("visible_set: empty camera list");
  std::set<int> winners;
  for (const Camera& cam : cams) {
    const RenderOutput out = render_points(mem, cam, splat_radius);
    for (int w : out.winner_point) {
      if (w >= 0) winners.insert(w);
    }
  }
  VisibleSet vis;
  vis.point_indices.assign(winners.begin(), winners.end());
  return vis;
}

namespace {

ScoreTable table_from_counts(const GeoMemory& mem,
                             const std::map<int, std::size_t>& counts,
                             std::size_t total) {
  // Every view present in the memory partition gets an entry, including
  // views that contributed nothing visible.
  std::set<int> all_views;
  for (const GeoPoint& p : mem.points) all_views.insert(p.source_view_id);

  ScoreTable table;
  for (int id : all_views) {
    ScoreEntry e;
    e.view_id = id;
    const auto it = counts.find(id);
    e.score = (total == 0 || it == counts.end())
                  ? 0.0
                  : static_cast<double>(it->second) / static_cast<double>(total);
    table.entries.push_back(e);
  }
  return table;
}

}  // namespace

ScoreTable score_views(const GeoMemory& mem, const VisibleSet& vis) {
  std::map<int, std::size_t> counts;
  for (int idx : vis.point_indices) {
    counts[mem.points[static_cast<std::size_t>(idx)].source_view_id]++;
  }
  return table_from_counts(mem, counts, vis.size());
}

ScoreTable score_views_pixel_weighted(const GeoMemory& mem,
                                      const std::vector<Camera>& cams,
                                      int splat_radius) {
  if (cams.empty()) throw SchemaError("score_views: empty camera list");
  std::map<int, std::size_t> counts;
  std::size_t total = 0;
  for (const Camera& cam : cams) {
    const RenderOutput out = render_points(mem, cam, splat_radius);
    for (int s : out.source_index) {
      if (s >= 0) {
        counts[s]++;
        ++total;
      }
    }
  }
  return table_from_counts(mem, counts, total);
}

ScoreTable score_segment(const GeoMemory& mem, const std::vector<Camera>& cams,
                         int splat_radius, ScoreWeighting weighting) {
  if (weighting == ScoreWeighting::kPixelWeighted) {
    return score_views_pixel_weighted(mem, cams, splat_radius);
  }
  return score_views(mem, visible_set(mem, cams, splat_radius));
}

std::vector<int> select_topk(const ScoreTable& scores, int k) {
  if (k < 1) throw SchemaError("select_topk: k must be >= 1");
  std::vector<ScoreEntry> sorted = scores.entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoreEntry& a, const ScoreEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.view_id < b.view_id;
            });
  std::vector<int> selected;
  for (const ScoreEntry& e : sorted) {
    if (e.score <= 0.0) break;  // occluded / non-contributing views filtered
    selected.push_back(e.view_id);
    if (static_cast<int>(selected.size()) == k) break;
  }
  return selected;
}

double fov_overlap_score(const Camera& candidate, const Camera& target,
                         double near_depth, double far_depth,
                         int samples_per_axis) {
  // Fraction of target-frustum sample points that land inside the candidate's
  // frustum. Purely angular: no occlusion reasoning.
  int inside = 0;
  int total = 0;
  const int n = samples_per_axis;
  for (int zi = 0; zi < n; ++zi) {
    const double d = near_depth + (far_depth - near_depth) * (zi + 0.5) / n;
    for (int yi = 0; yi < n; ++yi) {
      for (int xi = 0; xi < n; ++xi) {
        const double u = (xi + 0.5) / n * target.intrinsics.width;
        const double v = (yi + 0.5) / n * target.intrinsics.height;
        const Eigen::Vector3d p = unproject(target, u, v, d);
        ++total;
        if (project(candidate, p)) ++inside;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(inside) / total;
}

void save_scores_json(const std::string& path, const ScoreTable& scores,
                      const std::vector<int>& selected) {
  std::vector<ScoreEntry> sorted = scores.entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoreEntry& a, const ScoreEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.view_id < b.view_id;
            });
  Json arr = Json::array();
  for (const ScoreEntry& e : sorted) {
    Json j;
    j["view_id"] = e.view_id;
    j["score"] = e.score;
    j["selected"] = std::find(selected.begin(), selected.end(), e.view_id) !=
                    selected.end();
    arr.push_back(j);
  }
  save_json_file(path, arr);
}

}  // namespace geoloop
