#pragma once

#include <string>
#include <vector>

#include "geoloop/renderer.hpp"

namespace geoloop {

// Memory points that win at least one pixel under the target cameras
// (union over the segment). Indices are sorted and unique.
struct VisibleSet {
  std::vector<int> point_indices;
  bool empty() const { return point_indices.empty(); }
  std::size_t size() const { return point_indices.size(); }
};

struct ScoreEntry {
  int view_id = -1;
  double score = 0.0;
};

// Per-view contribution scores; entries sorted by view_id. Scores sum to 1
// whenever the visible set is nonempty (every visible point has exactly one
// source view).
struct ScoreTable {
  std::vector<ScoreEntry> entries;
  double score_of(int view_id) const;
};

enum class ScoreWeighting {
  kDistinctPoints,  // |visible ∩ S_i| / |visible| over distinct point indices
  kPixelWeighted,   // pixels won by view i / total covered pixels
};

VisibleSet visible_set(const GeoMemory& mem, const std::vector<Camera>& cams,
                       int splat_radius);

// Contribution score of each source view: the fraction of target-visible
// points attributed to it. Empty visible set scores every view 0.
ScoreTable score_views(const GeoMemory& mem, const VisibleSet& vis);

// Pixel-weighted variant: counts won pixels instead of distinct points.
ScoreTable score_views_pixel_weighted(const GeoMemory& mem,
                                      const std::vector<Camera>& cams,
                                      int splat_radius);

ScoreTable score_segment(const GeoMemory& mem, const std::vector<Camera>& cams,
                         int splat_radius,
                         ScoreWeighting weighting = ScoreWeighting::kDistinctPoints);

// Views sorted by descending score, ties broken by ascending view_id;
// zero-score views are dropped even when fewer than k remain.
std::vector<int> select_topk(const ScoreTable& scores, int k);

// Baseline for comparison tests only: frustum-overlap score that ignores
// occlusion (the heuristic the geometry-driven path is meant to replace).
double fov_overlap_score(const Camera& candidate, const Camera& target,
                         double near_depth = 0.5, double far_depth = 10.0,
                         int samples_per_axis = 8);

// JSON export: [{view_id, score, selected}], sorted by score descending
// (ties by ascending view_id).
void save_scores_json(const std::string& path, const ScoreTable& scores,
                      const std::vector<int>& selected);

}  // namespace geoloop
