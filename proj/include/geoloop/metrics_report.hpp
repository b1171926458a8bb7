#pragma once

#include <string>
#include <vector>

#include "geoloop/metrics.hpp"

namespace geoloop {

// One run of the loop, ready for aggregation. Frames carry per-frame
// metrics so means can be re-derived instead of trusted.
struct RunSummary {
  std::string scenario;
  std::string label;
  std::vector<FrameScore> frames;
  double time_s = 0.0;
  std::vector<double> hole_fractions;  // per segment, conditioning renders
  std::vector<double> top1_scores;     // per segment, best selected score
};

struct ReportRow {
  std::string scenario;
  std::string label;
  double psnr = 0.0;
  double ssim = 0.0;
  double time_s = 0.0;
  double hole_frac = 0.0;
  double top1_score = 0.0;
  // Deltas against the scenario's first row (by label order); 0 for the
  // baseline row itself. JSON-only; the CSV keeps its fixed header.
  double psnr_diff = 0.0;
  double ssim_diff = 0.0;
};

struct Report {
  std::vector<ReportRow> rows;  // sorted by (scenario, label)
};

// Pure fold over runs: one row per (scenario, label), means re-summed from
// the per-frame values, rows sorted by scenario then label. Throws
// SchemaError when runs within one scenario disagree on frame count or a
// (scenario, label) pair repeats.
Report aggregate(const std::vector<RunSummary>& runs);

// Reads one run directory produced by the loop command: metrics.csv
// (frame,psnr,ssim), diagnostics.json, and manifest.json (wall time; 0 when
// the manifest carries no timings).
RunSummary load_run_summary(const std::string& run_dir,
                            const std::string& scenario,
                            const std::string& label);

// Fixed header: scenario,label,psnr,ssim,time_s,hole_frac,top1_score.
void save_report_csv(const std::string& path, const Report& report);

// Rows plus the diff columns; carries an explicit null "lpips" entry with
// the reason (needs a learned perceptual model) so the schema stays stable.
void save_report_json(const std::string& path, const Report& report);

}  // namespace geoloop
