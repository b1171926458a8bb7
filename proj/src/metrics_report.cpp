#include "geoloop/metrics_report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"

namespace geoloop {

namespace {

double vec_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

Report aggregate(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw SchemaError("aggregate: no runs");

  std::map<std::string, std::size_t> scenario_frames;
  std::map<std::pair<std::string, std::string>, bool> seen;
  Report report;
  for (const RunSummary& run : runs) {
    if (run.frames.empty()) {
      throw SchemaError("aggregate: run " + run.scenario + "/" + run.label +
                        " has no frames");
    }
    auto [it, inserted] = scenario_frames.emplace(run.scenario,
                                                  run.frames.size());
    if (!inserted && it->second != run.frames.size()) {
      throw SchemaError("aggregate: scenario " + run.scenario +
                        " mixes runs with " + std::to_string(it->second) +
                        " and " + std::to_string(run.frames.size()) +
                        " frames");
    }
    if (!seen.emplace(std::make_pair(run.scenario, run.label), true).second) {
      throw SchemaError("aggregate: duplicate row " + run.scenario + "/" +
                        run.label);
    }
    if (run.time_s < 0.0) {
      throw SchemaError("aggregate: negative wall time in " + run.scenario +
                        "/" + run.label);
    }

    ReportRow row;
    row.scenario = run.scenario;
    row.label = run.label;
    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    for (const FrameScore& fs : run.frames) {
      if (!std::isfinite(fs.psnr) || !std::isfinite(fs.ssim)) {
        throw SchemaError("aggregate: non-finite metric in " + run.scenario +
                          "/" + run.label);
      }
      psnr_sum += std::min(fs.psnr, 99.0);
      ssim_sum += fs.ssim;
    }
    row.psnr = psnr_sum / static_cast<double>(run.frames.size());
    row.ssim = ssim_sum / static_cast<double>(run.frames.size());
    row.time_s = run.time_s;
    row.hole_frac = vec_mean(run.hole_fractions);
    row.top1_score = vec_mean(run.top1_scores);
    report.rows.push_back(std::move(row));
  }

  std::sort(report.rows.begin(), report.rows.end(),
            [](const ReportRow& a, const ReportRow& b) {
              if (a.scenario != b.scenario) return a.scenario < b.scenario;
              return a.label < b.label;
            });

  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    std::size_t base = i;
    while (base > 0 &&
           report.rows[base - 1].scenario == report.rows[i].scenario) {
      --base;
    }
    report.rows[i].psnr_diff = report.rows[i].psnr - report.rows[base].psnr;
    report.rows[i].ssim_diff = report.rows[i].ssim - report.rows[base].ssim;
  }
  return report;
}

RunSummary load_run_summary(const std::string& run_dir,
                            const std::string& scenario,
                            const std::string& label) {
  RunSummary run;
  run.scenario = scenario;
  run.label = label;

  const std::string metrics_path = run_dir + "/metrics.csv";
  std::ifstream in(metrics_path);
  if (!in) throw IoError("cannot read " + metrics_path);
  std::string line;
  if (!std::getline(in, line) || line != "frame,psnr,ssim") {
    throw SchemaError(metrics_path + ": expected header frame,psnr,ssim");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string frame_s, psnr_s, ssim_s;
    if (!std::getline(ss, frame_s, ',') || !std::getline(ss, psnr_s, ',') ||
        !std::getline(ss, ssim_s)) {
      throw SchemaError(metrics_path + ": malformed row '" + line + "'");
    }
    FrameScore fs;
    try {
      fs.psnr = std::stod(psnr_s);
      fs.ssim = std::stod(ssim_s);
    } catch (const std::exception&) {
      throw SchemaError(metrics_path + ": non-numeric row '" + line + "'");
    }
    run.frames.push_back(fs);
  }

  const Json diag = load_json_file(run_dir + "/diagnostics.json");
  if (!diag.contains("segments") || !diag["segments"].is_array()) {
    throw SchemaError(run_dir + "/diagnostics.json: missing segments array");
  }
  for (const Json& seg : diag["segments"]) {
    run.hole_fractions.push_back(seg.at("mean_hole_before").get<double>());
    double top1 = 0.0;
    const Json& selected = seg.at("selected");
    if (!selected.empty()) {
      const int best_id = selected.at(0).get<int>();
      for (const Json& entry : seg.at("scores")) {
        if (entry.at("view_id").get<int>() == best_id) {
          top1 = entry.at("score").get<double>();
          break;
        }
      }
    }
    run.top1_scores.push_back(top1);
  }

  const Json manifest = load_json_file(run_dir + "/manifest.json");
  if (manifest.contains("timings") &&
      manifest["timings"].contains("total_seconds")) {
    run.time_s = manifest["timings"]["total_seconds"].get<double>();
  }
  return run;
}

void save_report_csv(const std::string& path, const Report& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(12);
  out << "scenario,label,psnr,ssim,time_s,hole_frac,top1_score\n";
  for (const ReportRow& r : report.rows) {
    out << r.scenario << "," << r.label << "," << r.psnr << "," << r.ssim
        << "," << r.time_s << "," << r.hole_frac << "," << r.top1_score
        << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_report_json(const std::string& path, const Report& report) {
  Json rows = Json::array();
  for (const ReportRow& r : report.rows) {
    rows.push_back({{"scenario", r.scenario},
                    {"label", r.label},
                    {"psnr", r.psnr},
                    {"ssim", r.ssim},
                    {"time_s", r.time_s},
                    {"hole_frac", r.hole_frac},
                    {"top1_score", r.top1_score},
                    {"psnr_diff", r.psnr_diff},
                    {"ssim_diff", r.ssim_diff},
                    {"lpips", nullptr}});
  }
  Json j;
  j["rows"] = rows;
  j["lpips_reason"] =
      "not computed: requires a learned perceptual model, out of scope";
  save_json_file(path, j);
}

}  // namespace geoloop
