#include "geoloop/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"
#include "geoloop/parallel.hpp"

namespace geoloop {

SegmentPlan plan_segments(const std::vector<Camera>& trajectory, int seg_len) {
  if (trajectory.empty()) throw SchemaError("plan_segments: empty trajectory");
  if (seg_len < 1) throw SchemaError("plan_segments: seg_len must be >= 1");
  SegmentPlan plan;
  for (std::size_t pos = 0; pos < trajectory.size();
       pos += static_cast<std::size_t>(seg_len)) {
    const std::size_t end =
        std::min(trajectory.size(), pos + static_cast<std::size_t>(seg_len));
    plan.segments.emplace_back(trajectory.begin() + static_cast<long>(pos),
                               trajectory.begin() + static_cast<long>(end));
  }
  return plan;
}

GeneratorResult OracleGenerator::generate(const ConditioningBundle& bundle) {
  GeneratorResult result;
  result.frames.resize(bundle.targets.size());
  result.depths.resize(bundle.targets.size());
  for (std::size_t i = 0; i < bundle.targets.size(); ++i) {
    CaptureFrame frame = raycast(*scene_, bundle.targets[i], threads_);
    result.frames[i] = std::move(frame.color);
    result.depths[i] = std::move(frame.depth);
  }
  return result;
}

DegradedOracleGenerator::DegradedOracleGenerator(const SyntheticScene& scene,
                                                 double noise_sigma,
                                                 double dropout_fraction,
                                                 std::uint64_t seed,
                                                 int threads)
    : base_(scene, threads),
      noise_sigma_(noise_sigma),
      dropout_fraction_(dropout_fraction),
      rng_(Rng(seed).substream("degraded_oracle")) {
  if (noise_sigma_ < 0.0 || dropout_fraction_ < 0.0 || dropout_fraction_ > 1.0) {
    throw SchemaError("degraded oracle: bad noise sigma or dropout fraction");
  }
}

GeneratorResult DegradedOracleGenerator::generate(
    const ConditioningBundle& bundle) {
  GeneratorResult result = base_.generate(bundle);
  for (std::size_t f = 0; f < result.frames.size(); ++f) {
    ImageRGB& img = result.frames[f];
    DepthMap& depth = result.depths[f];
    for (std::uint8_t& v : img.data) {
      const double noisy = v + rng_.normal(0.0, noise_sigma_);
      v = static_cast<std::uint8_t>(std::clamp(noisy, 0.0, 255.0));
    }
    for (std::size_t p = 0; p < img.pixels(); ++p) {
      if (rng_.uniform() < dropout_fraction_) {
        img.data[3 * p] = 0;
        img.data[3 * p + 1] = 0;
        img.data[3 * p + 2] = 0;
        depth.data[p] = 0.0f;
      }
    }
  }
  return result;
}

namespace {

double mean_hole(const std::vector<double>& holes) {
  double sum = 0.0;
  for (double h : holes) sum += h;
  return holes.empty() ? 0.0 : sum / static_cast<double>(holes.size());
}

DepthMap depth_from_render(const RenderOutput& render) {
  DepthMap d(render.width, render.height, 0.0f);
  for (std::size_t i = 0; i < d.data.size(); ++i) {
    if (render.mask[i]) d.data[i] = static_cast<float>(render.depth[i]);
  }
  return d;
}

}  // namespace

LoopResult run_loop(const ViewBank& initial_bank,
                    const std::vector<Camera>& trajectory,
                    GeneratorInterface& generator, const LoopOptions& options) {
  if (initial_bank.empty()) throw SchemaError("run_loop: empty view bank");
  if (trajectory.empty()) throw SchemaError("run_loop: empty trajectory");
  if (options.k < 1) throw SchemaError("run_loop: k must be >= 1");
  if (options.splat_radius < 0) {
    throw SchemaError("run_loop: splat_radius must be >= 0");
  }

  LoopResult result;
  result.bank = initial_bank;
  result.memory = init_from_captures(result.bank, options.stride);

  const SegmentPlan plan = plan_segments(trajectory, options.seg_len);

  std::vector<int> capture_ids = initial_bank.view_ids();
  std::sort(capture_ids.begin(), capture_ids.end());

  int next_id = 0;
  for (int id : capture_ids) next_id = std::max(next_id, id + 1);
  for (const Camera& cam : trajectory) {
    next_id = std::max(next_id, cam.view_id + 1);
  }

  result.generated.reserve(trajectory.size());

  for (std::size_t si = 0; si < plan.segments.size(); ++si) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::vector<Camera>& targets = plan.segments[si];
    const int n_targets = static_cast<int>(targets.size());

    SegmentDiagnostics diag;
    diag.segment_index = static_cast<int>(si);
    diag.scores = score_segment(result.memory, targets, options.splat_radius,
                                options.weighting);

    ScoreTable pool;
    if (options.widen_ref_pool) {
      pool = diag.scores;
    } else {
      for (const ScoreEntry& e : diag.scores.entries) {
        if (std::binary_search(capture_ids.begin(), capture_ids.end(),
                               e.view_id)) {
          pool.entries.push_back(e);
        }
      }
    }
    diag.selected_view_ids = select_topk(pool, options.k);

    ConditioningBundle bundle;
    bundle.targets = targets;
    for (int id : diag.selected_view_ids) {
      const CaptureFrame* ref = result.bank.find(id);
      if (!ref) throw SchemaError("run_loop: selected view " +
                                  std::to_string(id) + " missing from bank");
      bundle.refs.push_back(ref);
    }
    bundle.renders.resize(targets.size());
    parallel_for(0, n_targets, options.threads, [&](int j) {
      bundle.renders[static_cast<std::size_t>(j)] = render_points(
          result.memory, targets[static_cast<std::size_t>(j)],
          options.splat_radius);
    });
    {
      std::vector<double> holes(targets.size());
      for (std::size_t j = 0; j < targets.size(); ++j) {
        holes[j] = hole_fraction(bundle.renders[j]);
      }
      diag.mean_hole_before = mean_hole(holes);
    }

    GeneratorResult gen = generator.generate(bundle);
    if (gen.frames.size() != targets.size()) {
      throw GeneratorContractError(
          "segment " + std::to_string(si) + ": generator returned " +
          std::to_string(gen.frames.size()) + " frames, expected " +
          std::to_string(targets.size()));
    }
    if (!gen.depths.empty() && gen.depths.size() != targets.size()) {
      throw GeneratorContractError(
          "segment " + std::to_string(si) + ": generator returned " +
          std::to_string(gen.depths.size()) + " depth maps, expected 0 or " +
          std::to_string(targets.size()));
    }
    diag.depth_from_memory = gen.depths.empty();

    for (std::size_t j = 0; j < targets.size(); ++j) {
      const Camera& cam = targets[j];
      ImageRGB& color = gen.frames[j];
      if (color.width != cam.intrinsics.width ||
          color.height != cam.intrinsics.height) {
        throw GeneratorContractError(
            "segment " + std::to_string(si) + " frame " + std::to_string(j) +
            ": generated " + std::to_string(color.width) + "x" +
            std::to_string(color.height) + ", target is " +
            std::to_string(cam.intrinsics.width) + "x" +
            std::to_string(cam.intrinsics.height));
      }
      CaptureFrame frame;
      frame.camera = cam;
      frame.camera.view_id = next_id++;
      frame.color = std::move(color);
      if (!gen.depths.empty()) {
        DepthMap& d = gen.depths[j];
        if (d.width != cam.intrinsics.width ||
            d.height != cam.intrinsics.height) {
          throw GeneratorContractError("segment " + std::to_string(si) +
                                       " frame " + std::to_string(j) +
                                       ": depth dimension mismatch");
        }
        frame.depth = std::move(d);
      } else {
        frame.depth = depth_from_render(bundle.renders[j]);
      }
      diag.generated_view_ids.push_back(frame.camera.view_id);
      result.generated.push_back(frame);
      result.bank.add(std::move(frame));
    }

    if (options.update_memory) {
      result.memory = update_memory(result.memory, result.bank);
    }

    {
      std::vector<double> holes(targets.size());
      parallel_for(0, n_targets, options.threads, [&](int j) {
        const RenderOutput render = render_points(
            result.memory, targets[static_cast<std::size_t>(j)],
            options.splat_radius);
        holes[static_cast<std::size_t>(j)] = hole_fraction(render);
      });
      diag.mean_hole_after = mean_hole(holes);
    }

    result.diagnostics.push_back(std::move(diag));
    result.segment_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count());
  }
  return result;
}

std::vector<int> conditioning_frames(ConditioningLayout layout,
                                     int num_frames) {
  if (num_frames < 1) {
    throw SchemaError("conditioning_frames: need at least one frame");
  }
  std::vector<int> idx;
  if (layout == ConditioningLayout::kInterpolation) {
    idx = {0, num_frames / 2, num_frames - 1};
  } else {
    idx = {0, num_frames / 4, num_frames / 2, (3 * num_frames) / 4};
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

ScenarioResult run_scenario(const SyntheticScene& scene,
                            const std::vector<Camera>& trajectory,
                            const std::vector<int>& conditioning,
                            GeneratorInterface& generator,
                            const LoopOptions& options) {
  if (conditioning.empty()) {
    throw SchemaError("run_scenario: no conditioning frames");
  }
  std::vector<int> frames = conditioning;
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  for (int f : frames) {
    if (f < 0 || f >= static_cast<int>(trajectory.size())) {
      throw SchemaError("run_scenario: conditioning frame " +
                        std::to_string(f) + " outside the trajectory");
    }
  }

  ViewBank bank;
  for (int f : frames) {
    bank.add(raycast(scene, trajectory[static_cast<std::size_t>(f)],
                     options.threads));
  }

  ScenarioResult sr;
  sr.loop = run_loop(bank, trajectory, generator, options);

  std::vector<ImageRGB> gen_colors;
  std::vector<ImageRGB> gt_colors;
  gen_colors.reserve(trajectory.size());
  gt_colors.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    gen_colors.push_back(sr.loop.generated[i].color);
    gt_colors.push_back(raycast(scene, trajectory[i], options.threads).color);
  }
  sr.eval = evaluate(gen_colors, gt_colors);
  return sr;
}

void save_diagnostics_json(const std::string& path, const LoopResult& result) {
  Json segments = Json::array();
  for (const SegmentDiagnostics& d : result.diagnostics) {
    Json scores = Json::array();
    for (const ScoreEntry& e : d.scores.entries) {
      scores.push_back({{"view_id", e.view_id}, {"score", e.score}});
    }
    segments.push_back({{"segment_index", d.segment_index},
                        {"scores", scores},
                        {"selected", d.selected_view_ids},
                        {"generated_view_ids", d.generated_view_ids},
                        {"mean_hole_before", d.mean_hole_before},
                        {"mean_hole_after", d.mean_hole_after},
                        {"depth_from_memory", d.depth_from_memory}});
  }
  Json j;
  j["segments"] = segments;
  j["final_point_count"] = result.memory.points.size();
  j["generation_counter"] = result.memory.generation_counter;
  j["bank_view_ids"] = result.bank.view_ids();
  save_json_file(path, j);
}

}  // namespace geoloop
