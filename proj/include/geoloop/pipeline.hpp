#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoloop/camera.hpp"
#include "geoloop/geometry_memory.hpp"
#include "geoloop/metrics.hpp"
#include "geoloop/renderer.hpp"
#include "geoloop/retrieval.hpp"
#include "geoloop/rng.hpp"
#include "geoloop/scene_synth.hpp"

namespace geoloop {

// Ordered, non-empty chunks partitioning the trajectory.
struct SegmentPlan {
  std::vector<std::vector<Camera>> segments;
};

// ceil(|trajectory| / seg_len) segments, the last possibly short. Throws
// SchemaError on an empty trajectory or seg_len < 1.
SegmentPlan plan_segments(const std::vector<Camera>& trajectory, int seg_len);

// Everything handed to the generator for one segment: the retrieved
// reference frames and, per target camera, the memory rendering (color,
// visibility mask, depth, source indices) at assembly time.
struct ConditioningBundle {
  std::vector<const CaptureFrame*> refs;  // |refs| <= k
  std::vector<Camera> targets;
  std::vector<RenderOutput> renders;  // one per target
};

struct GeneratorResult {
  std::vector<ImageRGB> frames;  // exactly one per target camera
  // Either empty (the loop falls back to memory-rendered depth) or one map
  // per target; 0 marks pixels without geometry.
  std::vector<DepthMap> depths;
};

class GeneratorInterface {
 public:
  virtual ~GeneratorInterface() = default;
  virtual std::string name() const = 0;
  virtual GeneratorResult generate(const ConditioningBundle& bundle) = 0;
};

// Ray-casts the synthetic scene at the target cameras: exact frames and
// depth, so loop error reduces to splat resampling.
class OracleGenerator : public GeneratorInterface {
 public:
  explicit OracleGenerator(const SyntheticScene& scene, int threads = 1)
      : scene_(&scene), threads_(threads) {}
  std::string name() const override { return "oracle"; }
  GeneratorResult generate(const ConditioningBundle& bundle) override;

 private:
  const SyntheticScene* scene_;
  int threads_;
};

// Oracle plus Gaussian pixel noise (sigma in 8-bit units) and random dropout
// holes (color zeroed, depth set to 0 so the hole never enters the memory).
class DegradedOracleGenerator : public GeneratorInterface {
 public:
  DegradedOracleGenerator(const SyntheticScene& scene, double noise_sigma,
                          double dropout_fraction, std::uint64_t seed,
                          int threads = 1);
  std::string name() const override { return "degraded-oracle"; }
  GeneratorResult generate(const ConditioningBundle& bundle) override;

 private:
  OracleGenerator base_;
  double noise_sigma_;
  double dropout_fraction_;
  Rng rng_;
};

struct LoopOptions {
  int k = 3;            // refs retrieved per segment
  int seg_len = 40;     // targets per generator invocation
  int stride = 1;       // memory pixel subsampling
  int splat_radius = 1;
  bool update_memory = true;    // off = ablation: never fold generated frames in
  bool widen_ref_pool = false;  // allow generated frames as retrieval refs
  ScoreWeighting weighting = ScoreWeighting::kDistinctPoints;
  std::uint64_t seed = 0;  // recorded for the manifest; the loop itself is
                           // deterministic, generators own their noise
  int threads = 1;
};

struct SegmentDiagnostics {
  int segment_index = 0;
  ScoreTable scores;  // full table over every source view in memory
  std::vector<int> selected_view_ids;
  std::vector<int> generated_view_ids;
  double mean_hole_before = 0.0;  // conditioning renders, pre-generation
  double mean_hole_after = 0.0;   // same targets re-rendered post-update
  bool depth_from_memory = false;  // generator returned no depth
};

struct LoopResult {
  std::vector<CaptureFrame> generated;  // one per trajectory camera, in order
  GeoMemory memory;
  ViewBank bank;  // original captures plus all generated frames
  std::vector<SegmentDiagnostics> diagnostics;
  // Wall time per segment. Kept out of diagnostics JSON so reruns stay
  // byte-identical; the CLI reports it via the manifest only.
  std::vector<double> segment_seconds;
};

// The closed generation loop. Initializes memory from the bank, then per
// segment: scores views against current memory, retrieves top-k refs
// (restricted to the original captures unless widen_ref_pool), renders
// conditioning, invokes the generator, extends the bank with the generated
// frames (fresh view ids: 1 + max existing id, consecutive in trajectory
// order) and rebuilds memory unless update_memory is off.
// Throws GeneratorContractError when the generator returns a wrong frame
// count or mismatched dimensions.
LoopResult run_loop(const ViewBank& initial_bank,
                    const std::vector<Camera>& trajectory,
                    GeneratorInterface& generator, const LoopOptions& options);

// Conditioning layouts over an n-frame trajectory (0-based indices):
// interpolation spans it ({0, n/2, n-1}), extrapolation covers only its head
// ({0, n/4, n/2, 3n/4}). For n = 40: {0, 20, 39} and {0, 10, 20, 30}.
enum class ConditioningLayout { kInterpolation, kExtrapolation };
std::vector<int> conditioning_frames(ConditioningLayout layout, int num_frames);

struct ScenarioResult {
  LoopResult loop;
  EvalSummary eval;  // generated frames vs ray-cast ground truth
};

// End-to-end harness: captures the conditioning frames of the trajectory,
// runs the loop over all of it, and scores the generated frames against
// direct ray casts.
ScenarioResult run_scenario(const SyntheticScene& scene,
                            const std::vector<Camera>& trajectory,
                            const std::vector<int>& conditioning,
                            GeneratorInterface& generator,
                            const LoopOptions& options);

// Deterministic JSON: per-segment scores, selections, hole fractions, plus
// final memory stats. Excludes timing (see LoopResult::segment_seconds).
void save_diagnostics_json(const std::string& path, const LoopResult& result);

}  // namespace geoloop
