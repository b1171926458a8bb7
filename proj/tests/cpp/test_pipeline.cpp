#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"
#include "geoloop/pipeline.hpp"
#include "test_util.hpp"

using namespace geoloop;

namespace {

struct LoopFixture {
  SyntheticScene scene = build_scene(7);
  Intrinsics in = testutil::small_intrinsics(48, 32, 40.0);

  std::vector<Camera> orbit(int frames, int first_id = 0) const {
    return orbit_trajectory(scene, in, frames, first_id);
  }

  ViewBank capture_bank(const std::vector<int>& indices,
                        const std::vector<Camera>& cams) const {
    ViewBank bank;
    for (int i : indices) bank.add(raycast(scene, cams[i], 1));
    return bank;
  }

  LoopOptions options() const {
    LoopOptions opts;
    opts.k = 3;
    opts.seg_len = 4;
    opts.stride = 1;
    opts.splat_radius = 1;
    return opts;
  }
};

// Returns wrong frame counts or dimensions on demand.
class BrokenGenerator : public GeneratorInterface {
 public:
  enum class Fault { kCount, kDims };
  BrokenGenerator(const SyntheticScene& scene, Fault fault)
      : inner_(scene), fault_(fault) {}
  std::string name() const override { return "broken"; }
  GeneratorResult generate(const ConditioningBundle& bundle) override {
    GeneratorResult res = inner_.generate(bundle);
    if (fault_ == Fault::kCount) {
      res.frames.pop_back();
      if (!res.depths.empty()) res.depths.pop_back();
    } else {
      res.frames.back() = ImageRGB(3, 3);
    }
    return res;
  }

 private:
  OracleGenerator inner_;
  Fault fault_;
};

// Oracle that withholds depth, to exercise the conditioning-depth fallback.
class NoDepthGenerator : public GeneratorInterface {
 public:
  explicit NoDepthGenerator(const SyntheticScene& scene) : inner_(scene) {}
  std::string name() const override { return "no-depth"; }
  GeneratorResult generate(const ConditioningBundle& bundle) override {
    GeneratorResult res = inner_.generate(bundle);
    res.depths.clear();
    return res;
  }

 private:
  OracleGenerator inner_;
};

}  // namespace

TEST_CASE("plan_segments splits with a short tail") {
  std::vector<Camera> traj(200);
  for (int i = 0; i < 200; ++i) traj[i].view_id = i;
  const SegmentPlan p200 = plan_segments(traj, 40);
  REQUIRE(p200.segments.size() == 5);
  for (const auto& seg : p200.segments) CHECK(seg.size() == 40);
  CHECK(p200.segments[2][0].view_id == 80);

  traj.resize(41);
  const SegmentPlan p41 = plan_segments(traj, 40);
  REQUIRE(p41.segments.size() == 2);
  CHECK(p41.segments[0].size() == 40);
  CHECK(p41.segments[1].size() == 1);
  CHECK(p41.segments[1][0].view_id == 40);

  traj.resize(1);
  CHECK(plan_segments(traj, 40).segments.size() == 1);

  CHECK_THROWS_AS(plan_segments({}, 40), SchemaError);
  CHECK_THROWS_AS(plan_segments(traj, 0), SchemaError);
}

TEST_CASE("conditioning layouts pick the documented anchor frames") {
  CHECK((conditioning_frames(ConditioningLayout::kInterpolation, 40) ==
         std::vector<int>{0, 20, 39}));
  CHECK((conditioning_frames(ConditioningLayout::kExtrapolation, 40) ==
         std::vector<int>{0, 10, 20, 30}));
  CHECK((conditioning_frames(ConditioningLayout::kInterpolation, 3) ==
         std::vector<int>{0, 1, 2}));
  CHECK((conditioning_frames(ConditioningLayout::kInterpolation, 1) ==
         std::vector<int>{0}));
  CHECK_THROWS_AS(conditioning_frames(ConditioningLayout::kInterpolation, 0),
                  SchemaError);
}

TEST_CASE("the loop generates every trajectory frame and grows the bank") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(8);
  const ViewBank bank = fx.capture_bank({0, 4, 7}, traj);
  OracleGenerator gen(fx.scene);
  const LoopResult result = run_loop(bank, traj, gen, fx.options());

  REQUIRE(result.generated.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(result.generated[i].camera.view_id >= 8);  // fresh ids
    CHECK(result.generated[i].color.width == fx.in.width);
  }
  // Fresh ids: 1 + max existing (7) = 8, consecutive.
  for (int i = 0; i < 8; ++i) {
    CHECK(result.generated[i].camera.view_id == 8 + i);
  }
  CHECK(result.bank.size() == 3 + 8);
  REQUIRE(result.diagnostics.size() == 2);
  CHECK(result.diagnostics[0].segment_index == 0);
  CHECK((result.diagnostics[0].generated_view_ids ==
         std::vector<int>{8, 9, 10, 11}));
  CHECK(result.memory.generation_counter == 2);
  CHECK(result.segment_seconds.size() == 2);

  // Selected refs come from the original captures by default.
  for (const SegmentDiagnostics& d : result.diagnostics) {
    CHECK(d.selected_view_ids.size() <= 3);
    for (int id : d.selected_view_ids) {
      CHECK((id == 0 || id == 4 || id == 7));
    }
    CHECK_FALSE(d.depth_from_memory);
  }
}

TEST_CASE("the loop is deterministic end to end") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(8);
  const ViewBank bank = fx.capture_bank({0, 7}, traj);
  OracleGenerator gen(fx.scene);
  const LoopResult a = run_loop(bank, traj, gen, fx.options());
  const LoopResult b = run_loop(bank, traj, gen, fx.options());
  REQUIRE(a.generated.size() == b.generated.size());
  for (std::size_t i = 0; i < a.generated.size(); ++i) {
    CHECK(a.generated[i].color.data == b.generated[i].color.data);
    CHECK(a.generated[i].depth.data == b.generated[i].depth.data);
  }
  CHECK(a.memory.points.size() == b.memory.points.size());
  const std::string dir = testutil::temp_dir("diag");
  save_diagnostics_json(dir + "/a.json", a);
  save_diagnostics_json(dir + "/b.json", b);
  CHECK(load_json_file(dir + "/a.json") == load_json_file(dir + "/b.json"));
}

TEST_CASE("a generator returning the wrong frame count is rejected") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(8);
  const ViewBank bank = fx.capture_bank({0, 7}, traj);
  BrokenGenerator bad_count(fx.scene, BrokenGenerator::Fault::kCount);
  CHECK_THROWS_AS(run_loop(bank, traj, bad_count, fx.options()),
                  GeneratorContractError);
  BrokenGenerator bad_dims(fx.scene, BrokenGenerator::Fault::kDims);
  CHECK_THROWS_AS(run_loop(bank, traj, bad_dims, fx.options()),
                  GeneratorContractError);
}

TEST_CASE("k larger than the bank selects every contributing view") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(8);
  const ViewBank bank = fx.capture_bank({0, 4}, traj);
  OracleGenerator gen(fx.scene);
  LoopOptions opts = fx.options();
  opts.k = 10;
  const LoopResult result = run_loop(bank, traj, gen, opts);
  CHECK(result.diagnostics[0].selected_view_ids.size() <= 2);
  CHECK_FALSE(result.diagnostics[0].selected_view_ids.empty());
}

TEST_CASE("a depth-less generator falls back to conditioning depth") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(8);
  const ViewBank bank = fx.capture_bank({0, 4, 7}, traj);
  NoDepthGenerator gen(fx.scene);
  const LoopResult result = run_loop(bank, traj, gen, fx.options());
  REQUIRE(result.generated.size() == 8);
  for (const SegmentDiagnostics& d : result.diagnostics) {
    CHECK(d.depth_from_memory);
  }
  CHECK(result.memory.generation_counter == 2);
  CHECK(result.memory.points.size() > 0);
}

TEST_CASE("memory updates reduce the next segment's conditioning holes") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(16);
  const ViewBank bank = fx.capture_bank({0, 8, 15}, traj);
  OracleGenerator gen(fx.scene);
  LoopOptions with = fx.options();
  with.seg_len = 8;
  LoopOptions without = with;
  without.update_memory = false;

  const LoopResult updated = run_loop(bank, traj, gen, with);
  const LoopResult frozen = run_loop(bank, traj, gen, without);
  REQUIRE(updated.diagnostics.size() == 2);
  REQUIRE(frozen.diagnostics.size() == 2);
  // Segment 0 sees identical conditioning either way.
  CHECK(updated.diagnostics[0].mean_hole_before ==
        doctest::Approx(frozen.diagnostics[0].mean_hole_before));
  // Segment 1 benefits strictly from the folded-in frames.
  CHECK(updated.diagnostics[1].mean_hole_before <
        frozen.diagnostics[1].mean_hole_before);
  CHECK(frozen.memory.generation_counter == 0);
  CHECK(frozen.memory.points.size() < updated.memory.points.size());
}

TEST_CASE("widening the reference pool admits generated views") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(16);
  const ViewBank bank = fx.capture_bank({0}, traj);
  OracleGenerator gen(fx.scene);
  LoopOptions opts = fx.options();
  opts.seg_len = 8;
  opts.widen_ref_pool = true;
  const LoopResult result = run_loop(bank, traj, gen, opts);
  REQUIRE(result.diagnostics.size() == 2);
  bool saw_generated_ref = false;
  for (int id : result.diagnostics[1].selected_view_ids) {
    saw_generated_ref = saw_generated_ref || id > 0;
  }
  CHECK(saw_generated_ref);

  LoopOptions narrow = opts;
  narrow.widen_ref_pool = false;
  const LoopResult strict = run_loop(bank, traj, gen, narrow);
  for (int id : strict.diagnostics[1].selected_view_ids) CHECK(id == 0);
}

TEST_CASE("run_scenario reconstructs the oracle trajectory nearly exactly") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(8);
  const std::vector<int> conditioning =
      conditioning_frames(ConditioningLayout::kInterpolation, 8);
  OracleGenerator gen(fx.scene);
  const ScenarioResult result =
      run_scenario(fx.scene, traj, conditioning, gen, fx.options());
  REQUIRE(result.eval.frames.size() == 8);
  CHECK(result.eval.mean_psnr >= 30.0);
  CHECK(result.loop.generated.size() == 8);
}

TEST_CASE("diagnostics json captures segments and memory counters") {
  LoopFixture fx;
  const std::vector<Camera> traj = fx.orbit(8);
  const ViewBank bank = fx.capture_bank({0, 7}, traj);
  OracleGenerator gen(fx.scene);
  const LoopResult result = run_loop(bank, traj, gen, fx.options());
  const std::string dir = testutil::temp_dir("diagjson");
  save_diagnostics_json(dir + "/d.json", result);
  const Json j = load_json_file(dir + "/d.json");
  REQUIRE(j.contains("segments"));
  CHECK(j["segments"].size() == 2);
  CHECK(j["final_point_count"].get<int>() ==
        static_cast<int>(result.memory.points.size()));
  CHECK(j["generation_counter"] == 2);
  CHECK_FALSE(j.contains("segment_seconds"));
  const Json& seg = j["segments"][0];
  CHECK(seg.contains("scores"));
  CHECK(seg.contains("selected"));
  CHECK(seg.contains("mean_hole_before"));
  CHECK(seg.contains("mean_hole_after"));
}
