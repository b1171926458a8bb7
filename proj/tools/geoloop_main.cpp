#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <list>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "geoloop/attention_layout.hpp"
#include "geoloop/bank_io.hpp"
#include "geoloop/camera.hpp"
#include "geoloop/distillation.hpp"
#include "geoloop/errors.hpp"
#include "geoloop/geometry_memory.hpp"
#include "geoloop/json_io.hpp"
#include "geoloop/metrics.hpp"
#include "geoloop/metrics_report.hpp"
#include "geoloop/pipeline.hpp"
#include "geoloop/renderer.hpp"
#include "geoloop/retrieval.hpp"
#include "geoloop/scene_synth.hpp"

namespace {

using namespace geoloop;
namespace fs = std::filesystem;

// Per-subcommand JSON config: a flat object keyed by the long flag names
// without dashes. Values fill in options the user did not pass on the
// command line (flags override the file); unknown keys are rejected.
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App* cmd) {
    cmd->add_option("--config", path_, "JSON config file; flags override it");
  }

  template <typename T>
  CLI::Option* bind(CLI::Option* opt, T* target) {
    const std::string key = opt->get_lnames().front();
    entries_[key] = Entry{opt, [target, key](const Json& v) {
                            try {
                              *target = v.get<T>();
                            } catch (const Json::exception&) {
                              throw SchemaError("config key '" + key +
                                                "' has the wrong type");
                            }
                          }};
    return opt;
  }

  void apply() const {
    if (path_.empty()) return;
    const Json j = load_json_file(path_);
    if (!j.is_object()) {
      throw SchemaError(path_ + ": config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
      const auto it = entries_.find(key);
      if (it == entries_.end()) {
        throw SchemaError(path_ + ": unknown config key '" + key + "'");
      }
      if (it->second.opt->count() > 0) continue;
      it->second.set(value);
    }
  }

 private:
  struct Entry {
    CLI::Option* opt = nullptr;
    std::function<void(const Json&)> set;
  };

  std::string path_;
  std::map<std::string, Entry> entries_;
};

std::string one_line(std::string msg) {
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  std::replace(msg.begin(), msg.end(), '\r', ' ');
  return msg;
}

void fail_line(const std::string& kind, const std::string& msg) {
  std::cerr << "error: " << kind << ": " << one_line(msg) << "\n";
}

std::string resolve_out_dir(std::string out) {
  if (out.empty()) {
    if (const char* env = std::getenv("GEOLOOP_OUT_DIR"); env && *env) {
      out = env;
    }
  }
  if (out.empty()) {
    throw SchemaError("no output directory: pass --out or set GEOLOOP_OUT_DIR");
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create directory " + out + ": " + ec.message());
  return out;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("GEOLOOP_THREADS"); env && *env) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

// Wall-clock timings live only here, so every other artifact of a rerun is
// byte-identical.
void write_manifest(const std::string& dir, const std::string& command,
                    const Json& config, const Json& timings) {
  Json m;
  m["tool"] = "geoloop";
  m["version"] = GEOLOOP_VERSION;
  m["command"] = command;
  m["config"] = config;
  m["timings"] = timings;
  save_json_file(dir + "/manifest.json", m);
}

Intrinsics make_intrinsics(int width, int height, double fx, double fy,
                           double cx, double cy) {
  Intrinsics intr;
  intr.width = width;
  intr.height = height;
  intr.fx = fx;
  intr.fy = fy;
  intr.cx = cx < 0.0 ? (width - 1) / 2.0 : cx;
  intr.cy = cy < 0.0 ? (height - 1) / 2.0 : cy;
  if (!intr.valid()) throw SchemaError("invalid camera intrinsics");
  return intr;
}

std::vector<std::string> list_images_recursive(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
  std::vector<std::string> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".ppm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

struct LoopCliOptions {
  std::string scene_path;
  std::string trajectory_path;
  std::string bank_dir;
  std::string layout = "interpolation";
  std::string generator = "oracle";
  std::string weighting = "distinct";
  std::string out;
  LoopOptions loop;
  double noise_sigma = 5.0;
  double dropout = 0.05;
  bool eval = true;
  bool ppm = false;
};

void save_loop_outputs(const std::string& out, const LoopResult& result,
                       int seg_len, bool ppm) {
  std::vector<Camera> generated_cams;
  generated_cams.reserve(result.generated.size());
  for (std::size_t i = 0; i < result.generated.size(); ++i) {
    const int seg = static_cast<int>(i) / seg_len;
    std::ostringstream dir;
    dir << out << "/seg" << std::setw(2) << std::setfill('0') << seg;
    std::error_code ec;
    fs::create_directories(dir.str(), ec);
    if (ec) throw IoError("cannot create directory " + dir.str());
    std::ostringstream base;
    base << dir.str() << "/frame_" << std::setw(4) << std::setfill('0') << i;
    write_image(base.str() + (ppm ? ".ppm" : ".png"),
                result.generated[i].color);
    write_depth(base.str() + ".depth", result.generated[i].depth);
    generated_cams.push_back(result.generated[i].camera);
  }
  save_trajectory(out + "/generated_cameras.json", generated_cams);
  save_ply(out + "/memory.ply", result.memory);
  save_diagnostics_json(out + "/diagnostics.json", result);
}

void run_loop_cmd(const LoopCliOptions& cli) {
  const std::string out = resolve_out_dir(cli.out);
  const Stopwatch watch;

  const SyntheticScene scene = load_scene_json(cli.scene_path);
  const std::vector<Camera> trajectory = load_trajectory(cli.trajectory_path);
  if (trajectory.empty()) {
    throw SchemaError(cli.trajectory_path + ": empty trajectory");
  }

  LoopOptions opts = cli.loop;
  opts.threads = resolve_threads(opts.threads);
  opts.weighting = cli.weighting == "pixels" ? ScoreWeighting::kPixelWeighted
                                             : ScoreWeighting::kDistinctPoints;

  std::unique_ptr<GeneratorInterface> generator;
  if (cli.generator == "oracle") {
    generator = std::make_unique<OracleGenerator>(scene, opts.threads);
  } else {
    generator = std::make_unique<DegradedOracleGenerator>(
        scene, cli.noise_sigma, cli.dropout, opts.seed, opts.threads);
  }

  LoopResult result;
  EvalSummary eval;
  bool have_eval = false;
  if (!cli.bank_dir.empty()) {
    const ViewBank bank = load_bank_dir(cli.bank_dir);
    result = run_loop(bank, trajectory, *generator, opts);
    if (cli.eval) {
      std::vector<ImageRGB> gen_colors, gt_colors;
      for (std::size_t i = 0; i < trajectory.size(); ++i) {
        gen_colors.push_back(result.generated[i].color);
        gt_colors.push_back(raycast(scene, trajectory[i], opts.threads).color);
      }
      eval = evaluate(gen_colors, gt_colors);
      have_eval = true;
    }
  } else {
    const ConditioningLayout layout = cli.layout == "extrapolation"
                                          ? ConditioningLayout::kExtrapolation
                                          : ConditioningLayout::kInterpolation;
    const std::vector<int> conditioning =
        conditioning_frames(layout, static_cast<int>(trajectory.size()));
    ScenarioResult sr =
        run_scenario(scene, trajectory, conditioning, *generator, opts);
    result = std::move(sr.loop);
    eval = std::move(sr.eval);
    have_eval = cli.eval;
  }

  save_loop_outputs(out, result, opts.seg_len, cli.ppm);
  if (have_eval) {
    save_eval_csv(out + "/metrics.csv", eval);
    save_eval_json(out + "/metrics.json", eval);
  }

  Json config;
  config["scene"] = cli.scene_path;
  config["trajectory"] = cli.trajectory_path;
  config["bank"] = cli.bank_dir;
  config["layout"] = cli.layout;
  config["generator"] = cli.generator;
  config["weighting"] = cli.weighting;
  config["k"] = opts.k;
  config["seg-len"] = opts.seg_len;
  config["stride"] = opts.stride;
  config["splat-radius"] = opts.splat_radius;
  config["update-memory"] = opts.update_memory;
  config["widen-ref-pool"] = opts.widen_ref_pool;
  config["noise-sigma"] = cli.noise_sigma;
  config["dropout"] = cli.dropout;
  config["eval"] = cli.eval;
  config["seed"] = opts.seed;
  config["threads"] = opts.threads;
  Json timings;
  timings["total_seconds"] = watch.seconds();
  timings["segment_seconds"] = result.segment_seconds;
  write_manifest(out, "run-loop", config, timings);

  std::cout << "run-loop: " << result.generated.size() << " frames in "
            << result.diagnostics.size() << " segments, "
            << result.memory.points.size() << " memory points";
  if (have_eval) {
    std::cout << ", mean PSNR " << eval.mean_psnr << ", mean SSIM "
              << eval.mean_ssim;
  }
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometry-memory view generation loop tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GEOLOOP_VERSION);
  std::list<ConfigBinder> binders;

  // synth-scene
  std::uint64_t ss_seed = 0;
  std::string ss_out;
  {
    CLI::App* cmd = app.add_subcommand(
        "synth-scene", "generate a procedural box-room scene description");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--seed", ss_seed, "scene seed")
                 ->capture_default_str(),
             &ss_seed);
    cfg.bind(cmd->add_option("--out", ss_out, "output directory"), &ss_out);
    cmd->callback([&cfg, &ss_seed, &ss_out] {
      cfg.apply();
      const std::string out = resolve_out_dir(ss_out);
      const Stopwatch watch;
      const SyntheticScene scene = build_scene(ss_seed);
      save_scene_json(out + "/scene.json", scene);
      Json config;
      config["seed"] = ss_seed;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "synth-scene", config, timings);
      std::cout << "synth-scene: " << scene.boxes.size() << " boxes -> " << out
                << "/scene.json\n";
    });
  }

  // capture
  std::string cap_scene, cap_traj, cap_out;
  int cap_orbit = 0, cap_first_id = 0, cap_width = 224, cap_height = 128;
  double cap_fx = 160.0, cap_fy = 160.0, cap_cx = -1.0, cap_cy = -1.0;
  double cap_radius = 0.55;
  int cap_threads = 0;
  bool cap_ppm = false;
  {
    CLI::App* cmd = app.add_subcommand(
        "capture", "ray-cast ground-truth frames along a camera path");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--scene", cap_scene, "scene JSON")->required(),
             &cap_scene);
    cfg.bind(cmd->add_option("--trajectory", cap_traj,
                             "camera path JSON (omit to build an orbit)"),
             &cap_traj);
    cfg.bind(cmd->add_option("--orbit", cap_orbit,
                             "frame count for a generated orbit"),
             &cap_orbit);
    cfg.bind(cmd->add_option("--first-view-id", cap_first_id,
                             "orbit: first view id")
                 ->capture_default_str(),
             &cap_first_id);
    cfg.bind(cmd->add_option("--width", cap_width, "orbit: image width")
                 ->capture_default_str(),
             &cap_width);
    cfg.bind(cmd->add_option("--height", cap_height, "orbit: image height")
                 ->capture_default_str(),
             &cap_height);
    cfg.bind(cmd->add_option("--fx", cap_fx, "orbit: focal x")
                 ->capture_default_str(),
             &cap_fx);
    cfg.bind(cmd->add_option("--fy", cap_fy, "orbit: focal y")
                 ->capture_default_str(),
             &cap_fy);
    cfg.bind(cmd->add_option("--cx", cap_cx,
                             "orbit: principal x (default center)"),
             &cap_cx);
    cfg.bind(cmd->add_option("--cy", cap_cy,
                             "orbit: principal y (default center)"),
             &cap_cy);
    cfg.bind(cmd->add_option("--radius-scale", cap_radius,
                             "orbit radius scale")
                 ->capture_default_str(),
             &cap_radius);
    cfg.bind(cmd->add_option("--threads", cap_threads, "worker threads"),
             &cap_threads);
    cfg.bind(cmd->add_flag("--ppm", cap_ppm, "write PPM instead of PNG"),
             &cap_ppm);
    cfg.bind(cmd->add_option("--out", cap_out, "output directory"), &cap_out);
    cmd->callback([&] {
      cfg.apply();
      const std::string out = resolve_out_dir(cap_out);
      const Stopwatch watch;
      const SyntheticScene scene = load_scene_json(cap_scene);
      std::vector<Camera> cams;
      if (!cap_traj.empty()) {
        cams = load_trajectory(cap_traj);
      } else {
        if (cap_orbit < 1) {
          throw SchemaError("capture needs --trajectory or --orbit N");
        }
        const Intrinsics intr = make_intrinsics(cap_width, cap_height, cap_fx,
                                                cap_fy, cap_cx, cap_cy);
        cams = orbit_trajectory(scene, intr, cap_orbit, cap_first_id,
                                cap_radius);
      }
      const int threads = resolve_threads(cap_threads);
      std::vector<CaptureFrame> frames;
      frames.reserve(cams.size());
      for (const Camera& cam : cams) {
        frames.push_back(raycast(scene, cam, threads));
      }
      save_bank_dir(out, frames, cap_ppm);
      Json config;
      config["scene"] = cap_scene;
      config["trajectory"] = cap_traj;
      config["orbit"] = cap_orbit;
      config["first-view-id"] = cap_first_id;
      config["radius-scale"] = cap_radius;
      config["threads"] = threads;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "capture", config, timings);
      std::cout << "capture: " << frames.size() << " frames -> " << out
                << "\n";
    });
  }

  // init-memory
  std::string im_bank, im_out;
  int im_stride = 1;
  {
    CLI::App* cmd = app.add_subcommand(
        "init-memory", "back-project a capture directory into a point cloud");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--bank", im_bank, "capture directory")
                 ->required(),
             &im_bank);
    cfg.bind(cmd->add_option("--stride", im_stride, "pixel subsampling stride")
                 ->capture_default_str(),
             &im_stride);
    cfg.bind(cmd->add_option("--out", im_out, "output directory"), &im_out);
    cmd->callback([&] {
      cfg.apply();
      const std::string out = resolve_out_dir(im_out);
      const Stopwatch watch;
      const ViewBank bank = load_bank_dir(im_bank);
      const GeoMemory memory = init_from_captures(bank, im_stride);
      save_ply(out + "/memory.ply", memory);
      Json config;
      config["bank"] = im_bank;
      config["stride"] = im_stride;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "init-memory", config, timings);
      std::cout << "init-memory: " << memory.points.size() << " points -> "
                << out << "/memory.ply\n";
    });
  }

  // render-view
  std::string rv_memory, rv_camera, rv_out;
  int rv_radius = 1;
  bool rv_ppm = false;
  {
    CLI::App* cmd = app.add_subcommand(
        "render-view", "z-buffer splat a memory PLY into one camera");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--memory", rv_memory, "memory PLY")->required(),
             &rv_memory);
    cfg.bind(cmd->add_option("--camera", rv_camera,
                             "camera JSON (single object)")
                 ->required(),
             &rv_camera);
    cfg.bind(cmd->add_option("--splat-radius", rv_radius,
                             "square splat radius")
                 ->capture_default_str(),
             &rv_radius);
    cfg.bind(cmd->add_flag("--ppm", rv_ppm, "write PPM instead of PNG"),
             &rv_ppm);
    cfg.bind(cmd->add_option("--out", rv_out, "output directory"), &rv_out);
    cmd->callback([&] {
      cfg.apply();
      const std::string out = resolve_out_dir(rv_out);
      const Stopwatch watch;
      const GeoMemory memory = load_ply(rv_memory);
      const Camera cam = camera_from_json(load_json_file(rv_camera));
      const RenderOutput render = render_points(memory, cam, rv_radius);
      save_render(out + "/render", render, rv_ppm);
      Json config;
      config["memory"] = rv_memory;
      config["camera"] = rv_camera;
      config["splat-radius"] = rv_radius;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "render-view", config, timings);
      std::cout << "render-view: hole fraction " << hole_fraction(render)
                << " -> " << out << "/render.*\n";
    });
  }

  // score-views
  std::string sv_memory, sv_targets, sv_out, sv_weighting = "distinct";
  int sv_radius = 1, sv_k = 3;
  {
    CLI::App* cmd = app.add_subcommand(
        "score-views", "score source views by visible-point contribution");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--memory", sv_memory, "memory PLY")->required(),
             &sv_memory);
    cfg.bind(cmd->add_option("--targets", sv_targets, "target cameras JSON")
                 ->required(),
             &sv_targets);
    cfg.bind(cmd->add_option("--splat-radius", sv_radius,
                             "square splat radius")
                 ->capture_default_str(),
             &sv_radius);
    cfg.bind(cmd->add_option("--k", sv_k, "views to select")
                 ->capture_default_str(),
             &sv_k);
    cfg.bind(cmd->add_option("--weighting", sv_weighting, "distinct|pixels")
                 ->check(CLI::IsMember({"distinct", "pixels"})),
             &sv_weighting);
    cfg.bind(cmd->add_option("--out", sv_out, "output directory"), &sv_out);
    cmd->callback([&] {
      cfg.apply();
      const std::string out = resolve_out_dir(sv_out);
      const Stopwatch watch;
      const GeoMemory memory = load_ply(sv_memory);
      const std::vector<Camera> targets = load_trajectory(sv_targets);
      const ScoreWeighting weighting = sv_weighting == "pixels"
                                           ? ScoreWeighting::kPixelWeighted
                                           : ScoreWeighting::kDistinctPoints;
      const ScoreTable table =
          score_segment(memory, targets, sv_radius, weighting);
      const std::vector<int> selected = select_topk(table, sv_k);
      save_scores_json(out + "/scores.json", table, selected);
      Json config;
      config["memory"] = sv_memory;
      config["targets"] = sv_targets;
      config["splat-radius"] = sv_radius;
      config["k"] = sv_k;
      config["weighting"] = sv_weighting;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "score-views", config, timings);
      std::cout << "score-views: " << selected.size() << " selected -> " << out
                << "/scores.json\n";
    });
  }

  // run-loop
  LoopCliOptions lc;
  {
    CLI::App* cmd = app.add_subcommand(
        "run-loop", "segment-by-segment generation and memory update loop");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--scene", lc.scene_path, "scene JSON")
                 ->required(),
             &lc.scene_path);
    cfg.bind(cmd->add_option("--trajectory", lc.trajectory_path,
                             "target cameras JSON")
                 ->required(),
             &lc.trajectory_path);
    cfg.bind(cmd->add_option("--bank", lc.bank_dir,
                             "capture directory (omit to capture the "
                             "conditioning frames of --layout)"),
             &lc.bank_dir);
    cfg.bind(cmd->add_option("--layout", lc.layout,
                             "interpolation|extrapolation")
                 ->check(CLI::IsMember({"interpolation", "extrapolation"}))
                 ->capture_default_str(),
             &lc.layout);
    cfg.bind(cmd->add_option("--generator", lc.generator, "oracle|degraded")
                 ->check(CLI::IsMember({"oracle", "degraded"}))
                 ->capture_default_str(),
             &lc.generator);
    cfg.bind(cmd->add_option("--k", lc.loop.k, "refs per segment")
                 ->capture_default_str(),
             &lc.loop.k);
    cfg.bind(cmd->add_option("--seg-len", lc.loop.seg_len,
                             "frames per segment")
                 ->capture_default_str(),
             &lc.loop.seg_len);
    cfg.bind(cmd->add_option("--stride", lc.loop.stride, "memory pixel stride")
                 ->capture_default_str(),
             &lc.loop.stride);
    cfg.bind(cmd->add_option("--splat-radius", lc.loop.splat_radius,
                             "square splat radius")
                 ->capture_default_str(),
             &lc.loop.splat_radius);
    cfg.bind(cmd->add_flag("--update-memory,!--no-update-memory",
                           lc.loop.update_memory,
                           "fold generated frames into memory (default on)"),
             &lc.loop.update_memory);
    cfg.bind(cmd->add_flag("--widen-ref-pool", lc.loop.widen_ref_pool,
                           "let generated frames compete for retrieval"),
             &lc.loop.widen_ref_pool);
    cfg.bind(cmd->add_option("--weighting", lc.weighting, "distinct|pixels")
                 ->check(CLI::IsMember({"distinct", "pixels"})),
             &lc.weighting);
    cfg.bind(cmd->add_option("--noise-sigma", lc.noise_sigma,
                             "degraded generator: pixel noise sigma")
                 ->capture_default_str(),
             &lc.noise_sigma);
    cfg.bind(cmd->add_option("--dropout", lc.dropout,
                             "degraded generator: dropout fraction")
                 ->capture_default_str(),
             &lc.dropout);
    cfg.bind(cmd->add_flag("--eval,!--no-eval", lc.eval,
                           "PSNR/SSIM against ray-cast ground truth "
                           "(default on)"),
             &lc.eval);
    cfg.bind(cmd->add_option("--seed", lc.loop.seed, "root seed")
                 ->capture_default_str(),
             &lc.loop.seed);
    cfg.bind(cmd->add_option("--threads", lc.loop.threads, "worker threads"),
             &lc.loop.threads);
    cfg.bind(cmd->add_flag("--ppm", lc.ppm, "write PPM instead of PNG"),
             &lc.ppm);
    cfg.bind(cmd->add_option("--out", lc.out, "output directory"), &lc.out);
    cmd->callback([&] {
      cfg.apply();
      run_loop_cmd(lc);
    });
  }

  // attn-mask
  int am_refs = 3, am_targets = 40, am_grid_h = 16, am_grid_w = 28;
  int am_window = 8, am_bt = 2, am_bh = 8, am_bw = 8;
  bool am_refs_attend_targets = false;
  std::vector<int> am_sweep;
  std::string am_out;
  {
    CLI::App* cmd = app.add_subcommand(
        "attn-mask", "build the block-sparse attention mask and its density");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--refs", am_refs, "reference frames")
                 ->capture_default_str(),
             &am_refs);
    cfg.bind(cmd->add_option("--targets", am_targets, "target frames")
                 ->capture_default_str(),
             &am_targets);
    cfg.bind(cmd->add_option("--grid-h", am_grid_h, "token rows per frame")
                 ->capture_default_str(),
             &am_grid_h);
    cfg.bind(cmd->add_option("--grid-w", am_grid_w, "token columns per frame")
                 ->capture_default_str(),
             &am_grid_w);
    cfg.bind(cmd->add_option("--window", am_window, "temporal half-window")
                 ->capture_default_str(),
             &am_window);
    cfg.bind(cmd->add_option("--block-t", am_bt, "block size, temporal")
                 ->capture_default_str(),
             &am_bt);
    cfg.bind(cmd->add_option("--block-h", am_bh, "block size, rows")
                 ->capture_default_str(),
             &am_bh);
    cfg.bind(cmd->add_option("--block-w", am_bw, "block size, columns")
                 ->capture_default_str(),
             &am_bw);
    cfg.bind(cmd->add_flag("--refs-attend-targets", am_refs_attend_targets,
                           "let references attend targets too"),
             &am_refs_attend_targets);
    cfg.bind(cmd->add_option("--sweep", am_sweep,
                             "extra target counts for the density CSV"),
             &am_sweep);
    cfg.bind(cmd->add_option("--out", am_out, "output directory"), &am_out);
    cmd->callback([&] {
      cfg.apply();
      const std::string out = resolve_out_dir(am_out);
      const Stopwatch watch;
      const BlockSize block{am_bt, am_bh, am_bw};
      const SequenceLayout layout =
          build_layout(am_refs, am_targets, am_grid_h, am_grid_w, block);
      const BlockMask mask =
          build_sparse_mask(layout, am_window, am_refs_attend_targets);
      save_mask_json(out + "/mask.json", mask);

      std::vector<int> sweep = am_sweep;
      sweep.push_back(am_targets);
      std::sort(sweep.begin(), sweep.end());
      sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
      std::vector<DensityRow> rows;
      for (int t : sweep) {
        const SequenceLayout l =
            build_layout(am_refs, t, am_grid_h, am_grid_w, block);
        DensityRow row;
        row.num_targets = t;
        row.allowed_pairs =
            allowed_frame_pairs(l, am_window, am_refs_attend_targets);
        row.density = mask_density(build_sparse_mask(l, am_window,
                                                     am_refs_attend_targets))
                          .density;
        rows.push_back(row);
      }
      save_density_csv(out + "/density.csv", rows);

      Json config;
      config["refs"] = am_refs;
      config["targets"] = am_targets;
      config["grid-h"] = am_grid_h;
      config["grid-w"] = am_grid_w;
      config["window"] = am_window;
      config["block-t"] = am_bt;
      config["block-h"] = am_bh;
      config["block-w"] = am_bw;
      config["refs-attend-targets"] = am_refs_attend_targets;
      config["sweep"] = sweep;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "attn-mask", config, timings);
      const MaskDensity d = mask_density(mask);
      std::cout << "attn-mask: " << mask.allowed_count() << " of "
                << static_cast<std::uint64_t>(layout.total_blocks()) *
                       layout.total_blocks()
                << " block pairs (density " << d.density << ") -> " << out
                << "/mask.json\n";
    });
  }

  // dmd-demo
  double dd_mean = 2.0, dd_std = 0.5, dd_m0 = 0.0, dd_s0 = 1.0;
  double dd_lr = 0.05, dd_eta = 1.0, dd_sigma_norm = 0.0, dd_tol = 0.05;
  int dd_iters = 2000, dd_batch = 64, dd_refresh = 1;
  std::uint64_t dd_seed = 0;
  std::string dd_time = "discrete", dd_out;
  {
    CLI::App* cmd = app.add_subcommand(
        "dmd-demo",
        "distill an affine one-step sampler against a Gaussian teacher");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--teacher-mean", dd_mean, "teacher mean")
                 ->capture_default_str(),
             &dd_mean);
    cfg.bind(cmd->add_option("--teacher-std", dd_std, "teacher stddev")
                 ->capture_default_str(),
             &dd_std);
    cfg.bind(cmd->add_option("--m0", dd_m0, "student initial mean")
                 ->capture_default_str(),
             &dd_m0);
    cfg.bind(cmd->add_option("--s0", dd_s0, "student initial stddev")
                 ->capture_default_str(),
             &dd_s0);
    cfg.bind(cmd->add_option("--iterations", dd_iters, "max iterations")
                 ->capture_default_str(),
             &dd_iters);
    cfg.bind(cmd->add_option("--batch", dd_batch, "batch size")
                 ->capture_default_str(),
             &dd_batch);
    cfg.bind(cmd->add_option("--lr", dd_lr, "learning rate")
                 ->capture_default_str(),
             &dd_lr);
    cfg.bind(cmd->add_option("--eta", dd_eta, "gradient scale")
                 ->capture_default_str(),
             &dd_eta);
    cfg.bind(cmd->add_option("--sigma-norm", dd_sigma_norm,
                             "constant normalizer (0 = per-batch mean |diff|)")
                 ->capture_default_str(),
             &dd_sigma_norm);
    cfg.bind(cmd->add_option("--critic-refresh", dd_refresh,
                             "refresh the critic every n iterations")
                 ->capture_default_str(),
             &dd_refresh);
    cfg.bind(cmd->add_option("--tol", dd_tol, "convergence tolerance")
                 ->capture_default_str(),
             &dd_tol);
    cfg.bind(cmd->add_option("--time-sampling", dd_time, "discrete|uniform")
                 ->check(CLI::IsMember({"discrete", "uniform"})),
             &dd_time);
    cfg.bind(cmd->add_option("--seed", dd_seed, "root seed")
                 ->capture_default_str(),
             &dd_seed);
    cfg.bind(cmd->add_option("--out", dd_out, "output directory"), &dd_out);
    cmd->callback([&] {
      cfg.apply();
      const std::string out = resolve_out_dir(dd_out);
      const Stopwatch watch;
      if (!(dd_std > 0.0)) {
        throw SchemaError("teacher stddev must be positive");
      }
      ToyTrainConfig tcfg;
      tcfg.iterations = dd_iters;
      tcfg.batch_size = dd_batch;
      tcfg.eta = dd_eta;
      tcfg.learning_rate = dd_lr;
      tcfg.seed = dd_seed;
      tcfg.time_sampling = dd_time == "uniform" ? TimeSampling::kUniform
                                                : TimeSampling::kDiscreteSteps;
      tcfg.sigma_norm_const = dd_sigma_norm;
      tcfg.critic_refresh_every = dd_refresh;
      tcfg.convergence_tol = dd_tol;
      const ToyTrainResult result =
          toy_dmd_train(GaussianModel{dd_mean, dd_std}, dd_m0, dd_s0, tcfg);
      save_train_curve_csv(out + "/curve.csv", result);
      save_train_summary_json(out + "/summary.json", result);
      Json config;
      config["teacher-mean"] = dd_mean;
      config["teacher-std"] = dd_std;
      config["m0"] = dd_m0;
      config["s0"] = dd_s0;
      config["iterations"] = dd_iters;
      config["batch"] = dd_batch;
      config["lr"] = dd_lr;
      config["eta"] = dd_eta;
      config["sigma-norm"] = dd_sigma_norm;
      config["critic-refresh"] = dd_refresh;
      config["tol"] = dd_tol;
      config["time-sampling"] = dd_time;
      config["seed"] = dd_seed;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "dmd-demo", config, timings);
      std::cout << "dmd-demo: m " << result.mean_final << ", s "
                << result.stddev_final
                << (result.converged ? ", converged" : ", not converged")
                << " -> " << out << "/summary.json\n";
    });
  }

  // eval
  std::string ev_generated, ev_truth, ev_out;
  {
    CLI::App* cmd = app.add_subcommand(
        "eval", "PSNR/SSIM between two image directories (sorted pairing)");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--generated", ev_generated,
                             "generated image directory")
                 ->required(),
             &ev_generated);
    cfg.bind(cmd->add_option("--truth", ev_truth,
                             "ground-truth image directory")
                 ->required(),
             &ev_truth);
    cfg.bind(cmd->add_option("--out", ev_out, "output directory"), &ev_out);
    cmd->callback([&] {
      cfg.apply();
      const std::string out = resolve_out_dir(ev_out);
      const Stopwatch watch;
      const std::vector<std::string> gen_paths =
          list_images_recursive(ev_generated);
      const std::vector<std::string> gt_paths =
          list_images_recursive(ev_truth);
      if (gen_paths.size() != gt_paths.size()) {
        throw SchemaError("eval: " + std::to_string(gen_paths.size()) +
                          " generated vs " + std::to_string(gt_paths.size()) +
                          " ground-truth images");
      }
      if (gen_paths.empty()) throw SchemaError("eval: no images found");
      std::vector<ImageRGB> gen, gt;
      for (const std::string& p : gen_paths) gen.push_back(read_image(p));
      for (const std::string& p : gt_paths) gt.push_back(read_image(p));
      const EvalSummary summary = evaluate(gen, gt);
      save_eval_csv(out + "/metrics.csv", summary);
      save_eval_json(out + "/metrics.json", summary);
      Json config;
      config["generated"] = ev_generated;
      config["truth"] = ev_truth;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "eval", config, timings);
      std::cout << "eval: mean PSNR " << summary.mean_psnr << ", mean SSIM "
                << summary.mean_ssim << " -> " << out << "/metrics.csv\n";
    });
  }

  // report
  std::vector<std::string> rp_runs;
  std::string rp_out;
  {
    CLI::App* cmd =
        app.add_subcommand("report", "aggregate run directories into one table");
    ConfigBinder& cfg = binders.emplace_back(cmd);
    cfg.bind(cmd->add_option("--run", rp_runs, "scenario label dir (repeatable)")
                 ->type_size(3)
                 ->required(),
             &rp_runs);
    cfg.bind(cmd->add_option("--out", rp_out, "output directory"), &rp_out);
    cmd->callback([&] {
      cfg.apply();
      const std::string out = resolve_out_dir(rp_out);
      const Stopwatch watch;
      std::vector<RunSummary> runs;
      for (std::size_t i = 0; i + 2 < rp_runs.size(); i += 3) {
        runs.push_back(
            load_run_summary(rp_runs[i + 2], rp_runs[i], rp_runs[i + 1]));
      }
      const Report report = aggregate(runs);
      save_report_csv(out + "/report.csv", report);
      save_report_json(out + "/report.json", report);
      Json config;
      config["runs"] = rp_runs;
      Json timings;
      timings["total_seconds"] = watch.seconds();
      write_manifest(out, "report", config, timings);
      std::cout << "report: " << report.rows.size() << " rows -> " << out
                << "/report.csv\n";
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail_line("usage", e.what());
    return static_cast<int>(ExitCode::kUsage);
  } catch (const IoError& e) {
    fail_line("io", e.what());
    return static_cast<int>(ExitCode::kIo);
  } catch (const SchemaError& e) {
    fail_line("schema", e.what());
    return static_cast<int>(ExitCode::kSchema);
  } catch (const GeneratorContractError& e) {
    fail_line("generator-contract", e.what());
    return static_cast<int>(ExitCode::kGeneratorContract);
  } catch (const std::exception& e) {
    fail_line("internal", e.what());
    return static_cast<int>(ExitCode::kInternal);
  }
  return static_cast<int>(ExitCode::kOk);
}
