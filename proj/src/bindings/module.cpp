#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>

#include "geoloop/attention_layout.hpp"
#include "geoloop/camera.hpp"
#include "geoloop/distillation.hpp"
#include "geoloop/errors.hpp"
#include "geoloop/geometry_memory.hpp"
#include "geoloop/image.hpp"
#include "geoloop/metrics.hpp"
#include "geoloop/pipeline.hpp"
#include "geoloop/renderer.hpp"
#include "geoloop/retrieval.hpp"
#include "geoloop/rng.hpp"
#include "geoloop/scene_synth.hpp"

namespace py = pybind11;
using namespace geoloop;

namespace {

py::array_t<std::uint8_t> image_to_array(const ImageRGB& img) {
  py::array_t<std::uint8_t> arr({img.height, img.width, 3});
  std::memcpy(arr.mutable_data(), img.data.data(), img.data.size());
  return arr;
}

ImageRGB array_to_image(
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>&
        arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3) {
    throw SchemaError("expected a (height, width, 3) uint8 array");
  }
  ImageRGB img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::memcpy(img.data.data(), arr.data(), img.data.size());
  return img;
}

py::array_t<float> depth_to_array(const DepthMap& depth) {
  py::array_t<float> arr({depth.height, depth.width});
  std::memcpy(arr.mutable_data(), depth.data.data(),
              depth.data.size() * sizeof(float));
  return arr;
}

DepthMap array_to_depth(
    const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw SchemaError("expected a (height, width) array");
  DepthMap d(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::memcpy(d.data.data(), arr.data(), d.data.size() * sizeof(float));
  return d;
}

ScoreWeighting parse_weighting(const std::string& name) {
  if (name == "distinct") return ScoreWeighting::kDistinctPoints;
  if (name == "pixels") return ScoreWeighting::kPixelWeighted;
  throw SchemaError("weighting must be 'distinct' or 'pixels'");
}

std::unique_ptr<GeneratorInterface> make_generator(
    const std::string& name, const SyntheticScene& scene, double noise_sigma,
    double dropout, std::uint64_t seed, int threads) {
  if (name == "oracle") {
    return std::make_unique<OracleGenerator>(scene, threads);
  }
  if (name == "degraded") {
    return std::make_unique<DegradedOracleGenerator>(scene, noise_sigma,
                                                     dropout, seed, threads);
  }
  throw SchemaError("generator must be 'oracle' or 'degraded'");
}

py::dict loop_result_to_dict(const LoopResult& result) {
  py::list frames;
  for (const CaptureFrame& f : result.generated) {
    frames.append(image_to_array(f.color));
  }
  py::list diags;
  for (const SegmentDiagnostics& d : result.diagnostics) {
    py::dict seg;
    seg["segment_index"] = d.segment_index;
    py::list scores;
    for (const ScoreEntry& e : d.scores.entries) {
      scores.append(py::make_tuple(e.view_id, e.score));
    }
    seg["scores"] = scores;
    seg["selected"] = d.selected_view_ids;
    seg["generated_view_ids"] = d.generated_view_ids;
    seg["mean_hole_before"] = d.mean_hole_before;
    seg["mean_hole_after"] = d.mean_hole_after;
    seg["depth_from_memory"] = d.depth_from_memory;
    diags.append(seg);
  }
  py::dict out;
  out["frames"] = frames;
  out["segments"] = diags;
  out["memory_points"] = result.memory.points.size();
  out["generation_counter"] = result.memory.generation_counter;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "geometry-memory view generation loop: core operations";

  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<GeneratorContractError>(m, "GeneratorContractError",
                                                 PyExc_RuntimeError);

  // cameras
  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width,
                       int height) {
             Intrinsics intr{fx, fy, cx, cy, width, height};
             if (!intr.valid()) throw SchemaError("invalid intrinsics");
             return intr;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"),
           py::arg("width"), py::arg("height"))
      .def_readonly("fx", &Intrinsics::fx)
      .def_readonly("fy", &Intrinsics::fy)
      .def_readonly("cx", &Intrinsics::cx)
      .def_readonly("cy", &Intrinsics::cy)
      .def_readonly("width", &Intrinsics::width)
      .def_readonly("height", &Intrinsics::height);

  py::class_<Pose>(m, "Pose")
      .def(py::init([](const Eigen::Matrix3d& rotation,
                       const Eigen::Vector3d& translation) {
             Pose p{rotation, translation};
             if (!p.orthonormal()) {
               throw SchemaError("rotation is not orthonormal");
             }
             return p;
           }),
           py::arg("rotation"), py::arg("translation"))
      .def_property_readonly(
          "rotation", [](const Pose& p) -> Eigen::Matrix3d { return p.rotation; })
      .def_property_readonly("translation",
                             [](const Pose& p) -> Eigen::Vector3d {
                               return p.translation;
                             })
      .def("apply", &Pose::apply, py::arg("point"))
      .def("center", &Pose::center);

  m.def("look_at", &look_at, py::arg("eye"), py::arg("target"),
        py::arg("up") = Eigen::Vector3d(0, -1, 0));

  py::class_<Camera>(m, "Camera")
      .def(py::init([](const Intrinsics& intr, const Pose& pose, int view_id) {
             return Camera{intr, pose, view_id};
           }),
           py::arg("intrinsics"), py::arg("pose"), py::arg("view_id"))
      .def_readonly("intrinsics", &Camera::intrinsics)
      .def_readonly("pose", &Camera::pose)
      .def_readonly("view_id", &Camera::view_id);

  m.def(
      "project",
      [](const Camera& cam, const Eigen::Vector3d& p) -> py::object {
        const auto hit = project(cam, p);
        if (!hit) return py::none();
        return py::make_tuple(hit->u, hit->v, hit->depth);
      },
      py::arg("camera"), py::arg("point"),
      "(u, v, depth) or None when invisible");
  m.def("unproject", &unproject, py::arg("camera"), py::arg("u"), py::arg("v"),
        py::arg("depth"));
  m.def("save_trajectory", &save_trajectory, py::arg("path"),
        py::arg("cameras"));
  m.def("load_trajectory", &load_trajectory, py::arg("path"));

  // scene
  py::class_<SyntheticScene>(m, "SyntheticScene")
      .def_readonly("seed", &SyntheticScene::seed)
      .def_property_readonly(
          "num_boxes",
          [](const SyntheticScene& s) { return s.boxes.size(); });
  m.def("build_scene", &build_scene, py::arg("seed"));
  m.def("save_scene_json", &save_scene_json, py::arg("path"),
        py::arg("scene"));
  m.def("load_scene_json", &load_scene_json, py::arg("path"));
  m.def(
      "raycast",
      [](const SyntheticScene& scene, const Camera& cam, int threads) {
        const CaptureFrame frame = raycast(scene, cam, threads);
        return py::make_tuple(image_to_array(frame.color),
                              depth_to_array(frame.depth));
      },
      py::arg("scene"), py::arg("camera"), py::arg("threads") = 1,
      "(color uint8 (h, w, 3), depth float32 (h, w))");
  m.def("orbit_trajectory", &orbit_trajectory, py::arg("scene"),
        py::arg("intrinsics"), py::arg("frames"), py::arg("first_view_id") = 0,
        py::arg("radius_scale") = 0.55);

  // geometry memory
  py::class_<CaptureFrame>(m, "CaptureFrame")
      .def(py::init([](const Camera& cam,
                       const py::array_t<std::uint8_t,
                                         py::array::c_style |
                                             py::array::forcecast>& color,
                       const py::array_t<float, py::array::c_style |
                                                    py::array::forcecast>&
                           depth) {
             CaptureFrame f;
             f.camera = cam;
             f.color = array_to_image(color);
             f.depth = array_to_depth(depth);
             return f;
           }),
           py::arg("camera"), py::arg("color"), py::arg("depth"))
      .def_readonly("camera", &CaptureFrame::camera)
      .def_property_readonly(
          "color", [](const CaptureFrame& f) { return image_to_array(f.color); })
      .def_property_readonly("depth", [](const CaptureFrame& f) {
        return depth_to_array(f.depth);
      });

  py::class_<ViewBank>(m, "ViewBank")
      .def(py::init<>())
      .def("add", &ViewBank::add, py::arg("frame"))
      .def("view_ids", &ViewBank::view_ids)
      .def("__len__", [](const ViewBank& b) { return b.size(); });

  py::class_<GeoMemory>(m, "GeoMemory")
      .def_readonly("generation_counter", &GeoMemory::generation_counter)
      .def_readonly("stride", &GeoMemory::stride)
      .def("__len__", [](const GeoMemory& mem) { return mem.points.size(); })
      .def("positions",
           [](const GeoMemory& mem) {
             py::array_t<double> arr(
                 {static_cast<py::ssize_t>(mem.points.size()),
                  static_cast<py::ssize_t>(3)});
             auto w = arr.mutable_unchecked<2>();
             for (py::ssize_t i = 0;
                  i < static_cast<py::ssize_t>(mem.points.size()); ++i) {
               for (py::ssize_t c = 0; c < 3; ++c) {
                 w(i, c) = mem.points[static_cast<std::size_t>(i)].position[c];
               }
             }
             return arr;
           })
      .def("source_ids", [](const GeoMemory& mem) {
        py::array_t<int> arr(static_cast<py::ssize_t>(mem.points.size()));
        auto w = arr.mutable_unchecked<1>();
        for (py::ssize_t i = 0;
             i < static_cast<py::ssize_t>(mem.points.size()); ++i) {
          w(i) = mem.points[static_cast<std::size_t>(i)].source_view_id;
        }
        return arr;
      });

  m.def("init_from_captures", &init_from_captures, py::arg("bank"),
        py::arg("stride") = 1);
  m.def("update_memory", &update_memory, py::arg("memory"), py::arg("bank"));
  m.def("save_ply", &save_ply, py::arg("path"), py::arg("memory"));
  m.def("load_ply", &load_ply, py::arg("path"));

  // renderer
  py::class_<RenderOutput>(m, "RenderOutput")
      .def_readonly("width", &RenderOutput::width)
      .def_readonly("height", &RenderOutput::height)
      .def_property_readonly(
          "color", [](const RenderOutput& r) { return image_to_array(r.color); })
      .def_property_readonly("mask",
                             [](const RenderOutput& r) {
                               py::array_t<std::uint8_t> arr(
                                   {r.height, r.width});
                               std::memcpy(arr.mutable_data(), r.mask.data(),
                                           r.mask.size());
                               return arr;
                             })
      .def_property_readonly("depth",
                             [](const RenderOutput& r) {
                               py::array_t<double> arr({r.height, r.width});
                               std::memcpy(arr.mutable_data(), r.depth.data(),
                                           r.depth.size() * sizeof(double));
                               return arr;
                             })
      .def_property_readonly("source_index",
                             [](const RenderOutput& r) {
                               py::array_t<int> arr({r.height, r.width});
                               std::memcpy(arr.mutable_data(),
                                           r.source_index.data(),
                                           r.source_index.size() * sizeof(int));
                               return arr;
                             })
      .def_property_readonly("hole_fraction", [](const RenderOutput& r) {
        return hole_fraction(r);
      });

  m.def("render_points", &render_points, py::arg("memory"), py::arg("camera"),
        py::arg("splat_radius") = 1);

  // retrieval
  m.def(
      "score_segment",
      [](const GeoMemory& mem, const std::vector<Camera>& cams,
         int splat_radius, const std::string& weighting) {
        const ScoreTable table =
            score_segment(mem, cams, splat_radius, parse_weighting(weighting));
        std::vector<std::pair<int, double>> out;
        for (const ScoreEntry& e : table.entries) {
          out.emplace_back(e.view_id, e.score);
        }
        return out;
      },
      py::arg("memory"), py::arg("cameras"), py::arg("splat_radius") = 1,
      py::arg("weighting") = "distinct",
      "[(view_id, score), ...] sorted by view_id");
  m.def(
      "select_topk",
      [](const std::vector<std::pair<int, double>>& scores, int k) {
        ScoreTable table;
        for (const auto& [view_id, score] : scores) {
          table.entries.push_back({view_id, score});
        }
        return select_topk(table, k);
      },
      py::arg("scores"), py::arg("k"));

  // attention layout
  py::class_<SequenceLayout>(m, "SequenceLayout")
      .def_readonly("num_refs", &SequenceLayout::num_refs)
      .def_readonly("num_targets", &SequenceLayout::num_targets)
      .def("frames", &SequenceLayout::frames)
      .def("total_blocks", &SequenceLayout::total_blocks)
      .def("total_tokens", &SequenceLayout::total_tokens)
      .def("channel_roles", &SequenceLayout::channel_roles, py::arg("frame"));
  m.def(
      "build_layout",
      [](int num_refs, int num_targets, int h_tokens, int w_tokens, int block_t,
         int block_h, int block_w) {
        return build_layout(num_refs, num_targets, h_tokens, w_tokens,
                            BlockSize{block_t, block_h, block_w});
      },
      py::arg("num_refs"), py::arg("num_targets"), py::arg("h_tokens"),
      py::arg("w_tokens"), py::arg("block_t") = 2, py::arg("block_h") = 8,
      py::arg("block_w") = 8);
  m.def("frames_attend", &frames_attend, py::arg("layout"), py::arg("window"),
        py::arg("refs_attend_targets"), py::arg("query_frame"),
        py::arg("key_frame"));
  m.def("allowed_frame_pairs", &allowed_frame_pairs, py::arg("layout"),
        py::arg("window"), py::arg("refs_attend_targets") = false);
  m.def(
      "sparse_mask_density",
      [](const SequenceLayout& layout, int window, bool refs_attend_targets) {
        const BlockMask mask =
            build_sparse_mask(layout, window, refs_attend_targets);
        return mask_density(mask).density;
      },
      py::arg("layout"), py::arg("window") = 8,
      py::arg("refs_attend_targets") = false);
  m.def(
      "reference_attention",
      [](const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
         const Eigen::MatrixXd& v, const SequenceLayout& layout, int window,
         bool refs_attend_targets) {
        const BlockMask mask =
            build_sparse_mask(layout, window, refs_attend_targets);
        return reference_attention(q, k, v, mask);
      },
      py::arg("queries"), py::arg("keys"), py::arg("values"),
      py::arg("layout"), py::arg("window") = 8,
      py::arg("refs_attend_targets") = false);
  m.def("dense_attention", &dense_attention, py::arg("queries"),
        py::arg("keys"), py::arg("values"));

  // distillation
  m.def("schedule_steps", [] { return Schedule{}.steps; });
  m.def("noisify",
        py::overload_cast<const Vec&, double, const Vec&>(&noisify),
        py::arg("x0"), py::arg("t"), py::arg("eps"));
  m.def(
      "gaussian_posterior_mean",
      [](const Vec& z, double t, double mean, double stddev) {
        return gaussian_posterior_mean(z, t, GaussianModel{mean, stddev});
      },
      py::arg("z"), py::arg("t"), py::arg("mean"), py::arg("stddev"));
  m.def(
      "dmd_generator_gradient",
      [](const Vec& student, const Vec& teacher, const Vec& critic, double eta,
         double sigma_norm) {
        return dmd_generator_gradient({student, teacher, critic, eta,
                                       sigma_norm});
      },
      py::arg("student"), py::arg("teacher"), py::arg("critic"),
      py::arg("eta") = 1.0, py::arg("sigma_norm") = 1.0);
  m.def("critic_loss", &critic_loss, py::arg("critic_pred"),
        py::arg("x_clean"));
  m.def(
      "sample_4step",
      [](const std::function<Vec(const Vec&, double)>& generator,
         const Vec& z_init, bool deterministic, std::uint64_t seed) {
        Rng rng = Rng(seed).substream("sample_4step");
        std::vector<SampleStep> trajectory;
        const Vec x =
            sample_4step(generator, Schedule{}, z_init,
                         deterministic ? NoiseMode::kDeterministic
                                       : NoiseMode::kStochastic,
                         rng, &trajectory);
        py::list steps;
        for (const SampleStep& s : trajectory) {
          steps.append(py::make_tuple(s.t, s.z, s.x_hat));
        }
        return py::make_tuple(x, steps);
      },
      py::arg("generator"), py::arg("z_init"), py::arg("deterministic") = true,
      py::arg("seed") = 0,
      "(final prediction, [(t, z, x_hat), ...]); 4 generator calls");
  m.def(
      "toy_dmd_train",
      [](double teacher_mean, double teacher_std, double m0, double s0,
         int iterations, int batch_size, double learning_rate,
         std::uint64_t seed) {
        ToyTrainConfig cfg;
        cfg.iterations = iterations;
        cfg.batch_size = batch_size;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        const ToyTrainResult r =
            toy_dmd_train(GaussianModel{teacher_mean, teacher_std}, m0, s0, cfg);
        py::dict out;
        out["m_final"] = r.mean_final;
        out["s_final"] = r.stddev_final;
        out["converged"] = r.converged;
        out["aborted"] = r.aborted;
        out["iterations"] = r.curve.size();
        return out;
      },
      py::arg("teacher_mean"), py::arg("teacher_std"), py::arg("m0") = 0.0,
      py::arg("s0") = 1.0, py::arg("iterations") = 2000,
      py::arg("batch_size") = 64, py::arg("learning_rate") = 0.05,
      py::arg("seed") = 0);

  // metrics
  m.def(
      "psnr",
      [](const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& a,
         const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& b) {
        return psnr(array_to_image(a), array_to_image(b));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "ssim",
      [](const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& a,
         const py::array_t<std::uint8_t,
                           py::array::c_style | py::array::forcecast>& b) {
        return ssim(array_to_image(a), array_to_image(b));
      },
      py::arg("a"), py::arg("b"));

  // pipeline
  m.def("conditioning_frames",
        [](const std::string& layout, int num_frames) {
          if (layout != "interpolation" && layout != "extrapolation") {
            throw SchemaError("layout must be interpolation or extrapolation");
          }
          return conditioning_frames(layout == "interpolation"
                                         ? ConditioningLayout::kInterpolation
                                         : ConditioningLayout::kExtrapolation,
                                     num_frames);
        },
        py::arg("layout"), py::arg("num_frames"));
  m.def(
      "run_loop",
      [](const ViewBank& bank, const std::vector<Camera>& trajectory,
         const SyntheticScene& scene, const std::string& generator, int k,
         int seg_len, int stride, int splat_radius, bool update_memory,
         bool widen_ref_pool, const std::string& weighting, double noise_sigma,
         double dropout, std::uint64_t seed, int threads) {
        LoopOptions opts;
        opts.k = k;
        opts.seg_len = seg_len;
        opts.stride = stride;
        opts.splat_radius = splat_radius;
        opts.update_memory = update_memory;
        opts.widen_ref_pool = widen_ref_pool;
        opts.weighting = parse_weighting(weighting);
        opts.seed = seed;
        opts.threads = threads;
        auto gen = make_generator(generator, scene, noise_sigma, dropout, seed,
                                  threads);
        return loop_result_to_dict(run_loop(bank, trajectory, *gen, opts));
      },
      py::arg("bank"), py::arg("trajectory"), py::arg("scene"),
      py::arg("generator") = "oracle", py::arg("k") = 3,
      py::arg("seg_len") = 40, py::arg("stride") = 1,
      py::arg("splat_radius") = 1, py::arg("update_memory") = true,
      py::arg("widen_ref_pool") = false, py::arg("weighting") = "distinct",
      py::arg("noise_sigma") = 5.0, py::arg("dropout") = 0.05,
      py::arg("seed") = 0, py::arg("threads") = 1);
  m.def(
      "run_scenario",
      [](const SyntheticScene& scene, const std::vector<Camera>& trajectory,
         const std::vector<int>& conditioning, const std::string& generator,
         int k, int seg_len, int stride, int splat_radius, bool update_memory,
         double noise_sigma, double dropout, std::uint64_t seed, int threads) {
        LoopOptions opts;
        opts.k = k;
        opts.seg_len = seg_len;
        opts.stride = stride;
        opts.splat_radius = splat_radius;
        opts.update_memory = update_memory;
        opts.seed = seed;
        opts.threads = threads;
        auto gen = make_generator(generator, scene, noise_sigma, dropout, seed,
                                  threads);
        const ScenarioResult sr =
            run_scenario(scene, trajectory, conditioning, *gen, opts);
        py::dict out = loop_result_to_dict(sr.loop);
        out["mean_psnr"] = sr.eval.mean_psnr;
        out["mean_ssim"] = sr.eval.mean_ssim;
        return out;
      },
      py::arg("scene"), py::arg("trajectory"), py::arg("conditioning"),
      py::arg("generator") = "oracle", py::arg("k") = 3,
      py::arg("seg_len") = 40, py::arg("stride") = 1,
      py::arg("splat_radius") = 1, py::arg("update_memory") = true,
      py::arg("noise_sigma") = 5.0, py::arg("dropout") = 0.05,
      py::arg("seed") = 0, py::arg("threads") = 1);
}
