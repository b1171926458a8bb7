#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "geoloop/attention_layout.hpp"
#include "geoloop/errors.hpp"
#include "geoloop/rng.hpp"
#include "test_util.hpp"

using namespace geoloop;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Token-level masked attention written independently: per query row, a plain
// exhaustive softmax over the keys its block mask admits.
Eigen::MatrixXd oracle_masked_attention(const Eigen::MatrixXd& q,
                                        const Eigen::MatrixXd& k,
                                        const Eigen::MatrixXd& v,
                                        const BlockMask& mask) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Eigen::MatrixXd out(q.rows(), v.cols());
  for (int i = 0; i < q.rows(); ++i) {
    const int qb = mask.layout.block_of_token(i);
    std::vector<int> keys;
    for (int j = 0; j < k.rows(); ++j) {
      if (mask.allowed_pair(qb, mask.layout.block_of_token(j))) {
        keys.push_back(j);
      }
    }
    REQUIRE_FALSE(keys.empty());
    double max_logit = -1e300;
    std::vector<double> logits(keys.size());
    for (std::size_t n = 0; n < keys.size(); ++n) {
      logits[n] = scale * q.row(i).dot(k.row(keys[n]));
      max_logit = std::max(max_logit, logits[n]);
    }
    double z = 0.0;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(v.cols());
    for (std::size_t n = 0; n < keys.size(); ++n) {
      const double w = std::exp(logits[n] - max_logit);
      z += w;
      acc += w * v.row(keys[n]);
    }
    out.row(i) = acc / z;
  }
  return out;
}

}  // namespace

TEST_CASE("layout validation rejects degenerate shapes") {
  CHECK_THROWS_AS(build_layout(3, 0, 4, 4), SchemaError);
  CHECK_THROWS_AS(build_layout(3, 8, 0, 4), SchemaError);
  CHECK_THROWS_AS(build_layout(3, 8, 4, 4, BlockSize{0, 8, 8}), SchemaError);
  CHECK_THROWS_AS(build_layout(-1, 8, 4, 4), SchemaError);
}

TEST_CASE("layout block and token bookkeeping") {
  const SequenceLayout layout = build_layout(3, 40, 16, 28, BlockSize{2, 8, 8});
  CHECK(layout.frames() == 43);
  CHECK(layout.temporal_blocks() == 22);  // ceil(43 / 2)
  CHECK(layout.h_blocks() == 2);
  CHECK(layout.w_blocks() == 4);
  CHECK(layout.spatial_blocks() == 8);
  CHECK(layout.total_blocks() == 176);
  CHECK(layout.tokens_per_frame() == 448);
  CHECK(layout.total_tokens() == 448 * 43);
  CHECK(layout.role(2) == FrameRole::kReference);
  CHECK(layout.role(3) == FrameRole::kTarget);
  CHECK(layout.frame_of_token(0) == 0);
  CHECK(layout.frame_of_token(448) == 1);
}

TEST_CASE("every target attends min(T, 2w+1) targets plus all references") {
  for (int T : {5, 17, 40}) {
    const SequenceLayout layout = build_layout(3, T, 4, 4);
    const int expected = std::min(T, 17);
    for (int q = 3; q < layout.frames(); ++q) {
      int targets = 0, refs = 0;
      for (int k = 0; k < layout.frames(); ++k) {
        if (!frames_attend(layout, 8, false, q, k)) continue;
        (layout.role(k) == FrameRole::kReference ? refs : targets)++;
      }
      CHECK(targets == expected);
      CHECK(refs == 3);
      // A frame always attends itself.
      CHECK(frames_attend(layout, 8, false, q, q));
    }
  }
}

TEST_CASE("the window is contiguous and shifts inward at the edges") {
  const SequenceLayout layout = build_layout(3, 40, 4, 4);
  // Interior example: target 20 of 40 sees targets 12..28 under w = 8.
  for (int j = 0; j < 40; ++j) {
    const bool attends = frames_attend(layout, 8, false, 3 + 20, 3 + j);
    CHECK(attends == (j >= 12 && j <= 28));
  }
  // Edge example: target 0 still sees 17 frames, shifted to 0..16.
  for (int j = 0; j < 40; ++j) {
    const bool attends = frames_attend(layout, 8, false, 3 + 0, 3 + j);
    CHECK(attends == (j <= 16));
  }
  // Tail example: target 39 sees 23..39.
  for (int j = 0; j < 40; ++j) {
    const bool attends = frames_attend(layout, 8, false, 3 + 39, 3 + j);
    CHECK(attends == (j >= 23));
  }
}

TEST_CASE("references attend references, and targets only when enabled") {
  const SequenceLayout layout = build_layout(3, 10, 4, 4);
  for (int q = 0; q < 3; ++q) {
    for (int k = 0; k < 3; ++k) CHECK(frames_attend(layout, 8, false, q, k));
    for (int k = 3; k < 13; ++k) {
      CHECK_FALSE(frames_attend(layout, 8, false, q, k));
      CHECK(frames_attend(layout, 8, true, q, k));
    }
  }
}

TEST_CASE("allowed pair counts follow the closed form and scale linearly") {
  // R = 3, w = 8: T*min(T,17) + 3T + 9.
  for (int T : {1, 5, 17, 40, 80, 160}) {
    const SequenceLayout layout = build_layout(3, T, 4, 4);
    const std::uint64_t expected =
        static_cast<std::uint64_t>(T) * std::min(T, 17) + 3ull * T + 9ull;
    CHECK(allowed_frame_pairs(layout, 8) == expected);
  }
  const double c160 = static_cast<double>(
      allowed_frame_pairs(build_layout(3, 160, 4, 4), 8));
  const double c80 = static_cast<double>(
      allowed_frame_pairs(build_layout(3, 80, 4, 4), 8));
  CHECK(c160 / c80 > 1.9);
  CHECK(c160 / c80 < 2.1);
}

TEST_CASE("block mask is the union of its frames' attention") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const int R = static_cast<int>(rng.uniform_int(1, 3));
    const int T = static_cast<int>(rng.uniform_int(2, 12));
    const int window = static_cast<int>(rng.uniform_int(1, 4));
    const SequenceLayout layout =
        build_layout(R, T, 4, 6, BlockSize{2, 2, 3});
    const BlockMask mask = build_sparse_mask(layout, window, false);
    const int tb = layout.temporal_blocks();
    const int sb = layout.spatial_blocks();
    for (int qb = 0; qb < layout.total_blocks(); ++qb) {
      for (int kb = 0; kb < layout.total_blocks(); ++kb) {
        const int q_t = qb / sb;
        const int k_t = kb / sb;
        bool any = false;
        for (int qf = q_t * 2; qf < std::min((q_t + 1) * 2, layout.frames());
             ++qf) {
          for (int kf = k_t * 2; kf < std::min((k_t + 1) * 2, layout.frames());
               ++kf) {
            any = any || frames_attend(layout, window, false, qf, kf);
          }
        }
        CHECK(mask.allowed_pair(qb, kb) == any);
      }
    }
    CHECK(tb == (layout.frames() + 1) / 2);
  }
}

TEST_CASE("mask density summarizes the allowed fraction") {
  const SequenceLayout layout = build_layout(2, 6, 4, 4, BlockSize{2, 4, 4});
  const BlockMask mask = build_sparse_mask(layout, 1, false);
  const MaskDensity d = mask_density(mask);
  const std::uint64_t total = static_cast<std::uint64_t>(
      layout.total_blocks()) * layout.total_blocks();
  CHECK(d.density == doctest::Approx(
      static_cast<double>(mask.allowed_count()) / total));
  REQUIRE(d.attended_hist.size() ==
          static_cast<std::size_t>(layout.total_blocks()));
  std::uint64_t hist_sum = 0;
  for (int c : d.attended_hist) hist_sum += c;
  CHECK(hist_sum == mask.allowed_count());
}

TEST_CASE("a full window with refs attending targets reproduces dense attention") {
  Rng rng(72);
  for (int trial = 0; trial < 10; ++trial) {
    const int R = static_cast<int>(rng.uniform_int(1, 3));
    const int T = static_cast<int>(rng.uniform_int(1, 6));
    const SequenceLayout layout =
        build_layout(R, T, 2, 2, BlockSize{2, 2, 2});
    const BlockMask mask = build_sparse_mask(layout, T - 1 + 1, true);
    const int n = static_cast<int>(layout.total_tokens());
    const int dim = 5;
    const Eigen::MatrixXd q = random_matrix(rng, n, dim);
    const Eigen::MatrixXd k = random_matrix(rng, n, dim);
    const Eigen::MatrixXd v = random_matrix(rng, n, dim);
    const Eigen::MatrixXd sparse = reference_attention(q, k, v, mask);
    const Eigen::MatrixXd dense = dense_attention(q, k, v);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) {
        const double rel = std::abs(sparse(i, j) - dense(i, j)) /
                           std::max(1e-12, std::abs(dense(i, j)));
        CHECK(rel < 1e-6);
      }
    }
  }
}

TEST_CASE("masked attention matches an exhaustive token-level softmax") {
  Rng rng(73);
  const SequenceLayout layout = build_layout(2, 5, 2, 3, BlockSize{2, 2, 2});
  const BlockMask mask = build_sparse_mask(layout, 1, false);
  const int n = static_cast<int>(layout.total_tokens());
  const Eigen::MatrixXd q = random_matrix(rng, n, 4);
  const Eigen::MatrixXd k = random_matrix(rng, n, 4);
  const Eigen::MatrixXd v = random_matrix(rng, n, 4);
  const Eigen::MatrixXd got = reference_attention(q, k, v, mask);
  const Eigen::MatrixXd want = oracle_masked_attention(q, k, v, mask);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("mask json and density csv serialize the layout") {
  const SequenceLayout layout = build_layout(3, 8, 4, 4);
  const BlockMask mask = build_sparse_mask(layout, 2, false);
  const std::string dir = testutil::temp_dir("mask");
  save_mask_json(dir + "/mask.json", mask);
  std::ifstream in(dir + "/mask.json");
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  CHECK(text.find("\"window\"") != std::string::npos);
  CHECK(text.find("\"bitset_base64\"") != std::string::npos);

  std::vector<DensityRow> rows;
  for (int T : {4, 8}) {
    DensityRow row;
    row.num_targets = T;
    row.allowed_pairs = allowed_frame_pairs(build_layout(3, T, 4, 4), 2);
    row.density = 0.5;
    rows.push_back(row);
  }
  save_density_csv(dir + "/density.csv", rows);
  std::ifstream csv(dir + "/density.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "T,allowed_pairs,density");
}
