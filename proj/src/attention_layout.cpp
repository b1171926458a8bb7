#include "geoloop/attention_layout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"

namespace geoloop {

int SequenceLayout::block_of_token(std::int64_t token) const {
  const int frame = frame_of_token(token);
  const std::int64_t within = token % tokens_per_frame();
  const int row = static_cast<int>(within / w_tokens);
  const int col = static_cast<int>(within % w_tokens);
  const int tb = frame / block.t;
  const int hb = row / block.h;
  const int wb = col / block.w;
  return (tb * h_blocks() + hb) * w_blocks() + wb;
}

std::vector<std::string> SequenceLayout::channel_roles(int frame) const {
  if (role(frame) == FrameRole::kReference) {
    return {"clean_image"};
  }
  return {"noisy_latent", "render_rgb", "visibility_mask"};
}

SequenceLayout build_layout(int num_refs, int num_targets, int h_tokens,
                            int w_tokens, BlockSize block) {
  if (num_targets < 1) throw SchemaError("build_layout: zero targets");
  if (num_refs < 0) throw SchemaError("build_layout: negative ref count");
  if (h_tokens < 1 || w_tokens < 1) {
    throw SchemaError("build_layout: token grid dims must be >= 1");
  }
  if (block.t < 1 || block.h < 1 || block.w < 1) {
    throw SchemaError("build_layout: block dims must be >= 1");
  }
  SequenceLayout layout;
  layout.num_refs = num_refs;
  layout.num_targets = num_targets;
  layout.h_tokens = h_tokens;
  layout.w_tokens = w_tokens;
  layout.block = block;
  return layout;
}

bool frames_attend(const SequenceLayout& layout, int window,
                   bool refs_attend_targets, int query_frame, int key_frame) {
  if (window < 0) throw SchemaError("frames_attend: window must be >= 0");
  const int refs = layout.num_refs;
  const int targets = layout.num_targets;
  const bool q_is_ref = query_frame < refs;
  const bool k_is_ref = key_frame < refs;
  if (q_is_ref) {
    return k_is_ref ? true : refs_attend_targets;
  }
  if (k_is_ref) return true;  // global memory is always visible to targets
  const int qn = query_frame - refs;
  const int kn = key_frame - refs;
  // Constant-width window: every target attends min(T, 2w+1) targets, the
  // window sliding inward at the sequence edges.
  const int win = std::min<std::int64_t>(targets, 2ll * window + 1);
  const int lo = std::clamp(qn - window, 0, targets - static_cast<int>(win));
  return kn >= lo && kn < lo + static_cast<int>(win);
}

std::uint64_t allowed_frame_pairs(const SequenceLayout& layout, int window,
                                  bool refs_attend_targets) {
  std::uint64_t count = 0;
  const int frames = layout.frames();
  for (int q = 0; q < frames; ++q) {
    for (int k = 0; k < frames; ++k) {
      if (frames_attend(layout, window, refs_attend_targets, q, k)) ++count;
    }
  }
  return count;
}

BlockMask build_sparse_mask(const SequenceLayout& layout, int window,
                            bool refs_attend_targets) {
  BlockMask mask;
  mask.layout = layout;
  mask.window = window;
  mask.refs_attend_targets = refs_attend_targets;
  const int tb = layout.temporal_blocks();
  const int sb = layout.spatial_blocks();
  const int total = layout.total_blocks();
  mask.allowed.assign(static_cast<std::size_t>(total) * total, 0);

  // The relation only depends on temporal blocks; compute it once and expand
  // over the spatial blocks.
  std::vector<std::uint8_t> temporal(static_cast<std::size_t>(tb) * tb, 0);
  const int frames = layout.frames();
  for (int qb = 0; qb < tb; ++qb) {
    const int qlo = qb * layout.block.t;
    const int qhi = std::min(frames, qlo + layout.block.t);
    for (int kb = 0; kb < tb; ++kb) {
      const int klo = kb * layout.block.t;
      const int khi = std::min(frames, klo + layout.block.t);
      bool any = false;
      for (int qf = qlo; qf < qhi && !any; ++qf) {
        for (int kf = klo; kf < khi; ++kf) {
          if (frames_attend(layout, window, refs_attend_targets, qf, kf)) {
            any = true;
            break;
          }
        }
      }
      temporal[static_cast<std::size_t>(qb) * tb + kb] = any ? 1 : 0;
    }
  }
  for (int qtb = 0; qtb < tb; ++qtb) {
    for (int qs = 0; qs < sb; ++qs) {
      const int qblock = qtb * sb + qs;
      for (int ktb = 0; ktb < tb; ++ktb) {
        if (!temporal[static_cast<std::size_t>(qtb) * tb + ktb]) continue;
        for (int ks = 0; ks < sb; ++ks) {
          mask.allowed[static_cast<std::size_t>(qblock) * total + ktb * sb +
                       ks] = 1;
        }
      }
    }
  }
  return mask;
}

std::uint64_t BlockMask::allowed_count() const {
  std::uint64_t n = 0;
  for (std::uint8_t a : allowed) n += a;
  return n;
}

MaskDensity mask_density(const BlockMask& mask) {
  MaskDensity d;
  const int total = mask.layout.total_blocks();
  d.attended_hist.resize(total, 0);
  std::uint64_t allowed = 0;
  for (int q = 0; q < total; ++q) {
    int row = 0;
    for (int k = 0; k < total; ++k) {
      if (mask.allowed_pair(q, k)) ++row;
    }
    d.attended_hist[q] = row;
    allowed += row;
  }
  d.density = static_cast<double>(allowed) /
              (static_cast<double>(total) * static_cast<double>(total));
  return d;
}

Eigen::MatrixXd reference_attention(const Eigen::MatrixXd& queries,
                                    const Eigen::MatrixXd& keys,
                                    const Eigen::MatrixXd& values,
                                    const BlockMask& mask) {
  const std::int64_t tokens = mask.layout.total_tokens();
  if (queries.rows() != tokens || keys.rows() != tokens ||
      values.rows() != tokens) {
    throw SchemaError("reference_attention: token count does not match layout");
  }
  if (queries.cols() != keys.cols()) {
    throw SchemaError("reference_attention: query/key dim mismatch");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(queries.cols()));
  std::vector<int> token_block(static_cast<std::size_t>(tokens));
  for (std::int64_t t = 0; t < tokens; ++t) {
    token_block[static_cast<std::size_t>(t)] = mask.layout.block_of_token(t);
  }

  Eigen::MatrixXd out(tokens, values.cols());
  std::vector<std::int64_t> allowed_keys;
  std::vector<double> logits;
  for (std::int64_t i = 0; i < tokens; ++i) {
    const int qb = token_block[static_cast<std::size_t>(i)];
    allowed_keys.clear();
    logits.clear();
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < tokens; ++j) {
      if (!mask.allowed_pair(qb, token_block[static_cast<std::size_t>(j)])) {
        continue;
      }
      const double l = queries.row(i).dot(keys.row(j)) * scale;
      allowed_keys.push_back(j);
      logits.push_back(l);
      max_logit = std::max(max_logit, l);
    }
    // The self-attend invariant guarantees at least one allowed key.
    double denom = 0.0;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(values.cols());
    for (std::size_t k = 0; k < allowed_keys.size(); ++k) {
      const double p = std::exp(logits[k] - max_logit);
      denom += p;
      acc += p * values.row(allowed_keys[k]);
    }
    out.row(i) = acc / denom;
  }
  return out;
}

Eigen::MatrixXd dense_attention(const Eigen::MatrixXd& queries,
                                const Eigen::MatrixXd& keys,
                                const Eigen::MatrixXd& values) {
  if (queries.cols() != keys.cols() || keys.rows() != values.rows()) {
    throw SchemaError("dense_attention: dimension mismatch");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(queries.cols()));
  Eigen::MatrixXd out(queries.rows(), values.cols());
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    Eigen::VectorXd logits = keys * queries.row(i).transpose() * scale;
    const double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp();
    p /= p.sum();
    out.row(i) = p.transpose() * values;
  }
  return out;
}

namespace {

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
    i += 3;
  }
  const std::size_t rem = bytes.size() - i;
  if (rem == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.append("==");
  } else if (rem == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

}  // namespace

void save_mask_json(const std::string& path, const BlockMask& mask) {
  // Pack the row-major boolean matrix into a bitset, MSB-first per byte.
  const std::size_t n = mask.allowed.size();
  std::vector<std::uint8_t> bits((n + 7) / 8, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.allowed[i]) bits[i / 8] |= static_cast<std::uint8_t>(0x80 >> (i % 8));
  }
  Json j;
  j["refs"] = mask.layout.num_refs;
  j["targets"] = mask.layout.num_targets;
  j["grid"] = {mask.layout.h_tokens, mask.layout.w_tokens};
  j["block_size"] = {mask.layout.block.t, mask.layout.block.h,
                     mask.layout.block.w};
  j["window"] = mask.window;
  j["refs_attend_targets"] = mask.refs_attend_targets;
  j["total_blocks"] = mask.layout.total_blocks();
  j["bitset_base64"] = base64_encode(bits);
  save_json_file(path, j);
}

void save_density_csv(const std::string& path,
                      const std::vector<DensityRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "T,allowed_pairs,density\n";
  for (const DensityRow& r : rows) {
    out << r.num_targets << "," << r.allowed_pairs << "," << r.density << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace geoloop
