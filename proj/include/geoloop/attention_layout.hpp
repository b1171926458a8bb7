#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace geoloop {

struct BlockSize {
  int t = 2;
  int h = 8;
  int w = 8;
};

enum class FrameRole { kReference, kTarget };

// Token-sequence layout for one generation chunk: R reference frames
// prepended as global memory, then T target frames. One sequence position per
// frame (no temporal pooling); each frame is an h_tokens x w_tokens grid.
struct SequenceLayout {
  int num_refs = 0;
  int num_targets = 0;
  int h_tokens = 0;
  int w_tokens = 0;
  BlockSize block;

  int frames() const { return num_refs + num_targets; }
  FrameRole role(int frame) const {
    return frame < num_refs ? FrameRole::kReference : FrameRole::kTarget;
  }
  // Partial blocks at the edges are padded virtually: ceil over each axis.
  int temporal_blocks() const { return (frames() + block.t - 1) / block.t; }
  int h_blocks() const { return (h_tokens + block.h - 1) / block.h; }
  int w_blocks() const { return (w_tokens + block.w - 1) / block.w; }
  int spatial_blocks() const { return h_blocks() * w_blocks(); }
  int total_blocks() const { return temporal_blocks() * spatial_blocks(); }
  std::int64_t tokens_per_frame() const {
    return static_cast<std::int64_t>(h_tokens) * w_tokens;
  }
  std::int64_t total_tokens() const { return tokens_per_frame() * frames(); }

  // Token order: frame-major, then row, then column.
  int frame_of_token(std::int64_t token) const {
    return static_cast<int>(token / tokens_per_frame());
  }
  int block_of_token(std::int64_t token) const;

  // Conditioning channels each frame carries, per the channel-concatenation
  // scheme: targets hold the noisy latent plus render and visibility-mask
  // channels, references hold clean image channels.
  std::vector<std::string> channel_roles(int frame) const;
};

// Throws SchemaError on zero targets or non-positive grid/block dims.
SequenceLayout build_layout(int num_refs, int num_targets, int h_tokens,
                            int w_tokens, BlockSize block = BlockSize{});

// Frame-level attention relation:
//   - a target frame attends to every reference frame and to the
//     min(T, 2*window+1) nearest target frames (the window slides inward at
//     the sequence edges so every target keeps the same receptive-field size);
//   - a reference frame attends to all reference frames, and to targets only
//     when refs_attend_targets is set.
bool frames_attend(const SequenceLayout& layout, int window,
                   bool refs_attend_targets, int query_frame, int key_frame);

// Number of allowed (query frame, key frame) pairs under the relation above.
std::uint64_t allowed_frame_pairs(const SequenceLayout& layout, int window,
                                  bool refs_attend_targets = false);

// Block-level mask: a (query block, key block) pair is allowed iff any frame
// spanned by the query block attends any frame spanned by the key block.
struct BlockMask {
  SequenceLayout layout;
  int window = 8;
  bool refs_attend_targets = false;
  std::vector<std::uint8_t> allowed;  // total_blocks^2, row-major

  bool allowed_pair(int query_block, int key_block) const {
    return allowed[static_cast<std::size_t>(query_block) *
                       layout.total_blocks() +
                   key_block] != 0;
  }
  std::uint64_t allowed_count() const;
};

BlockMask build_sparse_mask(const SequenceLayout& layout, int window = 8,
                            bool refs_attend_targets = false);

struct MaskDensity {
  double density = 0.0;            // allowed pairs / total pairs
  std::vector<int> attended_hist;  // attended key blocks per query block
};
MaskDensity mask_density(const BlockMask& mask);

// Desk-scale semantic reference for the mask: scaled dot-product attention
// with a numerically stable masked softmax. Rows are tokens in layout order.
Eigen::MatrixXd reference_attention(const Eigen::MatrixXd& queries,
                                    const Eigen::MatrixXd& keys,
                                    const Eigen::MatrixXd& values,
                                    const BlockMask& mask);

// Unmasked counterpart, for equivalence checks.
Eigen::MatrixXd dense_attention(const Eigen::MatrixXd& queries,
                                const Eigen::MatrixXd& keys,
                                const Eigen::MatrixXd& values);

// JSON header {R, T, grid, block_size, window, refs_attend_targets} plus the
// row-major mask bitset, base64-encoded.
void save_mask_json(const std::string& path, const BlockMask& mask);

struct DensityRow {
  int num_targets = 0;
  std::uint64_t allowed_pairs = 0;  // frame-level pairs
  double density = 0.0;             // block-level mask density
};
// CSV: T,allowed_pairs,density
void save_density_csv(const std::string& path,
                      const std::vector<DensityRow>& rows);

}  // namespace geoloop
