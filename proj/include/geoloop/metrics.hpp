#pragma once

#include <string>
#include <vector>

#include "geoloop/image.hpp"

namespace geoloop {

// Mean squared error over all pixels and channels, in 8-bit units.
double mse(const ImageRGB& a, const ImageRGB& b);

// 10*log10(255^2 / MSE), capped at 99.0 (the cap is also the value reported
// for identical images). Throws SchemaError on dimension mismatch.
double psnr(const ImageRGB& a, const ImageRGB& b);

// Structural similarity with the standard 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, L = 255. Statistics are computed with a separable
// Gaussian filter over the valid region (no padding) and averaged over
// channels. Requires both dimensions >= 11.
double ssim(const ImageRGB& a, const ImageRGB& b);

struct FrameScore {
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalSummary {
  std::vector<FrameScore> frames;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

// Per-frame and mean PSNR/SSIM. Frame counts and dimensions must match.
EvalSummary evaluate(const std::vector<ImageRGB>& generated,
                     const std::vector<ImageRGB>& truth);

// CSV: frame,psnr,ssim (one row per frame).
void save_eval_csv(const std::string& path, const EvalSummary& summary);
// JSON: {mean_psnr, mean_ssim, frames: [{psnr, ssim}, ...]}.
void save_eval_json(const std::string& path, const EvalSummary& summary);

}  // namespace geoloop
