#include "geoloop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"

namespace geoloop {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

void check_same_dims(const ImageRGB& a, const ImageRGB& b) {
  if (a.width != b.width || a.height != b.height) {
    throw SchemaError("image dimension mismatch: " + std::to_string(a.width) +
                      "x" + std::to_string(a.height) + " vs " +
                      std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

std::vector<double> gaussian_kernel() {
  std::vector<double> k(kWin);
  const int half = kWin / 2;
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - half;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-region separable Gaussian correlation of a w*h plane. Output is
// (w - kWin + 1) x (h - kWin + 1).
std::vector<double> filter_valid(const std::vector<double>& plane, int w,
                                 int h) {
  static const std::vector<double> kern = gaussian_kernel();
  const int ow = w - kWin + 1;
  const int oh = h - kWin + 1;
  std::vector<double> horiz(static_cast<std::size_t>(ow) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) {
        acc += kern[static_cast<std::size_t>(i)] *
               plane[static_cast<std::size_t>(y) * w + x + i];
      }
      horiz[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) {
        acc += kern[static_cast<std::size_t>(i)] *
               horiz[static_cast<std::size_t>(y + i) * ow + x];
      }
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

double ssim_channel(const ImageRGB& a, const ImageRGB& b, int c) {
  const int w = a.width;
  const int h = a.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double va = a.data[i * 3 + static_cast<std::size_t>(c)];
    const double vb = b.data[i * 3 + static_cast<std::size_t>(c)];
    pa[i] = va;
    pb[i] = vb;
    paa[i] = va * va;
    pbb[i] = vb * vb;
    pab[i] = va * vb;
  }
  const std::vector<double> mu_a = filter_valid(pa, w, h);
  const std::vector<double> mu_b = filter_valid(pb, w, h);
  const std::vector<double> m_aa = filter_valid(paa, w, h);
  const std::vector<double> m_bb = filter_valid(pbb, w, h);
  const std::vector<double> m_ab = filter_valid(pab, w, h);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double var_a = m_aa[i] - ma * ma;
    const double var_b = m_bb[i] - mb * mb;
    const double cov = m_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
             ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

double mse(const ImageRGB& a, const ImageRGB& b) {
  check_same_dims(a, b);
  if (a.data.empty()) throw SchemaError("mse: empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

double psnr(const ImageRGB& a, const ImageRGB& b) {
  const double err = mse(a, b);
  if (err <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(255.0 * 255.0 / err));
}

double ssim(const ImageRGB& a, const ImageRGB& b) {
  check_same_dims(a, b);
  if (a.width < kWin || a.height < kWin) {
    throw SchemaError("ssim requires images at least 11x11, got " +
                      std::to_string(a.width) + "x" + std::to_string(a.height));
  }
  double total = 0.0;
  for (int c = 0; c < 3; ++c) total += ssim_channel(a, b, c);
  return total / 3.0;
}

EvalSummary evaluate(const std::vector<ImageRGB>& generated,
                     const std::vector<ImageRGB>& truth) {
  if (generated.size() != truth.size()) {
    throw SchemaError("evaluate: frame count mismatch, " +
                      std::to_string(generated.size()) + " vs " +
                      std::to_string(truth.size()));
  }
  if (generated.empty()) throw SchemaError("evaluate: no frames");
  EvalSummary summary;
  summary.frames.reserve(generated.size());
  for (std::size_t i = 0; i < generated.size(); ++i) {
    FrameScore fs;
    fs.psnr = psnr(generated[i], truth[i]);
    fs.ssim = ssim(generated[i], truth[i]);
    summary.frames.push_back(fs);
    summary.mean_psnr += fs.psnr;
    summary.mean_ssim += fs.ssim;
  }
  summary.mean_psnr /= static_cast<double>(summary.frames.size());
  summary.mean_ssim /= static_cast<double>(summary.frames.size());
  return summary;
}

void save_eval_csv(const std::string& path, const EvalSummary& summary) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(12);
  out << "frame,psnr,ssim\n";
  for (std::size_t i = 0; i < summary.frames.size(); ++i) {
    out << i << "," << summary.frames[i].psnr << "," << summary.frames[i].ssim
        << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_eval_json(const std::string& path, const EvalSummary& summary) {
  Json frames = Json::array();
  for (const FrameScore& fs : summary.frames) {
    frames.push_back({{"psnr", fs.psnr}, {"ssim", fs.ssim}});
  }
  Json j;
  j["mean_psnr"] = summary.mean_psnr;
  j["mean_ssim"] = summary.mean_ssim;
  j["frames"] = frames;
  save_json_file(path, j);
}

}  // namespace geoloop
