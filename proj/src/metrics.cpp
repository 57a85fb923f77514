// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/metrics.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "egogen/error.hpp"
#include "egogen/simd/kernels.hpp"

namespace egogen::metrics {
namespace {

void require_same_dims(const RgbImage& a, const RgbImage& b) {
  require(a.height() == b.height() && a.width() == b.width(), ErrorCode::kShapeMismatch,
          fmt::format("image sizes differ: {}x{} vs {}x{}", a.width(), a.height(), b.width(),
                      b.height()));
  require(a.height() > 0 && a.width() > 0, ErrorCode::kInvalidArgument, "empty image");
}

std::vector<double> plane(const RgbImage& img, std::size_t c) {
  std::vector<double> out(img.height() * img.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.bytes()[3 * i + c];
  return out;
}

// Separable valid-mode filtering: rows first, then columns.
std::vector<double> filter2(const std::vector<double>& in, std::size_t h, std::size_t w,
                            const std::vector<double>& taps) {
  const auto& k = simd::active();
  const std::size_t n = taps.size(), ow = w - n + 1, oh = h - n + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) k.correlate_valid(&in[y * w], w, taps.data(), n, &rows[y * ow]);
  std::vector<double> col(h), colout(oh), out(oh * ow);
  for (std::size_t x = 0; x < ow; ++x) {
    for (std::size_t y = 0; y < h; ++y) col[y] = rows[y * ow + x];
    k.correlate_valid(col.data(), h, taps.data(), n, colout.data());
    for (std::size_t y = 0; y < oh; ++y) out[y * ow + x] = colout[y];
  }
  return out;
}

template <typename F>
std::vector<double> zip(const std::vector<double>& a, const std::vector<double>& b, F f) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

void require_same_length(std::size_t a, std::size_t b) {
  require(a == b, ErrorCode::kShapeMismatch, fmt::format("sequence lengths differ: {} vs {}", a, b));
  require(a > 0, ErrorCode::kInvalidArgument, "empty sequences");
}

}  // namespace

std::string to_json_line(const MetricReport& r) {
  const nlohmann::json j = {{"name", r.name},
                            {"value", r.value},
                            {"units", r.units},
                            {"frame_count", r.frame_count}};
  return j.dump();
}

double cam_err(const camera::Trajectory& a, const camera::Trajectory& b, std::size_t h,
               std::size_t w) {
  require(a.size() == b.size(), ErrorCode::kShapeMismatch,
          fmt::format("trajectory lengths differ: {} vs {}", a.size(), b.size()));
  require(!a.empty(), ErrorCode::kInvalidArgument, "cam_err needs at least one frame");
  require(h > 0 && w > 0, ErrorCode::kInvalidArgument, "cam_err grid must be non-empty");
  const auto na = camera::normalize_trajectory(a);
  const auto nb = camera::normalize_trajectory(b);
  double total = 0.0;
  for (std::size_t f = 0; f < na.size(); ++f) {
    const auto pa = camera::plucker_map(na[f].pose, na[f].K, h, w);
    const auto pb = camera::plucker_map(nb[f].pose, nb[f].K, h, w);
    double frame = 0.0;
    for (std::size_t v = 0; v < h; ++v) {
      for (std::size_t u = 0; u < w; ++u) frame += (pa.at(u, v) - pb.at(u, v)).norm();
    }
    total += frame / static_cast<double>(h * w);
  }
  return total / static_cast<double>(na.size());
}

double psnr(const RgbImage& a, const RgbImage& b, double peak) {
  require_same_dims(a, b);
  require(peak > 0.0, ErrorCode::kInvalidArgument, "psnr peak must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.bytes().size(); ++i) {
    const double d = static_cast<double>(a.bytes()[i]) - static_cast<double>(b.bytes()[i]);
    sq += d * d;
  }
  if (sq == 0.0) return kPsnrCap;
  const double mse = sq / static_cast<double>(a.bytes().size());
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

std::vector<double> gaussian_window(std::size_t n, double sigma) {
  require(n >= 1 && sigma > 0.0, ErrorCode::kInvalidArgument, "bad Gaussian window");
  std::vector<double> g(n);
  const double c = (static_cast<double>(n) - 1.0) / 2.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) - c;
    g[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    s += g[i];
  }
  for (auto& v : g) v /= s;
  return g;
}

double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::size_t h,
                  std::size_t w, const SsimOptions& opt) {
  require(a.size() == h * w && b.size() == h * w, ErrorCode::kShapeMismatch,
          "ssim planes do not match their dimensions");
  require(h >= opt.window && w >= opt.window, ErrorCode::kInvalidArgument,
          fmt::format("image {}x{} is smaller than the {}x{} SSIM window", w, h, opt.window,
                      opt.window));
  const auto g = gaussian_window(opt.window, opt.sigma);
  const double c1 = (opt.k1 * opt.peak) * (opt.k1 * opt.peak);
  const double c2 = (opt.k2 * opt.peak) * (opt.k2 * opt.peak);
  const auto mx = filter2(a, h, w, g);
  const auto my = filter2(b, h, w, g);
  const auto xx = filter2(zip(a, a, [](double p, double q) { return p * q; }), h, w, g);
  const auto yy = filter2(zip(b, b, [](double p, double q) { return p * q; }), h, w, g);
  const auto xy = filter2(zip(a, b, [](double p, double q) { return p * q; }), h, w, g);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = xx[i] - mx[i] * mx[i];
    const double vy = yy[i] - my[i] * my[i];
    const double cxy = xy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double ssim(const RgbImage& a, const RgbImage& b) {
  require_same_dims(a, b);
  double s = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    s += ssim_plane(plane(a, c), plane(b, c), a.height(), a.width());
  }
  return s / 3.0;
}

MetricReport psnr_report(const std::vector<RgbImage>& a, const std::vector<RgbImage>& b) {
  require_same_length(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += psnr(a[i], b[i]);
  return {"psnr", s / static_cast<double>(a.size()), "dB", a.size()};
}

MetricReport ssim_report(const std::vector<RgbImage>& a, const std::vector<RgbImage>& b) {
  require_same_length(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += ssim(a[i], b[i]);
  return {"ssim", s / static_cast<double>(a.size()), "", a.size()};
}

MetricReport cam_err_report(const camera::Trajectory& a, const camera::Trajectory& b,
                            std::size_t h, std::size_t w) {
  return {"cam_err", cam_err(a, b, h, w), "", a.size()};
}

}  // namespace egogen::metrics
