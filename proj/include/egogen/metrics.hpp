// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "egogen/camera.hpp"
#include "egogen/image.hpp"

namespace egogen::metrics {

inline constexpr double kPsnrCap = 99.0;  // reported for identical images

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::string units;  // "dB" or "" for dimensionless
  std::size_t frame_count = 0;
};

/// One JSON object per report, no trailing newline.
std::string to_json_line(const MetricReport& r);

/// Mean Euclidean distance between Plücker 6-vectors on an h x w grid of
/// integer pixel positions, after normalizing both trajectories to their
/// first frame. Each trajectory uses its own intrinsics.
double cam_err(const camera::Trajectory& a, const camera::Trajectory& b, std::size_t h = 16,
               std::size_t w = 16);

/// 10 log10(peak^2 / MSE) over all channels, capped at kPsnrCap.
double psnr(const RgbImage& a, const RgbImage& b, double peak = 255.0);

/// Mean structural similarity over every valid 11 x 11 Gaussian window
/// (sigma 1.5), computed per channel and averaged.
double ssim(const RgbImage& a, const RgbImage& b);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 255.0;
};
/// Single-channel SSIM over row-major h x w planes.
double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::size_t h,
                  std::size_t w, const SsimOptions& opt = {});

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_window(std::size_t n, double sigma);

/// Frame-averaged reports over equal-length sequences.
MetricReport psnr_report(const std::vector<RgbImage>& a, const std::vector<RgbImage>& b);
MetricReport ssim_report(const std::vector<RgbImage>& a, const std::vector<RgbImage>& b);
MetricReport cam_err_report(const camera::Trajectory& a, const camera::Trajectory& b,
                            std::size_t h = 16, std::size_t w = 16);

}  // namespace egogen::metrics
