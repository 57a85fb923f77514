// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "egogen/error.hpp"

namespace egogen::cond {
namespace {

void require_latent(const Tensor& z, const char* what) {
  require(z.rank() == 4, ErrorCode::kShapeMismatch,
          fmt::format("{}: expected C x T x H' x W', got {}", what, shape_str(z.shape())));
}

// Space-to-depth of the stacked packs: rows (t, y', x') of width 24*8*8,
// features ordered (channel, dy, dx).
Tensor unshuffle(const std::vector<Tensor>& packs, std::size_t h, std::size_t w) {
  const std::size_t s = kSpatialStride;
  const std::size_t lh = h / s, lw = w / s;
  Tensor out({packs.size() * lh * lw, kPackChannels * s * s});
  double* o = out.data();
  for (const auto& pack : packs) {
    for (std::size_t y = 0; y < lh; ++y) {
      for (std::size_t x = 0; x < lw; ++x) {
        for (std::size_t c = 0; c < kPackChannels; ++c) {
          for (std::size_t dy = 0; dy < s; ++dy) {
            const double* src = pack.data() + (c * h + s * y + dy) * w + s * x;
            o = std::copy_n(src, s, o);
          }
        }
      }
    }
  }
  return out;
}

// Stride-p patches over channel-last rows (t, y, x) of width e; output rows
// (t, gy, gx), features ordered (channel, dy, dx).
std::vector<std::int64_t> channel_last_patch_index(std::size_t t, std::size_t h, std::size_t w,
                                                   std::size_t e, std::size_t p) {
  const std::size_t gh = h / p, gw = w / p;
  std::vector<std::int64_t> idx(t * gh * gw * e * p * p);
  std::size_t o = 0;
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t gy = 0; gy < gh; ++gy) {
      for (std::size_t gx = 0; gx < gw; ++gx) {
        for (std::size_t c = 0; c < e; ++c) {
          for (std::size_t dy = 0; dy < p; ++dy) {
            for (std::size_t dx = 0; dx < p; ++dx) {
              idx[o++] =
                  static_cast<std::int64_t>(((f * h + p * gy + dy) * w + p * gx + dx) * e + c);
            }
          }
        }
      }
    }
  }
  return idx;
}

}  // namespace

std::size_t latent_frames(std::size_t n) { return (n + kTemporalStride - 1) / kTemporalStride; }

std::vector<Tensor> pack_plucker(const std::vector<camera::PluckerMap>& maps, std::size_t n) {
  require(n >= 1 && maps.size() == n, ErrorCode::kInvalidArgument,
          fmt::format("pack_plucker: {} maps for frame count {}", maps.size(), n));
  const std::size_t h = maps[0].height(), w = maps[0].width();
  for (std::size_t i = 0; i < n; ++i) {
    require(maps[i].height() == h && maps[i].width() == w, ErrorCode::kShapeMismatch,
            fmt::format("pack_plucker: map {} is {}x{}, map 0 is {}x{}", i, maps[i].height(),
                        maps[i].width(), h, w));
  }
  const std::size_t plane = 6 * h * w;
  std::vector<Tensor> packs;
  for (std::size_t l = 0; l < latent_frames(n); ++l) {
    Tensor pack({kPackChannels, h, w});
    for (std::size_t k = 0; k < kTemporalStride; ++k) {
      const auto& src = maps[std::min(kTemporalStride * l + k, n - 1)].tensor();
      std::copy(src.values().begin(), src.values().end(), pack.data() + k * plane);
    }
    packs.push_back(std::move(pack));
  }
  return packs;
}

std::vector<Tensor> pack_plucker(const Tensor& stack) {
  require(stack.rank() == 4 && stack.dim(1) == 6 && stack.dim(0) >= 1, ErrorCode::kShapeMismatch,
          "pack_plucker: expected N x 6 x H x W, got " + shape_str(stack.shape()));
  const std::size_t n = stack.dim(0), h = stack.dim(2), w = stack.dim(3);
  std::vector<camera::PluckerMap> maps;
  for (std::size_t i = 0; i < n; ++i) {
    camera::PluckerMap m(h, w);
    std::copy_n(stack.data() + i * 6 * h * w, 6 * h * w, m.tensor().data());
    maps.push_back(std::move(m));
  }
  return pack_plucker(maps, n);
}

const Tensor& mock_projection() {
  static const Tensor proj = [] {
    std::mt19937_64 rng(0x6d6f636b5f656e63ull);
    Tensor p({kLatentChannels, 3});
    for (auto& v : p.values()) {
      v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
    return p;
  }();
  return proj;
}

Tensor mock_encode(const Tensor& frames) {
  require(frames.rank() == 4 && frames.dim(3) == 3 && frames.dim(0) >= 1, ErrorCode::kShapeMismatch,
          "mock_encode: expected N x H x W x 3, got " + shape_str(frames.shape()));
  const std::size_t n = frames.dim(0), h = frames.dim(1), w = frames.dim(2);
  const std::size_t s = kSpatialStride;
  require(h % s == 0 && w % s == 0 && h > 0 && w > 0, ErrorCode::kInvalidArgument,
          fmt::format("mock_encode: {}x{} frames are not divisible by {}", h, w, s));
  const std::size_t t = latent_frames(n), lh = h / s, lw = w / s;
  const Tensor& proj = mock_projection();
  Tensor out({kLatentChannels, t, lh, lw});
  std::vector<double> mean(3);
  for (std::size_t l = 0; l < t; ++l) {
    for (std::size_t y = 0; y < lh; ++y) {
      for (std::size_t x = 0; x < lw; ++x) {
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t k = 0; k < kTemporalStride; ++k) {
          const std::size_t f = std::min(kTemporalStride * l + k, n - 1);
          for (std::size_t dy = 0; dy < s; ++dy) {
            for (std::size_t dx = 0; dx < s; ++dx) {
              const double* px = frames.data() + ((f * h + s * y + dy) * w + s * x + dx) * 3;
              for (int c = 0; c < 3; ++c) mean[c] += px[c];
            }
          }
        }
        for (auto& m : mean) m /= static_cast<double>(kTemporalStride * s * s);
        for (std::size_t c = 0; c < kLatentChannels; ++c) {
          out.at({c, l, y, x}) = proj.at({c, 0}) * mean[0] + proj.at({c, 1}) * mean[1] +
                                 proj.at({c, 2}) * mean[2];
        }
      }
    }
  }
  return out;
}

Tensor frames_tensor(const std::vector<RgbImage>& frames) {
  require(!frames.empty(), ErrorCode::kInvalidArgument, "no frames");
  const std::size_t h = frames[0].height(), w = frames[0].width();
  Tensor out({frames.size(), h, w, 3});
  for (std::size_t i = 0; i < frames.size(); ++i) {
    require(frames[i].height() == h && frames[i].width() == w, ErrorCode::kShapeMismatch,
            fmt::format("frame {} is {}x{}, frame 0 is {}x{}", i, frames[i].height(),
                        frames[i].width(), h, w));
    const auto& bytes = frames[i].bytes();
    for (std::size_t j = 0; j < bytes.size(); ++j) {
      out[i * h * w * 3 + j] = static_cast<double>(bytes[j]) / 255.0;
    }
  }
  return out;
}

Tensor mock_encode(const std::vector<RgbImage>& frames) { return mock_encode(frames_tensor(frames)); }

Tensor build_reference_latent(const Tensor& scene, std::size_t t) {
  require(t >= 1, ErrorCode::kInvalidArgument, "reference latent needs at least one frame");
  Tensor one = scene.rank() == 3 ? scene.reshaped({1, scene.dim(0), scene.dim(1), scene.dim(2)})
                                 : scene;
  require(one.rank() == 4 && one.dim(0) == 1, ErrorCode::kShapeMismatch,
          "reference scene must be H x W x 3, got " + shape_str(scene.shape()));
  const Tensor enc = mock_encode(one);
  const std::size_t c = enc.dim(0), lh = enc.dim(2), lw = enc.dim(3);
  Tensor out({c, t, lh, lw});
  for (std::size_t ch = 0; ch < c; ++ch) {
    std::copy_n(enc.data() + ch * lh * lw, lh * lw, out.data() + ch * t * lh * lw);
  }
  return out;
}

Tensor build_reference_latent(const RgbImage& scene, std::size_t t) {
  return build_reference_latent(frames_tensor({scene}), t);
}

Tensor build_input_latent(const Tensor& z_noisy, const Tensor& z_hand, const Tensor& z_ref) {
  require_latent(z_noisy, "input latent");
  require(z_noisy.shape() == z_hand.shape() && z_noisy.shape() == z_ref.shape(),
          ErrorCode::kShapeMismatch,
          fmt::format("input latent parts differ: noisy {} hand {} ref {}",
                      shape_str(z_noisy.shape()), shape_str(z_hand.shape()),
                      shape_str(z_ref.shape())));
  Shape s = z_noisy.shape();
  s[0] *= 3;
  std::vector<double> data;
  data.reserve(shape_numel(s));
  for (const Tensor* z : {&z_noisy, &z_hand, &z_ref}) {
    data.insert(data.end(), z->storage().begin(), z->storage().end());
  }
  return Tensor(std::move(s), std::move(data));
}

Tensor TokenGrid::to_dthw() const {
  const std::size_t d = dim(), n = frames * grid_h * grid_w;
  Tensor out({d, frames, grid_h, grid_w});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < d; ++k) out[k * n + r] = rows[r * d + k];
  }
  return out;
}

std::vector<std::int64_t> patch_index(std::size_t c, std::size_t t, std::size_t h,
                                      std::size_t w, std::size_t p) {
  require(p > 0 && h % p == 0 && w % p == 0, ErrorCode::kInvalidArgument,
          fmt::format("latent {}x{} is not divisible by patch size {}", h, w, p));
  const std::size_t gh = h / p, gw = w / p;
  std::vector<std::int64_t> idx(t * gh * gw * c * p * p);
  std::size_t o = 0;
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t gy = 0; gy < gh; ++gy) {
      for (std::size_t gx = 0; gx < gw; ++gx) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t dy = 0; dy < p; ++dy) {
            for (std::size_t dx = 0; dx < p; ++dx) {
              idx[o++] =
                  static_cast<std::int64_t>(((ch * t + f) * h + p * gy + dy) * w + p * gx + dx);
            }
          }
        }
      }
    }
  }
  return idx;
}

TokenGrid patch_embed(const Tensor& z_in, const Tensor& w, const Tensor& b) {
  require_latent(z_in, "patch_embed");
  const std::size_t c = z_in.dim(0), t = z_in.dim(1), h = z_in.dim(2), wd = z_in.dim(3);
  const std::size_t p = kPatch;
  require(w.rank() == 2 && w.dim(0) == c * p * p && b.numel() == w.dim(1),
          ErrorCode::kShapeMismatch,
          fmt::format("patch_embed: weights {} / bias {} for {} input channels",
                      shape_str(w.shape()), shape_str(b.shape()), c));
  ad::Tape tape;
  auto idx = std::make_shared<const std::vector<std::int64_t>>(patch_index(c, t, h, wd, p));
  const std::size_t rows = t * (h / p) * (wd / p);
  ad::Var x = ad::gather(tape.constant(z_in), idx, {rows, c * p * p});
  ad::Var y = ad::add_row(ad::matmul(x, tape.constant(w)), tape.constant(b));
  return TokenGrid{y.value(), t, h / p, wd / p};
}

AdapterParams init_adapter(const AdapterConfig& cfg, std::mt19937_64& rng) {
  require(cfg.dim > 0 && cfg.proj_width > 0, ErrorCode::kInvalidArgument,
          "adapter widths must be positive");
  const std::size_t d = cfg.dim, e = cfg.proj_width, hid = cfg.hidden ? cfg.hidden : d;
  const std::size_t in = kPackChannels * kSpatialStride * kSpatialStride;
  const std::size_t pp = kPatch * kPatch;
  AdapterParams a{cfg, {}};
  auto& ps = a.params;
  ps.add("proj.w", randn({in, e}, rng, 1.0 / std::sqrt(static_cast<double>(in))));
  ps.add("proj.b", Tensor({e}));
  ps.add("conv.w", randn({e * pp, d}, rng, 1.0 / std::sqrt(static_cast<double>(e * pp))));
  ps.add("conv.b", Tensor({d}));
  ps.add("res.w1", randn({d, hid}, rng, 1.0 / std::sqrt(static_cast<double>(d))));
  ps.add("res.b1", Tensor({hid}));
  ps.add("res.w2", randn({hid, d}, rng, 1.0 / std::sqrt(static_cast<double>(hid))));
  ps.add("res.b2", Tensor({d}));
  ps.add("out.w", Tensor({d, d}));
  ps.add("out.b", Tensor({d}));
  return a;
}

void validate(const AdapterParams& a) {
  const auto& c = a.cfg;
  const std::size_t d = c.dim, e = c.proj_width, hid = c.hidden ? c.hidden : d;
  const std::size_t in = kPackChannels * kSpatialStride * kSpatialStride;
  const std::size_t pp = kPatch * kPatch;
  const std::vector<std::pair<const char*, Shape>> expect = {
      {"proj.w", {in, e}}, {"proj.b", {e}},    {"conv.w", {e * pp, d}}, {"conv.b", {d}},
      {"res.w1", {d, hid}}, {"res.b1", {hid}}, {"res.w2", {hid, d}},    {"res.b2", {d}},
      {"out.w", {d, d}},   {"out.b", {d}}};
  require(a.params.size() == expect.size(), ErrorCode::kShapeMismatch,
          fmt::format("adapter has {} tensors, expected {}", a.params.size(), expect.size()));
  for (const auto& [name, shape] : expect) {
    require(a.params.contains(name), ErrorCode::kShapeMismatch,
            fmt::format("adapter is missing '{}'", name));
    require(a.params.get(name).shape() == shape, ErrorCode::kShapeMismatch,
            fmt::format("adapter '{}' is {}, expected {}", name,
                        shape_str(a.params.get(name).shape()), shape_str(shape)));
  }
  require(a.params.all_finite(), ErrorCode::kNonFinite, "adapter parameters are not finite");
}

ad::Var camera_tokens(ad::Tape& tape, const VarSet& v, const AdapterConfig& cfg,
                      const std::vector<Tensor>& packs) {
  require(!packs.empty(), ErrorCode::kInvalidArgument, "camera adapter: no packs");
  const std::size_t h = packs[0].rank() == 3 ? packs[0].dim(1) : 0;
  const std::size_t w = packs[0].rank() == 3 ? packs[0].dim(2) : 0;
  const std::size_t step = kSpatialStride * kPatch;
  require(h > 0 && w > 0 && h % step == 0 && w % step == 0, ErrorCode::kShapeMismatch,
          fmt::format("camera adapter: pack {} must be 24 x H x W with H, W divisible by {}",
                      shape_str(packs[0].shape()), step));
  const std::size_t t = packs.size();
  for (std::size_t i = 0; i < t; ++i) {
    require(packs[i].shape() == Shape{kPackChannels, h, w}, ErrorCode::kShapeMismatch,
            fmt::format("camera adapter: pack {} is {}, pack 0 is {}", i,
                        shape_str(packs[i].shape()), shape_str(packs[0].shape())));
  }
  const std::size_t lh = h / kSpatialStride, lw = w / kSpatialStride;
  const std::size_t e = cfg.proj_width;

  ad::Var x = tape.constant(unshuffle(packs, h, w));
  x = ad::add_row(ad::matmul(x, v["proj.w"]), v["proj.b"]);

  const std::size_t rows = t * (lh / kPatch) * (lw / kPatch);
  auto conv = std::make_shared<const std::vector<std::int64_t>>(
      channel_last_patch_index(t, lh, lw, e, kPatch));
  x = ad::gather(x, conv, {rows, e * kPatch * kPatch});
  ad::Var c = ad::add_row(ad::matmul(x, v["conv.w"]), v["conv.b"]);

  ad::Var r = ad::silu(ad::add_row(ad::matmul(c, v["res.w1"]), v["res.b1"]));
  r = ad::add(c, ad::add_row(ad::matmul(r, v["res.w2"]), v["res.b2"]));
  return ad::add_row(ad::matmul(r, v["out.w"]), v["out.b"]);
}

TokenGrid camera_adapter_forward(const AdapterParams& params, const std::vector<Tensor>& packs) {
  validate(params);
  ad::Tape tape;
  VarSet vars(tape, params.params, false);
  ad::Var y = camera_tokens(tape, vars, params.cfg, packs);
  const std::size_t h = packs[0].dim(1), w = packs[0].dim(2);
  const std::size_t step = kSpatialStride * kPatch;
  return TokenGrid{y.value(), packs.size(), h / step, w / step};
}

TokenGrid inject(const TokenGrid& tokens, const TokenGrid& camera) {
  require(tokens.rows.shape() == camera.rows.shape() && tokens.frames == camera.frames &&
              tokens.grid_h == camera.grid_h && tokens.grid_w == camera.grid_w,
          ErrorCode::kShapeMismatch,
          fmt::format("inject: token grid {} vs camera grid {}", shape_str(tokens.rows.shape()),
                      shape_str(camera.rows.shape())));
  TokenGrid out = tokens;
  out.rows += camera.rows;
  return out;
}

}  // namespace egogen::cond
