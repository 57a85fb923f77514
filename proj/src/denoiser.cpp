// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <tuple>

#include <fmt/format.h>

#include "egogen/error.hpp"

namespace egogen::gen {
namespace {

using Index = std::shared_ptr<const std::vector<std::int64_t>>;

constexpr const char* kLoraWeights[] = {"wq", "wk", "wv", "w1", "w2"};

std::string blk(std::size_t l, const char* name) { return fmt::format("blk{}.{}", l, name); }

Index unpatch_index(std::size_t c, std::size_t t, std::size_t h, std::size_t w) {
  const auto fwd = cond::patch_index(c, t, h, w);
  auto inv = std::make_shared<std::vector<std::int64_t>>(fwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    (*inv)[static_cast<std::size_t>(fwd[i])] = static_cast<std::int64_t>(i);
  }
  return inv;
}

Index frame_rows_index(std::size_t t, std::size_t columns, std::size_t d) {
  auto idx = std::make_shared<std::vector<std::int64_t>>(t * columns * d);
  std::size_t o = 0;
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t c = 0; c < columns; ++c) {
      for (std::size_t k = 0; k < d; ++k) (*idx)[o++] = static_cast<std::int64_t>(f * d + k);
    }
  }
  return idx;
}

void require_latent_like(const Tensor& t, const Shape& shape, const char* what) {
  require(t.shape() == shape, ErrorCode::kShapeMismatch,
          fmt::format("{} is {}, expected {}", what, shape_str(t.shape()), shape_str(shape)));
}

}  // namespace

std::vector<std::string> lora_targets(const DenoiserConfig& cfg) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < cfg.blocks; ++l) {
    for (const char* w : kLoraWeights) out.push_back(blk(l, w));
  }
  return out;
}

namespace {

// Name, shape and init scale (1/sqrt(fan_in), or 0 for zero init).
std::vector<std::tuple<std::string, Shape, double>> base_layout(const DenoiserConfig& cfg) {
  require(cfg.channels > 0 && cfg.dim > 0 && cfg.blocks > 0 && cfg.ffn_mult > 0 &&
              cfg.time_features > 0 && cfg.time_features % 2 == 0,
          ErrorCode::kInvalidArgument, "denoiser config: sizes must be positive, time features even");
  const std::size_t c = cfg.channels, d = cfg.dim, f = cfg.ffn_mult * d;
  const std::size_t pp = cond::kPatch * cond::kPatch;
  auto s = [](std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
  std::vector<std::tuple<std::string, Shape, double>> out;
  out.emplace_back("embed.w", Shape{3 * c * pp, d}, s(3 * c * pp));
  out.emplace_back("embed.b", Shape{d}, 0.0);
  out.emplace_back("time.w", Shape{cfg.time_features, d}, s(cfg.time_features));
  for (std::size_t l = 0; l < cfg.blocks; ++l) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) out.emplace_back(blk(l, w), Shape{d, d}, s(d));
    out.emplace_back(blk(l, "w1"), Shape{d, f}, s(d));
    out.emplace_back(blk(l, "b1"), Shape{f}, 0.0);
    out.emplace_back(blk(l, "w2"), Shape{f, d}, s(f));
    out.emplace_back(blk(l, "b2"), Shape{d}, 0.0);
  }
  out.emplace_back("head.w", Shape{d, c * pp}, s(d));
  out.emplace_back("head.b", Shape{c * pp}, 0.0);
  return out;
}

}  // namespace

DenoiserParams init_denoiser(const DenoiserConfig& cfg, std::mt19937_64& rng) {
  DenoiserParams p{cfg, {}, {}};
  for (auto& [name, shape, sd] : base_layout(cfg)) {
    p.base.add(name, sd > 0.0 ? randn(shape, rng, sd) : Tensor(shape));
  }
  return p;
}

void attach_lora(DenoiserParams& p, std::mt19937_64& rng, double a_std) {
  require(!p.has_lora(), ErrorCode::kInvalidArgument, "low-rank adapters already attached");
  require(p.cfg.lora_rank > 0, ErrorCode::kInvalidArgument, "low-rank adapter rank must be positive");
  for (const auto& name : lora_targets(p.cfg)) {
    const Tensor& w = p.base.get(name);
    p.lora.add(name + ".A", randn({w.dim(0), p.cfg.lora_rank}, rng, a_std));
    p.lora.add(name + ".B", Tensor({p.cfg.lora_rank, w.dim(1)}));
  }
}

void validate(const DenoiserParams& p) {
  const auto layout = base_layout(p.cfg);
  require(p.base.size() == layout.size(), ErrorCode::kShapeMismatch,
          fmt::format("denoiser has {} base tensors, expected {}", p.base.size(), layout.size()));
  for (const auto& [name, shape, sd] : layout) {
    require(p.base.contains(name), ErrorCode::kShapeMismatch,
            fmt::format("denoiser is missing '{}'", name));
    require(p.base.get(name).shape() == shape, ErrorCode::kShapeMismatch,
            fmt::format("denoiser '{}' is {}, expected {}", name,
                        shape_str(p.base.get(name).shape()), shape_str(shape)));
  }
  if (p.has_lora()) {
    for (const auto& name : lora_targets(p.cfg)) {
      const Tensor& w = p.base.get(name);
      require(p.lora.contains(name + ".A") && p.lora.contains(name + ".B"),
              ErrorCode::kShapeMismatch, fmt::format("low-rank pair for '{}' is missing", name));
      require(p.lora.get(name + ".A").shape() == Shape{w.dim(0), p.cfg.lora_rank} &&
                  p.lora.get(name + ".B").shape() == Shape{p.cfg.lora_rank, w.dim(1)},
              ErrorCode::kShapeMismatch, fmt::format("low-rank pair for '{}' has wrong shapes", name));
    }
  }
  require(p.base.all_finite() && p.lora.all_finite(), ErrorCode::kNonFinite,
          "denoiser parameters are not finite");
}

std::vector<double> time_features(double tau, std::size_t count) {
  std::vector<double> f(count);
  for (std::size_t k = 0; k < count / 2; ++k) {
    const double w = 0.5 * std::numbers::pi * std::ldexp(1.0, static_cast<int>(k));
    f[2 * k] = std::sin(w * tau);
    f[2 * k + 1] = std::cos(w * tau);
  }
  return f;
}

Tensor concat_frames(const Tensor& a, const Tensor& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  require(a.rank() == 4 && b.rank() == 4 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) &&
              a.dim(3) == b.dim(3),
          ErrorCode::kShapeMismatch,
          fmt::format("cannot join latents {} and {}", shape_str(a.shape()), shape_str(b.shape())));
  const std::size_t c = a.dim(0), ta = a.dim(1), tb = b.dim(1), hw = a.dim(2) * a.dim(3);
  Tensor out({c, ta + tb, a.dim(2), a.dim(3)});
  for (std::size_t ch = 0; ch < c; ++ch) {
    std::copy_n(a.data() + ch * ta * hw, ta * hw, out.data() + ch * (ta + tb) * hw);
    std::copy_n(b.data() + ch * tb * hw, tb * hw, out.data() + (ch * (ta + tb) + ta) * hw);
  }
  return out;
}

Tensor slice_frames(const Tensor& z, std::size_t begin, std::size_t count) {
  require(z.rank() == 4 && begin + count <= z.dim(1), ErrorCode::kInvalidArgument,
          fmt::format("frames [{}, {}) of latent {}", begin, begin + count, shape_str(z.shape())));
  const std::size_t c = z.dim(0), t = z.dim(1), hw = z.dim(2) * z.dim(3);
  Tensor out({c, count, z.dim(2), z.dim(3)});
  for (std::size_t ch = 0; ch < c; ++ch) {
    std::copy_n(z.data() + (ch * t + begin) * hw, count * hw, out.data() + ch * count * hw);
  }
  return out;
}

Conditioning Conditioning::slice(std::size_t begin, std::size_t count) const {
  Conditioning out{slice_frames(z_hand, begin, count), slice_frames(z_ref, begin, count), {}};
  if (!packs.empty()) {
    out.packs.assign(packs.begin() + static_cast<std::ptrdiff_t>(begin),
                     packs.begin() + static_cast<std::ptrdiff_t>(begin + count));
  }
  return out;
}

Conditioning Conditioning::join(const Conditioning& a, const Conditioning& b) {
  if (a.frames() == 0) return b;
  if (b.frames() == 0) return a;
  require(a.packs.empty() == b.packs.empty(), ErrorCode::kShapeMismatch,
          "cannot join conditioning with and without camera packs");
  Conditioning out{concat_frames(a.z_hand, b.z_hand), concat_frames(a.z_ref, b.z_ref), a.packs};
  out.packs.insert(out.packs.end(), b.packs.begin(), b.packs.end());
  return out;
}

BoundModel::BoundModel(ad::Tape& tape, const DenoiserParams& den,
                       const cond::AdapterParams* adapter, Trainable trainable)
    : tape_(&tape),
      den_(&den),
      adapter_(adapter),
      base_(tape, den.base, trainable.base),
      lora_(tape, den.lora, trainable.lora) {
  validate(den);
  if (adapter_) {
    cond::validate(*adapter_);
    require(adapter_->cfg.dim == den.cfg.dim, ErrorCode::kShapeMismatch,
            fmt::format("adapter width {} does not match model width {}", adapter_->cfg.dim,
                        den.cfg.dim));
    adapter_vars_ = VarSet(tape, adapter_->params, trainable.adapter);
  }
}

ParamSet BoundModel::adapter_grads() const {
  return adapter_ ? adapter_vars_.grads(adapter_->params) : ParamSet{};
}

ad::Var BoundModel::velocity(const ad::Var& z, const Conditioning& c, std::span<const double> taus,
                             const ForwardOptions& opt) const {
  const auto& cfg = den_->cfg;
  const std::size_t p = cond::kPatch;
  require(z.shape().size() == 4 && z.shape()[0] == cfg.channels, ErrorCode::kShapeMismatch,
          fmt::format("denoiser input is {}, expected {} x T x H' x W'", shape_str(z.shape()),
                      cfg.channels));
  const Shape zs = z.shape();
  const std::size_t ch = zs[0], t = zs[1], h = zs[2], w = zs[3];
  require(h % p == 0 && w % p == 0 && t > 0, ErrorCode::kShapeMismatch,
          fmt::format("latent {} is not divisible by patch size {}", shape_str(zs), p));
  require_latent_like(c.z_hand, zs, "hand latent");
  require_latent_like(c.z_ref, zs, "reference latent");
  require(taus.size() == t, ErrorCode::kShapeMismatch,
          fmt::format("{} time values for {} frames", taus.size(), t));
  const std::size_t cols = (h / p) * (w / p), d = cfg.dim, rows = t * cols;

  std::size_t offset = 0;
  if (opt.cache && opt.cache->frames > 0) {
    require(opt.causal, ErrorCode::kInvalidArgument, "a key/value cache needs causal attention");
    require(opt.cache->columns == cols && opt.cache->keys.size() == cfg.blocks,
            ErrorCode::kShapeMismatch, "key/value cache does not match this model or grid");
    offset = opt.cache->frames;
  }

  ad::Tape& tape = *tape_;
  ad::Var zin = ad::concat({z, tape.constant(c.z_hand), tape.constant(c.z_ref)},
                           {3 * ch, t, h, w});
  auto pidx = std::make_shared<const std::vector<std::int64_t>>(cond::patch_index(3 * ch, t, h, w));
  ad::Var x = ad::gather(zin, pidx, {rows, 3 * ch * p * p});
  ad::Var hid = ad::add_row(ad::matmul(x, base_["embed.w"]), base_["embed.b"]);

  Tensor temb({t, cfg.time_features});
  for (std::size_t f = 0; f < t; ++f) {
    require(taus[f] >= 0.0 && taus[f] <= 1.0, ErrorCode::kInvalidArgument,
            fmt::format("time {} outside [0, 1]", taus[f]));
    const auto feat = time_features(taus[f], cfg.time_features);
    std::copy(feat.begin(), feat.end(), temb.data() + f * cfg.time_features);
  }
  ad::Var trow = ad::matmul(tape.constant(std::move(temb)), base_["time.w"]);
  hid = ad::add(hid, ad::gather(trow, frame_rows_index(t, cols, d), {rows, d}));

  if (adapter_ && !c.packs.empty()) {
    require(c.packs.size() == t, ErrorCode::kShapeMismatch,
            fmt::format("{} camera packs for {} latent frames", c.packs.size(), t));
    ad::Var cam = cond::camera_tokens(tape, adapter_vars_, adapter_->cfg, c.packs);
    require(cam.shape() == Shape{rows, d}, ErrorCode::kShapeMismatch,
            fmt::format("camera tokens {} do not match token rows {}x{}", shape_str(cam.shape()),
                        rows, d));
    hid = ad::add(hid, cam);
  }

  const double lora_scale = cfg.lora_alpha / static_cast<double>(cfg.lora_rank);
  auto weight = [&](std::size_t l, const char* name) {
    const std::string key = blk(l, name);
    ad::Var wv = base_[key];
    if (lora_.contains(key + ".A")) {
      wv = ad::add(wv, ad::scale(ad::matmul(lora_[key + ".A"], lora_[key + ".B"]), lora_scale));
    }
    return wv;
  };

  std::vector<Tensor> new_keys, new_values;
  for (std::size_t l = 0; l < cfg.blocks; ++l) {
    ad::Var q = ad::matmul(hid, weight(l, "wq"));
    ad::Var k = ad::matmul(hid, weight(l, "wk"));
    ad::Var v = ad::matmul(hid, weight(l, "wv"));
    if (opt.append_to) {
      new_keys.push_back(k.value());
      new_values.push_back(v.value());
    }
    if (offset > 0) {
      const Shape all{(offset + t) * cols, d};
      k = ad::concat({tape.constant(opt.cache->keys[l]), k}, all);
      v = ad::concat({tape.constant(opt.cache->values[l]), v}, all);
    }
    ad::Var att = ad::temporal_attention(q, k, v, cols, offset, opt.causal);
    hid = ad::add(hid, ad::matmul(att, base_[blk(l, "wo")]));
    ad::Var f = ad::silu(ad::add_row(ad::matmul(hid, weight(l, "w1")), base_[blk(l, "b1")]));
    f = ad::add_row(ad::matmul(f, weight(l, "w2")), base_[blk(l, "b2")]);
    hid = ad::add(hid, f);
  }

  ad::Var out = ad::add_row(ad::matmul(hid, base_["head.w"]), base_["head.b"]);
  ad::Var vel = ad::gather(out, unpatch_index(ch, t, h, w), zs);

  if (opt.append_to) {
    KVCache& kv = *opt.append_to;
    if (kv.frames == 0) {
      kv.keys.assign(cfg.blocks, Tensor({0, d}));
      kv.values.assign(cfg.blocks, Tensor({0, d}));
      kv.columns = cols;
    }
    require(kv.columns == cols && kv.keys.size() == cfg.blocks, ErrorCode::kShapeMismatch,
            "key/value cache does not match this model or grid");
    for (std::size_t l = 0; l < cfg.blocks; ++l) {
      auto grow = [&](Tensor& dst, const Tensor& src) {
        std::vector<double> data = dst.storage();
        data.insert(data.end(), src.storage().begin(), src.storage().end());
        const std::size_t n = data.size() / d;
        dst = Tensor({n, d}, std::move(data));
      };
      grow(kv.keys[l], new_keys[l]);
      grow(kv.values[l], new_values[l]);
    }
    kv.block_starts.push_back(kv.frames);
    kv.frames += t;
  }
  return vel;
}

Tensor predict_velocity(const DenoiserParams& den, const cond::AdapterParams* adapter,
                        const Tensor& z, const Conditioning& c, std::span<const double> taus,
                        const ForwardOptions& opt) {
  ad::Tape tape;
  BoundModel m(tape, den, adapter, Trainable{});
  return m.velocity(tape.constant(z), c, taus, opt).value();
}

LossGrad loss_and_grad(const DenoiserParams& den, const cond::AdapterParams* adapter,
                       const std::vector<FlowSample>& batch, Trainable trainable, bool causal) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "loss_and_grad: empty batch");
  ad::Tape tape;
  BoundModel m(tape, den, adapter, trainable);
  ad::Var total;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    require(s.tau >= 0.0 && s.tau <= 1.0, ErrorCode::kInvalidArgument,
            fmt::format("tau {} outside [0, 1]", s.tau));
    const Tensor zt = interpolate_latent(s.z0, s.eps, s.tau);
    const std::vector<double> taus(zt.dim(1), s.tau);
    ad::Var pred = m.velocity(tape.constant(zt), s.cond, taus, ForwardOptions{causal});
    ad::Var err = ad::scale(
        ad::mean_square(ad::sub(pred, tape.constant(velocity_target(s.z0, s.eps)))), inv);
    total = total.valid() ? ad::add(total, err) : err;
  }
  const double loss = total.value()[0];
  require(std::isfinite(loss), ErrorCode::kNonFinite,
          fmt::format("loss is not finite ({}) over a batch of {}", loss, batch.size()));
  tape.backward(total);
  return LossGrad{loss, m.base_grads(), m.lora_grads(), m.adapter_grads()};
}

Tensor interpolate_latent(const Tensor& z0, const Tensor& eps, double tau) {
  require(tau >= 0.0 && tau <= 1.0, ErrorCode::kInvalidArgument,
          fmt::format("tau {} outside [0, 1]", tau));
  require(z0.shape() == eps.shape(), ErrorCode::kShapeMismatch,
          fmt::format("interpolate: {} vs {}", shape_str(z0.shape()), shape_str(eps.shape())));
  Tensor out(z0.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = (1.0 - tau) * z0[i] + tau * eps[i];
  return out;
}

Tensor velocity_target(const Tensor& z0, const Tensor& eps) {
  require(z0.shape() == eps.shape(), ErrorCode::kShapeMismatch,
          fmt::format("velocity target: {} vs {}", shape_str(z0.shape()), shape_str(eps.shape())));
  return eps - z0;
}

}  // namespace egogen::gen
