// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/distill.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "egogen/error.hpp"

namespace egogen::gen {
namespace {

// [history; z] along the frame axis, with history held constant.
ad::Var with_history(ad::Tape& tape, const Tensor& history, const ad::Var& z) {
  if (history.empty()) return z;
  const Shape zs = z.shape();
  const std::size_t c = zs[0], b = zs[1], hw = zs[2] * zs[3], h = history.dim(1);
  require(history.rank() == 4 && history.dim(0) == c && history.dim(2) * history.dim(3) == hw,
          ErrorCode::kShapeMismatch,
          fmt::format("history {} does not match block {}", shape_str(history.shape()),
                      shape_str(zs)));
  const std::size_t nh = history.numel();
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(c * (h + b) * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t f = 0; f < h + b; ++f) {
      for (std::size_t i = 0; i < hw; ++i) {
        idx->push_back(static_cast<std::int64_t>(
            f < h ? (ch * h + f) * hw + i : nh + (ch * b + f - h) * hw + i));
      }
    }
  }
  const Shape flat{nh + z.value().numel()};
  const Shape out{c, h + b, zs[2], zs[3]};
  ad::Var both = ad::concat({tape.constant(history.reshaped({nh})),
                             ad::reshape(z, {z.value().numel()})},
                            flat);
  return ad::gather(both, idx, out);
}

ad::Var last_frames(const ad::Var& z, std::size_t count) {
  const Shape zs = z.shape();
  const std::size_t c = zs[0], t = zs[1], hw = zs[2] * zs[3], begin = t - count;
  if (begin == 0) return z;
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(c * count * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t f = 0; f < count; ++f) {
      for (std::size_t i = 0; i < hw; ++i) {
        idx->push_back(static_cast<std::int64_t>((ch * t + begin + f) * hw + i));
      }
    }
  }
  return ad::gather(z, idx, {c, count, zs[2], zs[3]});
}

std::size_t pick_history(std::size_t frames, std::size_t block, std::mt19937_64& rng) {
  require(block >= 1 && frames >= block && frames % block == 0, ErrorCode::kShapeMismatch,
          fmt::format("{} latent frames do not split into blocks of {}", frames, block));
  std::uniform_int_distribution<std::size_t> pick(0, frames / block - 1);
  return block * pick(rng);
}

Trainable student_groups(const DenoiserParams& p) { return Trainable{true, p.has_lora(), false}; }

}  // namespace

double SelfForcingSchedule::at(std::size_t step) const {
  if (horizon == 0) return p_max;
  const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(horizon));
  return p_max * f;
}

std::vector<Tensor> self_forcing_mix(const std::vector<Tensor>& gt,
                                     const std::vector<Tensor>& student, double p,
                                     std::mt19937_64& rng) {
  require(gt.size() == student.size(), ErrorCode::kShapeMismatch,
          fmt::format("self-forcing: {} ground-truth frames vs {} student frames", gt.size(),
                      student.size()));
  require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument,
          fmt::format("self-forcing probability {} outside [0, 1]", p));
  std::vector<Tensor> out;
  out.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    out.push_back(u < p ? student[i] : gt[i]);
  }
  return out;
}

std::vector<Tensor> split_frames(const Tensor& z) {
  std::vector<Tensor> out;
  if (z.empty()) return out;
  for (std::size_t f = 0; f < z.dim(1); ++f) out.push_back(slice_frames(z, f, 1));
  return out;
}

Tensor join_frames(const std::vector<Tensor>& frames) {
  Tensor out;
  for (const auto& f : frames) out = concat_frames(out, f);
  return out;
}

void validate(const DistillConfig& c) {
  require(c.block_frames >= 1 && c.student_steps >= 1 && c.teacher_steps >= 1 &&
              c.batch_size >= 1 && c.critic_updates >= 1,
          ErrorCode::kInvalidArgument,
          "distillation: block size, step counts, batch size and critic updates must be positive");
  require(c.lr > 0.0 && c.ode_lr >= 0.0 && c.critic_lr > 0.0 && c.clip_norm > 0.0,
          ErrorCode::kInvalidArgument,
          "distillation: learning rates and clip norm must be positive");
  require(c.tau_min > 0.0 && c.tau_min <= c.tau_max && c.tau_max <= 1.0,
          ErrorCode::kInvalidArgument,
          fmt::format("distillation: tau range [{}, {}] must lie in (0, 1]", c.tau_min, c.tau_max));
}

std::vector<OdePair> make_ode_pairs(const VelocityField& teacher, const DataFn& data,
                                    std::size_t n, const DistillConfig& cfg,
                                    std::mt19937_64& rng) {
  validate(cfg);
  std::vector<OdePair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex = data(rng);
    OdePair p;
    p.noise = randn(ex.z0.shape(), rng);
    p.endpoint = euler_integrate(teacher, p.noise, ex.cond, cfg.teacher_steps);
    p.history = pick_history(ex.z0.dim(1), cfg.block_frames, rng);
    p.block = cfg.block_frames;
    p.cond = std::move(ex.cond);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

ad::Var generate_block(const BoundModel& model, ad::Tape& tape, const Tensor& history,
                       const Tensor& noise, const Conditioning& cond, std::size_t steps) {
  require(steps >= 1, ErrorCode::kInvalidArgument, "block generation needs at least one step");
  const std::size_t h = history.empty() ? 0 : history.dim(1), b = noise.dim(1);
  require(cond.frames() == h + b, ErrorCode::kShapeMismatch,
          fmt::format("conditioning covers {} frames, history + block is {}", cond.frames(), h + b));
  ad::Var z = tape.constant(noise);
  const double n = static_cast<double>(steps);
  std::vector<double> taus(h + b, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const double tau = 1.0 - static_cast<double>(s) / n;
    const double next = 1.0 - static_cast<double>(s + 1) / n;
    std::fill(taus.begin() + static_cast<std::ptrdiff_t>(h), taus.end(), tau);
    ad::Var v = model.velocity(with_history(tape, history, z), cond, taus, ForwardOptions{true});
    z = ad::sub(z, ad::scale(last_frames(v, b), tau - next));
  }
  return z;
}

LossGrad ode_loss_and_grad(const DenoiserParams& student, const cond::AdapterParams* adapter,
                           const std::vector<OdePair>& pairs, std::size_t student_steps) {
  require(!pairs.empty(), ErrorCode::kInvalidArgument, "ODE regression: no pairs");
  ad::Tape tape;
  BoundModel m(tape, student, adapter, student_groups(student));
  const double inv = 1.0 / static_cast<double>(pairs.size());
  ad::Var total;
  for (const auto& p : pairs) {
    const Tensor history = p.history ? slice_frames(p.endpoint, 0, p.history) : Tensor{};
    const Tensor noise = slice_frames(p.noise, p.history, p.block);
    const Tensor target = slice_frames(p.endpoint, p.history, p.block);
    ad::Var x = generate_block(m, tape, history, noise, p.cond.slice(0, p.history + p.block),
                               student_steps);
    ad::Var err = ad::scale(ad::mean_square(ad::sub(x, tape.constant(target))), inv);
    total = total.valid() ? ad::add(total, err) : err;
  }
  const double loss = total.value()[0];
  require(std::isfinite(loss), ErrorCode::kNonFinite,
          fmt::format("ODE regression loss is not finite ({})", loss));
  tape.backward(total);
  return LossGrad{loss, m.base_grads(), m.lora_grads(), m.adapter_grads()};
}

DenoiserParams ode_pretrain(const DenoiserParams& student, const cond::AdapterParams* adapter,
                            const std::vector<OdePair>& pairs, const DistillConfig& cfg,
                            const LogFn& log) {
  validate(cfg);
  DenoiserParams s = student;
  if (cfg.ode_steps == 0) return s;
  require(!pairs.empty(), ErrorCode::kInvalidArgument, "ODE pretraining: no pairs");
  AdamWConfig oc = cfg.adamw;
  oc.lr = cfg.ode_lr > 0.0 ? cfg.ode_lr : cfg.lr;
  AdamW base_opt(oc), lora_opt(oc);
  const std::size_t bs = std::min(cfg.batch_size, pairs.size());
  for (std::size_t step = 0; step < cfg.ode_steps; ++step) {
    std::vector<OdePair> mb;
    for (std::size_t i = 0; i < bs; ++i) mb.push_back(pairs[(step * bs + i) % pairs.size()]);
    LossGrad lg;
    try {
      lg = ode_loss_and_grad(s, adapter, mb, cfg.student_steps);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFinite) throw;
      fail(ErrorCode::kNonFinite, fmt::format("ODE pretraining step {}: {}", step, e.what()));
    }
    const double norm = clip_grad_norm({&lg.base, &lg.lora}, cfg.clip_norm);
    base_opt.step(s.base, lg.base);
    if (s.has_lora()) lora_opt.step(s.lora, lg.lora);
    if (log) log(StepLog{"ode", step, lg.loss, norm, 0.0});
  }
  return s;
}

DmdResult dmd_step(const DenoiserParams& student, const VelocityField& teacher,
                   const DenoiserParams& critic, const cond::AdapterParams* adapter,
                   const std::vector<DmdItem>& batch, const DistillConfig& cfg, double p,
                   std::mt19937_64& rng) {
  validate(cfg);
  require(!batch.empty(), ErrorCode::kInvalidArgument, "distribution matching: empty batch");
  std::uniform_real_distribution<double> tau_dist(cfg.tau_min, cfg.tau_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t b = cfg.block_frames;
  const double inv = 1.0 / static_cast<double>(batch.size());
  const DenoiserField critic_field(critic, adapter, false);

  ad::Tape tape;
  BoundModel m(tape, student, adapter, student_groups(student));
  DmdResult r;
  std::vector<FlowSample> critic_batch;
  for (const auto& item : batch) {
    const std::size_t t = item.z_gt.dim(1);
    require(item.cond.frames() == t, ErrorCode::kShapeMismatch,
            fmt::format("conditioning has {} frames, latent has {}", item.cond.frames(), t));
    const std::size_t h = pick_history(t, b, rng);
    Tensor history;
    if (h > 0) {
      Tensor gt = slice_frames(item.z_gt, 0, h);
      Tensor own = gt;
      if (p > 0.0) {
        SequenceStream stream(item.cond.slice(0, h));
        KVCache cache;
        own = ar_rollout(student, adapter, stream,
                         RolloutConfig{b, cfg.student_steps, h / b, rng()}, cache);
      }
      history = join_frames(self_forcing_mix(split_frames(gt), split_frames(own), p, rng));
    }
    const Conditioning cond = item.cond.slice(0, h + b);
    const Tensor noise = randn(slice_frames(item.z_gt, 0, b).shape(), rng);
    ad::Var x = generate_block(m, tape, history, noise, cond, cfg.student_steps);

    const Tensor seq = concat_frames(history, x.value());
    const double tau = tau_dist(rng);
    const Tensor eps = randn(seq.shape(), rng);
    const Tensor xt = interpolate_latent(seq, eps, tau);
    const std::vector<double> taus(h + b, tau);
    const Tensor vr = slice_frames(teacher.velocity(xt, taus, cond), h, b);
    const Tensor vf = slice_frames(critic_field.velocity(xt, taus, cond), h, b);
    const Tensor xtb = slice_frames(xt, h, b);

    // Gap between the critic's and the teacher's denoised estimates, scaled
    // by the distance to the teacher estimate.
    const std::size_t n = vr.numel();
    double gap = 0.0, dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = vf[i] - vr[i];
      gap += d * d;
      dist += std::abs(x.value()[i] - (xtb[i] - tau * vr[i]));
    }
    r.loss += inv * gap / static_cast<double>(n);
    dist = std::max(dist / static_cast<double>(n), 1e-12);
    Tensor seed(x.shape());
    for (std::size_t i = 0; i < n; ++i) {
      seed[i] = -tau * (vf[i] - vr[i]) / dist * inv / static_cast<double>(n);
    }
    tape.backward(x, seed);

    FlowSample fs;
    fs.z0 = seq;
    fs.eps = randn(seq.shape(), rng);
    fs.tau = unit(rng);
    fs.cond = cond;
    critic_batch.push_back(std::move(fs));
  }
  require(std::isfinite(r.loss), ErrorCode::kNonFinite,
          fmt::format("distribution matching loss is not finite ({})", r.loss));
  r.student = LossGrad{r.loss, m.base_grads(), m.lora_grads(), m.adapter_grads()};
  LossGrad cg = loss_and_grad(critic, adapter, critic_batch,
                              Trainable{true, critic.has_lora(), false}, false);
  r.critic_loss = cg.loss;
  r.critic_base = std::move(cg.base);
  r.critic_lora = std::move(cg.lora);
  return r;
}

DistillResult distill(const DenoiserParams& student, const VelocityField& teacher,
                      const cond::AdapterParams* adapter, const DataFn& data,
                      const DistillConfig& cfg, const LogFn& log) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const auto pairs = make_ode_pairs(teacher, data, cfg.ode_pairs, cfg, rng);
  DistillResult r{ode_pretrain(student, adapter, pairs, cfg, log), {}};
  r.critic = r.student;

  AdamWConfig gc = cfg.adamw, cc = cfg.adamw;
  gc.lr = cfg.lr;
  cc.lr = cfg.critic_lr;
  AdamW gen_base(gc), gen_lora(gc), critic_base(cc), critic_lora(cc);
  const SelfForcingSchedule schedule{cfg.anneal_steps ? cfg.anneal_steps : cfg.dmd_steps / 2};

  auto draw = [&] {
    std::vector<DmdItem> items;
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      Example ex = data(rng);
      items.push_back(DmdItem{std::move(ex.z0), std::move(ex.cond)});
    }
    return items;
  };
  auto update_critic = [&](DmdResult& d) {
    clip_grad_norm({&d.critic_base, &d.critic_lora}, cfg.clip_norm);
    critic_base.step(r.critic.base, d.critic_base);
    if (r.critic.has_lora()) critic_lora.step(r.critic.lora, d.critic_lora);
  };

  for (std::size_t step = 0; step < cfg.critic_warmup; ++step) {
    DmdResult d = dmd_step(r.student, teacher, r.critic, adapter, draw(), cfg, 0.0, rng);
    update_critic(d);
    if (log) log(StepLog{"critic", step, d.critic_loss, 0.0, 0.0});
  }
  for (std::size_t step = 0; step < cfg.dmd_steps; ++step) {
    const double p = schedule.at(step);
    for (std::size_t k = 1; k < cfg.critic_updates; ++k) {
      DmdResult d = dmd_step(r.student, teacher, r.critic, adapter, draw(), cfg, p, rng);
      update_critic(d);
    }
    DmdResult d;
    try {
      d = dmd_step(r.student, teacher, r.critic, adapter, draw(), cfg, p, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFinite) throw;
      fail(ErrorCode::kNonFinite, fmt::format("distribution matching step {}: {}", step, e.what()));
    }
    const double norm = clip_grad_norm({&d.student.base, &d.student.lora}, cfg.clip_norm);
    gen_base.step(r.student.base, d.student.base);
    if (r.student.has_lora()) gen_lora.step(r.student.lora, d.student.lora);
    update_critic(d);
    if (log) log(StepLog{"dmd", step, d.loss, norm, p});
  }
  return r;
}

}  // namespace egogen::gen
