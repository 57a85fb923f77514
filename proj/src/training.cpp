// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/training.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "egogen/error.hpp"
#include "egogen/tensor_io.hpp"

namespace egogen::gen {
namespace {

using nlohmann::json;

// Re-raise a numerical failure with the stage and step that produced it.
template <typename F>
auto at_step(const char* stage, std::size_t step, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonFinite) throw;
    fail(ErrorCode::kNonFinite, fmt::format("{} step {}: {}", stage, step, e.what()));
  }
}

json config_json(const DenoiserConfig& c) {
  return {{"channels", c.channels},   {"dim", c.dim},
          {"blocks", c.blocks},       {"ffn_mult", c.ffn_mult},
          {"time_features", c.time_features}, {"lora_rank", c.lora_rank},
          {"lora_alpha", c.lora_alpha}};
}

json config_json(const cond::AdapterConfig& c) {
  return {{"dim", c.dim}, {"proj_width", c.proj_width}, {"hidden", c.hidden}};
}

}  // namespace

void validate(const TrainConfig& c) {
  require(c.lr > 0.0 && c.clip_norm > 0.0 && c.batch_size > 0, ErrorCode::kInvalidArgument,
          fmt::format("training config: lr {}, clip {}, batch {} must be positive", c.lr,
                      c.clip_norm, c.batch_size));
  AdamWConfig o = c.adamw;
  o.lr = c.lr;
  validate(o);
}

std::string to_json_line(const StepLog& l) {
  json j = {{"stage", l.stage}, {"step", l.step}, {"loss", l.loss}, {"grad_norm", l.grad_norm},
            {"p", l.p}};
  return j.dump();
}

std::vector<FlowSample> draw_batch(const DataFn& data, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<FlowSample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex = data(rng);
    FlowSample s;
    s.eps = ex.eps ? std::move(*ex.eps) : randn(ex.z0.shape(), rng);
    s.tau = unit(rng);
    s.z0 = std::move(ex.z0);
    s.cond = std::move(ex.cond);
    batch.push_back(std::move(s));
  }
  return batch;
}

TrainResult train_two_stage(const DenoiserParams& init, const cond::AdapterParams& adapter,
                            const DataFn& data, const TrainConfig& cfg, const LogFn& log) {
  validate(cfg);
  validate(init);
  cond::validate(adapter);
  std::mt19937_64 rng(cfg.seed);
  TrainResult r{init, adapter};
  AdamWConfig oc = cfg.adamw;
  oc.lr = cfg.lr;

  AdamW adapter_opt(oc);
  for (std::size_t step = 0; step < cfg.stage1_steps; ++step) {
    const auto batch = draw_batch(data, cfg.batch_size, rng);
    LossGrad lg = at_step("stage 1", step, [&] {
      return loss_and_grad(r.den, &r.adapter, batch, Trainable{false, false, true}, cfg.causal);
    });
    const double norm = clip_grad_norm({&lg.adapter}, cfg.clip_norm);
    adapter_opt.step(r.adapter.params, lg.adapter);
    if (log) log(StepLog{"stage1", step, lg.loss, norm, 0.0});
  }

  if (!r.den.has_lora()) attach_lora(r.den, rng);
  AdamW lora_opt(oc);
  for (std::size_t step = 0; step < cfg.stage2_steps; ++step) {
    const auto batch = draw_batch(data, cfg.batch_size, rng);
    LossGrad lg = at_step("stage 2", step, [&] {
      return loss_and_grad(r.den, &r.adapter, batch, Trainable{false, true, true}, cfg.causal);
    });
    const double norm = clip_grad_norm({&lg.lora, &lg.adapter}, cfg.clip_norm);
    lora_opt.step(r.den.lora, lg.lora);
    adapter_opt.step(r.adapter.params, lg.adapter);
    if (log) log(StepLog{"stage2", step, lg.loss, norm, 0.0});
  }
  return r;
}

void save_checkpoint(const std::filesystem::path& dir, const DenoiserParams& den,
                     const cond::AdapterParams* adapter, const std::string& stage) {
  validate(den);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  json entries = json::array();
  auto dump = [&](const char* group, const ParamSet& set) {
    for (const auto& p : set) {
      const std::string file = fmt::format("{}.{}.egt", group, p.name);
      write_tensor(dir / file, p.value, DType::kF64);
      entries.push_back({{"group", group}, {"name", p.name}, {"shape", p.value.shape()},
                         {"file", file}, {"stage", stage}});
    }
  };
  dump("base", den.base);
  dump("lora", den.lora);
  if (adapter) dump("adapter", adapter->params);
  json manifest = {{"format", "egogen-checkpoint"},
                   {"version", 1},
                   {"stage", stage},
                   {"denoiser", config_json(den.cfg)},
                   {"adapter", adapter ? config_json(adapter->cfg) : json(nullptr)},
                   {"params", entries}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  require(static_cast<bool>(out), ErrorCode::kIo,
          fmt::format("cannot write '{}'", (dir / "manifest.json").string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kFileNotFound,
          fmt::format("no checkpoint manifest at '{}'", path.string()));
  Checkpoint ck;
  try {
    const json m = json::parse(in);
    require(m.at("format") == "egogen-checkpoint", ErrorCode::kParse,
            fmt::format("'{}' is not a checkpoint manifest", path.string()));
    ck.stage = m.at("stage").get<std::string>();
    const json& d = m.at("denoiser");
    DenoiserConfig dc;
    dc.channels = d.at("channels");
    dc.dim = d.at("dim");
    dc.blocks = d.at("blocks");
    dc.ffn_mult = d.at("ffn_mult");
    dc.time_features = d.at("time_features");
    dc.lora_rank = d.at("lora_rank");
    dc.lora_alpha = d.at("lora_alpha");
    ck.den.cfg = dc;
    if (!m.at("adapter").is_null()) {
      const json& a = m.at("adapter");
      cond::AdapterParams ap;
      ap.cfg.dim = a.at("dim");
      ap.cfg.proj_width = a.at("proj_width");
      ap.cfg.hidden = a.at("hidden");
      ck.adapter = std::move(ap);
    }
    for (const json& e : m.at("params")) {
      const std::string group = e.at("group");
      Tensor t = read_tensor(dir / e.at("file").get<std::string>());
      require(t.shape() == e.at("shape").get<Shape>(), ErrorCode::kParse,
              fmt::format("tensor '{}' does not match its manifest shape",
                          e.at("name").get<std::string>()));
      ParamSet* set = group == "base"    ? &ck.den.base
                      : group == "lora"  ? &ck.den.lora
                      : group == "adapter" && ck.adapter ? &ck.adapter->params
                                                          : nullptr;
      require(set != nullptr, ErrorCode::kParse, fmt::format("unknown parameter group '{}'", group));
      set->add(e.at("name"), std::move(t));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("{}: {}", path.string(), e.what()));
  }
  validate(ck.den);
  if (ck.adapter) cond::validate(*ck.adapter);
  return ck;
}

}  // namespace egogen::gen
