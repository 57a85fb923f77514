// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "egogen/camera.hpp"
#include "egogen/conditioning.hpp"
#include "egogen/distill.hpp"
#include "egogen/formats.hpp"
#include "egogen/hand_model.hpp"
#include "egogen/metrics.hpp"
#include "egogen/render.hpp"
#include "egogen/sampling.hpp"
#include "egogen/simd/kernels.hpp"
#include "egogen/stabilizer.hpp"
#include "egogen/tensor_io.hpp"
#include "egogen/toy.hpp"
#include "egogen/training.hpp"

namespace egogen::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// Config files are JSON objects keyed by subcommand, e.g.
// {"stabilize": {"iou": 0.5}}. Other top-level keys are ignored, which lets a
// run manifest be fed back in as a config.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("config file: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config file: expected a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [section, body] : doc.items()) {
      if (!body.is_object()) continue;
      for (const auto& [key, value] : body.items()) {
        CLI::ConfigItem item;
        item.parents = {section};
        item.name = key;
        if (value.is_array()) {
          for (const auto& v : value) item.inputs.push_back(scalar(v));
        } else {
          item.inputs.push_back(scalar(value));
        }
        items.push_back(std::move(item));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }
};

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, fmt::format("cannot create output directory '{}': {}", dir,
                                           ec.message()));
  return fs::path(dir);
}

// Effective option values of a subcommand, as the strings CLI11 parsed.
json effective_options(const CLI::App& sub) {
  json opts = json::object();
  for (const CLI::Option* o : sub.get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string name = o->get_lnames().front();
    if (name == "help") continue;
    if (o->count() > 0) {
      const auto& r = o->results();
      opts[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (!o->get_default_str().empty()) {
      opts[name] = o->get_default_str();
    }
  }
  return opts;
}

void write_manifest(const fs::path& dir, const CLI::App& sub, const json& outputs,
                    const json& summary = json::object()) {
  json run = {{"tool", "egogen"},
              {"version", kVersion},
              {"subcommand", sub.get_name()},
              {"kernels", std::string(simd::isa_name(simd::active().isa))},
              {"outputs", outputs}};
  if (!summary.empty()) run["summary"] = summary;
  const json manifest = {{"run", run}, {sub.get_name(), effective_options(sub)}};
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string frame_name(std::size_t i) { return fmt::format("frame_{:04d}.png", i); }

std::vector<fs::path> png_files(const fs::path& p) {
  std::error_code ec;
  if (fs::is_regular_file(p, ec)) return {p};
  require(fs::is_directory(p, ec), ErrorCode::kFileNotFound,
          fmt::format("'{}' is neither a PNG file nor a directory", p.string()));
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(p)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<RgbImage> read_pngs(const fs::path& p) {
  std::vector<RgbImage> out;
  for (const auto& f : png_files(p)) out.push_back(read_png(f));
  require(!out.empty(), ErrorCode::kFileNotFound, fmt::format("no PNG frames in '{}'", p.string()));
  return out;
}

void write_log(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  io::write_text(path, text);
}

// Options shared by the commands that build or load a toy denoiser.
struct ModelFlags {
  std::size_t channels = cond::kLatentChannels;
  std::size_t dim = 32;
  std::size_t blocks = 2;
  std::size_t proj_width = 16;
  std::size_t lora_rank = 4;
  double lora_alpha = 4.0;

  void add(CLI::App* sub) {
    sub->add_option("--channels", channels, "latent channels C")->check(CLI::PositiveNumber);
    sub->add_option("--dim", dim, "token width D")->check(CLI::PositiveNumber);
    sub->add_option("--blocks", blocks, "transformer blocks L")->check(CLI::PositiveNumber);
    sub->add_option("--proj-width", proj_width, "camera adapter projection width")
        ->check(CLI::PositiveNumber);
    sub->add_option("--lora-rank", lora_rank, "low-rank adapter rank")->check(CLI::PositiveNumber);
    sub->add_option("--lora-alpha", lora_alpha, "low-rank adapter alpha");
  }
  gen::DenoiserConfig denoiser() const {
    gen::DenoiserConfig c;
    c.channels = channels;
    c.dim = dim;
    c.blocks = blocks;
    c.lora_rank = lora_rank;
    c.lora_alpha = lora_alpha;
    return c;
  }
  cond::AdapterConfig adapter() const {
    cond::AdapterConfig c;
    c.dim = dim;
    c.proj_width = proj_width;
    return c;
  }
};

struct TaskFlags {
  std::size_t latent_frames = 3;
  std::size_t latent_h = 4;
  std::size_t latent_w = 4;

  void add(CLI::App* sub) {
    sub->add_option("--latent-frames", latent_frames, "latent frames per example")
        ->check(CLI::PositiveNumber);
    sub->add_option("--latent-h", latent_h, "latent height")->check(CLI::PositiveNumber);
    sub->add_option("--latent-w", latent_w, "latent width")->check(CLI::PositiveNumber);
  }
  gen::CameraTaskConfig task(const gen::DenoiserConfig& model,
                             const cond::AdapterConfig& adapter) const {
    gen::CameraTaskConfig c;
    c.model = model;
    c.adapter = adapter;
    c.latent_frames = latent_frames;
    c.latent_h = latent_h;
    c.latent_w = latent_w;
    return c;
  }
};

void add_stabilize(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  auto* sub = app.add_subcommand("stabilize", "clean a per-frame hand detection stream");
  auto in = std::make_shared<std::string>();
  auto dir = std::make_shared<std::string>();
  auto cfg = std::make_shared<stabilize::StabilizerConfig>();
  sub->add_option("--detections", *in, "detections file (JSON Lines)")->required();
  sub->add_option("--out", *dir, "output directory")->required();
  sub->add_option("--iou", cfg->iou_threshold, "left/right overlap IoU threshold");
  sub->add_option("--edge-margin", cfg->edge_margin_frac, "border margin as a fraction of min(W, H)");
  sub->add_option("--enlarge", cfg->enlarge_factor, "box enlargement factor");
  sub->add_option("--max-gap", cfg->max_gap_frames, "longest gap filled by interpolation");
  sub->add_option("--proximity", cfg->proximity_frac,
                  "max centre jump across a gap, as a fraction of the mean diagonal");
  sub->callback([sub, in, dir, cfg, &out, &action] {
    action = [sub, in, dir, cfg, &out] {
      stabilize::validate(*cfg);
      const auto det = io::read_detections(*in);
      stabilize::StabilizeStats stats;
      const auto track = stabilize::stabilize(det.detections, det.frames, det.dims, *cfg, &stats);
      const auto d = prepare_dir(*dir);
      io::write_track(d / "track.jsonl", track);
      const json summary = {{"kept", stats.kept},
                            {"removed", stats.removed},
                            {"interpolated", stats.interpolated}};
      write_manifest(d, *sub, {"track.jsonl"}, summary);
      out << fmt::format("kept {} removed {} interpolated {}\n", stats.kept, stats.removed,
                         stats.interpolated);
    };
  });
}

void add_render(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  struct Args {
    std::string hands, trajectory, model, dir;
    std::size_t height = 64, width = 64;
    std::uint64_t model_seed = 0;
    int line_width = 1;
  };
  auto* sub = app.add_subcommand("render", "rasterize hand control frames");
  auto a = std::make_shared<Args>();
  sub->add_option("--hands", a->hands, "hand parameter file (JSON)")->required();
  sub->add_option("--trajectory", a->trajectory, "camera trajectory file (JSON)")->required();
  sub->add_option("--out", a->dir, "output directory")->required();
  sub->add_option("--height", a->height, "frame height")->check(CLI::PositiveNumber);
  sub->add_option("--width", a->width, "frame width")->check(CLI::PositiveNumber);
  sub->add_option("--model", a->model, "hand model file (HMD1); synthetic model if omitted");
  sub->add_option("--model-seed", a->model_seed, "seed of the synthetic hand model");
  sub->add_option("--line-width", a->line_width, "wireframe width in pixels");
  sub->callback([sub, a, &out, &action] {
    action = [sub, a, &out] {
      render::RenderStyle style;
      style.line_width = a->line_width;
      render::validate(style);
      const auto hands = io::read_hand_params(a->hands);
      const auto traj = io::read_trajectory(a->trajectory);
      camera::validate(traj);
      const auto model = a->model.empty() ? hand::make_synthetic_model(a->model_seed)
                                          : hand::load_hand_model(a->model);
      const auto frames = render::render_sequence(model, hands, traj, a->height, a->width, style);
      const auto d = prepare_dir(a->dir);
      json outputs = json::array();
      for (std::size_t i = 0; i < frames.size(); ++i) {
        write_png(d / frame_name(i), frames[i]);
        outputs.push_back(frame_name(i));
      }
      write_manifest(d, *sub, outputs);
      out << fmt::format("rendered {} frames\n", frames.size());
    };
  });
}

void add_plucker(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  struct Args {
    std::string trajectory, dir;
    std::size_t height = 64, width = 64;
  };
  auto* sub = app.add_subcommand("plucker", "per-pixel Plücker maps for a trajectory");
  auto a = std::make_shared<Args>();
  sub->add_option("--trajectory", a->trajectory, "camera trajectory file (JSON)")->required();
  sub->add_option("--out", a->dir, "output directory")->required();
  sub->add_option("--height", a->height, "map height")->check(CLI::PositiveNumber);
  sub->add_option("--width", a->width, "map width")->check(CLI::PositiveNumber);
  sub->callback([sub, a, &out, &action] {
    action = [sub, a, &out] {
      const auto traj = io::read_trajectory(a->trajectory);
      require(!traj.empty(), ErrorCode::kInvalidArgument, "trajectory has no frames");
      camera::validate(traj);
      const auto norm = camera::normalize_trajectory(traj);
      const std::size_t plane = 6 * a->height * a->width;
      Tensor stack({norm.size(), 6, a->height, a->width});
      for (std::size_t i = 0; i < norm.size(); ++i) {
        const auto m = camera::plucker_map(norm[i].pose, norm[i].K, a->height, a->width);
        std::copy(m.tensor().values().begin(), m.tensor().values().end(),
                  stack.values().begin() + static_cast<std::ptrdiff_t>(i * plane));
      }
      const auto d = prepare_dir(a->dir);
      write_tensor(d / "plucker.egt", stack);
      write_manifest(d, *sub, {"plucker.egt"});
      out << fmt::format("{} frames, {}x{} maps\n", norm.size(), a->width, a->height);
    };
  });
}

void add_pack(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  struct Args {
    std::string plucker, dir;
  };
  auto* sub = app.add_subcommand("pack", "pack Plücker maps four frames per latent step");
  auto a = std::make_shared<Args>();
  sub->add_option("--plucker", a->plucker, "N x 6 x H x W tensor (EGT1)")->required();
  sub->add_option("--out", a->dir, "output directory")->required();
  sub->callback([sub, a, &out, &action] {
    action = [sub, a, &out] {
      const Tensor stack = read_tensor(fs::path(a->plucker));
      const auto packs = cond::pack_plucker(stack);
      const std::size_t h = stack.dim(2), w = stack.dim(3), plane = cond::kPackChannels * h * w;
      Tensor joined({packs.size(), cond::kPackChannels, h, w});
      for (std::size_t l = 0; l < packs.size(); ++l) {
        std::copy(packs[l].values().begin(), packs[l].values().end(),
                  joined.values().begin() + static_cast<std::ptrdiff_t>(l * plane));
      }
      const auto d = prepare_dir(a->dir);
      write_tensor(d / "packs.egt", joined);
      write_manifest(d, *sub, {"packs.egt"});
      out << fmt::format("{} frames -> {} packs of {} channels\n", stack.dim(0), packs.size(),
                         cond::kPackChannels);
    };
  });
}

void add_train_toy(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  struct Args {
    std::string dir;
    ModelFlags model;
    TaskFlags task;
    gen::TrainConfig train;
  };
  auto* sub = app.add_subcommand("train-toy", "two-stage training on a synthetic camera task");
  auto a = std::make_shared<Args>();
  sub->add_option("--out", a->dir, "output directory")->required();
  a->model.add(sub);
  a->task.add(sub);
  sub->add_option("--stage1-steps", a->train.stage1_steps, "camera adapter steps");
  sub->add_option("--stage2-steps", a->train.stage2_steps, "joint adapter + low-rank steps");
  sub->add_option("--batch", a->train.batch_size, "batch size")->check(CLI::PositiveNumber);
  sub->add_option("--lr", a->train.lr, "learning rate");
  sub->add_option("--clip", a->train.clip_norm, "gradient clip norm");
  sub->add_option("--seed", a->train.seed, "random seed");
  sub->callback([sub, a, &out, &action] {
    action = [sub, a, &out] {
      gen::validate(a->train);
      const auto tc = a->task.task(a->model.denoiser(), a->model.adapter());
      const auto task = gen::make_camera_task(tc, a->train.seed);
      std::mt19937_64 rng(a->train.seed ^ 0x61646170746572ULL);
      const auto adapter = cond::init_adapter(tc.adapter, rng);
      std::vector<std::string> log;
      const auto r = gen::train_two_stage(task.backbone, adapter, task.data, a->train,
                                          [&](const gen::StepLog& l) {
                                            log.push_back(gen::to_json_line(l));
                                          });
      const auto d = prepare_dir(a->dir);
      gen::save_checkpoint(d / "checkpoint", r.den, &r.adapter, "stage2");
      write_log(d / "log.jsonl", log);
      write_manifest(d, *sub, {"checkpoint/manifest.json", "log.jsonl"});
      out << fmt::format("trained {} + {} steps, checkpoint in {}\n", a->train.stage1_steps,
                         a->train.stage2_steps, (d / "checkpoint").string());
    };
  });
}

void add_distill(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  struct Args {
    std::string teacher, dir;
    TaskFlags task;
    gen::DistillConfig cfg;
  };
  auto* sub = app.add_subcommand("distill", "distill a causal few-step student from a teacher");
  auto a = std::make_shared<Args>();
  a->task.latent_frames = 6;
  a->cfg.ode_pairs = 16;
  a->cfg.ode_steps = 20;
  a->cfg.dmd_steps = 20;
  sub->add_option("--teacher", a->teacher, "teacher checkpoint directory")->required();
  sub->add_option("--out", a->dir, "output directory")->required();
  a->task.add(sub);
  sub->add_option("--block-frames", a->cfg.block_frames, "latent frames per block");
  sub->add_option("--student-steps", a->cfg.student_steps, "student denoising steps");
  sub->add_option("--teacher-steps", a->cfg.teacher_steps, "teacher Euler steps for ODE pairs");
  sub->add_option("--ode-pairs", a->cfg.ode_pairs, "teacher ODE pairs");
  sub->add_option("--ode-steps", a->cfg.ode_steps, "ODE regression steps");
  sub->add_option("--dmd-steps", a->cfg.dmd_steps, "distribution matching steps");
  sub->add_option("--critic-warmup", a->cfg.critic_warmup, "critic-only steps");
  sub->add_option("--critic-updates", a->cfg.critic_updates, "critic steps per generator step");
  sub->add_option("--batch", a->cfg.batch_size, "batch size");
  sub->add_option("--lr", a->cfg.lr, "generator learning rate");
  sub->add_option("--ode-lr", a->cfg.ode_lr, "ODE regression learning rate (0: same as --lr)");
  sub->add_option("--critic-lr", a->cfg.critic_lr, "critic learning rate");
  sub->add_option("--clip", a->cfg.clip_norm, "gradient clip norm");
  sub->add_option("--tau-min", a->cfg.tau_min, "smallest noise level");
  sub->add_option("--tau-max", a->cfg.tau_max, "largest noise level");
  sub->add_option("--anneal-steps", a->cfg.anneal_steps,
                  "self-forcing anneal horizon (0: half the DMD steps)");
  sub->add_option("--seed", a->cfg.seed, "random seed");
  sub->callback([sub, a, &out, &action] {
    action = [sub, a, &out] {
      gen::validate(a->cfg);
      const auto ck = gen::load_checkpoint(a->teacher);
      require(ck.adapter.has_value(), ErrorCode::kInvalidArgument,
              "teacher checkpoint has no camera adapter");
      const auto tc = a->task.task(ck.den.cfg, ck.adapter->cfg);
      const auto task = gen::make_camera_task(tc, a->cfg.seed);
      const gen::DenoiserField teacher(ck.den, &*ck.adapter, false);
      std::vector<std::string> log;
      const auto r = gen::distill(ck.den, teacher, &*ck.adapter, task.data, a->cfg,
                                  [&](const gen::StepLog& l) { log.push_back(gen::to_json_line(l)); });
      const auto d = prepare_dir(a->dir);
      gen::save_checkpoint(d / "student", r.student, &*ck.adapter, "distill");
      write_log(d / "log.jsonl", log);
      write_manifest(d, *sub, {"student/manifest.json", "log.jsonl"});
      out << fmt::format("distilled {} ODE + {} DMD steps, student in {}\n", a->cfg.ode_steps,
                         a->cfg.dmd_steps, (d / "student").string());
    };
  });
}

void add_rollout(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  struct Args {
    std::string frames, packs, scene, checkpoint, dir;
    ModelFlags model;
    gen::RolloutConfig cfg;
  };
  auto* sub = app.add_subcommand("rollout", "block-wise causal generation with a KV cache");
  auto a = std::make_shared<Args>();
  sub->add_option("--frames", a->frames, "control frames (PNG file or directory)")->required();
  sub->add_option("--packs", a->packs, "T x 24 x H x W packed Plücker tensor (EGT1)")->required();
  sub->add_option("--scene", a->scene, "reference scene image (PNG); zeros if omitted");
  sub->add_option("--checkpoint", a->checkpoint,
                  "student checkpoint directory; seeded random model if omitted");
  sub->add_option("--out", a->dir, "output directory")->required();
  a->model.add(sub);
  sub->add_option("--block-frames", a->cfg.block_frames, "latent frames per block")
      ->check(CLI::PositiveNumber);
  sub->add_option("--steps", a->cfg.denoise_steps, "denoising steps per block")
      ->check(CLI::PositiveNumber);
  sub->add_option("--total-blocks", a->cfg.total_blocks, "blocks to generate")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", a->cfg.seed, "random seed");
  sub->callback([sub, a, &out, &action] {
    action = [sub, a, &out] {
      const auto frames = read_pngs(a->frames);
      const Tensor packs_t = read_tensor(fs::path(a->packs));
      require(packs_t.rank() == 4 && packs_t.dim(1) == cond::kPackChannels, ErrorCode::kShapeMismatch,
              fmt::format("packs tensor is {}, expected T x {} x H x W", shape_str(packs_t.shape()),
                          cond::kPackChannels));
      gen::Conditioning c;
      c.z_hand = cond::mock_encode(frames);
      const std::size_t t = c.z_hand.dim(1);
      require(packs_t.dim(0) == t, ErrorCode::kShapeMismatch,
              fmt::format("{} control frames give {} latent frames but there are {} packs",
                          frames.size(), t, packs_t.dim(0)));
      require(packs_t.dim(2) == frames[0].height() && packs_t.dim(3) == frames[0].width(),
              ErrorCode::kShapeMismatch,
              fmt::format("packs are {}x{}, control frames are {}x{}", packs_t.dim(3),
                          packs_t.dim(2), frames[0].width(), frames[0].height()));
      c.z_ref = a->scene.empty() ? Tensor(c.z_hand.shape())
                                 : cond::build_reference_latent(read_png(a->scene), t);
      const std::size_t plane = cond::kPackChannels * packs_t.dim(2) * packs_t.dim(3);
      for (std::size_t l = 0; l < t; ++l) {
        Tensor p({cond::kPackChannels, packs_t.dim(2), packs_t.dim(3)});
        std::copy(packs_t.values().begin() + static_cast<std::ptrdiff_t>(l * plane),
                  packs_t.values().begin() + static_cast<std::ptrdiff_t>((l + 1) * plane),
                  p.values().begin());
        c.packs.push_back(std::move(p));
      }

      gen::DenoiserParams den;
      std::optional<cond::AdapterParams> adapter;
      if (!a->checkpoint.empty()) {
        auto ck = gen::load_checkpoint(a->checkpoint);
        den = std::move(ck.den);
        adapter = std::move(ck.adapter);
      } else {
        std::mt19937_64 rng(a->cfg.seed);
        den = gen::init_denoiser(a->model.denoiser(), rng);
        adapter = cond::init_adapter(a->model.adapter(), rng);
      }
      require(den.cfg.channels == cond::kLatentChannels, ErrorCode::kShapeMismatch,
              fmt::format("model has {} latent channels, the encoder produces {}", den.cfg.channels,
                          cond::kLatentChannels));
      gen::SequenceStream stream(c);
      gen::KVCache cache;
      const Tensor video =
          gen::ar_rollout(den, adapter ? &*adapter : nullptr, stream, a->cfg, cache);
      const auto d = prepare_dir(a->dir);
      write_tensor(d / "latents.egt", video);
      write_manifest(d, *sub, {"latents.egt"}, {{"latent_frames", video.dim(1)}});
      out << fmt::format("generated {} latent frames in {} blocks\n", video.dim(1),
                         a->cfg.total_blocks);
    };
  });
}

void add_metrics(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  struct Args {
    std::string kind, a, b, dir;
    std::size_t grid_h = 16, grid_w = 16;
  };
  auto* sub = app.add_subcommand("metrics", "compare trajectories or frame sequences");
  auto a = std::make_shared<Args>();
  sub->add_option("--kind", a->kind, "cam-err, psnr or ssim")
      ->required()
      ->check(CLI::IsMember({"cam-err", "psnr", "ssim"}));
  sub->add_option("--a", a->a, "first trajectory file, or PNG file or directory")->required();
  sub->add_option("--b", a->b, "second trajectory file, or PNG file or directory")->required();
  sub->add_option("--grid-h", a->grid_h, "cam-err sample grid height")->check(CLI::PositiveNumber);
  sub->add_option("--grid-w", a->grid_w, "cam-err sample grid width")->check(CLI::PositiveNumber);
  sub->add_option("--out", a->dir, "output directory")->required();
  sub->callback([sub, a, &out, &action] {
    action = [sub, a, &out] {
      metrics::MetricReport r;
      if (a->kind == "cam-err") {
        const auto ta = io::read_trajectory(a->a);
        const auto tb = io::read_trajectory(a->b);
        camera::validate(ta);
        camera::validate(tb);
        r = metrics::cam_err_report(ta, tb, a->grid_h, a->grid_w);
      } else {
        const auto fa = read_pngs(a->a);
        const auto fb = read_pngs(a->b);
        r = a->kind == "psnr" ? metrics::psnr_report(fa, fb) : metrics::ssim_report(fa, fb);
      }
      const auto d = prepare_dir(a->dir);
      io::write_text(d / "metrics.jsonl", metrics::to_json_line(r) + "\n");
      write_manifest(d, *sub, {"metrics.jsonl"});
      out << fmt::format("{:<10} {:>14} {:>6} {:>7}\n", "metric", "value", "units", "frames");
      out << fmt::format("{:<10} {:>14.6f} {:>6} {:>7}\n", r.name, r.value,
                         r.units.empty() ? "-" : r.units, r.frame_count);
    };
  });
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound:
    case ErrorCode::kIo:
      return kExitIo;
    case ErrorCode::kNonFinite:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"egogen: hand-control rendering, camera conditioning and toy video generation"};
  app.name("egogen");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::ignore);
  app.set_version_flag("--version", kVersion);

  std::function<void()> action;
  add_stabilize(app, out, action);
  add_render(app, out, action);
  add_plucker(app, out, action);
  add_pack(app, out, action);
  add_train_toy(app, out, action);
  add_distill(app, out, action);
  add_rollout(app, out, action);
  add_metrics(app, out, action);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  try {
    if (action) action();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace egogen::cli
