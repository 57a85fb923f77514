// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "egogen/sampling.hpp"
#include "egogen/training.hpp"

// Causal few-step student distilled from a bidirectional teacher: ODE
// regression onto teacher endpoints, then distribution matching against the
// teacher's velocity field with a critic that tracks the student's own
// samples. History frames come from ground truth or, with probability p,
// from the student itself.
namespace egogen::gen {

struct SelfForcingSchedule {
  std::size_t horizon = 1;  // step at which p reaches p_max
  double p_max = 0.5;

  double at(std::size_t step) const;
};

/// Per frame: the student frame with probability p, else ground truth.
std::vector<Tensor> self_forcing_mix(const std::vector<Tensor>& gt,
                                     const std::vector<Tensor>& student, double p,
                                     std::mt19937_64& rng);

/// Single-frame latents C x 1 x H' x W', in order.
std::vector<Tensor> split_frames(const Tensor& z);
Tensor join_frames(const std::vector<Tensor>& frames);

struct DistillConfig {
  std::size_t block_frames = 3;    // B
  std::size_t student_steps = 4;   // N_s
  std::size_t teacher_steps = 32;
  std::size_t ode_pairs = 64;
  std::size_t ode_steps = 100;
  std::size_t dmd_steps = 100;
  std::size_t critic_warmup = 0;   // critic-only steps before the first generator step
  std::size_t critic_updates = 1;  // critic steps per generator step
  std::size_t batch_size = 2;
  double lr = 1e-4;
  double ode_lr = 0.0;  // 0 means lr
  double critic_lr = 1e-4;
  double clip_norm = 0.05;
  double tau_min = 0.02;
  double tau_max = 0.98;
  std::size_t anneal_steps = 0;  // 0 means dmd_steps / 2
  std::uint64_t seed = 0;
  AdamWConfig adamw;  // lr fields are taken from lr / critic_lr
};

void validate(const DistillConfig& cfg);

/// Teacher ODE solution for one noise draw. The student is trained on the
/// block starting at `history`, with the endpoint's earlier frames as context.
struct OdePair {
  Tensor noise;
  Tensor endpoint;
  Conditioning cond;
  std::size_t history = 0;
  std::size_t block = 0;
};

std::vector<OdePair> make_ode_pairs(const VelocityField& teacher, const DataFn& data,
                                    std::size_t n, const DistillConfig& cfg,
                                    std::mt19937_64& rng);

/// N_s causal Euler steps for one block on the tape, starting from `noise`,
/// attending to the clean `history` (possibly empty). Gradients flow through
/// every step.
ad::Var generate_block(const BoundModel& model, ad::Tape& tape, const Tensor& history,
                       const Tensor& noise, const Conditioning& cond, std::size_t steps);

/// Mean squared endpoint error over `pairs` with gradients for the student.
LossGrad ode_loss_and_grad(const DenoiserParams& student, const cond::AdapterParams* adapter,
                           const std::vector<OdePair>& pairs, std::size_t student_steps);

/// Regresses the student's N_s-step output onto teacher endpoints. Minibatches
/// cycle through `pairs` in order.
DenoiserParams ode_pretrain(const DenoiserParams& student, const cond::AdapterParams* adapter,
                            const std::vector<OdePair>& pairs, const DistillConfig& cfg,
                            const LogFn& log = {});

struct DmdItem {
  Tensor z_gt;  // ground-truth clean latent, used as history
  Conditioning cond;
};

struct DmdResult {
  double loss = 0.0;         // mean squared critic-vs-teacher velocity gap
  LossGrad student;          // generator gradients; adapter entries are zero
  double critic_loss = 0.0;  // flow-matching loss of the critic on student samples
  ParamSet critic_base;
  ParamSet critic_lora;
};

/// One distribution-matching evaluation. The critic is bidirectional and
/// shares the camera adapter, which stays frozen.
DmdResult dmd_step(const DenoiserParams& student, const VelocityField& teacher,
                   const DenoiserParams& critic, const cond::AdapterParams* adapter,
                   const std::vector<DmdItem>& batch, const DistillConfig& cfg, double p,
                   std::mt19937_64& rng);

struct DistillResult {
  DenoiserParams student;
  DenoiserParams critic;
};

/// ODE pretraining followed by distribution matching with self-forcing.
DistillResult distill(const DenoiserParams& student, const VelocityField& teacher,
                      const cond::AdapterParams* adapter, const DataFn& data,
                      const DistillConfig& cfg, const LogFn& log = {});

}  // namespace egogen::gen
