// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "egogen/autograd.hpp"
#include "egogen/camera.hpp"
#include "egogen/image.hpp"
#include "egogen/params.hpp"
#include "egogen/tensor.hpp"

// Conditioning inputs for the generator. Shapes used throughout:
//   latent        C x T x H' x W'      (H' = H/8, W' = W/8, T = ceil(N/4))
//   packed rays   24 x H x W           (one per latent frame)
//   token rows    (T * H'/p * W'/p) x D, rows ordered (t, gy, gx)
namespace egogen::cond {

inline constexpr std::size_t kLatentChannels = 16;
inline constexpr std::size_t kTemporalStride = 4;
inline constexpr std::size_t kSpatialStride = 8;
inline constexpr std::size_t kPackChannels = 6 * kTemporalStride;  // 24
inline constexpr std::size_t kPatch = 2;

/// Latent frames for N source frames.
std::size_t latent_frames(std::size_t n);

/// Packs four consecutive 6 x H x W maps into 24 x H x W per latent frame.
/// Frames past the end repeat the last map.
std::vector<Tensor> pack_plucker(const std::vector<camera::PluckerMap>& maps, std::size_t n);
/// Same, from an N x 6 x H x W stack.
std::vector<Tensor> pack_plucker(const Tensor& stack);

/// The fixed 16 x 3 channel lift used by mock_encode.
const Tensor& mock_projection();

/// Deterministic linear stand-in for a video encoder. `frames` is
/// N x H x W x 3 (any real values; images map to [0, 1]).
Tensor mock_encode(const Tensor& frames);
Tensor mock_encode(const std::vector<RgbImage>& frames);
/// N x H x W x 3 tensor with values in [0, 1].
Tensor frames_tensor(const std::vector<RgbImage>& frames);

/// Encoded scene at latent frame 0, zeros at frames 1..t-1.
Tensor build_reference_latent(const Tensor& scene, std::size_t t);
Tensor build_reference_latent(const RgbImage& scene, std::size_t t);

/// Channel concatenation [noisy; hand; ref] -> 3C x T x H' x W'.
Tensor build_input_latent(const Tensor& z_noisy, const Tensor& z_hand, const Tensor& z_ref);

/// Token rows plus the grid they came from.
struct TokenGrid {
  Tensor rows;  // (frames * grid_h * grid_w) x dim
  std::size_t frames = 0, grid_h = 0, grid_w = 0;

  std::size_t dim() const { return rows.empty() ? 0 : rows.dim(1); }
  /// D x T x Gh x Gw layout.
  Tensor to_dthw() const;
  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

/// Gather table turning a C x T x H' x W' latent into patch rows of width
/// C*p*p, features ordered (c, dy, dx). Shared by patching and unpatching.
std::vector<std::int64_t> patch_index(std::size_t c, std::size_t t, std::size_t h,
                                      std::size_t w, std::size_t p = kPatch);

/// Linear patch embedding. `w` is (3C*p*p) x D, `b` is D.
TokenGrid patch_embed(const Tensor& z_in, const Tensor& w, const Tensor& b);

struct AdapterConfig {
  std::size_t dim = 32;          // token width D
  std::size_t proj_width = 16;   // channels after the 1x1 projection
  std::size_t hidden = 0;        // residual block width; 0 means D
};

struct AdapterParams {
  AdapterConfig cfg;
  ParamSet params;  // proj.w proj.b conv.w conv.b res.w1 res.b1 res.w2 res.b2 out.w out.b
};

/// Random init with the final projection (out.w, out.b) at zero.
AdapterParams init_adapter(const AdapterConfig& cfg, std::mt19937_64& rng);
void validate(const AdapterParams& a);

/// Camera tokens for packs (one per latent frame) on the tape. `vars` binds
/// the adapter parameters.
ad::Var camera_tokens(ad::Tape& tape, const VarSet& vars, const AdapterConfig& cfg,
                      const std::vector<Tensor>& packs);
/// Same, outside any training context.
TokenGrid camera_adapter_forward(const AdapterParams& params, const std::vector<Tensor>& packs);

/// Elementwise sum of equal grids.
TokenGrid inject(const TokenGrid& tokens, const TokenGrid& camera);

}  // namespace egogen::cond
