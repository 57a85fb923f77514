// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/stabilizer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "egogen/error.hpp"

namespace egogen::stabilize {
namespace {

std::size_t hand_index(Handedness h) { return h == Handedness::kLeft ? 0 : 1; }

bool near_border(const Box& b, ImageDims dims, double frac) {
  const double m = frac * std::min(dims.width, dims.height);
  return b.x0 < m || b.y0 < m || b.x1 > dims.width - m || b.y1 > dims.height - m;
}

bool degenerate(const Box& b) { return !(b.x0 < b.x1 && b.y0 < b.y1); }

}  // namespace

double Box::diagonal() const { return std::hypot(width(), height()); }

DetectionTrack::DetectionTrack(std::size_t n, ImageDims d) : frames(n), dims(d) {
  for (auto& h : hands) h.assign(n, std::nullopt);
}

std::optional<TrackBox>& DetectionTrack::at(Handedness h, std::size_t frame) {
  return hands[hand_index(h)].at(frame);
}

const std::optional<TrackBox>& DetectionTrack::at(Handedness h, std::size_t frame) const {
  return hands[hand_index(h)].at(frame);
}

void validate(const Box& box) {
  require(std::isfinite(box.x0) && std::isfinite(box.y0) && std::isfinite(box.x1) &&
              std::isfinite(box.y1),
          ErrorCode::kNonFinite, "box has non-finite coordinates");
  require(!degenerate(box), ErrorCode::kInvalidArgument,
          fmt::format("degenerate box [{}, {}, {}, {}]", box.x0, box.y0, box.x1, box.y1));
}

void validate(const StabilizerConfig& cfg) {
  require(cfg.iou_threshold >= 0.0 && cfg.iou_threshold <= 1.0, ErrorCode::kInvalidArgument,
          fmt::format("iou threshold {} outside [0, 1]", cfg.iou_threshold));
  require(cfg.edge_margin_frac >= 0.0 && cfg.edge_margin_frac < 0.5, ErrorCode::kInvalidArgument,
          fmt::format("edge margin fraction {} outside [0, 0.5)", cfg.edge_margin_frac));
  require(cfg.enlarge_factor > 0.0 && std::isfinite(cfg.enlarge_factor), ErrorCode::kInvalidArgument,
          fmt::format("enlarge factor must be positive (got {})", cfg.enlarge_factor));
  require(cfg.proximity_frac >= 0.0 && std::isfinite(cfg.proximity_frac), ErrorCode::kInvalidArgument,
          fmt::format("proximity fraction must be non-negative (got {})", cfg.proximity_frac));
}

double iou(const Box& a, const Box& b) {
  validate(a);
  validate(b);
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

DetectionTrack select_best(const std::vector<Detection>& detections, std::size_t n, ImageDims dims) {
  DetectionTrack track(n, dims);
  // Index of the current winner per slot, to apply the tie-break rules.
  std::array<std::vector<const Detection*>, 2> best;
  for (auto& b : best) b.assign(n, nullptr);
  for (const auto& d : detections) {
    validate(d.box);
    require(d.confidence >= 0.0 && d.confidence <= 1.0, ErrorCode::kInvalidArgument,
            fmt::format("confidence {} outside [0, 1] at frame {}", d.confidence, d.frame));
    if (d.frame >= n) continue;
    const Detection*& cur = best[hand_index(d.handedness)][d.frame];
    // Later entries replace earlier ones only on a strict improvement.
    if (cur == nullptr || d.confidence > cur->confidence ||
        (d.confidence == cur->confidence && d.box.area() < cur->box.area())) {
      cur = &d;
    }
  }
  for (std::size_t h = 0; h < 2; ++h) {
    for (std::size_t f = 0; f < n; ++f) {
      if (const Detection* d = best[h][f]) {
        track.hands[h][f] = TrackBox{d->box, d->confidence, d->interpolated};
      }
    }
  }
  return track;
}

Box enlarge_box(const Box& box, double factor, ImageDims dims) {
  validate(box);
  require(factor > 0.0 && std::isfinite(factor), ErrorCode::kInvalidArgument,
          fmt::format("enlarge factor must be positive (got {})", factor));
  const double cx = box.center_x(), cy = box.center_y();
  const double hw = 0.5 * factor * box.width(), hh = 0.5 * factor * box.height();
  return Box{std::clamp(cx - hw, 0.0, dims.width), std::clamp(cy - hh, 0.0, dims.height),
             std::clamp(cx + hw, 0.0, dims.width), std::clamp(cy + hh, 0.0, dims.height)};
}

DetectionTrack overlap_filter(const DetectionTrack& track, const StabilizerConfig& cfg) {
  validate(cfg);
  DetectionTrack out = track;
  for (std::size_t f = 0; f < track.frames; ++f) {
    auto& l = out.hands[0][f];
    auto& r = out.hands[1][f];
    if (!l || !r || iou(l->box, r->box) <= cfg.iou_threshold) continue;
    bool drop_left;
    if (l->interpolated != r->interpolated) {
      drop_left = l->interpolated;
    } else {
      drop_left = l->confidence < r->confidence;
    }
    (drop_left ? l : r).reset();
  }
  return out;
}

DetectionTrack interpolate_gaps(const DetectionTrack& track, const StabilizerConfig& cfg) {
  validate(cfg);
  DetectionTrack out = track;
  for (std::size_t h = 0; h < 2; ++h) {
    const auto& src = track.hands[h];
    std::size_t f = 0;
    while (f < track.frames) {
      if (src[f]) {
        ++f;
        continue;
      }
      const std::size_t start = f;
      while (f < track.frames && !src[f]) ++f;
      // Gaps touching either end of the sequence have no second endpoint.
      if (start == 0 || f == track.frames) continue;
      const std::size_t gap = f - start;
      if (gap > cfg.max_gap_frames) continue;
      const Box& a = src[start - 1]->box;
      const Box& b = src[f]->box;
      if (near_border(a, track.dims, cfg.edge_margin_frac) ||
          near_border(b, track.dims, cfg.edge_margin_frac)) {
        continue;
      }
      const double dist = std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
      const double reach = cfg.proximity_frac * 0.5 * (a.diagonal() + b.diagonal());
      if (dist > reach) continue;
      for (std::size_t k = 0; k < gap; ++k) {
        const double t = static_cast<double>(k + 1) / static_cast<double>(gap + 1);
        auto lerp = [t](double p, double q) { return p + t * (q - p); };
        out.hands[h][start + k] =
            TrackBox{Box{lerp(a.x0, b.x0), lerp(a.y0, b.y0), lerp(a.x1, b.x1), lerp(a.y1, b.y1)},
                     0.0, true};
      }
    }
  }
  return out;
}

DetectionTrack stabilize(const std::vector<Detection>& detections, std::size_t n, ImageDims dims,
                         const StabilizerConfig& cfg, StabilizeStats* stats) {
  validate(cfg);
  if (n == 0) {
    if (stats) *stats = {};
    return DetectionTrack(0, dims);
  }
  require(dims.width > 0 && dims.height > 0, ErrorCode::kInvalidArgument,
          fmt::format("image dimensions must be positive (got {}x{})", dims.width, dims.height));

  DetectionTrack track = select_best(detections, n, dims);
  // Enlarge genuine, not-yet-enlarged boxes. Look the flag up from the
  // detection that won each slot.
  std::array<std::vector<bool>, 2> already(
      {std::vector<bool>(n, false), std::vector<bool>(n, false)});
  for (const auto& d : detections) {
    if (d.frame >= n) continue;
    const auto& slot = track.hands[hand_index(d.handedness)][d.frame];
    if (slot && slot->box == d.box && slot->confidence == d.confidence && d.enlarged) {
      already[hand_index(d.handedness)][d.frame] = true;
    }
  }
  for (std::size_t h = 0; h < 2; ++h) {
    for (std::size_t f = 0; f < n; ++f) {
      auto& slot = track.hands[h][f];
      if (!slot || slot->interpolated || already[h][f]) continue;
      slot->box = enlarge_box(slot->box, cfg.enlarge_factor, dims);
      // Boxes pushed entirely off-image collapse; drop them.
      if (degenerate(slot->box)) slot.reset();
    }
  }

  track = overlap_filter(track, cfg);
  track = interpolate_gaps(track, cfg);
  track = overlap_filter(track, cfg);

  if (stats) {
    *stats = {};
    std::size_t genuine_in = 0;
    for (const auto& d : detections) genuine_in += (d.frame < n && !d.interpolated) ? 1 : 0;
    for (const auto& h : track.hands) {
      for (const auto& b : h) {
        if (!b) continue;
        if (b->interpolated) ++stats->interpolated;
        else ++stats->kept;
      }
    }
    stats->removed = genuine_in - std::min(genuine_in, stats->kept);
  }
  return track;
}

std::vector<Detection> to_detections(const DetectionTrack& track) {
  std::vector<Detection> out;
  for (std::size_t f = 0; f < track.frames; ++f) {
    for (std::size_t h = 0; h < 2; ++h) {
      if (const auto& b = track.hands[h][f]) {
        out.push_back(Detection{f, h == 0 ? Handedness::kLeft : Handedness::kRight, b->box,
                                b->confidence, true, b->interpolated});
      }
    }
  }
  return out;
}

}  // namespace egogen::stabilize
