// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Property checks over one detection stream. Each returns an empty string on
// success, otherwise a description of the first violation.

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "egogen/stabilizer.hpp"
#include "support.hpp"

namespace testing {

using namespace egogen::stabilize;

inline bool near_edge(const Box& b, ImageDims d, double frac) {
  const double m = frac * std::min(d.width, d.height);
  return b.x0 < m || b.y0 < m || b.x1 > d.width - m || b.y1 > d.height - m;
}

inline std::string check_no_overlap(const DetectionTrack& t, double threshold) {
  for (std::size_t f = 0; f < t.frames; ++f) {
    const auto& l = t.hands[0][f];
    const auto& r = t.hands[1][f];
    if (l && r && iou(l->box, r->box) > threshold)
      return fmt::format("frame {}: L/R IoU {} above {}", f, iou(l->box, r->box), threshold);
  }
  return {};
}

/// Every box created by interpolation sits in a gap of `before` whose
/// endpoints are away from the border, close together and at most
/// max_gap_frames apart, and equals the per-coordinate blend of them.
inline std::string check_interpolation(const DetectionTrack& before, const DetectionTrack& after,
                                       const StabilizerConfig& cfg) {
  if (after.frames != before.frames) return "frame count changed";
  for (std::size_t h = 0; h < 2; ++h) {
    if (after.hands[h].size() != after.frames) return "track length differs from frame count";
    for (std::size_t f = 0; f < after.frames; ++f) {
      const auto& slot = after.hands[h][f];
      if (before.hands[h][f]) {
        if (slot != before.hands[h][f]) return fmt::format("hand {} frame {}: existing box changed", h, f);
        continue;
      }
      if (!slot) continue;
      if (!slot->interpolated || slot->confidence != 0.0)
        return fmt::format("hand {} frame {}: filled box not marked interpolated", h, f);
      std::size_t a = f, b = f;
      while (a > 0 && !before.hands[h][a - 1]) --a;
      while (b < before.frames && !before.hands[h][b]) ++b;
      if (a == 0 || b == before.frames) return fmt::format("hand {} frame {}: extrapolated", h, f);
      const Box& p = before.hands[h][a - 1]->box;
      const Box& q = before.hands[h][b]->box;
      if (b - a > cfg.max_gap_frames) return fmt::format("hand {} frame {}: gap too long", h, f);
      if (near_edge(p, before.dims, cfg.edge_margin_frac) || near_edge(q, before.dims, cfg.edge_margin_frac))
        return fmt::format("hand {} frame {}: endpoint within the edge margin", h, f);
      const double dist = std::hypot(p.center_x() - q.center_x(), p.center_y() - q.center_y());
      if (dist > cfg.proximity_frac * 0.5 * (p.diagonal() + q.diagonal()))
        return fmt::format("hand {} frame {}: endpoints too far apart", h, f);
      const double t = static_cast<double>(f - a + 1) / static_cast<double>(b - a + 1);
      const double pc[4] = {p.x0, p.y0, p.x1, p.y1}, qc[4] = {q.x0, q.y0, q.x1, q.y1};
      const double sc[4] = {slot->box.x0, slot->box.y0, slot->box.x1, slot->box.y1};
      for (int k = 0; k < 4; ++k) {
        if (sc[k] < std::min(pc[k], qc[k]) || sc[k] > std::max(pc[k], qc[k]))
          return fmt::format("hand {} frame {}: coordinate {} outside its endpoints", h, f, k);
        if (std::abs(sc[k] - (pc[k] + t * (qc[k] - pc[k]))) > 1e-9)
          return fmt::format("hand {} frame {}: coordinate {} is not the linear blend", h, f, k);
      }
    }
  }
  return {};
}

/// Runs the whole suite on one stream.
inline std::string check_stabilizer_stream(const DetectionStream& s, const StabilizerConfig& cfg) {
  const auto out = egogen::stabilize::stabilize(s.detections, s.frames, s.dims, cfg);
  if (auto e = check_no_overlap(out, cfg.iou_threshold); !e.empty()) return "overlap: " + e;

  // The stages before interpolation: with no gap filling the second overlap
  // pass has nothing new to look at.
  StabilizerConfig no_fill = cfg;
  no_fill.max_gap_frames = 0;
  const auto pre = egogen::stabilize::stabilize(s.detections, s.frames, s.dims, no_fill);
  const auto filled = interpolate_gaps(pre, cfg);
  if (auto e = check_interpolation(pre, filled, cfg); !e.empty()) return "interpolation: " + e;
  if (overlap_filter(filled, cfg) != out) return "pipeline order: result differs from the staged run";

  const auto again = egogen::stabilize::stabilize(to_detections(out), s.frames, s.dims, cfg);
  if (again != out) return "idempotence: second pass changed the track";

  StabilizerConfig wider = cfg;
  wider.max_gap_frames = cfg.max_gap_frames + 3;
  const auto more = interpolate_gaps(pre, wider);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t f = 0; f < s.frames; ++f)
      if (filled.hands[h][f] && !more.hands[h][f])
        return fmt::format("monotonicity: hand {} frame {} lost with a longer max gap", h, f);
  return {};
}

}  // namespace testing
