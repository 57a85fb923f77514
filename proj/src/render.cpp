// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "egogen/error.hpp"

namespace egogen::render {
namespace {

constexpr double kMinDepth = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Pixel (x, y) samples the continuous image plane at (x, y): the same integer
// grid the camera module uses for its rays.
struct Vec2 {
  double x, y;
};

double edge(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// With positive signed area (image y pointing down) a top edge runs exactly
// horizontally to the right and a left edge runs upward.
bool top_left(const Vec2& a, const Vec2& b) {
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  return (ey == 0.0 && ex > 0.0) || ey < 0.0;
}

struct Target {
  std::size_t height, width;
  RenderLayers* layers;
};

void fill_triangle(Target& t, Vec2 a, Vec2 b, Vec2 c, double za, double zb, double zc,
                   std::int8_t owner, Rgb color) {
  double area = edge(a, b, c.x, c.y);
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(b, c);
    std::swap(zb, zc);
    area = -area;
  }
  const bool tl_ab = top_left(a, b), tl_bc = top_left(b, c), tl_ca = top_left(c, a);

  const double min_x = std::min({a.x, b.x, c.x}), max_x = std::max({a.x, b.x, c.x});
  const double min_y = std::min({a.y, b.y, c.y}), max_y = std::max({a.y, b.y, c.y});
  if (max_x < 0.0 || max_y < 0.0) return;
  const double w_last = static_cast<double>(t.width - 1), h_last = static_cast<double>(t.height - 1);
  if (min_x > w_last || min_y > h_last) return;
  const auto x0 = static_cast<std::size_t>(std::max(0.0, std::ceil(min_x)));
  const auto x1 = static_cast<std::size_t>(std::min(w_last, std::floor(max_x)));
  const auto y0 = static_cast<std::size_t>(std::max(0.0, std::ceil(min_y)));
  const auto y1 = static_cast<std::size_t>(std::min(h_last, std::floor(max_y)));

  auto& L = *t.layers;
  for (std::size_t y = y0; y <= y1; ++y) {
    const double py = static_cast<double>(y);
    for (std::size_t x = x0; x <= x1; ++x) {
      const double px = static_cast<double>(x);
      const double e_ab = edge(a, b, px, py);
      const double e_bc = edge(b, c, px, py);
      const double e_ca = edge(c, a, px, py);
      const bool inside = (e_ab > 0.0 || (e_ab == 0.0 && tl_ab)) &&
                          (e_bc > 0.0 || (e_bc == 0.0 && tl_bc)) &&
                          (e_ca > 0.0 || (e_ca == 0.0 && tl_ca));
      if (!inside) continue;
      // Screen-space barycentric depth; no perspective correction.
      const double z = (e_bc * za + e_ca * zb + e_ab * zc) / area;
      const std::size_t i = y * t.width + x;
      if (z < L.depth[i]) {
        L.depth[i] = z;
        L.silhouette_owner[i] = owner;
        L.image.set(x, y, color);
      }
    }
  }
}

bool triangle_valid(const ProjectedMesh& m, const hand::Face& f) {
  return m.valid[f[0]] && m.valid[f[1]] && m.valid[f[2]];
}

void fill_mesh(Target& t, const ProjectedMesh& m, std::int8_t owner, Rgb color) {
  for (const auto& f : *m.faces) {
    if (!triangle_valid(m, f)) continue;
    fill_triangle(t, {m.points(f[0], 0), m.points(f[0], 1)}, {m.points(f[1], 0), m.points(f[1], 1)},
                  {m.points(f[2], 0), m.points(f[2], 1)}, m.depths[f[0]], m.depths[f[1]],
                  m.depths[f[2]], owner, color);
  }
}

std::vector<std::pair<int, int>> unique_edges(const ProjectedMesh& m) {
  std::set<std::pair<int, int>> edges;
  for (const auto& f : *m.faces) {
    if (!triangle_valid(m, f)) continue;
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      edges.emplace(std::min(a, b), std::max(a, b));
    }
  }
  return {edges.begin(), edges.end()};
}

// Nearest-surface depth over each pixel's 3x3 neighbourhood.
std::vector<double> dilated_depth(const std::vector<double>& depth, std::size_t h, std::size_t w) {
  std::vector<double> out(depth.size(), kInf);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double m = kInf;
      for (std::size_t yy = y == 0 ? 0 : y - 1; yy <= std::min(h - 1, y + 1); ++yy)
        for (std::size_t xx = x == 0 ? 0 : x - 1; xx <= std::min(w - 1, x + 1); ++xx)
          m = std::min(m, depth[yy * w + xx]);
      out[y * w + x] = m;
    }
  }
  return out;
}

long long nearest_pixel(double v) { return static_cast<long long>(std::floor(v + 0.5)); }

void draw_wire(Target& t, const ProjectedMesh& m, const std::vector<double>& surface,
               std::int8_t owner, Rgb color, const RenderStyle& style) {
  auto& L = *t.layers;
  const auto W = static_cast<long long>(t.width), H = static_cast<long long>(t.height);
  const int half = (style.line_width - 1) / 2;

  auto plot = [&](long long x, long long y, double z) {
    for (long long dy = -half; dy <= style.line_width - 1 - half; ++dy) {
      for (long long dx = -half; dx <= style.line_width - 1 - half; ++dx) {
        const long long px = x + dx, py = y + dy;
        if (px < 0 || py < 0 || px >= W || py >= H) continue;
        const std::size_t i = static_cast<std::size_t>(py * W + px);
        const double s = surface[i];
        if (!std::isfinite(s) || z > s * (1.0 + style.wire_depth_tolerance)) continue;
        L.wire_owner[i] = owner;
        L.image.set(static_cast<std::size_t>(px), static_cast<std::size_t>(py), color);
      }
    }
  };

  for (auto [ia, ib] : unique_edges(m)) {
    // Liang-Barsky clip of the continuous segment to the padded viewport so
    // far off-screen vertices cannot produce unbounded walks.
    const double ax = m.points(ia, 0), ay = m.points(ia, 1);
    const double ddx = m.points(ib, 0) - ax, ddy = m.points(ib, 1) - ay;
    double t0 = 0.0, t1 = 1.0;
    bool visible = true;
    auto clip = [&](double p, double q) {
      if (p == 0.0) {
        if (q < 0.0) visible = false;
        return;
      }
      const double r = q / p;
      if (p < 0.0) {
        if (r > t1) visible = false;
        else if (r > t0) t0 = r;
      } else {
        if (r < t0) visible = false;
        else if (r < t1) t1 = r;
      }
    };
    clip(-ddx, ax + 1.0);
    clip(ddx, static_cast<double>(W) - ax);
    clip(-ddy, ay + 1.0);
    clip(ddy, static_cast<double>(H) - ay);
    if (!visible) continue;
    const double za = m.depths[ia], zb = m.depths[ib];
    long long x0 = nearest_pixel(ax + t0 * ddx), y0 = nearest_pixel(ay + t0 * ddy);
    long long x1 = nearest_pixel(ax + t1 * ddx), y1 = nearest_pixel(ay + t1 * ddy);
    const double z0 = za + (zb - za) * t0, z1 = za + (zb - za) * t1;

    // Integer midpoint (Bresenham) walk over the major axis.
    const long long dx = std::llabs(x1 - x0), dy = -std::llabs(y1 - y0);
    const long long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    const long long steps = std::max(dx, -dy);
    long long err = dx + dy;
    long long x = x0, y = y0;
    for (long long s = 0;; ++s) {
      const double f = steps == 0 ? 0.0 : static_cast<double>(s) / static_cast<double>(steps);
      plot(x, y, z0 + (z1 - z0) * f);
      if (x == x1 && y == y1) break;
      const long long e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
    }
  }
}

void check_projection(const ProjectedMesh& m, const char* which) {
  require(m.faces != nullptr, ErrorCode::kInvalidArgument, fmt::format("{} projection has no faces", which));
  const auto n = static_cast<std::size_t>(m.points.rows());
  require(m.depths.size() == n && m.valid.size() == n, ErrorCode::kShapeMismatch,
          fmt::format("{} projection arrays disagree in length", which));
  for (const auto& f : *m.faces)
    for (auto idx : f)
      require(idx >= 0 && static_cast<std::size_t>(idx) < n, ErrorCode::kInvalidArgument,
              fmt::format("{} projection face index {} out of range", which, idx));
}

}  // namespace

std::size_t ProjectedMesh::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void validate(const RenderStyle& style) {
  require(style.line_width >= 1, ErrorCode::kInvalidArgument,
          fmt::format("line width must be >= 1 (got {})", style.line_width));
  require(style.wire_depth_tolerance >= 0.0 && std::isfinite(style.wire_depth_tolerance),
          ErrorCode::kInvalidArgument, "wire depth tolerance must be finite and non-negative");
}

ProjectedMesh project_vertices(const hand::HandMesh& mesh, const camera::Intrinsics& K,
                               Handedness handedness) {
  camera::validate(K);
  const auto n = mesh.vertices.rows();
  ProjectedMesh out;
  out.points.resize(n, 2);
  out.depths.resize(static_cast<std::size_t>(n));
  out.valid.resize(static_cast<std::size_t>(n));
  out.faces = mesh.faces;
  out.handedness = handedness;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = mesh.vertices(i, 0), y = mesh.vertices(i, 1), z = mesh.vertices(i, 2);
    const auto k = static_cast<std::size_t>(i);
    out.depths[k] = z;
    if (z <= kMinDepth || !std::isfinite(x) || !std::isfinite(y)) {
      out.valid[k] = 0;
      out.points(i, 0) = out.points(i, 1) = 0.0;
      continue;
    }
    out.valid[k] = 1;
    out.points(i, 0) = K.fx * x / z + K.cx;
    out.points(i, 1) = K.fy * y / z + K.cy;
  }
  return out;
}

RenderLayers render_layers(const std::optional<ProjectedMesh>& left,
                           const std::optional<ProjectedMesh>& right, std::size_t height,
                           std::size_t width, const RenderStyle& style) {
  validate(style);
  require(height >= 1 && width >= 1, ErrorCode::kInvalidArgument, "render target must be non-empty");
  if (left) check_projection(*left, "left");
  if (right) check_projection(*right, "right");

  RenderLayers layers;
  layers.image = RgbImage(height, width);
  layers.silhouette_owner.assign(height * width, kNoHand);
  layers.wire_owner.assign(height * width, kNoHand);
  layers.depth.assign(height * width, kInf);
  Target target{height, width, &layers};

  // Layer 1: silhouettes of both hands share one depth buffer.
  if (left) fill_mesh(target, *left, kLeftHand, style.silhouette_left);
  if (right) fill_mesh(target, *right, kRightHand, style.silhouette_right);

  // Layer 2: wireframes, depth-tested against the filled surfaces.
  const auto surface = dilated_depth(layers.depth, height, width);
  if (left) draw_wire(target, *left, surface, kLeftHand, style.wire_left, style);
  if (right) draw_wire(target, *right, surface, kRightHand, style.wire_right, style);
  return layers;
}

RgbImage render_control(const std::optional<ProjectedMesh>& left,
                        const std::optional<ProjectedMesh>& right, std::size_t height,
                        std::size_t width, const RenderStyle& style) {
  return render_layers(left, right, height, width, style).image;
}

std::vector<RgbImage> render_sequence(const hand::HandModelData& model,
                                      const std::vector<FrameHands>& params,
                                      const camera::Trajectory& traj, std::size_t height,
                                      std::size_t width, const RenderStyle& style) {
  require(params.size() == traj.size(), ErrorCode::kShapeMismatch,
          fmt::format("hand parameters cover {} frames but the trajectory has {}", params.size(),
                      traj.size()));
  std::vector<RgbImage> frames;
  frames.reserve(params.size());
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto project = [&](const std::optional<HandParams>& p, Handedness h) -> std::optional<ProjectedMesh> {
      if (!p) return std::nullopt;
      const auto mesh = hand::forward(model, p->shape, p->pose, p->translation);
      return project_vertices(mesh, traj[t].K, h);
    };
    frames.push_back(render_control(project(params[t].left, Handedness::kLeft),
                                    project(params[t].right, Handedness::kRight), height, width,
                                    style));
  }
  return frames;
}

}  // namespace egogen::render
