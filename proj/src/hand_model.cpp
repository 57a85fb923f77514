// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Geometry>
#include <fmt/format.h>

#include "egogen/error.hpp"
#include "le_io.hpp"

namespace egogen::hand {
namespace {

using detail::get_le;
using detail::put_le;

constexpr std::array<char, 4> kMagic = {'H', 'M', 'D', '1'};

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

// Topological order of the kinematic tree; throws if it is not a tree rooted
// at joint 0.
std::array<int, kNumJoints> joint_order(const std::array<std::int32_t, kNumJoints>& parents) {
  require(parents[0] == -1, ErrorCode::kInvariant, "kinematic tree: parent of joint 0 must be -1");
  std::array<int, kNumJoints> order{};
  std::array<bool, kNumJoints> placed{};
  placed[0] = true;
  order[0] = 0;
  int n = 1;
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = parents[j];
    require(p >= 0 && p < kNumJoints && p != j, ErrorCode::kInvariant,
            fmt::format("kinematic tree: joint {} has invalid parent {}", j, p));
  }
  // Repeated sweeps; a cycle leaves joints unplaced.
  for (int sweep = 0; sweep < kNumJoints && n < kNumJoints; ++sweep) {
    for (int j = 1; j < kNumJoints; ++j) {
      if (!placed[j] && placed[parents[j]]) {
        placed[j] = true;
        order[n++] = j;
      }
    }
  }
  require(n == kNumJoints, ErrorCode::kInvariant, "kinematic tree contains a cycle");
  return order;
}

Mat3 skew(const Vec3& w) {
  Mat3 k;
  k << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return k;
}

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

Mat3 rodrigues(const Vec3& axis_angle) {
  const double theta = axis_angle.norm();
  const Mat3 k = skew(axis_angle);
  if (theta < 1e-8) {
    // Second-order series of the exponential map.
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

void validate(const HandModelData& m) {
  require(m.templ.rows() == kNumVertices, ErrorCode::kInvariant,
          fmt::format("template has {} vertices, expected {}", m.templ.rows(), kNumVertices));
  require(m.faces != nullptr, ErrorCode::kInvariant, "model has no face list");
  require(m.shape_dirs.rows() == 3 * kNumVertices && m.shape_dirs.cols() == kNumShape,
          ErrorCode::kInvariant, "shape_dirs must be 2334 x 10");
  require(m.pose_dirs.rows() == 3 * kNumVertices && m.pose_dirs.cols() == kNumPoseFeatures,
          ErrorCode::kInvariant, "pose_dirs must be 2334 x 135");
  require(m.joint_regressor.rows() == kNumJoints && m.joint_regressor.cols() == kNumVertices,
          ErrorCode::kInvariant, "joint_regressor must be 16 x 778");
  require(m.skin_weights.rows() == kNumVertices && m.skin_weights.cols() == kNumJoints,
          ErrorCode::kInvariant, "skin_weights must be 778 x 16");

  for (std::size_t f = 0; f < m.faces->size(); ++f) {
    for (auto idx : (*m.faces)[f]) {
      require(idx >= 0 && idx < kNumVertices, ErrorCode::kInvariant,
              fmt::format("face {} references vertex {} outside [0, {})", f, idx, kNumVertices));
    }
  }
  require(m.templ.allFinite() && m.shape_dirs.allFinite() && m.pose_dirs.allFinite() &&
              m.joint_regressor.allFinite() && m.skin_weights.allFinite(),
          ErrorCode::kNonFinite, "model arrays contain non-finite values");
  for (int v = 0; v < kNumVertices; ++v) {
    double sum = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      const double w = m.skin_weights(v, j);
      require(w >= 0.0, ErrorCode::kInvariant,
              fmt::format("negative skin weight at vertex {}, joint {}", v, j));
      sum += w;
    }
    require(std::abs(sum - 1.0) <= 1e-6, ErrorCode::kNormalization,
            fmt::format("skin weights of vertex {} sum to {}", v, sum));
  }
  joint_order(m.parents);
}

HandModelData load_hand_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFileNotFound, "hand model not found: " + path.string());

  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) fail(ErrorCode::kParse, "hand model: bad magic");
  const auto nv = get_le<std::uint32_t>(in, "hand model header");
  const auto nf = get_le<std::uint32_t>(in, "hand model header");
  const auto nj = get_le<std::uint32_t>(in, "hand model header");
  if (nv != kNumVertices || nj != kNumJoints) {
    fail(ErrorCode::kParse,
         fmt::format("hand model header: {} vertices / {} joints, expected {} / {}", nv, nj,
                     kNumVertices, kNumJoints));
  }
  if (nf == 0 || nf > 100000) fail(ErrorCode::kParse, fmt::format("hand model header: face count {}", nf));

  auto f32 = [&](const char* what) {
    return static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in, what)));
  };
  auto i32 = [&](const char* what) {
    return std::bit_cast<std::int32_t>(get_le<std::uint32_t>(in, what));
  };

  HandModelData m;
  m.templ.resize(kNumVertices, 3);
  for (int v = 0; v < kNumVertices; ++v)
    for (int c = 0; c < 3; ++c) m.templ(v, c) = f32("hand model template");

  auto faces = std::make_shared<std::vector<Face>>(nf);
  for (auto& face : *faces)
    for (auto& idx : face) idx = i32("hand model faces");
  m.faces = std::move(faces);

  m.shape_dirs.resize(3 * kNumVertices, kNumShape);
  for (int r = 0; r < 3 * kNumVertices; ++r)
    for (int k = 0; k < kNumShape; ++k) m.shape_dirs(r, k) = f32("hand model shape_dirs");
  m.pose_dirs.resize(3 * kNumVertices, kNumPoseFeatures);
  for (int r = 0; r < 3 * kNumVertices; ++r)
    for (int k = 0; k < kNumPoseFeatures; ++k) m.pose_dirs(r, k) = f32("hand model pose_dirs");
  m.joint_regressor.resize(kNumJoints, kNumVertices);
  for (int j = 0; j < kNumJoints; ++j)
    for (int v = 0; v < kNumVertices; ++v) m.joint_regressor(j, v) = f32("hand model joint_regressor");
  m.skin_weights.resize(kNumVertices, kNumJoints);
  for (int v = 0; v < kNumVertices; ++v)
    for (int j = 0; j < kNumJoints; ++j) m.skin_weights(v, j) = f32("hand model skin_weights");
  for (auto& p : m.parents) p = i32("hand model parents");

  validate(m);
  return m;
}

void save_hand_model(const std::filesystem::path& path, const HandModelData& m) {
  validate(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  auto f32 = [&](double v) { put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); };
  auto i32 = [&](std::int32_t v) { put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v)); };

  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kNumVertices);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.faces->size()));
  put_le<std::uint32_t>(out, kNumJoints);
  for (int v = 0; v < kNumVertices; ++v)
    for (int c = 0; c < 3; ++c) f32(m.templ(v, c));
  for (const auto& face : *m.faces)
    for (auto idx : face) i32(idx);
  for (int r = 0; r < 3 * kNumVertices; ++r)
    for (int k = 0; k < kNumShape; ++k) f32(m.shape_dirs(r, k));
  for (int r = 0; r < 3 * kNumVertices; ++r)
    for (int k = 0; k < kNumPoseFeatures; ++k) f32(m.pose_dirs(r, k));
  for (int j = 0; j < kNumJoints; ++j)
    for (int v = 0; v < kNumVertices; ++v) f32(m.joint_regressor(j, v));
  for (int v = 0; v < kNumVertices; ++v)
    for (int j = 0; j < kNumJoints; ++j) f32(m.skin_weights(v, j));
  for (auto p : m.parents) i32(p);
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Synthetic model
//
// Vertex budget (778): palm capsule 18 rings x 16 segments + 2 poles = 290;
// index, middle, pinky, ring tubes 12 x 8 + tip = 97 each; thumb 11 x 9 + tip
// = 100. Joint order follows the usual convention for this model family:
// wrist, then (index, middle, pinky, ring, thumb) x (base, middle, distal).

namespace {

struct Bone {
  Vec3 a, b;
  int joint;
};

double point_segment_dist2(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).squaredNorm();
}

struct MeshBuilder {
  std::vector<Vec3> verts;
  std::vector<Face> faces;

  int add(const Vec3& v) {
    verts.push_back(v);
    return static_cast<int>(verts.size()) - 1;
  }
  void quad(int a, int b, int c, int d) {
    faces.push_back({a, b, c});
    faces.push_back({a, c, d});
  }
};

// Orthonormal frame around a direction.
std::pair<Vec3, Vec3> frame_around(const Vec3& dir) {
  Vec3 helper = std::abs(dir.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  Vec3 e1 = dir.cross(helper).normalized();
  Vec3 e2 = dir.cross(e1).normalized();
  return {e1, e2};
}

// Tube along the polyline `path` with `rings` rings of `segs` vertices and a
// tip vertex. Radius tapers linearly from r0 to r1.
void add_tube(MeshBuilder& mb, const std::vector<Vec3>& path, int rings, int segs, double r0,
              double r1) {
  std::vector<double> cum(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) cum[i] = cum[i - 1] + (path[i] - path[i - 1]).norm();
  const double total = cum.back();
  auto sample = [&](double s) -> std::pair<Vec3, Vec3> {
    std::size_t i = 1;
    while (i + 1 < path.size() && cum[i] < s) ++i;
    const double seg = cum[i] - cum[i - 1];
    const double t = std::clamp((s - cum[i - 1]) / seg, 0.0, 1.0);
    return {path[i - 1] + t * (path[i] - path[i - 1]), (path[i] - path[i - 1]).normalized()};
  };

  const int first = static_cast<int>(mb.verts.size());
  for (int r = 0; r < rings; ++r) {
    const double s = total * 0.92 * r / (rings - 1);
    auto [center, dir] = sample(s);
    auto [e1, e2] = frame_around(dir);
    const double rad = r0 + (r1 - r0) * r / (rings - 1);
    for (int k = 0; k < segs; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / segs;
      mb.add(center + rad * (std::cos(phi) * e1 + std::sin(phi) * e2));
    }
  }
  const int tip = mb.add(path.back());
  for (int r = 0; r + 1 < rings; ++r) {
    for (int k = 0; k < segs; ++k) {
      const int k1 = (k + 1) % segs;
      mb.quad(first + r * segs + k, first + r * segs + k1, first + (r + 1) * segs + k1,
              first + (r + 1) * segs + k);
    }
  }
  const int last = first + (rings - 1) * segs;
  for (int k = 0; k < segs; ++k) mb.faces.push_back({last + k, last + (k + 1) % segs, tip});
}

void add_palm(MeshBuilder& mb, const Vec3& center, const Vec3& radii, int rings, int segs) {
  const int bottom = mb.add(center - Vec3(0, radii.y(), 0));
  const int first = static_cast<int>(mb.verts.size());
  for (int r = 0; r < rings; ++r) {
    const double polar = std::numbers::pi * (r + 1) / (rings + 1);  // from -y pole
    const double y = -std::cos(polar);
    const double ring = std::sin(polar);
    for (int k = 0; k < segs; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / segs;
      mb.add(center + Vec3(radii.x() * ring * std::cos(phi), radii.y() * y,
                           radii.z() * ring * std::sin(phi)));
    }
  }
  const int top = mb.add(center + Vec3(0, radii.y(), 0));
  for (int k = 0; k < segs; ++k) mb.faces.push_back({bottom, first + (k + 1) % segs, first + k});
  for (int r = 0; r + 1 < rings; ++r) {
    for (int k = 0; k < segs; ++k) {
      const int k1 = (k + 1) % segs;
      mb.quad(first + r * segs + k, first + r * segs + k1, first + (r + 1) * segs + k1,
              first + (r + 1) * segs + k);
    }
  }
  const int last = first + (rings - 1) * segs;
  for (int k = 0; k < segs; ++k) mb.faces.push_back({last + k, last + (k + 1) % segs, top});
}

}  // namespace

HandModelData make_synthetic_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Vec3 palm_center(0.0, 0.045, 0.0);
  const Vec3 palm_radii(0.042 * jitter(rng), 0.05 * jitter(rng), 0.016 * jitter(rng));

  // Finger bases across the top of the palm; thumb on the +x side.
  struct FingerSpec {
    Vec3 base, dir;
    double len;
    int rings, segs;
    double r0, r1;
  };
  const double top = palm_center.y() + 0.8 * palm_radii.y();
  std::array<FingerSpec, 5> fingers = {{
      {{-0.027, top, 0.0}, Vec3(-0.08, 1, 0).normalized(), 0.070, 12, 8, 0.0090, 0.0070},  // index
      {{-0.009, top + 0.004, 0.0}, Vec3(0, 1, 0), 0.076, 12, 8, 0.0092, 0.0072},           // middle
      {{0.027, top - 0.006, 0.0}, Vec3(0.12, 1, 0).normalized(), 0.055, 12, 8, 0.0078, 0.0060},  // pinky
      {{0.009, top + 0.002, 0.0}, Vec3(0.05, 1, 0).normalized(), 0.071, 12, 8, 0.0088, 0.0068},  // ring
      {{0.036, 0.025, 0.004}, Vec3(0.8, 0.6, 0.15).normalized(), 0.060, 11, 9, 0.0105, 0.0080},  // thumb
  }};

  std::array<Vec3, kNumJoints> joints;
  std::array<std::int32_t, kNumJoints> parents{};
  joints[0] = Vec3::Zero();
  parents[0] = -1;
  std::vector<Bone> bones;
  bones.push_back({joints[0], palm_center, 0});

  MeshBuilder mb;
  add_palm(mb, palm_center, palm_radii, 18, 16);
  for (int f = 0; f < 5; ++f) {
    const auto& spec = fingers[f];
    const double len = spec.len * jitter(rng);
    const std::array<double, 3> frac = {0.0, 0.42, 0.74};
    std::vector<Vec3> path;
    for (int k = 0; k < 3; ++k) {
      const int j = 1 + 3 * f + k;
      joints[j] = spec.base + frac[k] * len * spec.dir;
      parents[j] = k == 0 ? 0 : j - 1;
      path.push_back(joints[j]);
    }
    const Vec3 tip = spec.base + len * spec.dir;
    path.push_back(tip);
    for (int k = 0; k < 3; ++k) bones.push_back({path[k], path[k + 1], 1 + 3 * f + k});
    add_tube(mb, path, spec.rings, spec.segs, spec.r0, spec.r1);
  }
  if (mb.verts.size() != static_cast<std::size_t>(kNumVertices)) {
    fail(ErrorCode::kInvariant, fmt::format("synthetic mesh has {} vertices", mb.verts.size()));
  }

  HandModelData m;
  m.templ.resize(kNumVertices, 3);
  for (int v = 0; v < kNumVertices; ++v)
    for (int c = 0; c < 3; ++c) m.templ(v, c) = to_f32(mb.verts[v][c]);
  m.faces = std::make_shared<std::vector<Face>>(std::move(mb.faces));
  m.parents = parents;

  // Skin weights from a Gaussian falloff to each bone, truncated to the four
  // strongest influences. Weights are quantised to multiples of 2^-20 with an
  // exact integer total, so every row sums to exactly one in both f32 and f64.
  m.skin_weights = Eigen::MatrixXd::Zero(kNumVertices, kNumJoints);
  constexpr double kSigma2 = 0.012 * 0.012;
  constexpr std::int64_t kUnit = 1 << 20;
  for (int v = 0; v < kNumVertices; ++v) {
    const Vec3 p = m.templ.row(v).transpose();
    std::array<double, kNumJoints> w{};
    for (const auto& bone : bones) {
      w[bone.joint] = std::max(w[bone.joint], std::exp(-point_segment_dist2(p, bone.a, bone.b) / kSigma2));
    }
    std::array<int, kNumJoints> idx;
    for (int j = 0; j < kNumJoints; ++j) idx[j] = j;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return w[a] > w[b]; });
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) sum += w[idx[k]] + 1e-6;
    std::int64_t assigned = 0;
    for (int k = 1; k < 4; ++k) {
      const auto q = static_cast<std::int64_t>(std::floor((w[idx[k]] + 1e-6) / sum * kUnit));
      m.skin_weights(v, idx[k]) = static_cast<double>(q) / kUnit;
      assigned += q;
    }
    m.skin_weights(v, idx[0]) = static_cast<double>(kUnit - assigned) / kUnit;
  }

  // Joint regressor: uniform average of the 12 template vertices nearest to
  // each joint.
  m.joint_regressor = Eigen::MatrixXd::Zero(kNumJoints, kNumVertices);
  for (int j = 0; j < kNumJoints; ++j) {
    std::vector<std::pair<double, int>> d;
    d.reserve(kNumVertices);
    for (int v = 0; v < kNumVertices; ++v) {
      d.emplace_back((m.templ.row(v).transpose() - joints[j]).squaredNorm(), v);
    }
    std::partial_sort(d.begin(), d.begin() + 12, d.end());
    for (int k = 0; k < 12; ++k) m.joint_regressor(j, d[k].second) = to_f32(1.0 / 12.0);
  }

  m.shape_dirs.resize(3 * kNumVertices, kNumShape);
  for (int r = 0; r < 3 * kNumVertices; ++r)
    for (int k = 0; k < kNumShape; ++k) m.shape_dirs(r, k) = to_f32(0.002 * gauss(rng));
  m.pose_dirs.resize(3 * kNumVertices, kNumPoseFeatures);
  for (int r = 0; r < 3 * kNumVertices; ++r)
    for (int k = 0; k < kNumPoseFeatures; ++k) m.pose_dirs(r, k) = to_f32(0.001 * gauss(rng));

  validate(m);
  return m;
}

Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor> shaped_joints(const HandModelData& model,
                                                                   const HandShape& shape) {
  const Eigen::Map<const Eigen::Matrix<double, kNumShape, 1>> beta(shape.beta.data());
  const Eigen::VectorXd offsets = model.shape_dirs * beta;
  Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor> j =
      Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor>::Zero();
  for (int jj = 0; jj < kNumJoints; ++jj) {
    for (int v = 0; v < kNumVertices; ++v) {
      const double w = model.joint_regressor(jj, v);
      if (w == 0.0) continue;
      for (int c = 0; c < 3; ++c) j(jj, c) += w * (model.templ(v, c) + offsets(3 * v + c));
    }
  }
  return j;
}

HandMesh forward(const HandModelData& model, const HandShape& shape, const HandPose& pose,
                 const HandTranslation& translation) {
  for (double b : shape.beta) require(std::isfinite(b), ErrorCode::kNonFinite, "non-finite shape coefficient");
  require(finite(pose.global_orient), ErrorCode::kNonFinite, "non-finite global orientation");
  for (const auto& r : pose.joint_rotations) require(finite(r), ErrorCode::kNonFinite, "non-finite joint rotation");
  require(finite(translation.t), ErrorCode::kNonFinite, "non-finite translation");

  const Eigen::Map<const Eigen::Matrix<double, kNumShape, 1>> beta(shape.beta.data());

  // Shape blend.
  Eigen::VectorXd shaped = model.shape_dirs * beta;
  for (int v = 0; v < kNumVertices; ++v)
    for (int c = 0; c < 3; ++c) shaped(3 * v + c) += model.templ(v, c);

  Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor> joints =
      Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor>::Zero();
  for (int j = 0; j < kNumJoints; ++j) {
    for (int v = 0; v < kNumVertices; ++v) {
      const double w = model.joint_regressor(j, v);
      if (w == 0.0) continue;
      for (int c = 0; c < 3; ++c) joints(j, c) += w * shaped(3 * v + c);
    }
  }

  // Pose blend driven by (R_j - I) of the 15 non-root joints.
  std::array<Mat3, kNumJoints> rot;
  rot[0] = rodrigues(pose.global_orient);
  for (int j = 1; j < kNumJoints; ++j) rot[j] = rodrigues(pose.joint_rotations[j - 1]);
  Eigen::Matrix<double, kNumPoseFeatures, 1> pose_feature;
  for (int j = 1; j < kNumJoints; ++j) {
    const Mat3 d = rot[j] - Mat3::Identity();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) pose_feature(9 * (j - 1) + 3 * r + c) = d(r, c);
  }
  const Eigen::VectorXd posed = shaped + model.pose_dirs * pose_feature;

  // World transforms of each joint, then relative to the rest pose.
  std::array<Mat3, kNumJoints> g_rot;
  std::array<Vec3, kNumJoints> g_trans;
  for (int j : joint_order(model.parents)) {
    const Vec3 jpos = joints.row(j).transpose();
    const int p = model.parents[j];
    if (p < 0) {
      g_rot[j] = rot[j];
      g_trans[j] = jpos;
    } else {
      g_rot[j] = g_rot[p] * rot[j];
      g_trans[j] = g_rot[p] * (jpos - joints.row(p).transpose()) + g_trans[p];
    }
  }
  std::array<Vec3, kNumJoints> a_trans;
  for (int j = 0; j < kNumJoints; ++j) a_trans[j] = g_trans[j] - g_rot[j] * joints.row(j).transpose();

  HandMesh mesh;
  mesh.faces = model.faces;
  mesh.vertices.resize(kNumVertices, 3);
  for (int v = 0; v < kNumVertices; ++v) {
    Mat3 blend_rot = Mat3::Zero();
    Vec3 blend_trans = Vec3::Zero();
    for (int j = 0; j < kNumJoints; ++j) {
      const double w = model.skin_weights(v, j);
      if (w == 0.0) continue;
      blend_rot += w * g_rot[j];
      blend_trans += w * a_trans[j];
    }
    const Vec3 p(posed(3 * v), posed(3 * v + 1), posed(3 * v + 2));
    mesh.vertices.row(v) = (blend_rot * p + blend_trans + translation.t).transpose();
  }
  return mesh;
}

}  // namespace egogen::hand
