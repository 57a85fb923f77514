// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <Eigen/Geometry>

#include "egogen/error.hpp"
#include "egogen/hand_model.hpp"
#include "oracles/lbs.hpp"
#include "support.hpp"

using namespace egogen;
using namespace egogen::hand;

namespace {

const HandModelData& model() {
  static const HandModelData m = make_synthetic_model(0);
  return m;
}

ErrorCode load_error(const std::filesystem::path& p) {
  try {
    load_hand_model(p);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kStreamExhausted;
}

}  // namespace

TEST_CASE("synthetic model structure") {
  const auto& m = model();
  CHECK_NOTHROW(validate(m));
  CHECK(m.templ.rows() == kNumVertices);
  CHECK(m.parents[0] == -1);
  CHECK(m.templ.cwiseAbs().maxCoeff() <= 0.2);
  for (int v = 0; v < kNumVertices; ++v)
    CHECK(m.skin_weights.row(v).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("synthetic model is seeded") {
  const auto a = make_synthetic_model(0), b = make_synthetic_model(0), c = make_synthetic_model(1);
  CHECK(a.templ == b.templ);
  CHECK(a.shape_dirs == b.shape_dirs);
  CHECK(a.pose_dirs == b.pose_dirs);
  CHECK(*a.faces == *b.faces);
  CHECK(a.templ != c.templ);
}

TEST_CASE("HMD1 round trip and errors") {
  const auto dir = testing::scratch_dir("hmd");
  const auto path = dir / "hand.hmd";
  save_hand_model(path, model());
  const auto back = load_hand_model(path);
  CHECK(back.templ == model().templ);
  CHECK(back.shape_dirs == model().shape_dirs);
  CHECK(back.pose_dirs == model().pose_dirs);
  CHECK(back.joint_regressor == model().joint_regressor);
  CHECK(back.skin_weights == model().skin_weights);
  CHECK(back.parents == model().parents);
  CHECK(*back.faces == *model().faces);

  SUBCASE("missing file") { CHECK(load_error(dir / "nope.hmd") == ErrorCode::kFileNotFound); }
  SUBCASE("truncated file") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size / 2);
    CHECK(load_error(path) == ErrorCode::kParse);
  }
  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("HMD2", 4);
    f.close();
    CHECK(load_error(path) == ErrorCode::kParse);
  }
  SUBCASE("unnormalized skin weights") {
    // Halve every weight of vertex 5 in place.
    const std::size_t faces = model().faces->size();
    const std::size_t offset = 16 + 4 * (kNumVertices * 3 + faces * 3 + 3 * kNumVertices * kNumShape +
                                         3 * kNumVertices * kNumPoseFeatures +
                                         kNumJoints * kNumVertices + 5 * kNumJoints);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    for (int j = 0; j < kNumJoints; ++j) {
      float w = 0;
      f.seekg(static_cast<std::streamoff>(offset + 4 * j));
      f.read(reinterpret_cast<char*>(&w), 4);
      w *= 0.5f;
      f.seekp(static_cast<std::streamoff>(offset + 4 * j));
      f.write(reinterpret_cast<const char*>(&w), 4);
    }
    f.close();
    CHECK(load_error(path) == ErrorCode::kNormalization);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("validate names the violation") {
  auto bad = model();
  bad.skin_weights.row(3) *= 0.5;
  try {
    validate(bad);
    FAIL("expected a normalization error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNormalization);
  }
  auto cyc = model();
  cyc.parents[1] = 2;
  cyc.parents[2] = 1;
  CHECK_THROWS_AS(validate(cyc), Error);
}

TEST_CASE("rodrigues") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec3 r = testing::random_vec(rng, 3.0);
    const Mat3 R = rodrigues(r);
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((R - oracle::axis_angle(r)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("small angles follow the first-order expansion") {
    const Vec3 axis = Vec3(1, -2, 0.5).normalized();
    const double eps = 1e-6;
    Mat3 k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    const Mat3 first = Mat3::Identity() + eps * k;
    CHECK((rodrigues(eps * axis) - first).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((rodrigues(eps * axis) - oracle::axis_angle(eps * axis)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(rodrigues(Vec3::Zero()) == Mat3::Identity());
  }
}

TEST_CASE("forward at rest is the template") {
  const auto mesh = forward(model(), {}, {}, {});
  CHECK((mesh.vertices - model().templ).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(mesh.faces == model().faces);
}

TEST_CASE("forward translation equivariance") {
  HandTranslation t;
  t.t = Vec3(0.1, 0, 0);
  const auto mesh = forward(model(), {}, {}, t);
  Vertices expect = model().templ;
  expect.col(0).array() += 0.1;
  CHECK((mesh.vertices - expect).cwiseAbs().maxCoeff() <= 1e-12);

  std::mt19937_64 rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto s = testing::random_shape(rng);
    const auto p = testing::random_pose(rng);
    HandTranslation tr;
    tr.t = testing::random_vec(rng, 0.5);
    const auto a = forward(model(), s, p, tr).vertices;
    Vertices b = forward(model(), s, p, {}).vertices;
    b.rowwise() += tr.t.transpose();
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("forward matches the brute-force oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto s = testing::random_shape(rng);
    const auto p = testing::random_pose(rng);
    HandTranslation tr;
    tr.t = testing::random_vec(rng, 0.5);
    const auto got = forward(model(), s, p, tr).vertices;
    const auto want = oracle::lbs(model(), s, p, tr);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("global rotation rotates about the root joint") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    const auto s = testing::random_shape(rng);
    auto p = testing::random_pose(rng);
    const Mat3 dR = testing::random_rotation(rng);
    const auto base = forward(model(), s, p, {}).vertices;
    const Vec3 root = shaped_joints(model(), s).row(0).transpose();

    Eigen::AngleAxisd composed(dR * rodrigues(p.global_orient));
    p.global_orient = composed.angle() * composed.axis();
    const auto turned = forward(model(), s, p, {}).vertices;
    for (int v = 0; v < kNumVertices; ++v) {
      const Vec3 expect = dR * (base.row(v).transpose() - root) + root;
      CHECK((turned.row(v).transpose() - expect).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("forward rejects non-finite parameters") {
  HandPose p;
  p.joint_rotations[3].x() = std::nan("");
  try {
    forward(model(), {}, p, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFinite);
  }
}
