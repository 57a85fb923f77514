// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "cli_fixtures.hpp"
#include "egogen/camera.hpp"
#include "egogen/conditioning.hpp"
#include "egogen/image.hpp"
#include "egogen/tensor_io.hpp"
#include "nlohmann/json.hpp"

using namespace egogen;
using testing::run_cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const char* name) : dir(testing::scratch_dir(name)) {}
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

json manifest(const std::string& dir) { return json::parse(testing::file_bytes(fs::path(dir) / "manifest.json")); }

}  // namespace

TEST_CASE("exit code mapping") {
  CHECK(cli::exit_code(ErrorCode::kInvalidArgument) == 1);
  CHECK(cli::exit_code(ErrorCode::kShapeMismatch) == 1);
  CHECK(cli::exit_code(ErrorCode::kParse) == 1);
  CHECK(cli::exit_code(ErrorCode::kFileNotFound) == 2);
  CHECK(cli::exit_code(ErrorCode::kIo) == 2);
  CHECK(cli::exit_code(ErrorCode::kNonFinite) == 3);
}

TEST_CASE("argument handling") {
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"bogus"}).code == 1);
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"--version"}).code == 0);
  CHECK(run_cli({"plucker", "--out", "x"}).code == 1);
  CHECK(run_cli({"metrics", "--kind", "fvd", "--a", "a", "--b", "b", "--out", "o"}).code == 1);
}

TEST_CASE("stabilize") {
  Scratch s("cli_stab");
  SUBCASE("empty input") {
    io::write_text(s / "d.jsonl", "");
    const auto r = run_cli({"stabilize", "--detections", s / "d.jsonl", "--out", s / "o"});
    CHECK(r.code == 0);
    CHECK(r.out == "kept 0 removed 0 interpolated 0\n");
    CHECK(io::read_track(s / "o/track.jsonl").frames == 0);
    CHECK(manifest(s / "o")["run"]["summary"]["kept"] == 0);
  }
  SUBCASE("gap filled by interpolation") {
    const std::string det =
        "{\"frames\":3,\"width\":100,\"height\":100}\n"
        "{\"frame\":0,\"detections\":[{\"hand\":\"left\",\"box\":[20,20,30,30],\"confidence\":0.9}]}\n"
        "{\"frame\":2,\"detections\":[{\"hand\":\"left\",\"box\":[24,20,34,30],\"confidence\":0.9}]}\n";
    io::write_text(s / "d.jsonl", det);
    const auto r = run_cli({"stabilize", "--detections", s / "d.jsonl", "--out", s / "o", "--enlarge", "1",
                            "--edge-margin", "0", "--proximity", "1"});
    REQUIRE(r.code == 0);
    const auto t = io::read_track(s / "o/track.jsonl");
    const auto& mid = t.at(stabilize::Handedness::kLeft, 1);
    REQUIRE(mid.has_value());
    CHECK(mid->interpolated);
    CHECK(mid->box.x0 == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(mid->box.x1 == doctest::Approx(32.0).epsilon(1e-12));
    CHECK(mid->confidence == 0.0);
    CHECK(r.out.find("interpolated 1") != std::string::npos);
  }
  SUBCASE("malformed record") {
    io::write_text(s / "d.jsonl", "{\"frames\":2,\"width\":10,\"height\":10}\n{\"frame\":0,\n");
    const auto r = run_cli({"stabilize", "--detections", s / "d.jsonl", "--out", s / "o"});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 2") != std::string::npos);
  }
  SUBCASE("missing input and bad threshold") {
    CHECK(run_cli({"stabilize", "--detections", s / "none.jsonl", "--out", s / "o"}).code == 2);
    io::write_text(s / "d.jsonl", "");
    CHECK(run_cli({"stabilize", "--detections", s / "d.jsonl", "--out", s / "o", "--iou", "1.5"}).code == 1);
  }
}

TEST_CASE("render") {
  Scratch s("cli_render");
  camera::Trajectory traj(2);
  for (auto& f : traj) f.K = {32, 32, 16, 16};
  io::write_trajectory(s / "t.json", traj);
  io::write_hand_params(s / "none.json", std::vector<render::FrameHands>(2));
  SUBCASE("no hands gives black frames") {
    const auto r = run_cli({"render", "--hands", s / "none.json", "--trajectory", s / "t.json", "--out", s / "o",
                            "--height", "16", "--width", "24"});
    REQUIRE(r.code == 0);
    for (const char* f : {"o/frame_0000.png", "o/frame_0001.png"}) {
      const auto im = read_png(s / f);
      CHECK(im == RgbImage(16, 24));
    }
    CHECK(!fs::exists(s / "o/frame_0002.png"));
    CHECK(manifest(s / "o")["render"]["height"] == "16");
  }
  SUBCASE("count mismatch names both counts") {
    io::write_hand_params(s / "three.json", std::vector<render::FrameHands>(3));
    const auto r = run_cli({"render", "--hands", s / "three.json", "--trajectory", s / "t.json", "--out", s / "o"});
    CHECK(r.code == 1);
    CHECK(r.err.find('3') != std::string::npos);
    CHECK(r.err.find('2') != std::string::npos);
  }
  SUBCASE("deterministic") {
    testing::write_scene(s.dir, 5, 32, 32, 3);
    const std::vector<std::string> a{"render", "--hands", s / "hands.json", "--trajectory", s / "trajectory.json",
                                     "--height", "32", "--width", "32", "--out"};
    auto a1 = a, a2 = a;
    a1.push_back(s / "r1");
    a2.push_back(s / "r2");
    REQUIRE(run_cli(a1).code == 0);
    REQUIRE(run_cli(a2).code == 0);
    CHECK(testing::same_outputs(s / "r1", s / "r2"));
    CHECK(read_png(s / "r1/frame_0000.png") != RgbImage(32, 32));
  }
  SUBCASE("bad style") {
    CHECK(run_cli({"render", "--hands", s / "none.json", "--trajectory", s / "t.json", "--out", s / "o",
                   "--line-width", "0"})
              .code == 1);
  }
}

TEST_CASE("plucker") {
  Scratch s("cli_plucker");
  SUBCASE("identity camera on a 2x2 grid") {
    camera::Trajectory t(1);
    t[0].K = {2.0, 2.0, 0.5, 0.5};
    io::write_trajectory(s / "t.json", t);
    REQUIRE(run_cli({"plucker", "--trajectory", s / "t.json", "--out", s / "o", "--height", "2", "--width", "2"}).code == 0);
    const Tensor p = read_tensor(fs::path(s / "o/plucker.egt"));
    REQUIRE(p.shape() == Shape{1, 6, 2, 2});
    // Maps are stored as f32. Camera at the origin: m = 0, d = (u - 0.5, v - 0.5, 2) / |.|.
    const double n = std::sqrt(0.25 + 0.25 + 4.0);
    for (std::size_t v = 0; v < 2; ++v)
      for (std::size_t u = 0; u < 2; ++u) {
        const double dx = (u - 0.5) / n, dy = (v - 0.5) / n, dz = 2.0 / n;
        for (std::size_t c = 0; c < 3; ++c) CHECK(p.at({0, c, v, u}) == 0.0);
        CHECK(p.at({0, 3, v, u}) == doctest::Approx(dx).epsilon(1e-7));
        CHECK(p.at({0, 4, v, u}) == doctest::Approx(dy).epsilon(1e-7));
        CHECK(p.at({0, 5, v, u}) == doctest::Approx(dz).epsilon(1e-7));
      }
  }
  SUBCASE("frame 0 is the canonical map") {
    std::mt19937_64 rng(4);
    camera::Trajectory t;
    for (int i = 0; i < 3; ++i) t.push_back(testing::random_camera(rng));
    io::write_trajectory(s / "t.json", t);
    REQUIRE(run_cli({"plucker", "--trajectory", s / "t.json", "--out", s / "o", "--height", "5", "--width", "7"}).code == 0);
    const Tensor p = read_tensor(fs::path(s / "o/plucker.egt"));
    REQUIRE(p.shape() == Shape{3, 6, 5, 7});
    const auto canon = camera::plucker_map(camera::Pose{}, t[0].K, 5, 7).tensor();
    double worst = 0.0;
    for (std::size_t i = 0; i < canon.numel(); ++i) worst = std::max(worst, std::abs(p[i] - canon[i]));
    CHECK(worst <= 1e-6);
  }
  SUBCASE("non-orthonormal rotation") {
    camera::Trajectory t(1);
    t[0].pose.R(0, 0) = 1.1;
    io::write_trajectory(s / "t.json", t);
    const auto r = run_cli({"plucker", "--trajectory", s / "t.json", "--out", s / "o"});
    CHECK(r.code == 1);
    CHECK(!fs::exists(s / "o/plucker.egt"));
  }
}

TEST_CASE("pack") {
  Scratch s("cli_pack");
  std::mt19937_64 rng(5);
  write_tensor(fs::path(s / "p.egt"), randn({41, 6, 8, 8}, rng));
  const auto r = run_cli({"pack", "--plucker", s / "p.egt", "--out", s / "o"});
  REQUIRE(r.code == 0);
  const Tensor packs = read_tensor(fs::path(s / "o/packs.egt"));
  CHECK(packs.shape() == Shape{11, 24, 8, 8});
  CHECK(r.out == "41 frames -> 11 packs of 24 channels\n");
  write_tensor(fs::path(s / "bad.egt"), randn({4, 5, 8, 8}, rng));
  CHECK(run_cli({"pack", "--plucker", s / "bad.egt", "--out", s / "o2"}).code == 1);
  io::write_text(s / "trunc.egt", "EGT1");
  CHECK(run_cli({"pack", "--plucker", s / "trunc.egt", "--out", s / "o2"}).code == 1);
}

TEST_CASE("rollout") {
  Scratch s("cli_rollout");
  std::mt19937_64 rng(6);
  for (int i = 0; i < 48; ++i) {
    RgbImage im(16, 16);
    for (auto& b : im.bytes()) b = static_cast<std::uint8_t>(rng() % 256);
    fs::create_directories(s / "frames");
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", i);
    write_png(fs::path(s / "frames") / name, im);
  }
  write_tensor(fs::path(s / "packs.egt"), randn({12, 24, 16, 16}, rng, 0.5));
  const std::vector<std::string> base{"rollout", "--frames", s / "frames", "--packs", s / "packs.egt",
                                      "--dim", "8", "--blocks", "1", "--seed", "3", "--out"};
  auto a = base;
  a.push_back(s / "o");
  const auto r = run_cli(a);
  REQUIRE(r.code == 0);
  const Tensor z = read_tensor(fs::path(s / "o/latents.egt"));
  CHECK(z.shape() == Shape{16, 12, 2, 2});
  CHECK(manifest(s / "o")["run"]["summary"]["latent_frames"] == 12);
  CHECK(manifest(s / "o")["rollout"]["seed"] == "3");

  auto more = a;
  more.back() = s / "o2";
  more.insert(more.end(), {"--total-blocks", "5"});
  CHECK(run_cli(more).code == 1);
  write_tensor(fs::path(s / "short.egt"), randn({11, 24, 16, 16}, rng));
  auto bad = a;
  bad[4] = s / "short.egt";
  bad.back() = s / "o3";
  CHECK(run_cli(bad).code == 1);
}

TEST_CASE("metrics") {
  Scratch s("cli_metrics");
  std::mt19937_64 rng(7);
  camera::Trajectory t;
  for (int i = 0; i < 4; ++i) t.push_back(testing::random_camera(rng));
  io::write_trajectory(s / "t.json", t);
  const auto r = run_cli({"metrics", "--kind", "cam-err", "--a", s / "t.json", "--b", s / "t.json", "--out", s / "o"});
  REQUIRE(r.code == 0);
  const auto line = json::parse(testing::file_bytes(s / "o/metrics.jsonl"));
  CHECK(line["value"] == 0.0);
  CHECK(line["frame_count"] == 4);
  CHECK(r.out.find("cam_err") != std::string::npos);

  write_png(s / "a.png", RgbImage(16, 16, {10, 20, 30}));
  const auto p = run_cli({"metrics", "--kind", "psnr", "--a", s / "a.png", "--b", s / "a.png", "--out", s / "p"});
  REQUIRE(p.code == 0);
  CHECK(json::parse(testing::file_bytes(s / "p/metrics.jsonl"))["value"] == 99.0);
  CHECK(run_cli({"metrics", "--kind", "psnr", "--a", s / "missing", "--b", s / "a.png", "--out", s / "q"}).code == 2);
}

TEST_CASE("config file and manifest replay") {
  Scratch s("cli_config");
  camera::Trajectory t(2);
  t[1].pose.t = camera::Vec3(0.1, 0, 0);
  io::write_trajectory(s / "t.json", t);
  io::write_text(s / "cfg.json", "{\"plucker\": {\"height\": 3, \"width\": 4}}");
  REQUIRE(run_cli({"--config", s / "cfg.json", "plucker", "--trajectory", s / "t.json", "--out", s / "a"}).code == 0);
  CHECK(read_tensor(fs::path(s / "a/plucker.egt")).shape() == Shape{2, 6, 3, 4});
  // Flags win over the file.
  REQUIRE(run_cli({"--config", s / "cfg.json", "plucker", "--trajectory", s / "t.json", "--out", s / "b", "--width", "5"})
              .code == 0);
  CHECK(read_tensor(fs::path(s / "b/plucker.egt")).shape() == Shape{2, 6, 3, 5});
  // The manifest is itself a config that reproduces the run.
  REQUIRE(run_cli({"--config", s / "b/manifest.json", "plucker", "--out", s / "c"}).code == 0);
  CHECK(testing::file_bytes(s / "c/plucker.egt") == testing::file_bytes(s / "b/plucker.egt"));
  io::write_text(s / "broken.json", "{");
  CHECK(run_cli({"--config", s / "broken.json", "plucker", "--trajectory", s / "t.json", "--out", s / "d"}).code == 1);
}

TEST_CASE("train-toy and distill") {
  Scratch s("cli_train");
  const std::vector<std::string> train{"train-toy", "--channels", "2", "--dim", "8", "--blocks", "1",
                                       "--latent-frames", "6", "--latent-h", "2", "--latent-w", "2",
                                       "--stage1-steps", "3", "--stage2-steps", "2", "--seed", "4", "--out"};
  auto t1 = train, t2 = train;
  t1.push_back(s / "t1");
  t2.push_back(s / "t2");
  REQUIRE(run_cli(t1).code == 0);
  REQUIRE(run_cli(t2).code == 0);
  CHECK(testing::same_outputs(s / "t1", s / "t2"));
  const std::string log = testing::file_bytes(s / "t1/log.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 5);
  const auto ck = gen::load_checkpoint(s / "t1/checkpoint");
  CHECK(ck.den.has_lora());

  const auto d = run_cli({"distill", "--teacher", s / "t1/checkpoint", "--latent-h", "2", "--latent-w", "2",
                          "--ode-pairs", "2", "--ode-steps", "2", "--dmd-steps", "2", "--teacher-steps", "4",
                          "--seed", "1", "--out", s / "d"});
  REQUIRE(d.code == 0);
  const auto st = gen::load_checkpoint(s / "d/student");
  CHECK(st.stage == "distill");
  CHECK(st.adapter->params.checksum() == ck.adapter->params.checksum());
  CHECK(run_cli({"distill", "--teacher", s / "nothing", "--out", s / "e"}).code == 2);
}
