// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/formats.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "egogen/error.hpp"

namespace egogen::io {
namespace {

using nlohmann::json;
using stabilize::Box;
using stabilize::Detection;
using stabilize::DetectionTrack;
using stabilize::ImageDims;
using stabilize::TrackBox;
using hand::Handedness;

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

// Whole-document parse; syntax errors are reported with their line.
json parse_document(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse,
         fmt::format("{}: line {}: malformed JSON ({})", what, line_of(text, e.byte), e.what()));
  }
}

template <std::size_t N>
std::array<double, N> numbers(const json& j, const char* key) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != N) {
    fail(ErrorCode::kParse, fmt::format("'{}' must be an array of {} numbers", key, N));
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!a[i].is_number()) fail(ErrorCode::kParse, fmt::format("'{}[{}]' is not a number", key, i));
    out[i] = a[i].get<double>();
  }
  return out;
}

double number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) fail(ErrorCode::kParse, fmt::format("'{}' is not a number", key));
  return v.get<double>();
}

std::size_t count(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(ErrorCode::kParse, fmt::format("'{}' must be a non-negative integer", key));
  }
  return v.get<std::size_t>();
}

// Runs `f`, turning schema problems into parse errors tagged with `where`.
template <typename F>
auto located(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, fmt::format("{}: {}", where, e.what()));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParse) throw;
    fail(ErrorCode::kParse, fmt::format("{}: {}", where, e.what()));
  }
}

struct Line {
  std::size_t number;
  std::string text;
};

std::vector<Line> nonblank_lines(const std::string& text) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string s;
  for (std::size_t n = 1; std::getline(in, s); ++n) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    if (s.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back({n, s});
  }
  return out;
}

json parse_line(const Line& l, const char* what) {
  try {
    return json::parse(l.text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, fmt::format("{}: line {}: malformed JSON ({})", what, l.number, e.what()));
  }
}

struct Header {
  std::size_t frames = 0;
  ImageDims dims;
};

Header parse_header(const Line& l, const char* what) {
  const json j = parse_line(l, what);
  return located(fmt::format("{}: line {}", what, l.number), [&] {
    Header h;
    h.frames = count(j, "frames");
    h.dims.width = number(j, "width");
    h.dims.height = number(j, "height");
    require(h.dims.width >= 0 && h.dims.height >= 0, ErrorCode::kParse,
            "image dimensions must be non-negative");
    return h;
  });
}

json header_json(std::size_t frames, ImageDims d) {
  return {{"frames", frames}, {"width", d.width}, {"height", d.height}};
}

Handedness parse_hand(const json& j) {
  const std::string s = j.at("hand").get<std::string>();
  if (s == "left") return Handedness::kLeft;
  if (s == "right") return Handedness::kRight;
  fail(ErrorCode::kParse, fmt::format("hand must be \"left\" or \"right\", got \"{}\"", s));
}

const char* hand_name(Handedness h) { return h == Handedness::kLeft ? "left" : "right"; }

Box parse_box(const json& j) {
  const auto b = numbers<4>(j, "box");
  return Box{b[0], b[1], b[2], b[3]};
}

json box_json(const Box& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

std::string lines(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

std::optional<render::HandParams> parse_hand_entry(const json& j) {
  if (j.is_null()) return std::nullopt;
  render::HandParams p;
  const auto beta = numbers<hand::kNumShape>(j, "beta");
  std::copy(beta.begin(), beta.end(), p.shape.beta.begin());
  p.pose.global_orient = vec3(numbers<3>(j, "global_orient"));
  const auto pose = numbers<3 * (hand::kNumJoints - 1)>(j, "pose");
  for (std::size_t k = 0; k + 1 < hand::kNumJoints; ++k) {
    p.pose.joint_rotations[k] = {pose[3 * k], pose[3 * k + 1], pose[3 * k + 2]};
  }
  p.translation.t = vec3(numbers<3>(j, "t"));
  return p;
}

json hand_entry_json(const std::optional<render::HandParams>& p) {
  if (!p) return nullptr;
  json pose = json::array();
  for (const auto& r : p->pose.joint_rotations) {
    pose.push_back(r.x());
    pose.push_back(r.y());
    pose.push_back(r.z());
  }
  return {{"beta", p->shape.beta},
          {"global_orient", vec_json(p->pose.global_orient)},
          {"pose", pose},
          {"t", vec_json(p->translation.t)}};
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kFileNotFound,
          fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  require(!in.bad(), ErrorCode::kIo, fmt::format("cannot read '{}'", path.string()));
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo,
          fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
}

camera::Trajectory parse_trajectory(const std::string& text) {
  const json doc = parse_document(text, "trajectory");
  require(doc.is_array(), ErrorCode::kParse, "trajectory: expected an array of frame objects");
  camera::Trajectory traj;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    traj.push_back(located(fmt::format("trajectory: frame {}", i), [&] {
      const json& f = doc[i];
      camera::Frame fr;
      const auto r = numbers<9>(f, "R");
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) fr.pose.R(a, b) = r[static_cast<std::size_t>(3 * a + b)];
      fr.pose.t = vec3(numbers<3>(f, "t"));
      fr.K = {number(f, "fx"), number(f, "fy"), number(f, "cx"), number(f, "cy")};
      return fr;
    }));
  }
  return traj;
}

std::string format_trajectory(const camera::Trajectory& traj) {
  json doc = json::array();
  for (const auto& f : traj) {
    json r = json::array();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) r.push_back(f.pose.R(a, b));
    doc.push_back({{"R", r}, {"t", vec_json(f.pose.t)}, {"fx", f.K.fx}, {"fy", f.K.fy},
                   {"cx", f.K.cx}, {"cy", f.K.cy}});
  }
  return doc.dump(2) + "\n";
}

camera::Trajectory read_trajectory(const std::filesystem::path& path) {
  return parse_trajectory(read_text(path));
}

void write_trajectory(const std::filesystem::path& path, const camera::Trajectory& traj) {
  write_text(path, format_trajectory(traj));
}

DetectionFile parse_detections(const std::string& text) {
  const auto ls = nonblank_lines(text);
  DetectionFile out;
  if (ls.empty()) return out;
  const Header h = parse_header(ls.front(), "detections");
  out.frames = h.frames;
  out.dims = h.dims;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const json j = parse_line(ls[i], "detections");
    located(fmt::format("detections: line {}", ls[i].number), [&] {
      const std::size_t frame = count(j, "frame");
      require(frame < out.frames, ErrorCode::kParse,
              fmt::format("frame {} outside the declared {} frames", frame, out.frames));
      const json& ds = j.at("detections");
      require(ds.is_array(), ErrorCode::kParse, "'detections' must be an array");
      for (const json& d : ds) {
        Detection det;
        det.frame = frame;
        det.handedness = parse_hand(d);
        det.box = parse_box(d);
        det.confidence = number(d, "confidence");
        out.detections.push_back(det);
      }
      return 0;
    });
  }
  return out;
}

std::string format_detections(const DetectionFile& file) {
  std::vector<json> records{header_json(file.frames, file.dims)};
  std::vector<json> per_frame(file.frames, json::array());
  for (const auto& d : file.detections) {
    require(d.frame < file.frames, ErrorCode::kInvalidArgument,
            fmt::format("detection at frame {} outside {} frames", d.frame, file.frames));
    per_frame[d.frame].push_back(
        {{"hand", hand_name(d.handedness)}, {"box", box_json(d.box)}, {"confidence", d.confidence}});
  }
  for (std::size_t f = 0; f < file.frames; ++f) {
    if (!per_frame[f].empty()) records.push_back({{"frame", f}, {"detections", per_frame[f]}});
  }
  return lines(records);
}

DetectionFile read_detections(const std::filesystem::path& path) {
  return parse_detections(read_text(path));
}

DetectionTrack parse_track(const std::string& text) {
  const auto ls = nonblank_lines(text);
  if (ls.empty()) return DetectionTrack(0, {});
  const Header h = parse_header(ls.front(), "track");
  DetectionTrack track(h.frames, h.dims);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const json j = parse_line(ls[i], "track");
    located(fmt::format("track: line {}", ls[i].number), [&] {
      const std::size_t frame = count(j, "frame");
      require(frame < track.frames, ErrorCode::kParse,
              fmt::format("frame {} outside the declared {} frames", frame, track.frames));
      for (Handedness hd : {Handedness::kLeft, Handedness::kRight}) {
        const json& e = j.at(hand_name(hd));
        if (e.is_null()) continue;
        track.at(hd, frame) =
            TrackBox{parse_box(e), number(e, "confidence"), e.at("interpolated").get<bool>()};
      }
      return 0;
    });
  }
  return track;
}

std::string format_track(const DetectionTrack& track) {
  std::vector<json> records{header_json(track.frames, track.dims)};
  for (std::size_t f = 0; f < track.frames; ++f) {
    json r = {{"frame", f}};
    for (Handedness hd : {Handedness::kLeft, Handedness::kRight}) {
      const auto& b = track.at(hd, f);
      r[hand_name(hd)] = b ? json{{"box", box_json(b->box)},
                                  {"confidence", b->confidence},
                                  {"interpolated", b->interpolated}}
                           : json(nullptr);
    }
    records.push_back(std::move(r));
  }
  return lines(records);
}

DetectionTrack read_track(const std::filesystem::path& path) { return parse_track(read_text(path)); }

void write_track(const std::filesystem::path& path, const DetectionTrack& track) {
  write_text(path, format_track(track));
}

std::vector<render::FrameHands> parse_hand_params(const std::string& text) {
  const json doc = parse_document(text, "hand params");
  require(doc.is_array(), ErrorCode::kParse, "hand params: expected an array of frame objects");
  std::vector<render::FrameHands> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    out.push_back(located(fmt::format("hand params: frame {}", i), [&] {
      const json& f = doc[i];
      render::FrameHands fh;
      fh.left = parse_hand_entry(f.value("left", json(nullptr)));
      fh.right = parse_hand_entry(f.value("right", json(nullptr)));
      return fh;
    }));
  }
  return out;
}

std::string format_hand_params(const std::vector<render::FrameHands>& frames) {
  json doc = json::array();
  for (const auto& f : frames) {
    doc.push_back({{"left", hand_entry_json(f.left)}, {"right", hand_entry_json(f.right)}});
  }
  return doc.dump(2) + "\n";
}

std::vector<render::FrameHands> read_hand_params(const std::filesystem::path& path) {
  return parse_hand_params(read_text(path));
}

void write_hand_params(const std::filesystem::path& path,
                       const std::vector<render::FrameHands>& frames) {
  write_text(path, format_hand_params(frames));
}

}  // namespace egogen::io
