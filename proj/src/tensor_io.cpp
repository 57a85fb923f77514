// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include "egogen/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "egogen/error.hpp"
#include "le_io.hpp"

namespace egogen {
namespace {

using detail::get_le;
using detail::put_le;

constexpr std::array<char, 4> kMagic = {'E', 'G', 'T', '1'};
constexpr std::uint32_t kMaxRank = 16;

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t, DType dtype) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) put_le<std::uint64_t>(out, d);
  for (double v : t.values()) {
    if (dtype == DType::kF32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (!out) fail(ErrorCode::kIo, "EGT1: write failed");
}

void write_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_tensor(out, t, dtype);
}

Tensor read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) fail(ErrorCode::kParse, "EGT1: bad magic");
  const auto dtype = get_le<std::uint8_t>(in, "EGT1 dtype");
  if (dtype > 1) fail(ErrorCode::kParse, "EGT1: unknown dtype " + std::to_string(dtype));
  const auto rank = get_le<std::uint32_t>(in, "EGT1 rank");
  if (rank > kMaxRank) fail(ErrorCode::kParse, "EGT1: rank " + std::to_string(rank) + " too large");
  Shape shape(rank);
  for (auto& d : shape) d = get_le<std::uint64_t>(in, "EGT1 dims");
  const std::size_t elem = dtype == 0 ? 4 : 8;
  if (const auto here = in.tellg(); here != std::streampos(-1)) {
    in.seekg(0, std::ios::end);
    const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
    in.seekg(here);
    if (remaining / elem < shape_numel(shape)) {
      fail(ErrorCode::kParse, "EGT1 payload: truncated input (shape " + shape_str(shape) + ")");
    }
  }
  Tensor t(shape);
  for (auto& v : t.values()) {
    if (dtype == 0) {
      v = std::bit_cast<float>(get_le<std::uint32_t>(in, "EGT1 payload"));
    } else {
      v = std::bit_cast<double>(get_le<std::uint64_t>(in, "EGT1 payload"));
    }
  }
  return t;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFileNotFound, "cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace egogen
