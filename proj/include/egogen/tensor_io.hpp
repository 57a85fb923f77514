// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "egogen/tensor.hpp"

namespace egogen {

// EGT1 tensor container, little-endian:
//   "EGT1" | u8 dtype | u32 rank | u64 dims[rank] | payload (row-major)
// dtype 0 stores f32, dtype 1 stores f64. See docs/formats.md.
enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

void write_tensor(std::ostream& out, const Tensor& t, DType dtype = DType::kF32);
void write_tensor(const std::filesystem::path& path, const Tensor& t,
                  DType dtype = DType::kF32);

Tensor read_tensor(std::istream& in);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace egogen
