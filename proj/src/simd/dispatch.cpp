// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string>

#include "egogen/simd/kernels.hpp"
#include "kernels_internal.hpp"

namespace egogen::simd {
namespace {

bool cpu_has_avx2() {
#if defined(EGOGEN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  if (const char* env = std::getenv("EGOGEN_SIMD")) {
    if (std::string(env) == "scalar") return scalar_kernels();
  }
  if (const KernelTable* t = kernels_for(Isa::kAvx2)) return *t;
  return scalar_kernels();
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

const KernelTable* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_kernels();
    case Isa::kAvx2:
#if defined(EGOGEN_HAVE_AVX2)
      if (cpu_has_avx2()) return &avx2_kernels();
#endif
      return nullptr;
  }
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace egogen::simd
