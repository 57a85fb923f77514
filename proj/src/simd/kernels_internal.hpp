// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "egogen/simd/kernels.hpp"

namespace egogen::simd {

#if defined(EGOGEN_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

}  // namespace egogen::simd
