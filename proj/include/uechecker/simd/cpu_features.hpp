#pragma once

#include <string_view>

namespace uechecker::simd {

enum class Isa { kScalar, kAvx2 };

struct CpuFeatures {
  bool avx2 = false;
  bool fma = false;
};

/// Probed once per process.
const CpuFeatures& cpu_features();

/// Instruction set used by the dispatched kernels. Honors the
/// UECHECKER_SIMD environment variable ("scalar" or "avx2") when set.
Isa active_isa();

/// Overrides dispatch for the remainder of the process. Requesting an ISA
/// the CPU lacks falls back to scalar.
void force_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace uechecker::simd
