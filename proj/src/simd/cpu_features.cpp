#include "uechecker/simd/cpu_features.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace uechecker::simd {

namespace {

CpuFeatures probe() {
  CpuFeatures f;
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  f.avx2 = __builtin_cpu_supports("avx2");
  f.fma = __builtin_cpu_supports("fma");
#endif
  return f;
}

Isa best_available() {
  const auto& f = cpu_features();
  return (f.avx2 && f.fma) ? Isa::kAvx2 : Isa::kScalar;
}

Isa initial_isa() {
  const char* env = std::getenv("UECHECKER_SIMD");
  if (env != nullptr && std::string(env) == "scalar") return Isa::kScalar;
  return best_available();
}

std::atomic<Isa>& isa_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

}  // namespace

const CpuFeatures& cpu_features() {
  static const CpuFeatures features = probe();
  return features;
}

Isa active_isa() { return isa_slot().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::kAvx2 && best_available() != Isa::kAvx2) isa = Isa::kScalar;
  isa_slot().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kAvx2:
      return "avx2";
    case Isa::kScalar:
      break;
  }
  return "scalar";
}

}  // namespace uechecker::simd
