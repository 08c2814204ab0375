#include "grainnet/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#define GRAINNET_X86 1
#else
#define GRAINNET_X86 0
#endif

namespace grainnet::kernels {

const Table& scalar_table();
const Table* avx2_table();

namespace {

bool cpu_has_avx2() {
#if GRAINNET_X86
  unsigned int eax, ebx, ecx, edx;
  if (__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) {
    const bool avx2 = (ebx & (1u << 5)) != 0;
    bool fma = false;
    if (__get_cpuid(1, &eax, &ebx, &ecx, &edx)) fma = (ecx & (1u << 12)) != 0;
    return avx2 && fma;
  }
#endif
  return false;
}

std::atomic<const Table*> g_active{nullptr};

const Table* initial_table() {
  Isa isa = detect_best();
  if (const char* env = std::getenv("GRAINNET_ISA")) {
    const Isa requested = parse_isa(env);
    if (isa_supported(requested)) isa = requested;
  }
  return &table(isa);
}

}  // namespace

Isa detect_best() {
  return (avx2_table() != nullptr && cpu_has_avx2()) ? Isa::Avx2 : Isa::Scalar;
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: return avx2_table() != nullptr && cpu_has_avx2();
  }
  return false;
}

const Table& table(Isa isa) {
  if (isa == Isa::Avx2) {
    if (!isa_supported(Isa::Avx2))
      throw std::runtime_error("avx2 kernels unavailable on this build/CPU");
    return *avx2_table();
  }
  return scalar_table();
}

const Table& active() {
  const Table* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = initial_table();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

Isa active_isa() {
  return &active() == &scalar_table() ? Isa::Scalar : Isa::Avx2;
}

void set_active(Isa isa) {
  g_active.store(&table(isa), std::memory_order_release);
}

Isa parse_isa(const std::string& name) {
  if (name == "auto") return detect_best();
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  throw std::runtime_error("unknown isa '" + name + "' (expected auto, scalar or avx2)");
}

const char* isa_name(Isa isa) {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

}  // namespace grainnet::kernels
