#include "grainnet/runtime.hpp"
#include "grainnet/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

namespace grainnet {

namespace {
std::atomic<bool> g_debug_checks{[] {
  const char* env = std::getenv("GRAINNET_DEBUG");
  return env != nullptr && env[0] == '1';
}()};
std::atomic<int> g_threads{0};
}  // namespace

bool debug_checks_enabled() { return g_debug_checks.load(std::memory_order_relaxed); }
void set_debug_checks(bool on) { g_debug_checks.store(on, std::memory_order_relaxed); }

int runtime_threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n <= 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
  }
  return std::clamp(n, 1, 8);
}

void set_runtime_threads(int n) { g_threads.store(n, std::memory_order_relaxed); }

}  // namespace grainnet
