#include "crumble/kern/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace crumble::kern {

const Kernels* avx2_kernels_impl();  // kernels_avx2.cpp

bool have_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* avx2_kernels() { return have_avx2() ? avx2_kernels_impl() : nullptr; }

namespace {
const Kernels& resolve() {
  if (const char* env = std::getenv("CRUMBLE_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return scalar_kernels();
    if (std::strcmp(env, "avx2") == 0) {
      if (const Kernels* k = avx2_kernels()) return *k;
      return scalar_kernels();
    }
  }
  if (const Kernels* k = avx2_kernels()) return *k;
  return scalar_kernels();
}
}  // namespace

const Kernels& active() {
  static const Kernels& k = resolve();
  return k;
}

}  // namespace crumble::kern
