#include "camera/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace camera::kern {
namespace {

const Kernels* g_active = nullptr;
std::string g_name;

void pick(const std::string& name) {
  if (name == "scalar") {
    g_active = &scalar();
    g_name = "scalar";
    return;
  }
#ifdef CAMERA_HAVE_AVX2
  if (name == "avx2") {
    if (!avx2Available())
      throw std::runtime_error("avx2 kernels requested but CPU lacks AVX2");
    g_active = &avx2();
    g_name = "avx2";
    return;
  }
#endif
  if (name == "auto" || name == "avx2") {
#ifdef CAMERA_HAVE_AVX2
    if (avx2Available()) {
      g_active = &avx2();
      g_name = "avx2";
      return;
    }
#endif
    g_active = &scalar();
    g_name = "scalar";
    return;
  }
  throw std::runtime_error("unknown kernel set: " + name);
}

void initOnce() {
  if (g_active) return;
  const char* env = std::getenv("CAMERA_KERNELS");
  pick(env ? env : "auto");
}

}  // namespace

bool avx2Available() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Kernels& active() {
  initOnce();
  return *g_active;
}

void select(const std::string& name) { pick(name); }

std::string activeName() {
  initOnce();
  return g_name;
}

}  // namespace camera::kern
