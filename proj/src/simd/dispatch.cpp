#include <cstdlib>
#include <stdexcept>
#include <string>

#include "bret/simd/kernels.hpp"

namespace bret::simd {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(BRET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(BRET_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& choose() {
  if (const char* forced = std::getenv("BRET_SIMD")) {
    const std::string want(forced);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa) && supported(isa)) return kernels_for(isa);
    }
  }
  if (supported(Isa::avx2)) return kernels_for(Isa::avx2);
  if (supported(Isa::neon)) return kernels_for(Isa::neon);
  return scalar_kernels();
}

}  // namespace

bool supported(Isa isa) { return cpu_has(isa); }

const KernelTable& kernels_for(Isa isa) {
  if (!supported(isa)) {
    throw std::invalid_argument("simd variant not available: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(BRET_HAVE_AVX2)
    case Isa::avx2:
      return detail::avx2_kernels();
#endif
#if defined(BRET_HAVE_NEON)
    case Isa::neon:
      return detail::neon_kernels();
#endif
    default:
      return scalar_kernels();
  }
}

const KernelTable& active() {
  static const KernelTable& table = choose();
  return table;
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (supported(isa)) out.push_back(isa);
  }
  return out;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace bret::simd
