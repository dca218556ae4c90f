#pragma once

// Dense inner-loop kernels used by the MLP and the similarity scans.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled into separate
// translation units and selected once at startup from CPUID. Setting the
// environment variable BRET_SIMD=scalar forces the reference path.
//
// Vector variants sum in a different order than the scalar loop, so
// results agree to rounding, not bit-for-bit. Within one process the
// selection never changes, which keeps every run on a given machine
// reproducible.

#include <cstddef>
#include <string_view>
#include <vector>

namespace bret::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// sum_i (x[i] - y[i])^2
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

/// True when the variant was compiled in and the CPU can run it.
bool supported(Isa isa);

/// Kernel table for a specific variant; throws std::invalid_argument if unsupported.
const KernelTable& kernels_for(Isa isa);

/// The table chosen for this process.
const KernelTable& active();

std::vector<Isa> supported_isas();
std::string_view isa_name(Isa isa);

// Convenience wrappers over the active table.
inline double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline double squared_distance(const double* x, const double* y, std::size_t n) {
  return active().squared_distance(x, y, n);
}

namespace detail {
#if defined(BRET_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(BRET_HAVE_NEON)
const KernelTable& neon_kernels();
#endif
}  // namespace detail

}  // namespace bret::simd
