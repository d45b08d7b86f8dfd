#pragma once

// Inner-loop kernels for complex double vectors and CSR matrices.
//
// Every kernel has a scalar reference implementation; AVX2+FMA (x86-64) and
// NEON (aarch64) variants are compiled when available and selected at first
// use. FLOQSCAT_SIMD=scalar|avx2|neon|auto overrides the choice.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace floqscat::simd {

using cplx = std::complex<double>;

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;

/// Non-owning view of a CSR matrix with complex values.
struct CsrView {
  std::ptrdiff_t rows = 0;
  const std::int32_t* row_ptr = nullptr;
  const std::int32_t* col_idx = nullptr;
  const cplx* values = nullptr;
};

struct KernelTable {
  Isa isa;
  /// y = alpha * A x  (y and x must not alias)
  void (*csr_matvec)(const CsrView& a, cplx alpha, const cplx* x, cplx* y);
  /// y += a * x
  void (*axpy)(std::size_t n, cplx a, const cplx* x, cplx* y);
  /// sum |x_i|^2
  double (*norm2)(std::size_t n, const cplx* x);
  /// sum conj(x_i) y_i
  cplx (*dot)(std::size_t n, const cplx* x, const cplx* y);
  /// x_i *= d_i
  void (*diag_mul)(std::size_t n, const cplx* d, cplx* x);
};

/// True when the variant was compiled in and the running CPU supports it.
bool available(Isa isa) noexcept;

/// Table for a specific variant; throws if unavailable.
const KernelTable& table(Isa isa);

/// Active table (selected once, thread-safe).
const KernelTable& kernels();

}  // namespace floqscat::simd
