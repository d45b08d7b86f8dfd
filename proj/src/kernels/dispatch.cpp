#include <cstdlib>
#include <stdexcept>
#include <string>

#include "tables.hpp"

namespace floqscat::simd {

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(FLOQSCAT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(FLOQSCAT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) {
    throw std::invalid_argument("kernel variant not available: " + std::string(to_string(isa)));
  }
  switch (isa) {
#if defined(FLOQSCAT_HAVE_AVX2)
    case Isa::Avx2: return detail::kAvx2Table;
#endif
#if defined(FLOQSCAT_HAVE_NEON)
    case Isa::Neon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("FLOQSCAT_SIMD");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") return detail::kScalarTable;
  if (choice == "avx2" && available(Isa::Avx2)) return table(Isa::Avx2);
  if (choice == "neon" && available(Isa::Neon)) return table(Isa::Neon);
  if (available(Isa::Avx2)) return table(Isa::Avx2);
  if (available(Isa::Neon)) return table(Isa::Neon);
  return detail::kScalarTable;
}

}  // namespace

const KernelTable& kernels() {
  static const KernelTable& active = select();
  return active;
}

}  // namespace floqscat::simd
