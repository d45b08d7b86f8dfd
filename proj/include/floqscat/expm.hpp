#pragma once

#include <string_view>

#include "floqscat/sparse.hpp"

namespace floqscat {

enum class ExpMethod { Auto, Dense, Taylor, Krylov };

std::string_view to_string(ExpMethod m) noexcept;
ExpMethod exp_method_from_string(std::string_view s);

struct ExpOptions {
  ExpMethod method = ExpMethod::Auto;
  Index dense_threshold = 256;  // Auto: dense eigendecomposition up to this size
  double tol = 1e-15;           // per-application error relative to ||v||
  int krylov_max_dim = 40;
  int max_substeps = 1 << 14;
};

struct ExpStats {
  ExpMethod used = ExpMethod::Taylor;
  int substeps = 0;
  int matvecs = 0;
  double error_estimate = 0.0;
};

/// v <- exp(-i dt H) v for Hermitian H.
ExpStats expm_apply(const SpMat& h, double dt, Vec& v, const ExpOptions& opt = {});

/// Applies exp(-i dt H) to every column of `block` (columns in parallel).
void expm_apply_block(const SpMat& h, double dt, Mat& block, const ExpOptions& opt = {});

/// exp(-i dt H) for a dense Hermitian matrix, via eigendecomposition (real
/// symmetric solver when H has no imaginary part).
Mat expm_hermitian(const Mat& h, double dt);

/// Taylor degree m such that x^{m+1}/(m+1)! e^x <= tol, for x <= 1.
int taylor_degree(double x, double tol);

}  // namespace floqscat
