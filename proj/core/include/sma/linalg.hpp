#pragma once

#include <Eigen/Dense>

namespace sma {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

//! Relative cutoff for truncated spectral pseudo-inversion.
inline constexpr double kPinvRelativeCutoff = 1e-10;

struct PseudoInverse {
  Matrix inverse;
  Index rank = 0;
  bool truncated = false;
};

//! Pseudo-inverse of a symmetric positive semi-definite matrix. Eigenvalues
//! below cutoff * (largest eigenvalue) are dropped.
[[nodiscard]] PseudoInverse pinv_psd(const Matrix& gram,
                                     double rel_cutoff = kPinvRelativeCutoff);

//! Symmetric PSD square root. Eigenvalues in [-neg_tol, 0) are clamped to
//! zero; anything more negative throws InvalidArgument.
[[nodiscard]] Matrix sqrt_psd(const Matrix& a, double neg_tol = 1e-10);

//! Largest eigenvalue of a symmetric matrix.
[[nodiscard]] double max_eigenvalue(const Matrix& sym);

//! Smallest eigenvalue of a symmetric matrix.
[[nodiscard]] double min_eigenvalue(const Matrix& sym);

} // namespace linalg
} // namespace sma
