#include "sma/linalg.hpp"

#include "sma/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sma::linalg {

PseudoInverse pinv_psd(const Matrix& gram, double rel_cutoff)
{
  PseudoInverse out;
  const Index k = gram.rows();
  out.inverse = Matrix::Zero(k, k);
  if (k == 0) {
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& values = eig.eigenvalues();
  const double top = values.cwiseAbs().maxCoeff();
  if (top == 0.0) {
    out.truncated = true;
    return out;
  }
  const double cutoff = rel_cutoff * top;
  Vector inv = Vector::Zero(k);
  for (Index i = 0; i < k; ++i) {
    if (values(i) > cutoff) {
      inv(i) = 1.0 / values(i);
      ++out.rank;
    }
  }
  out.truncated = out.rank < k;
  const Matrix& vecs = eig.eigenvectors();
  out.inverse = vecs * inv.asDiagonal() * vecs.transpose();
  return out;
}

Matrix sqrt_psd(const Matrix& a, double neg_tol)
{
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  Vector values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) < -neg_tol * scale) {
      throw Error(ErrorCode::InvalidArgument,
                  "matrix is not positive semi-definite (eigenvalue " +
                    std::to_string(values(i)) + ")");
    }
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  const Matrix& vecs = eig.eigenvectors();
  return vecs * values.asDiagonal() * vecs.transpose();
}

double max_eigenvalue(const Matrix& sym)
{
  if (sym.size() == 0) {
    return 0.0;
  }
  if (sym.rows() == 1) {
    return sym(0, 0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Matrix& sym)
{
  if (sym.size() == 0) {
    return 0.0;
  }
  if (sym.rows() == 1) {
    return sym(0, 0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

} // namespace sma::linalg
