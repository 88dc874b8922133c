#pragma once

#include "sma/errors.hpp"
#include "sma/linalg.hpp"
#include "sma/noise.hpp"
#include "sma/pairs.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace sma {

//! p x n design; column i is the feature vector of observation i.
class DesignMatrix {
public:
  explicit DesignMatrix(Matrix entries);

  [[nodiscard]] const Matrix& entries() const noexcept { return entries_; }
  [[nodiscard]] Index features() const noexcept { return entries_.rows(); }
  [[nodiscard]] Index samples() const noexcept { return entries_.cols(); }
  [[nodiscard]] auto leading(Index m) const { return entries_.topRows(m); }

private:
  Matrix entries_;
};

//! Loss weighting W (q x p). The estimation target is W * theta.
class WeightingScheme {
public:
  enum class Kind { FullVector, Prediction, SubvectorProjector, LinearFunctional, Custom };

  [[nodiscard]] static WeightingScheme full_vector();
  //! W = (Psi Psi^T)^{1/2} / sigma, so ||W theta|| = ||Psi^T theta|| / sigma.
  [[nodiscard]] static WeightingScheme prediction(double sigma = 1.0);
  //! Selects the given 0-based feature coordinates.
  [[nodiscard]] static WeightingScheme subvector(std::vector<Index> coords);
  [[nodiscard]] static WeightingScheme linear_functional(Vector functional);
  [[nodiscard]] static WeightingScheme custom(Matrix w);

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] double prediction_scale() const noexcept { return sigma_; }

  //! Materializes W for the given design. Throws DimensionMismatch when the
  //! supplied matrix or vector does not have p columns.
  [[nodiscard]] Matrix resolve(const DesignMatrix& design) const;

private:
  Kind kind_ = Kind::FullVector;
  double sigma_ = 1.0;
  std::vector<Index> coords_;
  Matrix matrix_;
};

[[nodiscard]] const char* to_string(WeightingScheme::Kind kind) noexcept;

//! Ordered family of projection estimators theta_m = S_m Y over the leading m
//! features, with operators K_m = W S_m (S_m zero-padded to p rows).
//!
//! Besides the explicit q x n operators the family keeps a reduced factorization
//! K_m = Q C_m Phi, where Phi is the leading M x n block of the design, C_m is
//! r x M with r = min(q, M), and Q has orthonormal columns. Norms, traces and
//! operator norms of K_m and of any difference K_m - K_base can be computed in
//! the r-dimensional coordinates without touching q x n matrices.
class ModelFamily {
public:
  ModelFamily(DesignMatrix design, const WeightingScheme& weighting, std::vector<int> models);

  [[nodiscard]] const DesignMatrix& design() const noexcept { return design_; }
  [[nodiscard]] const Matrix& weighting() const noexcept { return weighting_; }
  [[nodiscard]] WeightingScheme::Kind weighting_kind() const noexcept { return kind_; }
  [[nodiscard]] double prediction_scale() const noexcept { return prediction_scale_; }
  [[nodiscard]] const std::vector<int>& models() const noexcept { return pairs_.models(); }
  [[nodiscard]] const PairIndex& pairs() const noexcept { return pairs_; }
  [[nodiscard]] int largest() const noexcept { return models().back(); }
  [[nodiscard]] int smallest() const noexcept { return models().front(); }
  [[nodiscard]] std::size_t size() const noexcept { return models().size(); }
  [[nodiscard]] Index samples() const noexcept { return design_.samples(); }
  [[nodiscard]] Index output_dim() const noexcept { return weighting_.rows(); }
  [[nodiscard]] const Warnings& warnings() const noexcept { return warnings_; }

  //! Position of m in models(); throws MissingPair if absent.
  [[nodiscard]] std::size_t position(int m) const;

  [[nodiscard]] const Matrix& op(int m) const { return ops_[position(m)]; }
  //! K_{m,base} = K_m - K_base, computed on first use and cached.
  [[nodiscard]] const Matrix& difference(int m, int base) const;
  //! S_m zero-padded to p x n.
  [[nodiscard]] Matrix smoother(int m) const;
  //! Pseudo-inverse of Psi_m Psi_m^T.
  [[nodiscard]] const Matrix& gram_pinv(int m) const { return gram_pinv_[position(m)]; }

  [[nodiscard]] Vector estimate(int m, const Vector& y) const { return op(m) * y; }

  // Reduced coordinates.
  [[nodiscard]] Index reduced_dim() const noexcept { return reduced_dim_; }
  [[nodiscard]] const Matrix& noise_basis() const noexcept { return basis_; }
  [[nodiscard]] const Matrix& coefficients(int m) const { return coef_[position(m)]; }
  [[nodiscard]] const Matrix& coefficients_at(std::size_t pos) const { return coef_[pos]; }
  //! Maps reduced coordinates back to the q-dimensional target space.
  [[nodiscard]] Vector lift(const Vector& reduced) const;
  //! Column k of the result is C_{models[k]} * (Phi v); the norm of a column
  //! difference equals ||K_{m,base} v||.
  [[nodiscard]] Matrix reduced_estimates(const Vector& v) const;
  void reduced_estimates_into(const Vector& projected, Matrix& out) const;

private:
  DesignMatrix design_;
  Matrix weighting_;
  WeightingScheme::Kind kind_;
  double prediction_scale_;
  PairIndex pairs_;
  std::vector<Matrix> gram_pinv_;
  std::vector<Matrix> ops_;
  Matrix basis_;
  Matrix lift_;  // q x r; empty when r == q and Q is the identity
  std::vector<Matrix> coef_;
  Index reduced_dim_ = 0;
  Warnings warnings_;

  struct DifferenceCache {
    std::mutex mutex;
    std::map<std::pair<int, int>, Matrix> entries;
  };
  std::shared_ptr<DifferenceCache> cache_;
};

[[nodiscard]] ModelFamily build_projection_family(const DesignMatrix& design,
                                                  const WeightingScheme& weighting,
                                                  const std::vector<int>& models);

struct OrderingVerdict {
  int m = 0;
  int next = 0;
  double min_eigenvalue = 0.0;
  double scale = 0.0;
  bool ordered = true;
};

struct OrderingReport {
  std::vector<OrderingVerdict> adjacent;
  bool ordered = true;
};

inline constexpr double kDefaultPsdTolerance = 1e-8;

//! Checks K_m Sigma K_m^T <= K_m' Sigma K_m'^T on adjacent pairs. A pair is
//! ordered when the smallest eigenvalue of the difference is at least
//! -tol * ||V_m'||_op.
[[nodiscard]] OrderingReport check_ordering(const ModelFamily& family,
                                            const NoiseSpec& noise,
                                            double tol = kDefaultPsdTolerance);

} // namespace sma
