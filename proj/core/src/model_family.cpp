#include "sma/model_family.hpp"

#include <cmath>

namespace sma {

DesignMatrix::DesignMatrix(Matrix entries)
  : entries_(std::move(entries))
{
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "design must have p >= 1 and n >= 1");
  }
  if (!entries_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "design contains NaN or Inf");
  }
}

WeightingScheme WeightingScheme::full_vector()
{
  return {};
}

WeightingScheme WeightingScheme::prediction(double sigma)
{
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidArgument, "prediction weighting needs sigma > 0");
  }
  WeightingScheme w;
  w.kind_ = Kind::Prediction;
  w.sigma_ = sigma;
  return w;
}

WeightingScheme WeightingScheme::subvector(std::vector<Index> coords)
{
  if (coords.empty()) {
    throw Error(ErrorCode::InvalidArgument, "subvector weighting needs coordinates");
  }
  WeightingScheme w;
  w.kind_ = Kind::SubvectorProjector;
  w.coords_ = std::move(coords);
  return w;
}

WeightingScheme WeightingScheme::linear_functional(Vector functional)
{
  WeightingScheme w;
  w.kind_ = Kind::LinearFunctional;
  w.matrix_ = functional.transpose();
  return w;
}

WeightingScheme WeightingScheme::custom(Matrix matrix)
{
  if (matrix.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, "custom weighting needs q >= 1");
  }
  WeightingScheme w;
  w.kind_ = Kind::Custom;
  w.matrix_ = std::move(matrix);
  return w;
}

Matrix WeightingScheme::resolve(const DesignMatrix& design) const
{
  const Index p = design.features();
  switch (kind_) {
  case Kind::FullVector:
    return Matrix::Identity(p, p);
  case Kind::Prediction: {
    const Matrix& psi = design.entries();
    Matrix gram = psi * psi.transpose();
    return linalg::sqrt_psd(gram) / sigma_;
  }
  case Kind::SubvectorProjector: {
    Matrix w = Matrix::Zero(static_cast<Index>(coords_.size()), p);
    for (std::size_t r = 0; r < coords_.size(); ++r) {
      const Index c = coords_[r];
      if (c < 0 || c >= p) {
        throw Error(ErrorCode::DimensionMismatch,
                    "subvector coordinate " + std::to_string(c) + " outside [0, p)");
      }
      w(static_cast<Index>(r), c) = 1.0;
    }
    return w;
  }
  case Kind::LinearFunctional:
  case Kind::Custom:
    if (matrix_.cols() != p) {
      throw Error(ErrorCode::DimensionMismatch,
                  "weighting has " + std::to_string(matrix_.cols()) +
                    " columns, design has p = " + std::to_string(p));
    }
    return matrix_;
  }
  return {};
}

const char* to_string(WeightingScheme::Kind kind) noexcept
{
  switch (kind) {
  case WeightingScheme::Kind::FullVector: return "full_vector";
  case WeightingScheme::Kind::Prediction: return "prediction";
  case WeightingScheme::Kind::SubvectorProjector: return "subvector";
  case WeightingScheme::Kind::LinearFunctional: return "linear_functional";
  case WeightingScheme::Kind::Custom: return "custom";
  }
  return "unknown";
}

ModelFamily::ModelFamily(DesignMatrix design, const WeightingScheme& weighting,
                         std::vector<int> models)
  : design_(std::move(design))
  , weighting_(weighting.resolve(design_))
  , kind_(weighting.kind())
  , prediction_scale_(weighting.prediction_scale())
  , pairs_(std::move(models))
  , cache_(std::make_shared<DifferenceCache>())
{
  const Index p = design_.features();
  const Index n = design_.samples();
  const int top = pairs_.models().back();
  if (top > p) {
    throw Error(ErrorCode::DimensionMismatch,
                "largest model " + std::to_string(top) + " exceeds p = " + std::to_string(p));
  }
  if (!weighting_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "weighting contains NaN or Inf");
  }

  const Index q = weighting_.rows();
  const Index big = top;
  basis_ = design_.leading(big);

  Matrix r_factor;
  if (q > big) {
    Eigen::HouseholderQR<Matrix> qr(weighting_.leftCols(big));
    lift_ = qr.householderQ() * Matrix::Identity(q, big);
    r_factor = qr.matrixQR().topRows(big).triangularView<Eigen::Upper>();
    reduced_dim_ = big;
  } else {
    r_factor = weighting_.leftCols(big);
    reduced_dim_ = q;
  }

  const std::size_t count = pairs_.models().size();
  gram_pinv_.reserve(count);
  ops_.reserve(count);
  coef_.reserve(count);
  for (const int m : pairs_.models()) {
    const auto psi_m = design_.leading(m);
    const Matrix gram = psi_m * psi_m.transpose();
    if (gram.cwiseAbs().maxCoeff() == 0.0) {
      throw Error(ErrorCode::SingularGram,
                  "Gram matrix of model " + std::to_string(m) + " is identically zero");
    }
    auto pinv = linalg::pinv_psd(gram);
    if (pinv.truncated) {
      warnings_.push_back({WarningCode::RankDeficientGram,
                           "model " + std::to_string(m) + " has Gram rank " +
                             std::to_string(pinv.rank) + " < " + std::to_string(m) +
                             "; using pseudo-inverse"});
    }
    ops_.push_back(weighting_.leftCols(m) * pinv.inverse * psi_m);
    Matrix coef = Matrix::Zero(reduced_dim_, big);
    coef.leftCols(m) = r_factor.leftCols(m) * pinv.inverse;
    coef_.push_back(std::move(coef));
    gram_pinv_.push_back(std::move(pinv.inverse));
  }
  (void)n;
}

std::size_t ModelFamily::position(int m) const
{
  const auto pos = pairs_.position(m);
  if (!pos) {
    throw Error(ErrorCode::MissingPair, "model " + std::to_string(m) + " not in family");
  }
  return *pos;
}

const Matrix& ModelFamily::difference(int m, int base) const
{
  std::lock_guard<std::mutex> lock(cache_->mutex);
  const auto key = std::make_pair(m, base);
  auto it = cache_->entries.find(key);
  if (it == cache_->entries.end()) {
    it = cache_->entries.emplace(key, op(m) - op(base)).first;
  }
  return it->second;
}

Matrix ModelFamily::smoother(int m) const
{
  Matrix s = Matrix::Zero(design_.features(), design_.samples());
  s.topRows(m) = gram_pinv(m) * design_.leading(m);
  return s;
}

Vector ModelFamily::lift(const Vector& reduced) const
{
  if (lift_.size() == 0) {
    return reduced;
  }
  return lift_ * reduced;
}

void ModelFamily::reduced_estimates_into(const Vector& projected, Matrix& out) const
{
  const auto& ms = pairs_.models();
  out.resize(reduced_dim_, static_cast<Index>(ms.size()));
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const Index m = ms[k];
    out.col(static_cast<Index>(k)).noalias() = coef_[k].leftCols(m) * projected.head(m);
  }
}

Matrix ModelFamily::reduced_estimates(const Vector& v) const
{
  if (v.size() != samples()) {
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from n");
  }
  Matrix out;
  reduced_estimates_into(basis_ * v, out);
  return out;
}

ModelFamily build_projection_family(const DesignMatrix& design, const WeightingScheme& weighting,
                                    const std::vector<int>& models)
{
  return ModelFamily(design, weighting, models);
}

OrderingReport check_ordering(const ModelFamily& family, const NoiseSpec& noise, double tol)
{
  const Vector& var = noise.variances();
  if (var.size() != family.samples()) {
    throw Error(ErrorCode::DimensionMismatch, "noise length differs from n");
  }
  const Matrix& phi = family.noise_basis();
  const Matrix h = phi * var.asDiagonal() * phi.transpose();

  OrderingReport report;
  const auto& ms = family.models();
  Matrix prev = family.coefficients_at(0) * h * family.coefficients_at(0).transpose();
  for (std::size_t k = 1; k < ms.size(); ++k) {
    const Matrix& c = family.coefficients_at(k);
    Matrix cur = c * h * c.transpose();
    OrderingVerdict v;
    v.m = ms[k - 1];
    v.next = ms[k];
    v.scale = linalg::max_eigenvalue(cur);
    v.min_eigenvalue = linalg::min_eigenvalue(cur - prev);
    v.ordered = v.min_eigenvalue >= -tol * v.scale;
    report.ordered = report.ordered && v.ordered;
    report.adjacent.push_back(v);
    prev = std::move(cur);
  }
  return report;
}

} // namespace sma
