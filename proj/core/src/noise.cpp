#include "sma/noise.hpp"

#include "sma/errors.hpp"

#include <cmath>

namespace sma {

NoiseSpec NoiseSpec::known(Vector variances)
{
  if (variances.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "noise variances are empty");
  }
  for (Index i = 0; i < variances.size(); ++i) {
    const double v = variances(i);
    if (!std::isfinite(v) || v <= 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "noise variance " + std::to_string(i) + " must be finite and > 0");
    }
  }
  NoiseSpec spec;
  spec.known_ = true;
  spec.variances_ = std::move(variances);
  return spec;
}

NoiseSpec NoiseSpec::homogeneous(Index n, double sigma)
{
  return known(Vector::Constant(n, sigma * sigma));
}

NoiseSpec NoiseSpec::unknown()
{
  return NoiseSpec{};
}

const Vector& NoiseSpec::variances() const
{
  if (!known_) {
    throw Error(ErrorCode::RequiresKnownTruth, "noise covariance is unknown");
  }
  return variances_;
}

Vector NoiseSpec::std_devs() const
{
  return variances().cwiseSqrt();
}

} // namespace sma
