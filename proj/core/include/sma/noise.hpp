#pragma once

#include "sma/linalg.hpp"

namespace sma {

//! Diagonal noise covariance, either known (per-observation variances) or
//! unknown, in which case only the bootstrap path can calibrate.
class NoiseSpec {
public:
  [[nodiscard]] static NoiseSpec known(Vector variances);
  [[nodiscard]] static NoiseSpec homogeneous(Index n, double sigma);
  [[nodiscard]] static NoiseSpec unknown();

  [[nodiscard]] bool is_known() const noexcept { return known_; }
  //! Throws RequiresKnownTruth when the noise is unknown.
  [[nodiscard]] const Vector& variances() const;
  [[nodiscard]] Vector std_devs() const;
  [[nodiscard]] Index size() const noexcept { return variances_.size(); }

private:
  NoiseSpec() = default;
  bool known_ = false;
  Vector variances_;
};

} // namespace sma
