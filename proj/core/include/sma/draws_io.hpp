#pragma once

#include "sma/calibration_mc.hpp"

#include <filesystem>
#include <vector>

namespace sma {

//! Binary layout: 8-byte magic "SMADRAW1", then n_sim, n_pairs and seed as
//! little-endian u64, then n_sim * n_pairs little-endian doubles, row-major.
void write_draws(const std::filesystem::path& path, const JointDrawMatrix& draws);

//! Reads a draw file; models must reproduce the pair count stored in the header.
[[nodiscard]] JointDrawMatrix read_draws(const std::filesystem::path& path,
                                         const std::vector<int>& models);

} // namespace sma
