#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sma {

//! Keyed seed derivation (SplitMix64 finalizer over seed and key). Streams
//! derived from distinct keys are treated as independent; every Monte-Carlo
//! row owns its own stream so results do not depend on how rows are split
//! across threads.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept;

using Engine = std::mt19937_64;

[[nodiscard]] Engine row_engine(std::uint64_t seed, std::uint64_t row);

//! Fills out with i.i.d. N(0, 1) draws from the stream keyed by (seed, row).
void fill_standard_normal(std::uint64_t seed, std::uint64_t row, std::span<double> out);

} // namespace sma
