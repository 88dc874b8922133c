#include "sma/random.hpp"

namespace sma {

namespace {

std::uint64_t splitmix64(std::uint64_t z) noexcept
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept
{
  return splitmix64(splitmix64(seed) ^ splitmix64(key + 0x632be59bd9b4e019ULL));
}

Engine row_engine(std::uint64_t seed, std::uint64_t row)
{
  return Engine(derive_seed(seed, row));
}

void fill_standard_normal(std::uint64_t seed, std::uint64_t row, std::span<double> out)
{
  Engine engine = row_engine(seed, row);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) {
    v = normal(engine);
  }
}

} // namespace sma
