#include "sma/draws_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace sma {
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'M', 'A', 'D', 'R', 'A', 'W', '1'};

void put_u64(std::ostream& out, std::uint64_t v)
{
  std::array<unsigned char, 8> b{};
  for (int i = 0; i < 8; ++i) {
    b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64(std::istream& in)
{
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | b[static_cast<std::size_t>(i)];
  }
  return v;
}

} // namespace

void write_draws(const std::filesystem::path& path, const JointDrawMatrix& draws)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
  }
  const Matrix& v = draws.values();
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, static_cast<std::uint64_t>(v.rows()));
  put_u64(out, static_cast<std::uint64_t>(v.cols()));
  put_u64(out, draws.seed());
  for (Index r = 0; r < v.rows(); ++r) {
    for (Index c = 0; c < v.cols(); ++c) {
      put_u64(out, std::bit_cast<std::uint64_t>(v(r, c)));
    }
  }
  if (!out) {
    throw Error(ErrorCode::InvalidArgument, "failed writing " + path.string());
  }
}

JointDrawMatrix read_draws(const std::filesystem::path& path, const std::vector<int>& models)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
  }
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw Error(ErrorCode::InvalidArgument, path.string() + " is not a draw file");
  }
  const std::uint64_t n_sim = get_u64(in);
  const std::uint64_t n_pairs = get_u64(in);
  const std::uint64_t seed = get_u64(in);
  PairIndex pairs(models);
  if (!in || n_pairs != pairs.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "draw file holds " + std::to_string(n_pairs) + " pairs, model list implies " +
                  std::to_string(pairs.size()));
  }
  Matrix v(static_cast<Index>(n_sim), static_cast<Index>(n_pairs));
  for (Index r = 0; r < v.rows(); ++r) {
    for (Index c = 0; c < v.cols(); ++c) {
      v(r, c) = std::bit_cast<double>(get_u64(in));
    }
  }
  if (!in) {
    throw Error(ErrorCode::InvalidArgument, path.string() + " is truncated");
  }
  return {std::move(pairs), std::move(v), seed};
}

} // namespace sma
