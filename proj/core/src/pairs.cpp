#include "sma/pairs.hpp"

#include "sma/errors.hpp"

#include <algorithm>
#include <numeric>

namespace sma {

std::string pair_key(const ModelPair& pair)
{
  return std::to_string(pair.m) + ":" + std::to_string(pair.base);
}

void validate_models(const std::vector<int>& models)
{
  if (models.empty()) {
    throw Error(ErrorCode::InvalidArgument, "model list is empty");
  }
  if (models.front() < 1) {
    throw Error(ErrorCode::InvalidArgument, "model indices must be >= 1");
  }
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (models[i] <= models[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "model list must be strictly increasing");
    }
  }
}

PairIndex::PairIndex(std::vector<int> models)
  : models_(std::move(models))
{
  validate_models(models_);
  const std::size_t k = models_.size();
  base_offset_.resize(k + 1, 0);
  for (std::size_t b = 0; b < k; ++b) {
    base_offset_[b] = pairs_.size();
    for (std::size_t a = b + 1; a < k; ++a) {
      pairs_.push_back({models_[a], models_[b]});
    }
  }
  base_offset_[k] = pairs_.size();
  columns_.resize(pairs_.size());
  std::iota(columns_.begin(), columns_.end(), std::size_t{0});
}

std::optional<std::size_t> PairIndex::position(int model) const
{
  const auto it = std::lower_bound(models_.begin(), models_.end(), model);
  if (it == models_.end() || *it != model) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - models_.begin());
}

std::optional<std::size_t> PairIndex::find(int m, int base) const
{
  if (m <= base) {
    return std::nullopt;
  }
  const auto pm = position(m);
  const auto pb = position(base);
  if (!pm || !pb) {
    return std::nullopt;
  }
  return base_offset_[*pb] + (*pm - *pb - 1);
}

std::size_t PairIndex::at(int m, int base) const
{
  if (m <= base) {
    throw Error(ErrorCode::NotOrderedPair,
                "pair (" + std::to_string(m) + ", " + std::to_string(base) +
                  ") requires m > base");
  }
  const auto col = find(m, base);
  if (!col) {
    throw Error(ErrorCode::MissingPair, "no pair " + pair_key({m, base}));
  }
  return *col;
}

std::span<const std::size_t> PairIndex::columns_for_base(int base) const
{
  const auto pb = position(base);
  if (!pb) {
    throw Error(ErrorCode::MissingPair, "unknown model " + std::to_string(base));
  }
  const std::size_t first = base_offset_[*pb];
  const std::size_t last = base_offset_[*pb + 1];
  return std::span<const std::size_t>(columns_).subspan(first, last - first);
}

std::vector<int> PairIndex::bases() const
{
  if (models_.size() < 2) {
    return {};
  }
  return {models_.begin(), models_.end() - 1};
}

} // namespace sma
