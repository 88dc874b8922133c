#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sma {

//! An ordered comparison (m, base) with m > base; base is the smaller model.
struct ModelPair {
  int m = 0;
  int base = 0;

  friend bool operator==(const ModelPair&, const ModelPair&) = default;
};

//! "m:base", the key format used by every JSON export.
[[nodiscard]] std::string pair_key(const ModelPair& pair);

//! Canonical enumeration of all strict pairs over an ordered model list.
//! Pairs sharing a base are contiguous: base ascending, then m ascending.
class PairIndex {
public:
  PairIndex() = default;
  explicit PairIndex(std::vector<int> models);

  [[nodiscard]] const std::vector<int>& models() const noexcept { return models_; }
  [[nodiscard]] std::size_t size() const noexcept { return pairs_.size(); }
  [[nodiscard]] const ModelPair& pair(std::size_t column) const { return pairs_.at(column); }
  [[nodiscard]] std::span<const ModelPair> pairs() const noexcept { return pairs_; }

  //! Position of a model inside models(), if present.
  [[nodiscard]] std::optional<std::size_t> position(int model) const;
  [[nodiscard]] std::optional<std::size_t> find(int m, int base) const;
  //! Throws NotOrderedPair for m <= base and MissingPair for unknown models.
  [[nodiscard]] std::size_t at(int m, int base) const;

  //! Columns of the pairs (m, base) for every m > base, ordered by m.
  [[nodiscard]] std::span<const std::size_t> columns_for_base(int base) const;

  //! Models that have at least one larger model, i.e. every model but the last.
  [[nodiscard]] std::vector<int> bases() const;

private:
  std::vector<int> models_;
  std::vector<ModelPair> pairs_;
  std::vector<std::size_t> columns_;       // identity permutation, sliced per base
  std::vector<std::size_t> base_offset_;   // first column for each model position
};

//! Throws InvalidArgument unless models is nonempty, positive and strictly increasing.
void validate_models(const std::vector<int>& models);

} // namespace sma
