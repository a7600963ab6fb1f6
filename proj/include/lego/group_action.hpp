#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lego/rng.hpp"

namespace lego {

enum class ActionKind { Cyclic, Symmetry };

const char* to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& name);

/// Largest state space for which the full symmetry group is enumerated.
inline constexpr int kMaxSymmetryStates = 8;

/// An element of the cyclic group C_n (a shift) or of the symmetric group S_n
/// (a permutation in one-line notation: images[y] = g(y)).
class GroupElement {
 public:
  static GroupElement shift(int n, int k);
  static GroupElement permutation(std::span<const int> images);

  ActionKind kind() const { return kind_; }
  int states() const { return n_; }
  /// Shift amount; only meaningful for cyclic elements.
  int shift_amount() const { return data_[0]; }
  /// g(y) without range checks.
  int image(int y) const { return kind_ == ActionKind::Cyclic ? (y + data_[0]) % n_ : data_[y]; }
  std::vector<int> images() const;

  bool operator==(const GroupElement& other) const = default;

 private:
  GroupElement() = default;

  ActionKind kind_ = ActionKind::Cyclic;
  std::int32_t n_ = 0;
  std::array<std::int8_t, kMaxSymmetryStates> data_{};
};

/// A finite group acting on Y = {0, ..., n_y - 1}: either C_n acting by shifts
/// (simply transitive) or the full symmetric group S_n (transitive, not free).
///
/// Elements are enumerated once at construction, lexicographically for S_n and
/// by shift amount for C_n; the enumeration index doubles as the action-token
/// offset in the vocabulary. The object is immutable afterwards.
class GroupAction {
 public:
  GroupAction(ActionKind kind, int n_y);

  ActionKind kind() const { return kind_; }
  int states() const { return n_; }
  int order() const { return static_cast<int>(elements_.size()); }

  const GroupElement& element(int index) const { return elements_.at(static_cast<std::size_t>(index)); }
  std::span<const GroupElement> elements() const { return elements_; }
  /// Enumeration index of g (inverse of element()).
  int index_of(const GroupElement& g) const;

  GroupElement identity() const;
  GroupElement inverse(const GroupElement& g) const;

  int apply(const GroupElement& g, int y) const;
  /// apply via the precomputed table, by element index.
  int apply_index(int g_index, int y) const {
    return table_[static_cast<std::size_t>(g_index) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(y)];
  }
  /// g2 ∘ g1, i.e. apply(compose(g2, g1), y) == apply(g2, apply(g1, y)).
  GroupElement compose(const GroupElement& g2, const GroupElement& g1) const;

  /// {g : g(y) == j}, by filtering the enumeration.
  std::vector<GroupElement> fiber(int j, int y) const;

  /// [y_1, ..., y_L] with y_i = g_i(y_{i-1}).
  std::vector<int> track(int y0, std::span<const GroupElement> word) const;
  std::vector<int> track_indices(int y0, std::span<const int> word) const;

  GroupElement sample_uniform(Rng& rng) const;
  int sample_index(Rng& rng) const { return rng.uniform_int(order()); }

 private:
  void check_element(const GroupElement& g) const;
  void check_state(int y) const;

  ActionKind kind_;
  int n_;
  std::vector<GroupElement> elements_;
  std::vector<std::int32_t> table_;
};

}  // namespace lego
