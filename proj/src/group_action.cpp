#include "lego/group_action.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lego {

const char* to_string(ActionKind kind) {
  return kind == ActionKind::Cyclic ? "cyclic" : "symmetry";
}

ActionKind action_kind_from_string(const std::string& name) {
  if (name == "cyclic") return ActionKind::Cyclic;
  if (name == "symmetry") return ActionKind::Symmetry;
  throw std::invalid_argument("unknown action kind '" + name + "' (expected cyclic or symmetry)");
}

GroupElement GroupElement::shift(int n, int k) {
  if (n < 2) throw std::invalid_argument("cyclic group needs n >= 2");
  if (k < 0 || k >= n) throw std::invalid_argument("shift must lie in [0, n)");
  GroupElement g;
  g.kind_ = ActionKind::Cyclic;
  g.n_ = n;
  g.data_[0] = static_cast<std::int8_t>(k);
  return g;
}

GroupElement GroupElement::permutation(std::span<const int> images) {
  const int n = static_cast<int>(images.size());
  if (n < 2 || n > kMaxSymmetryStates) {
    throw std::invalid_argument("permutation size must lie in [2, " + std::to_string(kMaxSymmetryStates) + "]");
  }
  std::array<bool, kMaxSymmetryStates> seen{};
  GroupElement g;
  g.kind_ = ActionKind::Symmetry;
  g.n_ = n;
  for (int y = 0; y < n; ++y) {
    const int v = images[static_cast<std::size_t>(y)];
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument("permutation images must form a bijection of {0..n-1}");
    }
    seen[static_cast<std::size_t>(v)] = true;
    g.data_[static_cast<std::size_t>(y)] = static_cast<std::int8_t>(v);
  }
  return g;
}

std::vector<int> GroupElement::images() const {
  std::vector<int> out(static_cast<std::size_t>(n_));
  for (int y = 0; y < n_; ++y) out[static_cast<std::size_t>(y)] = image(y);
  return out;
}

GroupAction::GroupAction(ActionKind kind, int n_y) : kind_(kind), n_(n_y) {
  if (n_y < 2) throw std::invalid_argument("state space needs n_y >= 2");
  if (kind == ActionKind::Symmetry && n_y > kMaxSymmetryStates) {
    throw std::invalid_argument("symmetry action supports n_y <= " + std::to_string(kMaxSymmetryStates) +
                                ", got " + std::to_string(n_y));
  }
  if (kind == ActionKind::Cyclic) {
    for (int k = 0; k < n_y; ++k) elements_.push_back(GroupElement::shift(n_y, k));
  } else {
    std::vector<int> perm(static_cast<std::size_t>(n_y));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      elements_.push_back(GroupElement::permutation(perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  table_.resize(elements_.size() * static_cast<std::size_t>(n_y));
  for (std::size_t g = 0; g < elements_.size(); ++g) {
    for (int y = 0; y < n_y; ++y) {
      table_[g * static_cast<std::size_t>(n_y) + static_cast<std::size_t>(y)] = elements_[g].image(y);
    }
  }
}

void GroupAction::check_element(const GroupElement& g) const {
  if (g.kind() != kind_) throw std::invalid_argument("group element kind does not match the action");
  if (g.states() != n_) throw std::invalid_argument("group element acts on a different state space");
}

void GroupAction::check_state(int y) const {
  if (y < 0 || y >= n_) throw std::invalid_argument("state out of range");
}

int GroupAction::index_of(const GroupElement& g) const {
  check_element(g);
  if (kind_ == ActionKind::Cyclic) return g.shift_amount();
  // Lexicographic rank via the Lehmer code.
  int rank = 0;
  int factorial = 1;
  for (int i = n_ - 1; i >= 0; --i) {
    int smaller = 0;
    for (int k = i + 1; k < n_; ++k) smaller += g.image(k) < g.image(i) ? 1 : 0;
    rank += smaller * factorial;
    factorial *= n_ - i;
  }
  return rank;
}

GroupElement GroupAction::identity() const { return elements_.front(); }

GroupElement GroupAction::inverse(const GroupElement& g) const {
  check_element(g);
  if (kind_ == ActionKind::Cyclic) return GroupElement::shift(n_, (n_ - g.shift_amount()) % n_);
  std::vector<int> inv(static_cast<std::size_t>(n_));
  for (int y = 0; y < n_; ++y) inv[static_cast<std::size_t>(g.image(y))] = y;
  return GroupElement::permutation(inv);
}

int GroupAction::apply(const GroupElement& g, int y) const {
  check_element(g);
  check_state(y);
  return g.image(y);
}

GroupElement GroupAction::compose(const GroupElement& g2, const GroupElement& g1) const {
  check_element(g2);
  check_element(g1);
  if (kind_ == ActionKind::Cyclic) return GroupElement::shift(n_, (g2.shift_amount() + g1.shift_amount()) % n_);
  std::vector<int> out(static_cast<std::size_t>(n_));
  for (int y = 0; y < n_; ++y) out[static_cast<std::size_t>(y)] = g2.image(g1.image(y));
  return GroupElement::permutation(out);
}

std::vector<GroupElement> GroupAction::fiber(int j, int y) const {
  check_state(j);
  check_state(y);
  std::vector<GroupElement> out;
  for (const auto& g : elements_) {
    if (g.image(y) == j) out.push_back(g);
  }
  return out;
}

std::vector<int> GroupAction::track(int y0, std::span<const GroupElement> word) const {
  check_state(y0);
  std::vector<int> out;
  out.reserve(word.size());
  int y = y0;
  for (const auto& g : word) {
    y = apply(g, y);
    out.push_back(y);
  }
  return out;
}

std::vector<int> GroupAction::track_indices(int y0, std::span<const int> word) const {
  check_state(y0);
  std::vector<int> out;
  out.reserve(word.size());
  int y = y0;
  for (int g : word) {
    if (g < 0 || g >= order()) throw std::invalid_argument("group element index out of range");
    y = apply_index(g, y);
    out.push_back(y);
  }
  return out;
}

GroupElement GroupAction::sample_uniform(Rng& rng) const { return elements_[static_cast<std::size_t>(sample_index(rng))]; }

}  // namespace lego
