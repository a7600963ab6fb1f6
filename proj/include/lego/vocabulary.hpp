#pragma once

#include <memory>

#include "lego/group_action.hpp"

namespace lego {

enum class TokenKind { Variable, Action, Value, Blank };

/// Token index layout: variables [0, n_x), action tokens [n_x, n_x + |G|),
/// value tokens next, and the blank last (index d - 1). The blank owns an
/// index and a logit coordinate but embeds to the zero vector; every other
/// token embeds to its one-hot basis vector.
class Vocabulary {
 public:
  Vocabulary(int n_x, ActionKind kind, int n_y);

  int size() const { return d_; }
  int clause_dim() const { return 5 * d_; }
  int variables() const { return n_x_; }
  int actions() const { return group_->order(); }
  int values() const { return group_->states(); }
  const GroupAction& group() const { return *group_; }

  int variable_token(int x) const { return x; }
  int action_token(int g) const { return n_x_ + g; }
  int value_token(int y) const { return n_x_ + actions() + y; }
  int blank() const { return d_ - 1; }

  TokenKind kind_of(int token) const;
  bool is_variable(int token) const { return token >= 0 && token < n_x_; }
  bool is_action(int token) const { return token >= n_x_ && token < n_x_ + actions(); }
  bool is_value(int token) const { return token >= n_x_ + actions() && token < d_ - 1; }
  int variable_of(int token) const { return token; }
  int action_of(int token) const { return token - n_x_; }
  int value_of(int token) const { return token - n_x_ - actions(); }

 private:
  int n_x_;
  std::shared_ptr<const GroupAction> group_;
  int d_;
};

}  // namespace lego
