#include "lego/vocabulary.hpp"

#include <stdexcept>

namespace lego {

Vocabulary::Vocabulary(int n_x, ActionKind kind, int n_y)
    : n_x_(n_x), group_(std::make_shared<const GroupAction>(kind, n_y)), d_(0) {
  if (n_x < 2) throw std::invalid_argument("vocabulary needs at least 2 variables");
  d_ = n_x_ + group_->order() + group_->states() + 1;
}

TokenKind Vocabulary::kind_of(int token) const {
  if (token < 0 || token >= d_) throw std::out_of_range("token index out of range");
  if (is_variable(token)) return TokenKind::Variable;
  if (is_action(token)) return TokenKind::Action;
  if (is_value(token)) return TokenKind::Value;
  return TokenKind::Blank;
}

}  // namespace lego
