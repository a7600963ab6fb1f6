#include "lego/sentence.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace lego {

Clause make_predicate(const Vocabulary& vocab, int x, int g, int x_prev) {
  if (x < 0 || x >= vocab.variables() || x_prev < 0 || x_prev >= vocab.variables()) {
    throw std::invalid_argument("predicate variable out of range");
  }
  if (g < 0 || g >= vocab.actions()) throw std::invalid_argument("predicate action out of range");
  const int b = vocab.blank();
  return Clause{{vocab.variable_token(x), vocab.action_token(g), vocab.variable_token(x_prev), b, b}};
}

Clause make_answer(const Vocabulary& vocab, int x, int y) {
  if (x < 0 || x >= vocab.variables()) throw std::invalid_argument("answer variable out of range");
  if (y < 0 || y >= vocab.values()) throw std::invalid_argument("answer value out of range");
  const int b = vocab.blank();
  return Clause{{b, b, b, vocab.variable_token(x), vocab.value_token(y)}};
}

ClauseKind classify(const Vocabulary& vocab, const Clause& c) {
  const auto& t = c.tokens;
  const int b = vocab.blank();
  if (vocab.is_variable(t[0]) && vocab.is_action(t[1]) && vocab.is_variable(t[2]) && t[3] == b && t[4] == b) {
    return ClauseKind::Predicate;
  }
  if (t[0] == b && t[1] == b && t[2] == b && vocab.is_variable(t[3]) && vocab.is_value(t[4])) {
    return ClauseKind::Answer;
  }
  return ClauseKind::Malformed;
}

namespace {

struct Chain {
  std::vector<int> variables;  // x_0 .. x_L
  std::vector<int> actions;    // g_1 .. g_L
  int y0 = 0;
};

Chain sample_chain(const Vocabulary& vocab, int length, Rng& rng) {
  if (length < 1) throw std::invalid_argument("sentence length must be >= 1");
  if (length + 1 > vocab.variables()) {
    throw std::invalid_argument("length " + std::to_string(length) + " needs " + std::to_string(length + 1) +
                                " distinct variables, vocabulary has " + std::to_string(vocab.variables()));
  }
  Chain chain;
  // Partial Fisher-Yates: the first L + 1 entries are a uniform draw without replacement.
  std::vector<int> pool(static_cast<std::size_t>(vocab.variables()));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i <= length; ++i) {
    const int j = i + rng.uniform_int(vocab.variables() - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  chain.variables.assign(pool.begin(), pool.begin() + length + 1);
  chain.y0 = rng.uniform_int(vocab.values());
  chain.actions.resize(static_cast<std::size_t>(length));
  for (auto& g : chain.actions) g = vocab.group().sample_index(rng);
  return chain;
}

void append_predicates(const Vocabulary& vocab, const Chain& chain, LegoSentence& s) {
  const int length = static_cast<int>(chain.actions.size());
  for (int l = 1; l <= length; ++l) {
    s.clauses.push_back(make_predicate(vocab, chain.variables[static_cast<std::size_t>(l)],
                                       chain.actions[static_cast<std::size_t>(l - 1)],
                                       chain.variables[static_cast<std::size_t>(l - 1)]));
  }
}

}  // namespace

LegoSentence sample_sentence(const Vocabulary& vocab, int length, Rng& rng) {
  const Chain chain = sample_chain(vocab, length, rng);
  LegoSentence s;
  s.length = length;
  s.clauses.reserve(static_cast<std::size_t>(2 * length + 1));
  append_predicates(vocab, chain, s);
  const auto ys = vocab.group().track_indices(chain.y0, chain.actions);
  s.clauses.push_back(make_answer(vocab, chain.variables[0], chain.y0));
  for (int l = 1; l <= length; ++l) {
    s.clauses.push_back(make_answer(vocab, chain.variables[static_cast<std::size_t>(l)], ys[static_cast<std::size_t>(l - 1)]));
  }
  return s;
}

LegoSentence sample_sentence_at(const Vocabulary& vocab, int length, std::uint64_t seed, std::uint64_t index) {
  Rng rng(derive_seed(seed, index));
  LegoSentence s = sample_sentence(vocab, length, rng);
  s.seed = seed;
  s.index = index;
  return s;
}

LegoSentence truncate(const LegoSentence& sentence, int horizon) {
  if (horizon < 0 || horizon > sentence.horizon()) {
    throw std::invalid_argument("truncation horizon " + std::to_string(horizon) + " outside [0, " +
                                std::to_string(sentence.horizon()) + "]");
  }
  LegoSentence out = sentence;
  out.clauses.resize(static_cast<std::size_t>(sentence.length + horizon + 1));
  return out;
}

std::optional<std::string> validate_sentence(const Vocabulary& vocab, const LegoSentence& s) {
  const int length = s.length;
  if (length < 1) return "length must be >= 1";
  if (s.horizon() < 0) return "missing answer clause x_0 = y_0";
  if (s.horizon() > length) return "more answers than predicates";
  std::vector<int> vars(static_cast<std::size_t>(length + 1));
  std::vector<int> actions(static_cast<std::size_t>(length));
  for (int l = 1; l <= length; ++l) {
    const Clause& c = s.clauses[static_cast<std::size_t>(l - 1)];
    if (classify(vocab, c) != ClauseKind::Predicate) return "clause " + std::to_string(l - 1) + " is not a predicate";
    const int x = vocab.variable_of(c.tokens[0]);
    const int x_prev = vocab.variable_of(c.tokens[2]);
    if (l > 1 && x_prev != vars[static_cast<std::size_t>(l - 1)]) {
      return "predicate " + std::to_string(l) + " does not continue the chain";
    }
    vars[static_cast<std::size_t>(l - 1)] = x_prev;
    vars[static_cast<std::size_t>(l)] = x;
    actions[static_cast<std::size_t>(l - 1)] = vocab.action_of(c.tokens[1]);
  }
  std::vector<bool> seen(static_cast<std::size_t>(vocab.variables()), false);
  for (int v : vars) {
    if (seen[static_cast<std::size_t>(v)]) return "variables are not pairwise distinct";
    seen[static_cast<std::size_t>(v)] = true;
  }
  const auto answers = s.answers();
  int y0 = -1;
  for (int l = 0; l < static_cast<int>(answers.size()); ++l) {
    const Clause& c = answers[static_cast<std::size_t>(l)];
    if (classify(vocab, c) != ClauseKind::Answer) return "answer " + std::to_string(l) + " is malformed";
    if (vocab.variable_of(c.tokens[3]) != vars[static_cast<std::size_t>(l)]) {
      return "answer " + std::to_string(l) + " names the wrong variable";
    }
    if (l == 0) y0 = vocab.value_of(c.tokens[4]);
  }
  const auto ys = vocab.group().track_indices(y0, actions);
  for (int l = 1; l < static_cast<int>(answers.size()); ++l) {
    if (vocab.value_of(answers[static_cast<std::size_t>(l)].tokens[4]) != ys[static_cast<std::size_t>(l - 1)]) {
      return "answer " + std::to_string(l) + " disagrees with the state-tracking oracle";
    }
  }
  return std::nullopt;
}

EmbeddedSequence embed(const Vocabulary& vocab, std::span<const Clause> clauses) {
  EmbeddedSequence e;
  e.rows = vocab.clause_dim();
  e.cols = static_cast<int>(clauses.size());
  e.data.assign(static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols), 0.0);
  const int d = vocab.size();
  for (int k = 0; k < e.cols; ++k) {
    for (int slot = 0; slot < 5; ++slot) {
      const int tok = clauses[static_cast<std::size_t>(k)].tokens[static_cast<std::size_t>(slot)];
      if (tok < 0 || tok >= d) throw std::invalid_argument("token outside the vocabulary");
      if (tok == vocab.blank()) continue;
      e.data[static_cast<std::size_t>(k) * static_cast<std::size_t>(e.rows) + static_cast<std::size_t>(slot * d + tok)] = 1.0;
    }
  }
  return e;
}

EmbeddedSequence embed(const Vocabulary& vocab, const LegoSentence& sentence) { return embed(vocab, sentence.clauses); }

LegoSentence bootstrap_sentence(const Vocabulary& vocab, int length, int horizon, const Annotator& annotator,
                                Rng& rng) {
  if (horizon < 0 || horizon > length) throw std::invalid_argument("bootstrap horizon outside [0, L]");
  LegoSentence s = truncate(sample_sentence(vocab, length, rng), 0);
  for (int l = 1; l <= horizon; ++l) {
    Clause next = annotator(std::span<const Clause>(s.clauses));
    if (classify(vocab, next) != ClauseKind::Answer) s.well_formed = false;
    s.clauses.push_back(next);
  }
  return s;
}

std::optional<Clause> oracle_next_answer(const Vocabulary& vocab, std::span<const Clause> context) {
  if (context.empty()) return std::nullopt;
  const Clause& last = context.back();
  if (classify(vocab, last) != ClauseKind::Answer) return std::nullopt;
  const int x = last.tokens[3];
  const int y = vocab.value_of(last.tokens[4]);
  for (const Clause& c : context) {
    if (c.tokens[2] == x && classify(vocab, c) == ClauseKind::Predicate) {
      return make_answer(vocab, vocab.variable_of(c.tokens[0]), vocab.group().apply_index(vocab.action_of(c.tokens[1]), y));
    }
  }
  return std::nullopt;
}

Annotator oracle_annotator(const Vocabulary& vocab) {
  return [vocab](std::span<const Clause> context) {
    const int b = vocab.blank();
    return oracle_next_answer(vocab, context).value_or(Clause{{b, b, b, b, b}});
  };
}

}  // namespace lego
