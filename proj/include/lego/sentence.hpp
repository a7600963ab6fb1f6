#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lego/rng.hpp"
#include "lego/vocabulary.hpp"

namespace lego {

enum class ClauseKind { Predicate, Answer, Malformed };

/// A clause as its fixed 5-token encoding.
///   predicate x = g(x'):  (x, g, x', blank, blank)
///   answer    x = y:      (blank, blank, blank, x, y)
/// Model outputs are arbitrary 5-tuples, so a Clause may also be malformed.
struct Clause {
  std::array<int, 5> tokens{};

  bool operator==(const Clause&) const = default;
};

/// x = g(x_prev); arguments are a variable index, a group element index and a variable index.
Clause make_predicate(const Vocabulary& vocab, int x, int g, int x_prev);
/// x = y; arguments are a variable index and a state.
Clause make_answer(const Vocabulary& vocab, int x, int y);
ClauseKind classify(const Vocabulary& vocab, const Clause& clause);

/// A LEGO sentence: L predicate clauses followed by the answer clauses
/// x_0 = y_0, ..., x_{L'} = y_{L'}. Clauses are stored in sequence order, so
/// the model context Z^{L,l} is the prefix of length L + l + 1.
struct LegoSentence {
  int length = 0;
  std::vector<Clause> clauses;
  /// Provenance: the sub-stream seed and the index of the sentence in its corpus.
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  /// False when an annotator produced a clause that is not a well-formed answer.
  bool well_formed = true;

  int horizon() const { return static_cast<int>(clauses.size()) - length - 1; }
  std::span<const Clause> predicates() const { return std::span(clauses).first(static_cast<std::size_t>(length)); }
  std::span<const Clause> answers() const { return std::span(clauses).subspan(static_cast<std::size_t>(length)); }
  /// Z^{L,l}: all predicates and answers 0..l.
  std::span<const Clause> prefix(int l) const {
    return std::span(clauses).first(static_cast<std::size_t>(length + l + 1));
  }

  bool operator==(const LegoSentence&) const = default;
};

/// Samples a full sentence (L' = L): distinct variables, uniform y_0, i.i.d.
/// uniform actions, answers from the state-tracking oracle.
LegoSentence sample_sentence(const Vocabulary& vocab, int length, Rng& rng);

/// Sentence `index` of the corpus generated under `seed`; uses the stream derive_seed(seed, index).
LegoSentence sample_sentence_at(const Vocabulary& vocab, int length, std::uint64_t seed, std::uint64_t index);

/// Drops answers beyond `horizon`; the input is not modified.
LegoSentence truncate(const LegoSentence& sentence, int horizon);

/// Returns a description of the first violated property, or nullopt for a
/// sentence that is well formed and semantically valid (checked against the
/// oracle).
std::optional<std::string> validate_sentence(const Vocabulary& vocab, const LegoSentence& sentence);

/// Dense clause embeddings: column k is the stack of the five token
/// embeddings of clause k (d_c = 5d rows, column-major storage).
struct EmbeddedSequence {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  std::span<const double> column(int k) const {
    return std::span(data).subspan(static_cast<std::size_t>(k) * static_cast<std::size_t>(rows),
                                   static_cast<std::size_t>(rows));
  }
  bool operator==(const EmbeddedSequence&) const = default;
};

EmbeddedSequence embed(const Vocabulary& vocab, std::span<const Clause> clauses);
EmbeddedSequence embed(const Vocabulary& vocab, const LegoSentence& sentence);

/// Produces the next clause given the context so far.
using Annotator = std::function<Clause(std::span<const Clause>)>;

/// Sentence with predicates and y_0 drawn exactly as in sample_sentence, and
/// answers 1..horizon generated one at a time by `annotator` on the growing
/// prefix. Outputs are kept verbatim; `well_formed` records whether each of
/// them was a valid answer clause.
LegoSentence bootstrap_sentence(const Vocabulary& vocab, int length, int horizon, const Annotator& annotator,
                                Rng& rng);

/// Annotator that answers every prefix with the ground truth.
Annotator oracle_annotator(const Vocabulary& vocab);

/// Next ground-truth answer for a context whose last clause is an answer;
/// nullopt when the chain ends or the context is not a valid prefix.
std::optional<Clause> oracle_next_answer(const Vocabulary& vocab, std::span<const Clause> context);

}  // namespace lego
