#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "lego/corpus_io.hpp"
#include "lego/sentence.hpp"

using namespace lego;

TEST_CASE("vocabulary layout") {
  Vocabulary c(30, ActionKind::Cyclic, 6);
  CHECK(c.size() == 43);
  Vocabulary s(30, ActionKind::Symmetry, 5);
  CHECK(s.size() == 156);
  std::set<int> tokens;
  for (int x = 0; x < s.variables(); ++x) tokens.insert(s.variable_token(x));
  for (int g = 0; g < s.actions(); ++g) tokens.insert(s.action_token(g));
  for (int y = 0; y < s.values(); ++y) tokens.insert(s.value_token(y));
  CHECK(tokens.size() == static_cast<std::size_t>(s.size() - 1));
  CHECK(*tokens.begin() == 0);
  CHECK(*tokens.rbegin() == s.size() - 2);
  CHECK(s.blank() == s.size() - 1);
  CHECK_THROWS_AS(Vocabulary(1, ActionKind::Cyclic, 6), std::invalid_argument);
  CHECK_THROWS_AS(Vocabulary(30, ActionKind::Symmetry, 9), std::invalid_argument);
}

TEST_CASE("sentence layout") {
  Vocabulary v(10, ActionKind::Cyclic, 6);
  Rng rng(1);
  const auto s = sample_sentence(v, 1, rng);
  REQUIRE(s.clauses.size() == 3);
  CHECK(classify(v, s.clauses[0]) == ClauseKind::Predicate);
  CHECK(classify(v, s.clauses[1]) == ClauseKind::Answer);
  CHECK(classify(v, s.clauses[2]) == ClauseKind::Answer);
  CHECK_THROWS_AS(sample_sentence(v, 10, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_sentence(v, 0, rng), std::invalid_argument);
}

TEST_CASE("sampled sentences are valid under the oracle") {
  for (auto kind : {ActionKind::Cyclic, ActionKind::Symmetry}) {
    Vocabulary v(30, kind, kind == ActionKind::Cyclic ? 6 : 5);
    for (std::uint64_t n = 0; n < 2000; ++n) {
      const auto s = sample_sentence_at(v, 1 + static_cast<int>(n % 20), 42, n);
      CHECK_FALSE(validate_sentence(v, s).has_value());
    }
  }
}

TEST_CASE("validate_sentence detects a wrong answer and repeated variables") {
  Vocabulary v(10, ActionKind::Cyclic, 6);
  Rng rng(3);
  auto s = sample_sentence(v, 3, rng);
  auto bad = s;
  auto& tok = bad.clauses.back().tokens[4];
  tok = v.value_token((v.value_of(tok) + 1) % 6);
  CHECK(validate_sentence(v, bad).has_value());
  auto dup = s;
  dup.clauses[1].tokens[0] = dup.clauses[0].tokens[0];
  CHECK(validate_sentence(v, dup).has_value());
}

TEST_CASE("first-position variable is uniform") {
  const int n_x = 20;
  Vocabulary v(n_x, ActionKind::Cyclic, 6);
  std::vector<int> counts(n_x, 0);
  const int draws = 10000;
  for (int n = 0; n < draws; ++n) {
    const auto s = sample_sentence_at(v, 4, 9, static_cast<std::uint64_t>(n));
    counts[static_cast<std::size_t>(s.clauses[0].tokens[2])]++;  // x_0 of the first predicate
  }
  const double p = 1.0 / n_x;
  const double sd = std::sqrt(draws * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - draws * p) <= 3.5 * sd);
}

TEST_CASE("truncate") {
  Vocabulary v(12, ActionKind::Symmetry, 3);
  Rng rng(4);
  const auto s = sample_sentence(v, 5, rng);
  CHECK(truncate(s, 5) == s);
  const auto t0 = truncate(s, 0);
  CHECK(t0.answers().size() == 1);
  for (int l = 0; l <= 5; ++l) CHECK(static_cast<int>(truncate(s, l).clauses.size()) == 5 + l + 1);
  CHECK(s.horizon() == 5);
  CHECK_THROWS_AS(truncate(s, 6), std::invalid_argument);
  CHECK_THROWS_AS(truncate(s, -1), std::invalid_argument);
}

TEST_CASE("embedding shape and norms") {
  Vocabulary v(12, ActionKind::Cyclic, 4);
  Rng rng(5);
  const auto s = sample_sentence(v, 4, rng);
  const auto e = embed(v, s);
  const int d = v.size();
  CHECK(e.rows == 5 * d);
  CHECK(e.cols == 9);
  for (int k = 0; k < e.cols; ++k) {
    const auto col = e.column(k);
    double norm2 = 0.0;
    std::array<int, 5> per_slot{};
    for (int r = 0; r < e.rows; ++r) {
      norm2 += col[static_cast<std::size_t>(r)] * col[static_cast<std::size_t>(r)];
      if (col[static_cast<std::size_t>(r)] != 0.0) per_slot[static_cast<std::size_t>(r / d)]++;
    }
    if (k < 4) {
      CHECK(norm2 == doctest::Approx(3.0));
      CHECK(per_slot == std::array<int, 5>{1, 1, 1, 0, 0});
    } else {
      CHECK(norm2 == doctest::Approx(2.0));
      CHECK(per_slot == std::array<int, 5>{0, 0, 0, 1, 1});
    }
  }
}

TEST_CASE("embedding is injective on valid sentences") {
  Vocabulary v(8, ActionKind::Cyclic, 3);
  std::vector<EmbeddedSequence> seen;
  std::vector<LegoSentence> sents;
  for (std::uint64_t n = 0; n < 200; ++n) {
    const auto s = sample_sentence_at(v, 3, 1, n);
    const auto e = embed(v, s);
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i] == e) CHECK(sents[i].clauses == s.clauses);
    }
    seen.push_back(e);
    sents.push_back(s);
  }
}

TEST_CASE("bootstrap with the oracle reproduces ground truth") {
  Vocabulary v(20, ActionKind::Symmetry, 4);
  const auto oracle = oracle_annotator(v);
  for (std::uint64_t n = 0; n < 200; ++n) {
    Rng a(derive_seed(8, n));
    Rng b(derive_seed(8, n));
    const auto boot = bootstrap_sentence(v, 6, 4, oracle, a);
    const auto truth = truncate(sample_sentence(v, 6, b), 4);
    CHECK(boot.clauses == truth.clauses);
    CHECK(boot.well_formed);
  }
}

TEST_CASE("bootstrap with a constant annotator copies its clause and flags it") {
  Vocabulary v(20, ActionKind::Cyclic, 6);
  const Clause fixed = make_answer(v, 3, 2);
  const Annotator constant = [&](std::span<const Clause>) { return fixed; };
  Rng rng(1);
  const auto s = bootstrap_sentence(v, 5, 5, constant, rng);
  for (int l = 1; l <= 5; ++l) CHECK(s.clauses[static_cast<std::size_t>(5 + l)] == fixed);
  const int b = v.blank();
  const Annotator junk = [&](std::span<const Clause>) { return Clause{{0, b, b, b, b}}; };
  Rng rng2(1);
  CHECK_FALSE(bootstrap_sentence(v, 5, 2, junk, rng2).well_formed);
}

TEST_CASE("bootstrapped predicates match sample_sentence") {
  Vocabulary v(20, ActionKind::Cyclic, 6);
  const Clause fixed = make_answer(v, 0, 0);
  const Annotator constant = [&](std::span<const Clause>) { return fixed; };
  for (std::uint64_t n = 0; n < 100; ++n) {
    Rng a(n);
    Rng b(n);
    const auto boot = bootstrap_sentence(v, 7, 3, constant, a);
    const auto truth = sample_sentence(v, 7, b);
    for (int i = 0; i <= 7; ++i) CHECK(boot.clauses[static_cast<std::size_t>(i)] == truth.clauses[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("corpus round trip") {
  Vocabulary v(25, ActionKind::Symmetry, 4);
  std::vector<LegoSentence> corpus;
  for (std::uint64_t n = 0; n < 1000; ++n) corpus.push_back(truncate(sample_sentence_at(v, 1 + static_cast<int>(n % 10), 3, n), static_cast<int>(n % 2)));
  const int b = v.blank();
  auto odd = corpus.front();
  odd.clauses.back() = Clause{{1, b, 2, b, b}};
  odd.well_formed = false;
  corpus.push_back(odd);
  std::stringstream ss;
  write_corpus(ss, v, corpus);
  CHECK(read_corpus(ss, v) == corpus);
}

TEST_CASE("corpus parse errors name the line") {
  Vocabulary v(25, ActionKind::Cyclic, 6);
  std::vector<LegoSentence> corpus;
  for (std::uint64_t n = 0; n < 3; ++n) corpus.push_back(sample_sentence_at(v, 4, 3, n));
  std::stringstream ss;
  write_corpus(ss, v, corpus);
  std::string text = ss.str();
  text.resize(text.size() - 10);
  std::stringstream cut(text);
  try {
    read_corpus(cut, v);
    FAIL("expected a parse error");
  } catch (const CorpusParseError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream empty;
  CHECK(read_corpus(empty, v).empty());
}
