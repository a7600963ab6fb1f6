#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lego/sentence.hpp"

namespace lego {

/// Malformed corpus line; `line()` is 1-based.
class CorpusParseError : public std::runtime_error {
 public:
  CorpusParseError(std::size_t line, const std::string& what)
      : std::runtime_error("corpus line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// JSON-lines corpus, one sentence per line:
//   {"L":3,"L_prime":2,"predicates":[[x,g,x'],...],"answers":[[x,y],...],
//    "seed":..,"index":..,"well_formed":true}
// Indices are semantic (variable index, group-element index, state). An
// answer that is not well formed is written as its raw 5 token ids.

std::string sentence_to_json_line(const Vocabulary& vocab, const LegoSentence& sentence);
LegoSentence sentence_from_json_line(const Vocabulary& vocab, const std::string& line, std::size_t line_number);

void write_corpus(std::ostream& out, const Vocabulary& vocab, const std::vector<LegoSentence>& sentences);
void write_corpus(const std::filesystem::path& path, const Vocabulary& vocab, const std::vector<LegoSentence>& sentences);
std::vector<LegoSentence> read_corpus(std::istream& in, const Vocabulary& vocab);
std::vector<LegoSentence> read_corpus(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace lego
