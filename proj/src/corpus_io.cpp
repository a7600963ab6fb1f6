#include "lego/corpus_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace lego {

using nlohmann::json;

std::string sentence_to_json_line(const Vocabulary& vocab, const LegoSentence& s) {
  json preds = json::array();
  for (const Clause& c : s.predicates()) {
    if (classify(vocab, c) != ClauseKind::Predicate) throw std::invalid_argument("cannot serialize malformed predicate");
    preds.push_back({vocab.variable_of(c.tokens[0]), vocab.action_of(c.tokens[1]), vocab.variable_of(c.tokens[2])});
  }
  json answers = json::array();
  for (const Clause& c : s.answers()) {
    if (classify(vocab, c) == ClauseKind::Answer) {
      answers.push_back({vocab.variable_of(c.tokens[3]), vocab.value_of(c.tokens[4])});
    } else {
      answers.push_back(c.tokens);
    }
  }
  json j;
  j["L"] = s.length;
  j["L_prime"] = s.horizon();
  j["predicates"] = std::move(preds);
  j["answers"] = std::move(answers);
  j["seed"] = s.seed;
  j["index"] = s.index;
  j["well_formed"] = s.well_formed;
  return j.dump();
}

LegoSentence sentence_from_json_line(const Vocabulary& vocab, const std::string& line, std::size_t line_number) {
  try {
    const json j = json::parse(line);
    LegoSentence s;
    s.length = j.at("L").get<int>();
    const int horizon = j.at("L_prime").get<int>();
    const auto& preds = j.at("predicates");
    const auto& answers = j.at("answers");
    if (static_cast<int>(preds.size()) != s.length) throw CorpusParseError(line_number, "predicate count differs from L");
    if (static_cast<int>(answers.size()) != horizon + 1) {
      throw CorpusParseError(line_number, "answer count differs from L_prime + 1");
    }
    for (const auto& p : preds) {
      if (p.size() != 3) throw CorpusParseError(line_number, "predicate must be [x, g, x']");
      s.clauses.push_back(make_predicate(vocab, p[0].get<int>(), p[1].get<int>(), p[2].get<int>()));
    }
    for (const auto& a : answers) {
      if (a.size() == 2) {
        s.clauses.push_back(make_answer(vocab, a[0].get<int>(), a[1].get<int>()));
      } else if (a.size() == 5) {
        Clause c;
        for (std::size_t i = 0; i < 5; ++i) {
          c.tokens[i] = a[i].get<int>();
          if (c.tokens[i] < 0 || c.tokens[i] >= vocab.size()) throw CorpusParseError(line_number, "token out of range");
        }
        s.clauses.push_back(c);
      } else {
        throw CorpusParseError(line_number, "answer must be [x, y] or 5 raw tokens");
      }
    }
    s.seed = j.at("seed").get<std::uint64_t>();
    s.index = j.at("index").get<std::uint64_t>();
    s.well_formed = j.at("well_formed").get<bool>();
    return s;
  } catch (const CorpusParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorpusParseError(line_number, e.what());
  }
}

void write_corpus(std::ostream& out, const Vocabulary& vocab, const std::vector<LegoSentence>& sentences) {
  for (const auto& s : sentences) out << sentence_to_json_line(vocab, s) << '\n';
}

void write_corpus(const std::filesystem::path& path, const Vocabulary& vocab, const std::vector<LegoSentence>& sentences) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_corpus(out, vocab, sentences);
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::vector<LegoSentence> read_corpus(std::istream& in, const Vocabulary& vocab) {
  std::vector<LegoSentence> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    out.push_back(sentence_from_json_line(vocab, line, number));
  }
  return out;
}

std::vector<LegoSentence> read_corpus(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return read_corpus(in, vocab);
}

}  // namespace lego
