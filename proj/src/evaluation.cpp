#include "lego/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "parallel.hpp"

namespace lego {

namespace {

constexpr std::uint64_t kSamplingStream = 0x5A17;
constexpr std::uint64_t kPermutationStream = 0x9E27;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void check_eval(const Vocabulary& vocab, int length, int n) {
  if (n < 1) throw std::invalid_argument("evaluation needs at least one sentence");
  if (length < 1 || length + 1 > vocab.variables()) {
    throw std::invalid_argument("evaluation length " + std::to_string(length) + " does not fit " +
                                std::to_string(vocab.variables()) + " variables");
  }
}

struct RolloutCounts {
  long final_ok = 0;
  long value_ok = 0;
};

RolloutCounts rollout_one(const NextClauseModel& model, const LegoSentence& s) {
  std::vector<Clause> context(s.prefix(0).begin(), s.prefix(0).end());
  bool all = true;
  bool values = true;
  for (int l = 1; l <= s.length; ++l) {
    const Clause c = predict_clause(model, context, DecodeMode::Greedy);
    const Clause& truth = s.clauses[static_cast<std::size_t>(s.length + l)];
    all = all && c == truth;
    values = values && c.tokens[4] == truth.tokens[4];
    context.push_back(c);
  }
  return {all ? 1L : 0L, values ? 1L : 0L};
}

/// Applies a uniform permutation to the predicates; perm[new position] = old position.
LegoSentence permute_with(const LegoSentence& s, Rng& rng, std::vector<int>& perm) {
  perm.resize(static_cast<std::size_t>(s.length));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = s.length - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
  LegoSentence out = s;
  for (int i = 0; i < s.length; ++i) {
    out.clauses[static_cast<std::size_t>(i)] = s.clauses[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  return out;
}

}  // namespace

double acc_teacher_forced(const NextClauseModel& model, const Vocabulary& vocab, int length, int n_eval,
                          std::uint64_t seed, DecodeMode mode, int workers) {
  check_eval(vocab, length, n_eval);
  std::vector<long> hits(static_cast<std::size_t>(std::max(workers, 1)), 0);
  const std::uint64_t sampling_seed = derive_seed(seed, kSamplingStream);
  detail::parallel_chunks(workers, static_cast<std::size_t>(n_eval), [&](int w, std::size_t begin, std::size_t end) {
    long h = 0;
    for (std::size_t n = begin; n < end; ++n) {
      const LegoSentence s = sample_sentence_at(vocab, length, seed, n);
      Rng rng(derive_seed(sampling_seed, n));
      for (int l = 0; l < length; ++l) {
        const Clause c = predict_clause(model, s.prefix(l), mode, &rng);
        if (c == s.clauses[static_cast<std::size_t>(length + l + 1)]) ++h;
      }
    }
    hits[static_cast<std::size_t>(w)] = h;
  });
  const long total = std::accumulate(hits.begin(), hits.end(), 0L);
  return static_cast<double>(total) / (static_cast<double>(n_eval) * length);
}

AccReport acc_rollout(const NextClauseModel& model, const Vocabulary& vocab, int length, int n_eval,
                      std::uint64_t seed, int workers) {
  check_eval(vocab, length, n_eval);
  std::vector<RolloutCounts> parts(static_cast<std::size_t>(std::max(workers, 1)));
  detail::parallel_chunks(workers, static_cast<std::size_t>(n_eval), [&](int w, std::size_t begin, std::size_t end) {
    RolloutCounts acc;
    for (std::size_t n = begin; n < end; ++n) {
      const auto r = rollout_one(model, sample_sentence_at(vocab, length, seed, n));
      acc.final_ok += r.final_ok;
      acc.value_ok += r.value_ok;
    }
    parts[static_cast<std::size_t>(w)] = acc;
  });
  RolloutCounts total;
  for (const auto& p : parts) {
    total.final_ok += p.final_ok;
    total.value_ok += p.value_ok;
  }
  AccReport rep;
  rep.length = length;
  rep.n_eval = n_eval;
  rep.seed = seed;
  rep.rollout_final = static_cast<double>(total.final_ok) / n_eval;
  rep.rollout_value_only = static_cast<double>(total.value_ok) / n_eval;
  return rep;
}

AccReport evaluate_length(const NextClauseModel& model, const Vocabulary& vocab, int length, int n_eval,
                          std::uint64_t seed, DecodeMode teacher_mode, int workers) {
  AccReport rep = acc_rollout(model, vocab, length, n_eval, seed, workers);
  rep.teacher_forced = acc_teacher_forced(model, vocab, length, n_eval, seed, teacher_mode, workers);
  return rep;
}

bool AttnDiagnostics::targets_dominate() const {
  for (int l = 1; l <= length; ++l) {
    const auto& row = heatmap[static_cast<std::size_t>(l - 1)];
    const auto pred = static_cast<std::size_t>(l - 1);
    const auto ans = static_cast<std::size_t>(length + l - 1);
    const double targets = row[pred] + row[ans];
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k != pred && k != ans && row[k] >= targets) return false;
    }
  }
  return true;
}

AttnDiagnostics attention_diagnostics(const ModelParams& params, std::span<const LegoSentence> sentences) {
  if (sentences.empty()) throw std::invalid_argument("attention diagnostics need at least one sentence");
  const int L = sentences.front().length;
  AttnDiagnostics out;
  out.length = L;
  out.n_samples = static_cast<int>(sentences.size());
  const auto nl = static_cast<std::size_t>(L);
  out.eps.assign(nl, 0.0);
  out.gap.assign(nl, 0.0);
  out.eps_max.assign(nl, 0.0);
  out.target_pred.assign(nl, 0.0);
  out.target_ans.assign(nl, 0.0);
  out.heatmap.assign(nl, std::vector<double>(static_cast<std::size_t>(2 * L + 1), 0.0));
  AttentionOutput att;
  for (const auto& s : sentences) {
    if (s.length != L || s.horizon() < L - 1) throw std::invalid_argument("diagnostic sentences must share one length");
    for (int l = 1; l <= L; ++l) {
      att = attention_forward(params, s.prefix(l - 1));
      const auto li = static_cast<std::size_t>(l - 1);
      const double a_pred = att.mean_weights[li];
      const double a_ans = att.mean_weights[static_cast<std::size_t>(L + l - 1)];
      const double eps = 1.0 - a_pred - a_ans;
      out.eps[li] += eps;
      out.eps_max[li] = std::max(out.eps_max[li], eps);
      out.gap[li] += std::abs(a_pred - a_ans);
      out.target_pred[li] += a_pred;
      out.target_ans[li] += a_ans;
      for (std::size_t k = 0; k < att.mean_weights.size(); ++k) out.heatmap[li][k] += att.mean_weights[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(sentences.size());
  for (std::size_t l = 0; l < nl; ++l) {
    out.eps[l] *= inv;
    out.gap[l] *= inv;
    out.target_pred[l] *= inv;
    out.target_ans[l] *= inv;
    for (double& v : out.heatmap[l]) v *= inv;
  }
  return out;
}

AttnDiagnostics attention_diagnostics(const ModelParams& params, const Vocabulary& vocab, int length, int n_samples,
                                      std::uint64_t seed) {
  check_eval(vocab, length, n_samples);
  std::vector<LegoSentence> sentences;
  sentences.reserve(static_cast<std::size_t>(n_samples));
  for (int n = 0; n < n_samples; ++n) sentences.push_back(sample_sentence_at(vocab, length, seed, static_cast<std::uint64_t>(n)));
  return attention_diagnostics(params, sentences);
}

LegoSentence permute_predicates(const LegoSentence& sentence, Rng& rng) {
  std::vector<int> perm;
  return permute_with(sentence, rng, perm);
}

PermutationReport permutation_ablation(const ModelParams& params, const Vocabulary& vocab, int length, int n_samples,
                                       std::uint64_t seed) {
  check_eval(vocab, length, n_samples);
  const TransformerModel model(params);
  PermutationReport rep;
  rep.length = length;
  rep.n_samples = n_samples;
  std::vector<int> perm;
  RolloutCounts rb;
  RolloutCounts rp;
  double eps_base = 0.0;
  double eps_perm = 0.0;
  const std::uint64_t perm_seed = derive_seed(seed, kPermutationStream);
  for (int n = 0; n < n_samples; ++n) {
    const auto idx = static_cast<std::uint64_t>(n);
    const LegoSentence s = sample_sentence_at(vocab, length, seed, idx);
    Rng rng(derive_seed(perm_seed, idx));
    const LegoSentence p = permute_with(s, rng, perm);
    for (int l = 1; l <= length; ++l) {
      const auto a = attention_forward(params, s.prefix(l - 1));
      const auto b = attention_forward(params, p.prefix(l - 1));
      for (int i = 0; i < length; ++i) {
        const double wa = a.mean_weights[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        rep.max_weight_change = std::max(rep.max_weight_change, std::abs(b.mean_weights[static_cast<std::size_t>(i)] - wa));
      }
      for (std::size_t k = static_cast<std::size_t>(length); k < a.mean_weights.size(); ++k) {
        rep.max_weight_change = std::max(rep.max_weight_change, std::abs(b.mean_weights[k] - a.mean_weights[k]));
      }
      // In the permuted sentence predicate l sits wherever the permutation moved it.
      const auto moved = static_cast<std::size_t>(std::find(perm.begin(), perm.end(), l - 1) - perm.begin());
      const auto ans = static_cast<std::size_t>(length + l - 1);
      eps_base += 1.0 - a.mean_weights[static_cast<std::size_t>(l - 1)] - a.mean_weights[ans];
      eps_perm += 1.0 - b.mean_weights[moved] - b.mean_weights[ans];
    }
    const auto x = rollout_one(model, s);
    const auto y = rollout_one(model, p);
    rb.final_ok += x.final_ok;
    rb.value_ok += x.value_ok;
    rp.final_ok += y.final_ok;
    rp.value_ok += y.value_ok;
  }
  const double inv = 1.0 / n_samples;
  rep.rollout_final = rb.final_ok * inv;
  rep.rollout_value_only = rb.value_ok * inv;
  rep.rollout_final_permuted = rp.final_ok * inv;
  rep.rollout_value_only_permuted = rp.value_ok * inv;
  rep.eps_mean = eps_base / (static_cast<double>(n_samples) * length);
  rep.eps_mean_permuted = eps_perm / (static_cast<double>(n_samples) * length);
  return rep;
}

std::vector<double> FeatureProbe::class_margins() const {
  std::vector<double> out;
  const auto width = static_cast<std::size_t>(m) * static_cast<std::size_t>(actions + values);
  for (int j = 0; j < classes; ++j) {
    std::vector<double> v(table.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j) * width),
                          table.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j + 1) * width));
    const double mx = *std::max_element(v.begin(), v.end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    out.push_back(mx - v[v.size() / 2]);
  }
  return out;
}

FeatureProbe feature_probe(const ModelParams& params, const Vocabulary& vocab) {
  if (params.d() != vocab.size()) throw std::invalid_argument("model and vocabulary sizes differ");
  FeatureProbe p;
  p.classes = vocab.values();
  p.m = params.m();
  p.actions = vocab.actions();
  p.values = vocab.values();
  const int d = params.d();
  p.table.reserve(static_cast<std::size_t>(p.classes) * static_cast<std::size_t>(p.m) *
                  static_cast<std::size_t>(p.actions + p.values));
  for (int j = 0; j < p.classes; ++j) {
    for (int r = 0; r < p.m; ++r) {
      for (int g = 0; g < p.actions; ++g) p.table.push_back(params.w(4, vocab.value_token(j), r, d + vocab.action_token(g)));
      for (int y = 0; y < p.values; ++y) p.table.push_back(params.w(4, vocab.value_token(j), r, 4 * d + vocab.value_token(y)));
    }
  }
  return p;
}

void write_accuracy_csv(std::ostream& out, const std::string& run_id, const std::string& stage,
                        const std::vector<AccReport>& reports, int train_length) {
  out << "run_id,stage,eval_L,teacher_forced,rollout_final,rollout_value_only,n_eval,train_L\n";
  for (const auto& r : reports) {
    out << run_id << ',' << stage << ',' << r.length << ',' << num(r.teacher_forced) << ',' << num(r.rollout_final) << ','
        << num(r.rollout_value_only) << ',' << r.n_eval << ',' << train_length << '\n';
  }
}

void write_heatmap_csv(std::ostream& out, const AttnDiagnostics& diag) {
  for (const auto& row : diag.heatmap) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << num(row[k]);
    out << '\n';
  }
}

void write_heatmap_axes_csv(std::ostream& out, const AttnDiagnostics& diag) {
  const int L = diag.length;
  out << "axis,index,position,clause\n";
  for (int l = 1; l <= L; ++l) out << "row," << l - 1 << ',' << L + l << ",ans" << l - 1 << '\n';
  for (int k = 0; k <= 2 * L; ++k) {
    out << "col," << k << ',' << k + 1 << ',' << (k < L ? "pred" + std::to_string(k + 1) : "ans" + std::to_string(k - L)) << '\n';
  }
}

void write_diagnostics_csv(std::ostream& out, const AttnDiagnostics& diag) {
  out << "L,l,eps,gap,eps_max,attn_pred,attn_ans,n_samples\n";
  for (int l = 1; l <= diag.length; ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    out << diag.length << ',' << l << ',' << num(diag.eps[i]) << ',' << num(diag.gap[i]) << ',' << num(diag.eps_max[i]) << ','
        << num(diag.target_pred[i]) << ',' << num(diag.target_ans[i]) << ',' << diag.n_samples << '\n';
  }
}

void write_permutation_csv(std::ostream& out, const std::vector<PermutationReport>& reports) {
  out << "L,variant,rollout_final,rollout_value_only,eps_mean,max_weight_change,n_samples\n";
  for (const auto& r : reports) {
    out << r.length << ",baseline," << num(r.rollout_final) << ',' << num(r.rollout_value_only) << ',' << num(r.eps_mean)
        << ",0," << r.n_samples << '\n';
    out << r.length << ",permuted," << num(r.rollout_final_permuted) << ',' << num(r.rollout_value_only_permuted) << ','
        << num(r.eps_mean_permuted) << ',' << num(r.max_weight_change) << ',' << r.n_samples << '\n';
    out << r.length << ",delta," << num(r.rollout_delta()) << ',' << num(r.value_only_delta()) << ','
        << num(r.eps_mean_permuted - r.eps_mean) << ',' << num(r.max_weight_change) << ',' << r.n_samples << '\n';
  }
}

void write_feature_probe_csv(std::ostream& out, const FeatureProbe& probe) {
  out << "class,neuron,feature_kind,feature_index,value\n";
  for (int j = 0; j < probe.classes; ++j) {
    for (int r = 0; r < probe.m; ++r) {
      for (int c = 0; c < probe.actions + probe.values; ++c) {
        const bool is_action = c < probe.actions;
        out << j << ',' << r << ',' << (is_action ? "action" : "value") << ',' << (is_action ? c : c - probe.actions) << ','
            << num(probe.at(j, r, c)) << '\n';
      }
    }
  }
}

}  // namespace lego
