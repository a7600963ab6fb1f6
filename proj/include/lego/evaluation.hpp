#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lego/model.hpp"
#include "lego/sentence.hpp"

namespace lego {

struct AccReport {
  int length = 0;
  double teacher_forced = 0.0;
  double rollout_final = 0.0;       // every generated clause matches the oracle
  double rollout_value_only = 0.0;  // every generated value token matches
  int n_eval = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo Acc_L: for each sentence and each L' < L, predicts the next
/// answer from the ground-truth prefix Z^{L,L'} and scores an exact clause
/// match. Sample draws from the model distribution; Greedy takes the argmax.
double acc_teacher_forced(const NextClauseModel& model, const Vocabulary& vocab, int length, int n_eval,
                          std::uint64_t seed, DecodeMode mode = DecodeMode::Sample, int workers = 1);

/// Greedy rollout of all L answers from Z^{L,0}; fills the rollout fields.
AccReport acc_rollout(const NextClauseModel& model, const Vocabulary& vocab, int length, int n_eval,
                      std::uint64_t seed, int workers = 1);

/// Rollout plus teacher-forced accuracy on the same sentences.
AccReport evaluate_length(const NextClauseModel& model, const Vocabulary& vocab, int length, int n_eval,
                          std::uint64_t seed, DecodeMode teacher_mode = DecodeMode::Sample, int workers = 1);

/// Attention from answer query x_{l-1} = y_{l-1} (context Z^{L,l-1}) for l = 1..L.
struct AttnDiagnostics {
  int length = 0;
  int n_samples = 0;
  std::vector<double> eps;        // mean concentration degree per l
  std::vector<double> gap;        // mean attention gap per l
  std::vector<double> eps_max;    // largest per-sample value per l
  std::vector<double> target_pred;  // mean weight on predicate l
  std::vector<double> target_ans;   // mean weight on answer l-1
  /// Averaged head-mean attention, L rows (queries, sentence positions
  /// L+1..2L counted from 1) by 2L+1 columns (keys in sentence order);
  /// keys after the query carry zero.
  std::vector<std::vector<double>> heatmap;

  /// Whether, in every heatmap row, the two target keys together carry more
  /// mass than any other single key.
  bool targets_dominate() const;
};

AttnDiagnostics attention_diagnostics(const ModelParams& params, const Vocabulary& vocab, int length, int n_samples,
                                      std::uint64_t seed);

/// Same diagnostics on given sentences (each of the same length, full horizon).
AttnDiagnostics attention_diagnostics(const ModelParams& params, std::span<const LegoSentence> sentences);

/// Sentence with its predicate clauses reordered by a uniform permutation;
/// answers are unchanged.
LegoSentence permute_predicates(const LegoSentence& sentence, Rng& rng);

struct PermutationReport {
  int length = 0;
  int n_samples = 0;
  double rollout_final = 0.0;
  double rollout_final_permuted = 0.0;
  double rollout_value_only = 0.0;
  double rollout_value_only_permuted = 0.0;
  double eps_mean = 0.0;
  double eps_mean_permuted = 0.0;
  /// Largest change in the attention weight received by any single clause
  /// (identified by content) over all samples and queries.
  double max_weight_change = 0.0;

  double rollout_delta() const { return rollout_final_permuted - rollout_final; }
  double value_only_delta() const { return rollout_value_only_permuted - rollout_value_only; }
};

PermutationReport permutation_ablation(const ModelParams& params, const Vocabulary& vocab, int length, int n_samples,
                                       std::uint64_t seed);

/// Value-position feature magnitudes: for each value class j and neuron r,
/// V_{j,r}(g) = <W_{5,j,r}, e_g> on the action slot and V_{j,r}(y) on the value slot.
struct FeatureProbe {
  int classes = 0;  // number of value tokens
  int m = 0;
  int actions = 0;
  int values = 0;
  /// [class][r][a] with a < actions for actions, then values.
  std::vector<double> table;

  double at(int j, int r, int col) const {
    return table[(static_cast<std::size_t>(j) * static_cast<std::size_t>(m) + static_cast<std::size_t>(r)) *
                     static_cast<std::size_t>(actions + values) + static_cast<std::size_t>(col)];
  }
  /// Per class: max over the class's entries minus their median.
  std::vector<double> class_margins() const;
};

FeatureProbe feature_probe(const ModelParams& params, const Vocabulary& vocab);

// CSV exports.
void write_accuracy_csv(std::ostream& out, const std::string& run_id, const std::string& stage,
                        const std::vector<AccReport>& reports, int train_length);
void write_heatmap_csv(std::ostream& out, const AttnDiagnostics& diag);
/// Row and column labels of the heatmap (sentence positions and clause kinds).
void write_heatmap_axes_csv(std::ostream& out, const AttnDiagnostics& diag);
void write_diagnostics_csv(std::ostream& out, const AttnDiagnostics& diag);
void write_permutation_csv(std::ostream& out, const std::vector<PermutationReport>& reports);
void write_feature_probe_csv(std::ostream& out, const FeatureProbe& probe);

}  // namespace lego
