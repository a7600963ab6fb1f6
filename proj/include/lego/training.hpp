#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lego/model.hpp"
#include "lego/sentence.hpp"

namespace lego {

/// Which answer steps and token positions a loss covers. Step l predicts the
/// answer clause x_l = y_l from the context Z^{L,l-1}.
struct LossSpec {
  std::vector<int> steps{1};
  PositionMask positions = kAllPositions;
};

struct LossValue {
  double loss = 0.0;
  std::array<double, 5> token_losses{};  // per position, summed over steps
  std::size_t sentences = 0;
};

/// Batch mean over sentences of sum over steps and positions of -log p(target).
/// Targets are the stored answer clauses, so bootstrapped sentences give the
/// self-training loss.
LossValue next_clause_loss(const ModelParams& params, std::span<const LegoSentence> batch, const LossSpec& spec);

struct Trainable {
  bool w = true;
  bool q = false;

  bool operator==(const Trainable&) const = default;
};

/// Gradient of a batch loss with the layout of ModelParams (W coordinate-major,
/// Q per head row-major). Rows that received a contribution are flagged so
/// that clearing and sparse updates only visit those rows.
struct GradientBundle {
  std::vector<double> dw;
  std::vector<std::vector<double>> dq;
  std::vector<std::uint8_t> w_rows;                // touched W rows (input coordinates)
  std::vector<std::vector<std::uint8_t>> q_rows;   // touched Q rows per head
  Trainable trainable;
  std::size_t batch_size = 0;
  LossValue loss;

  void reset(const ModelParams& params, Trainable which);
  double dw_at(const ModelParams& params, int i, int j, int r, int c) const {
    return dw[static_cast<std::size_t>(c) * params.neurons() + params.neuron_index(i, j, r)];
  }
};

/// Analytic gradient. Entries of Q outside the sparsity pattern are never
/// written; logit coordinates clipped at B pass no gradient.
GradientBundle grad_analytic(const ModelParams& params, std::span<const LegoSentence> batch, const LossSpec& spec,
                             Trainable which, int workers = 1);
/// Reuses `out`, clearing only the rows touched by its previous contents.
void grad_analytic_into(const ModelParams& params, std::span<const LegoSentence> batch, const LossSpec& spec,
                        Trainable which, int workers, GradientBundle& out);

/// Central finite differences of next_clause_loss for every trainable scalar.
GradientBundle grad_fd(const ModelParams& params, std::span<const LegoSentence> batch, const LossSpec& spec,
                       Trainable which, double h);

enum class OptimizerKind { PlainGD, Adam };

const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const OptimizerConfig&) const = default;
};

/// Applies gradient steps to the trainable part of the parameters.
class Optimizer {
 public:
  Optimizer(const ModelParams& params, OptimizerConfig config);

  void step(ModelParams& params, const GradientBundle& grad, Trainable which);
  long steps_taken() const { return t_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  long t_ = 0;
  std::vector<double> mw_, vw_;
  std::vector<std::vector<double>> mq_, vq_;
  std::vector<std::uint8_t> w_live_;  // rows whose moments are nonzero
  std::vector<std::vector<std::uint8_t>> q_live_;
};

enum class DataSource { GroundTruth, Bootstrapped };

/// One stage of a training schedule.
struct StageSpec {
  std::string name;
  Trainable trainable;
  int length = 1;
  LossSpec loss;
  DataSource source = DataSource::GroundTruth;
  int batch_size = 256;
  long max_steps = 1000;
  /// When set, the stage stops as soon as the moving average of the batch loss
  /// drops below this value; reaching max_steps first marks it non-converged.
  std::optional<double> threshold;
  double ema_decay = 0.99;
  OptimizerConfig optimizer;
};

struct StageSchedule {
  std::vector<StageSpec> stages;
};

/// Stage 1 trains W on the one-step loss at L = 1 (all positions); stage 2
/// trains Q on the value-position loss of steps 1 and 2 at L = 2.
StageSchedule curriculum_schedule(long steps1, long steps2, const OptimizerConfig& opt, int batch_size);

/// Stages 1.1 and 1.2 as in the curriculum (stage 1.2 uses step 2 only), then
/// for k = 2..K a Q stage at L = 2^k on bootstrapped step-2 value losses.
StageSchedule self_training_schedule(int K, long steps1, long steps2, long max_steps_k, double threshold,
                                     const OptimizerConfig& opt, int batch_size);

/// All parameters trained jointly on every step and position of ground-truth
/// sentences of each length in turn; lengths after the first use sentences
/// labeled by the greedy decoder of the previous stage.
StageSchedule joint_schedule(std::span<const int> lengths, long steps_per_stage, const OptimizerConfig& opt,
                             int batch_size);

struct StepRecord {
  int stage = 0;  // 1-based
  long step = 0;  // 1-based within the stage
  double loss = 0.0;
  std::array<double, 5> token_losses{};
  double wallclock_ms = 0.0;
};

struct StageResult {
  std::string name;
  int length = 0;
  long steps = 0;
  long end_step = 0;  // cumulative step count T_k
  bool converged = true;
  double final_loss = 0.0;
  double final_ema = 0.0;
  /// Content hash of the frozen labeling model at stage start and end
  /// (bootstrapped stages only).
  std::optional<std::uint64_t> annotator_hash_start;
  std::optional<std::uint64_t> annotator_hash_end;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  std::uint64_t seed = 0;
  int workers = 1;
  bool record_wallclock = false;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const StageResult&, const ModelParams&)> on_stage_end;
};

struct TrainRun {
  std::vector<StageResult> stages;
  std::vector<StepRecord> metrics;
};

/// Runs the stages in order on `params`, drawing a fresh batch every step.
TrainRun run_stages(const StageSchedule& schedule, const Vocabulary& vocab, ModelParams& params,
                    const TrainOptions& options);
/// run_stages for a two-stage curriculum (checked).
TrainRun run_curriculum(const StageSchedule& schedule, const Vocabulary& vocab, ModelParams& params,
                        const TrainOptions& options);
/// run_stages for a schedule whose later stages train on bootstrapped data (checked).
TrainRun run_self_training(const StageSchedule& schedule, const Vocabulary& vocab, ModelParams& params,
                           const TrainOptions& options);

/// Batch of `count` sentences for step `step` of a stage; ground truth is
/// truncated to the largest loss step, bootstrapped ones are labeled by `annotator`.
std::vector<LegoSentence> draw_batch(const Vocabulary& vocab, const StageSpec& stage, std::uint64_t stage_seed,
                                     long step, const NextClauseModel* annotator, int workers);

}  // namespace lego
