#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lego/evaluation.hpp"
#include "lego/training.hpp"

namespace lego {

/// Invalid experiment configuration; raised before any computation starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TrainingMode { TheoryStaged, ExperimentJoint };
enum class TheoryAlgorithm { Curriculum, SelfTraining };

const char* to_string(TrainingMode mode);
TrainingMode training_mode_from_string(const std::string& name);
const char* to_string(TheoryAlgorithm algorithm);
TheoryAlgorithm theory_algorithm_from_string(const std::string& name);

struct ExperimentConfig {
  std::string name = "custom";

  // Task.
  ActionKind action_kind = ActionKind::Cyclic;
  int n_y = 6;
  int n_x = 200;

  // Model. Unset optionals take the vocabulary-size defaults of ModelConfig.
  int m = 8;
  int heads = 2;
  Sparsity sparsity = Sparsity::Blocks43_44;
  int q = 4;
  std::optional<double> rho;
  SReluVariant srelu_variant = SReluVariant::Main;
  std::optional<double> srelu_slope;
  std::optional<double> srelu_cap;
  std::optional<double> sigma0;
  std::optional<double> bias;
  double clip_constant = 20.0;

  // Training.
  TrainingMode mode = TrainingMode::ExperimentJoint;
  TheoryAlgorithm algorithm = TheoryAlgorithm::Curriculum;
  OptimizerConfig optimizer;
  int batch_size = 256;
  /// Joint mode: one stage per length, the first on ground truth and the rest
  /// on sentences labeled by the previous stage.
  std::vector<int> train_lengths{5};
  long steps_per_stage = 11719;
  /// Per-stage budgets overriding steps_per_stage; empty or one per length.
  std::vector<long> stage_steps;
  /// Theory mode: stage budgets, self-training cap and stop rule.
  long steps_stage1 = 2000;
  long steps_stage2 = 2000;
  long max_steps_k = 20000;
  int K = 3;
  std::optional<double> threshold = 1e-2;
  /// When set (and threshold is not), the stop rule is d^(-E1).
  std::optional<double> threshold_exponent;
  double ema_decay = 0.99;

  // Evaluation.
  std::vector<int> eval_lengths{5, 10, 20, 40, 80, 160};
  int n_eval = 500;
  int diag_samples = 100;

  std::uint64_t seed = 0;
  std::string out_dir = "runs";
  bool record_wallclock = false;
  /// Values chosen here where the source leaves them open; echoed into manifests.
  std::vector<std::string> declared_choices;

  /// Throws ConfigError for inconsistent settings.
  void validate() const;

  Vocabulary vocabulary() const;
  ModelConfig model_config() const;
  StageSchedule schedule() const;
  /// Stop threshold actually used by self-training stages.
  double stop_threshold() const;
  /// Longest length any stage trains on.
  int max_train_length() const;
  std::string run_id() const;
};

/// Names of the shipped presets.
std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);

/// Every field explicit, vocabulary-size defaults resolved.
std::string config_to_json(const ExperimentConfig& cfg);
/// Absent fields keep their defaults; unknown fields are rejected.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// SHA-1 of "blob <size>\0<bytes>", as git computes object ids.
std::string git_blob_sha1(const std::string& bytes);

struct ManifestEntry {
  std::string path;  // relative to the run directory
  std::uintmax_t size = 0;
  std::string sha1;
};

/// Manifest of every regular file under `dir` except the manifest itself,
/// sorted by path.
std::vector<ManifestEntry> build_manifest(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg);
/// Parsed manifest entries of a run directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);
/// Paths whose current content differs from the manifest (missing files included).
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

/// Writes `count` oracle-labeled sentences of length L as JSONL.
void cmd_gen(const ExperimentConfig& cfg, int length, int count, const std::filesystem::path& out);

struct TrainSummary {
  std::filesystem::path run_dir;
  TrainRun run;
  std::vector<std::filesystem::path> checkpoints;
};

/// Runs the configured pipeline into `run_dir` (config.json, metrics.csv,
/// stages.csv, checkpoints/, manifest.json).
TrainSummary cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& run_dir, int workers,
                       const std::function<void(const StepRecord&)>& on_step = {});

/// Accuracy per length (sorted, deduplicated) for a checkpoint.
std::vector<AccReport> evaluate_checkpoint(const ExperimentConfig& cfg, const ModelParams& params,
                                           std::vector<int> lengths, int workers);
void cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint, std::vector<int> lengths,
              const std::filesystem::path& out_csv, int workers);

/// heatmap.csv, heatmap_axes.csv, diagnostics.csv, permutation.csv and
/// feature_probe.csv for one length.
void cmd_attn(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint, int length,
              const std::filesystem::path& out_dir);

}  // namespace lego
