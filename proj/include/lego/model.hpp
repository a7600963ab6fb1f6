#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lego/rng.hpp"
#include "lego/sentence.hpp"
#include "lego/srelu.hpp"

namespace lego {

/// Which blocks of the 5x5 block partition of Q may be nonzero.
enum class Sparsity { Full, Blocks43_44 };

const char* to_string(Sparsity s);
Sparsity sparsity_from_string(const std::string& name);

/// Shape and fixed constants of the one-layer model.
struct ModelConfig {
  int d = 0;      // vocabulary size
  int m = 8;      // neurons per (token position, vocabulary index)
  int heads = 1;  // merged-Q attention heads, aggregates averaged
  Sparsity sparsity = Sparsity::Blocks43_44;
  SReluConfig srelu;
  double sigma0 = 0.0;  // std of the Gaussian FFN initialization
  double bias = 0.0;    // fixed FFN bias shared by every neuron
  double clip = 0.0;    // upper clip B applied to every logit

  /// q = 4, rho = 1/log^2 d, sigma0 = d^(-1/2), bias = sigma0 log d, B = clip_constant * log d.
  static ModelConfig defaults(int d, int m, int heads, Sparsity sparsity, double clip_constant = 20.0);

  int clause_dim() const { return 5 * d; }
  std::size_t neurons() const { return static_cast<std::size_t>(5) * static_cast<std::size_t>(d) * static_cast<std::size_t>(m); }
  void validate() const;
  bool operator==(const ModelConfig&) const;
};

/// Trainable parameters: FFN weights W[5][d][m][d_c] and one d_c x d_c
/// attention matrix per head.
///
/// W is stored coordinate-major (input coordinate c outermost) so that the
/// contribution of one input coordinate to every pre-activation is a single
/// contiguous row; see w_row().
class ModelParams {
 public:
  /// All-zero parameters.
  explicit ModelParams(ModelConfig config);
  /// Q = 0 and W_{i,j,r} ~ N(0, sigma0^2 I), drawn in row-major [i][j][r][c] order.
  static ModelParams initialize(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  int d() const { return config_.d; }
  int m() const { return config_.m; }
  int heads() const { return config_.heads; }
  int clause_dim() const { return config_.clause_dim(); }
  std::size_t neurons() const { return config_.neurons(); }

  /// Flat index of neuron (i, j, r) within a W row; i is the 0-based token position.
  std::size_t neuron_index(int i, int j, int r) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(d()) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(m()) + static_cast<std::size_t>(r);
  }
  double& w(int i, int j, int r, int c) { return w_[static_cast<std::size_t>(c) * neurons() + neuron_index(i, j, r)]; }
  double w(int i, int j, int r, int c) const { return w_[static_cast<std::size_t>(c) * neurons() + neuron_index(i, j, r)]; }
  std::span<double> w_row(int c) { return std::span(w_).subspan(static_cast<std::size_t>(c) * neurons(), neurons()); }
  std::span<const double> w_row(int c) const { return std::span(w_).subspan(static_cast<std::size_t>(c) * neurons(), neurons()); }
  std::span<double> w_data() { return w_; }
  std::span<const double> w_data() const { return w_; }

  double& q(int h, int row, int col) { return q_[static_cast<std::size_t>(h)][index(row, col)]; }
  double q(int h, int row, int col) const { return q_[static_cast<std::size_t>(h)][index(row, col)]; }
  std::span<double> q_data(int h) { return q_[static_cast<std::size_t>(h)]; }
  std::span<const double> q_data(int h) const { return q_[static_cast<std::size_t>(h)]; }

  /// Whether entry (row, col) of Q may be nonzero under the sparsity pattern.
  bool q_trainable(int row, int col) const;
  /// Contiguous trainable column range [begin, end) of a Q row (empty when none).
  std::pair<int, int> q_trainable_columns(int row) const;

  /// Exact equality of every stored bit.
  bool bitwise_equal(const ModelParams& other) const;
  /// FNV-1a over the config-independent parameter bytes (W then each Q head).
  std::uint64_t content_hash() const;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(clause_dim()) + static_cast<std::size_t>(col);
  }

  ModelConfig config_;
  std::vector<double> w_;
  std::vector<std::vector<double>> q_;
};

/// Token positions of the next clause that a computation covers.
using PositionMask = std::array<bool, 5>;
inline constexpr PositionMask kAllPositions{true, true, true, true, true};
inline constexpr PositionMask kValuePosition{false, false, false, false, true};

/// Attention from the final clause of the context to every clause (itself included).
struct AttentionOutput {
  std::vector<std::vector<double>> weights;  // [head][key]
  std::vector<double> mean_weights;          // averaged over heads
  /// Aggregated vector sum_k mean_weight_k Z_k as a sparse vector: coordinates
  /// in first-touch order and a dense value buffer of length d_c.
  std::vector<int> coords;
  std::vector<double> dense;
  std::vector<std::uint8_t> marked;  // scratch: 1 for coordinates listed in `coords`
};

/// All intermediate quantities of one forward pass.
struct ForwardTrace {
  AttentionOutput attention;
  PositionMask positions = kAllPositions;
  std::vector<double> lambda;      // pre-activations [i][j][r]
  std::vector<double> act;         // sReLU(lambda)
  std::vector<double> act_deriv;   // sReLU'(lambda)
  std::vector<double> raw;         // unclipped logits [i][j]
  std::vector<double> logits;      // min(raw, B)
  std::vector<double> dist;        // per-position softmax of logits
  std::vector<double> log_norm;    // per-position log-sum-exp of logits

  std::span<const double> distribution(int i, int d) const {
    return std::span(dist).subspan(static_cast<std::size_t>(i) * static_cast<std::size_t>(d), static_cast<std::size_t>(d));
  }
};

/// Attention weights of the final clause over the context, via sparse one-hot lookups.
AttentionOutput attention_forward(const ModelParams& params, std::span<const Clause> context);
/// Same computation from dense clause embeddings (explicit Z_j^T Q Z_k products).
AttentionOutput attention_forward(const ModelParams& params, const EmbeddedSequence& embedded);

/// Full forward pass. Only the positions in `positions` are computed.
ForwardTrace forward(const ModelParams& params, std::span<const Clause> context, const PositionMask& positions = kAllPositions);
/// Reuses the buffers of `trace`.
void forward_into(const ModelParams& params, std::span<const Clause> context, const PositionMask& positions,
                  ForwardTrace& trace);
/// Dense reference forward pass from embeddings (no sparsity shortcuts).
ForwardTrace forward_dense(const ModelParams& params, const EmbeddedSequence& embedded);

/// Source of next-clause token distributions; the transformer and the test
/// predictors implement it.
class NextClauseModel {
 public:
  virtual ~NextClauseModel() = default;
  virtual int vocabulary_size() const = 0;
  /// Writes five distributions of length d, position-major, into `out`.
  virtual void distributions(std::span<const Clause> context, std::vector<double>& out) const = 0;
};

class TransformerModel final : public NextClauseModel {
 public:
  explicit TransformerModel(const ModelParams& params) : params_(&params) {}
  int vocabulary_size() const override { return params_->d(); }
  void distributions(std::span<const Clause> context, std::vector<double>& out) const override;
  const ModelParams& params() const { return *params_; }

 private:
  const ModelParams* params_;
};

/// Puts all mass on the ground-truth next answer (blank clause when none exists).
class OracleModel final : public NextClauseModel {
 public:
  explicit OracleModel(Vocabulary vocab) : vocab_(std::move(vocab)) {}
  int vocabulary_size() const override { return vocab_.size(); }
  void distributions(std::span<const Clause> context, std::vector<double>& out) const override;

 private:
  Vocabulary vocab_;
};

/// Always predicts the same clause.
class ConstantModel final : public NextClauseModel {
 public:
  ConstantModel(int d, Clause clause) : d_(d), clause_(clause) {}
  int vocabulary_size() const override { return d_; }
  void distributions(std::span<const Clause> context, std::vector<double>& out) const override;

 private:
  int d_;
  Clause clause_;
};

/// Five independent argmax tokens (ties to the lowest index).
Clause greedy_clause(std::span<const double> dists, int d);
/// Five independent draws from the per-position distributions.
Clause sample_clause(std::span<const double> dists, int d, Rng& rng);

enum class DecodeMode { Greedy, Sample };
Clause predict_clause(const NextClauseModel& model, std::span<const Clause> context, DecodeMode mode, Rng* rng = nullptr);
Clause predict_clause(const ModelParams& params, std::span<const Clause> context, DecodeMode mode, Rng* rng = nullptr);

/// Greedy annotator backed by a model; the model must outlive the annotator.
Annotator greedy_annotator(const NextClauseModel& model);

}  // namespace lego
