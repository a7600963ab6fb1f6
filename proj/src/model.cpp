#include "lego/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "lego/simd/kernels.hpp"

namespace lego {

const char* to_string(Sparsity s) { return s == Sparsity::Full ? "full" : "blocks43_44"; }

Sparsity sparsity_from_string(const std::string& name) {
  if (name == "full") return Sparsity::Full;
  if (name == "blocks43_44") return Sparsity::Blocks43_44;
  throw std::invalid_argument("unknown sparsity '" + name + "' (expected full or blocks43_44)");
}

ModelConfig ModelConfig::defaults(int d, int m, int heads, Sparsity sparsity, double clip_constant) {
  ModelConfig c;
  c.d = d;
  c.m = m;
  c.heads = heads;
  c.sparsity = sparsity;
  const double log_d = std::log(static_cast<double>(d));
  c.srelu.q = 4;
  c.srelu.rho = 1.0 / (log_d * log_d);
  c.sigma0 = 1.0 / std::sqrt(static_cast<double>(d));
  c.bias = c.sigma0 * log_d;
  c.clip = clip_constant * log_d;
  c.srelu.cap = c.clip;
  c.srelu.slope = 1.0 / static_cast<double>(d);
  c.srelu.lambda = (d - 1.0) / (d - 1.0 + std::exp(c.srelu.cap));
  return c;
}

void ModelConfig::validate() const {
  if (d < 2) throw std::invalid_argument("model needs a vocabulary of at least 2 tokens");
  if (m < 1) throw std::invalid_argument("model needs at least one neuron per class");
  if (heads < 1) throw std::invalid_argument("model needs at least one attention head");
  if (!(sigma0 >= 0.0)) throw std::invalid_argument("sigma0 must be non-negative");
  if (!(clip > 0.0)) throw std::invalid_argument("logit clip must be positive");
  srelu.validate();
}

bool ModelConfig::operator==(const ModelConfig& o) const {
  return d == o.d && m == o.m && heads == o.heads && sparsity == o.sparsity && srelu.q == o.srelu.q &&
         srelu.rho == o.srelu.rho && srelu.variant == o.srelu.variant && srelu.slope == o.srelu.slope &&
         srelu.cap == o.srelu.cap && srelu.lambda == o.srelu.lambda && sigma0 == o.sigma0 && bias == o.bias &&
         clip == o.clip;
}

ModelParams::ModelParams(ModelConfig config) : config_(config) {
  config_.validate();
  w_.assign(static_cast<std::size_t>(clause_dim()) * neurons(), 0.0);
  const std::size_t qsize = static_cast<std::size_t>(clause_dim()) * static_cast<std::size_t>(clause_dim());
  q_.assign(static_cast<std::size_t>(config_.heads), std::vector<double>(qsize, 0.0));
}

ModelParams ModelParams::initialize(const ModelConfig& config, Rng& rng) {
  ModelParams p(config);
  const int dc = p.clause_dim();
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < p.d(); ++j) {
      for (int r = 0; r < p.m(); ++r) {
        for (int c = 0; c < dc; ++c) p.w(i, j, r, c) = config.sigma0 * rng.normal();
      }
    }
  }
  return p;
}

bool ModelParams::q_trainable(int row, int col) const {
  if (config_.sparsity == Sparsity::Full) return true;
  const int rb = row / d();
  const int cb = col / d();
  return rb == 3 && (cb == 2 || cb == 3);
}

std::pair<int, int> ModelParams::q_trainable_columns(int row) const {
  if (config_.sparsity == Sparsity::Full) return {0, clause_dim()};
  if (row / d() == 3) return {2 * d(), 4 * d()};
  return {0, 0};
}

bool ModelParams::bitwise_equal(const ModelParams& other) const {
  if (!(config_ == other.config_)) return false;
  if (std::memcmp(w_.data(), other.w_.data(), w_.size() * sizeof(double)) != 0) return false;
  for (std::size_t h = 0; h < q_.size(); ++h) {
    if (std::memcmp(q_[h].data(), other.q_[h].data(), q_[h].size() * sizeof(double)) != 0) return false;
  }
  return true;
}

namespace {

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
}

void check_context(const ModelParams& params, std::span<const Clause> context) {
  if (context.empty()) throw std::invalid_argument("attention needs a non-empty context");
  for (const Clause& c : context) {
    for (int t : c.tokens) {
      if (t < 0 || t >= params.d()) throw std::invalid_argument("clause token outside the model vocabulary");
    }
  }
}

/// Nonzero coordinates of a clause embedding (the blank is the last index).
int clause_coords(const Clause& c, int d, std::array<int, 5>& out) {
  int n = 0;
  for (int s = 0; s < 5; ++s) {
    const int t = c.tokens[static_cast<std::size_t>(s)];
    if (t != d - 1) out[static_cast<std::size_t>(n++)] = s * d + t;
  }
  return n;
}

void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

void attention_into(const ModelParams& params, std::span<const Clause> context, AttentionOutput& out) {
  check_context(params, context);
  const int d = params.d();
  const int heads = params.heads();
  const std::size_t n = context.size();
  std::array<int, 5> qc{};
  const int nq = clause_coords(context.back(), d, qc);

  out.weights.resize(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    auto& wts = out.weights[static_cast<std::size_t>(h)];
    wts.assign(n, 0.0);
    const auto qd = params.q_data(h);
    for (std::size_t k = 0; k < n; ++k) {
      std::array<int, 5> kc{};
      const int nk = clause_coords(context[k], d, kc);
      double s = 0.0;
      for (int a = 0; a < nq; ++a) {
        const std::size_t row = static_cast<std::size_t>(qc[static_cast<std::size_t>(a)]) * static_cast<std::size_t>(5 * d);
        for (int b = 0; b < nk; ++b) s += qd[row + static_cast<std::size_t>(kc[static_cast<std::size_t>(b)])];
      }
      wts[k] = s;
    }
    softmax_inplace(wts);
  }
  out.mean_weights.assign(n, 0.0);
  for (const auto& wts : out.weights) {
    for (std::size_t k = 0; k < n; ++k) out.mean_weights[k] += wts[k];
  }
  for (double& w : out.mean_weights) w /= heads;

  const std::size_t dc = static_cast<std::size_t>(5 * d);
  if (out.dense.size() != dc || out.marked.size() != dc) {
    out.dense.assign(dc, 0.0);
    out.marked.assign(dc, 0);
  } else {
    for (int c : out.coords) {
      out.dense[static_cast<std::size_t>(c)] = 0.0;
      out.marked[static_cast<std::size_t>(c)] = 0;
    }
  }
  out.coords.clear();
  for (std::size_t k = 0; k < n; ++k) {
    std::array<int, 5> kc{};
    const int nk = clause_coords(context[k], d, kc);
    for (int b = 0; b < nk; ++b) {
      const auto c = static_cast<std::size_t>(kc[static_cast<std::size_t>(b)]);
      if (out.marked[c] == 0) {
        out.marked[c] = 1;
        out.coords.push_back(static_cast<int>(c));
      }
      out.dense[c] += out.mean_weights[k];
    }
  }
}

/// lambda -> act -> logits -> dist for the selected positions.
void ffn_into(const ModelParams& params, ForwardTrace& tr) {
  const auto& cfg = params.config();
  const auto& K = simd::kernels();
  const int d = params.d();
  const std::size_t N = params.neurons();
  const std::size_t slice = static_cast<std::size_t>(d) * static_cast<std::size_t>(params.m());
  tr.act.resize(N);
  tr.act_deriv.resize(N);
  tr.raw.assign(static_cast<std::size_t>(5 * d), 0.0);
  tr.logits.assign(static_cast<std::size_t>(5 * d), 0.0);
  tr.dist.assign(static_cast<std::size_t>(5 * d), 0.0);
  tr.log_norm.assign(5, 0.0);
  for (int i = 0; i < 5; ++i) {
    if (!tr.positions[static_cast<std::size_t>(i)]) continue;
    const std::size_t off = static_cast<std::size_t>(i) * slice;
    if (cfg.srelu.variant == SReluVariant::Main) {
      K.srelu(tr.lambda.data() + off, tr.act.data() + off, tr.act_deriv.data() + off, slice, cfg.srelu.q, cfg.srelu.rho);
    } else {
      for (std::size_t u = off; u < off + slice; ++u) {
        tr.act[u] = srelu(tr.lambda[u], cfg.srelu);
        tr.act_deriv[u] = srelu_prime(tr.lambda[u], cfg.srelu);
      }
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
      const double* a = tr.act.data() + off + static_cast<std::size_t>(j) * static_cast<std::size_t>(params.m());
      double s = 0.0;
      for (int r = 0; r < params.m(); ++r) s += a[r];
      const std::size_t ij = static_cast<std::size_t>(i * d + j);
      tr.raw[ij] = s;
      tr.logits[ij] = std::min(s, cfg.clip);
      mx = std::max(mx, tr.logits[ij]);
    }
    double sum = 0.0;
    for (int j = 0; j < d; ++j) {
      const std::size_t ij = static_cast<std::size_t>(i * d + j);
      tr.dist[ij] = std::exp(tr.logits[ij] - mx);
      sum += tr.dist[ij];
    }
    for (int j = 0; j < d; ++j) tr.dist[static_cast<std::size_t>(i * d + j)] /= sum;
    tr.log_norm[static_cast<std::size_t>(i)] = mx + std::log(sum);
  }
}

}  // namespace

std::uint64_t ModelParams::content_hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  fnv_bytes(h, w_.data(), w_.size() * sizeof(double));
  for (const auto& q : q_) fnv_bytes(h, q.data(), q.size() * sizeof(double));
  return h;
}

AttentionOutput attention_forward(const ModelParams& params, std::span<const Clause> context) {
  AttentionOutput out;
  attention_into(params, context, out);
  return out;
}

AttentionOutput attention_forward(const ModelParams& params, const EmbeddedSequence& e) {
  if (e.cols == 0) throw std::invalid_argument("attention needs a non-empty context");
  if (e.rows != params.clause_dim()) throw std::invalid_argument("embedding dimension does not match the model");
  const auto n = static_cast<std::size_t>(e.cols);
  const auto dc = static_cast<std::size_t>(e.rows);
  const auto query = e.column(e.cols - 1);
  AttentionOutput out;
  out.weights.resize(static_cast<std::size_t>(params.heads()));
  std::vector<double> qz(dc);
  for (int h = 0; h < params.heads(); ++h) {
    const auto qd = params.q_data(h);
    // qz = Z_query^T Q
    std::fill(qz.begin(), qz.end(), 0.0);
    for (std::size_t a = 0; a < dc; ++a) {
      if (query[a] == 0.0) continue;
      for (std::size_t b = 0; b < dc; ++b) qz[b] += query[a] * qd[a * dc + b];
    }
    auto& wts = out.weights[static_cast<std::size_t>(h)];
    wts.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto key = e.column(static_cast<int>(k));
      double s = 0.0;
      for (std::size_t b = 0; b < dc; ++b) s += qz[b] * key[b];
      wts[k] = s;
    }
    softmax_inplace(wts);
  }
  out.mean_weights.assign(n, 0.0);
  for (const auto& wts : out.weights) {
    for (std::size_t k = 0; k < n; ++k) out.mean_weights[k] += wts[k] / params.heads();
  }
  out.dense.assign(dc, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto key = e.column(static_cast<int>(k));
    for (std::size_t b = 0; b < dc; ++b) out.dense[b] += out.mean_weights[k] * key[b];
  }
  for (std::size_t b = 0; b < dc; ++b) {
    if (out.dense[b] != 0.0) out.coords.push_back(static_cast<int>(b));
  }
  return out;
}

void forward_into(const ModelParams& params, std::span<const Clause> context, const PositionMask& positions,
                  ForwardTrace& tr) {
  attention_into(params, context, tr.attention);
  tr.positions = positions;
  const std::size_t N = params.neurons();
  const std::size_t slice = static_cast<std::size_t>(params.d()) * static_cast<std::size_t>(params.m());
  const auto& K = simd::kernels();
  const bool all = std::all_of(positions.begin(), positions.end(), [](bool b) { return b; });
  tr.lambda.assign(N, params.config().bias);
  for (int c : tr.attention.coords) {
    const double a = tr.attention.dense[static_cast<std::size_t>(c)];
    const double* row = params.w_row(c).data();
    if (all) {
      K.axpy(a, row, tr.lambda.data(), N);
    } else {
      for (int i = 0; i < 5; ++i) {
        if (!positions[static_cast<std::size_t>(i)]) continue;
        const std::size_t off = static_cast<std::size_t>(i) * slice;
        K.axpy(a, row + off, tr.lambda.data() + off, slice);
      }
    }
  }
  ffn_into(params, tr);
}

ForwardTrace forward(const ModelParams& params, std::span<const Clause> context, const PositionMask& positions) {
  ForwardTrace tr;
  forward_into(params, context, positions, tr);
  return tr;
}

ForwardTrace forward_dense(const ModelParams& params, const EmbeddedSequence& embedded) {
  ForwardTrace tr;
  tr.attention = attention_forward(params, embedded);
  tr.positions = kAllPositions;
  const int dc = params.clause_dim();
  tr.lambda.assign(params.neurons(), 0.0);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < params.d(); ++j) {
      for (int r = 0; r < params.m(); ++r) {
        double s = params.config().bias;
        for (int c = 0; c < dc; ++c) s += params.w(i, j, r, c) * tr.attention.dense[static_cast<std::size_t>(c)];
        tr.lambda[params.neuron_index(i, j, r)] = s;
      }
    }
  }
  // Reference activations use the scalar definition, not the kernels.
  const auto& cfg = params.config();
  const int d = params.d();
  tr.act.resize(tr.lambda.size());
  tr.act_deriv.resize(tr.lambda.size());
  for (std::size_t u = 0; u < tr.lambda.size(); ++u) {
    tr.act[u] = srelu(tr.lambda[u], cfg.srelu);
    tr.act_deriv[u] = srelu_prime(tr.lambda[u], cfg.srelu);
  }
  tr.raw.assign(static_cast<std::size_t>(5 * d), 0.0);
  tr.logits.assign(static_cast<std::size_t>(5 * d), 0.0);
  tr.dist.assign(static_cast<std::size_t>(5 * d), 0.0);
  tr.log_norm.assign(5, 0.0);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> row(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int r = 0; r < params.m(); ++r) s += tr.act[params.neuron_index(i, j, r)];
      tr.raw[static_cast<std::size_t>(i * d + j)] = s;
      tr.logits[static_cast<std::size_t>(i * d + j)] = std::min(s, cfg.clip);
      row[static_cast<std::size_t>(j)] = tr.logits[static_cast<std::size_t>(i * d + j)];
    }
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    tr.log_norm[static_cast<std::size_t>(i)] = mx + std::log(sum);
    for (int j = 0; j < d; ++j) tr.dist[static_cast<std::size_t>(i * d + j)] = std::exp(row[static_cast<std::size_t>(j)] - mx) / sum;
  }
  return tr;
}

void TransformerModel::distributions(std::span<const Clause> context, std::vector<double>& out) const {
  thread_local ForwardTrace trace;
  forward_into(*params_, context, kAllPositions, trace);
  out.assign(trace.dist.begin(), trace.dist.end());
}

void OracleModel::distributions(std::span<const Clause> context, std::vector<double>& out) const {
  const int d = vocab_.size();
  const int b = vocab_.blank();
  const Clause next = oracle_next_answer(vocab_, context).value_or(Clause{{b, b, b, b, b}});
  out.assign(static_cast<std::size_t>(5 * d), 0.0);
  for (int i = 0; i < 5; ++i) out[static_cast<std::size_t>(i * d + next.tokens[static_cast<std::size_t>(i)])] = 1.0;
}

void ConstantModel::distributions(std::span<const Clause>, std::vector<double>& out) const {
  out.assign(static_cast<std::size_t>(5 * d_), 0.0);
  for (int i = 0; i < 5; ++i) out[static_cast<std::size_t>(i * d_ + clause_.tokens[static_cast<std::size_t>(i)])] = 1.0;
}

Clause greedy_clause(std::span<const double> dists, int d) {
  Clause c;
  for (int i = 0; i < 5; ++i) {
    const auto row = dists.subspan(static_cast<std::size_t>(i * d), static_cast<std::size_t>(d));
    // max_element returns the first maximum, i.e. the lowest index on ties.
    c.tokens[static_cast<std::size_t>(i)] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return c;
}

Clause sample_clause(std::span<const double> dists, int d, Rng& rng) {
  Clause c;
  for (int i = 0; i < 5; ++i) {
    const auto row = dists.subspan(static_cast<std::size_t>(i * d), static_cast<std::size_t>(d));
    const double u = rng.uniform01();
    double acc = 0.0;
    int pick = d - 1;
    for (int j = 0; j < d; ++j) {
      acc += row[static_cast<std::size_t>(j)];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    // Rounding can leave acc slightly below 1; fall back to the last token with mass.
    if (u >= acc) {
      for (int j = d - 1; j >= 0; --j) {
        if (row[static_cast<std::size_t>(j)] > 0.0) {
          pick = j;
          break;
        }
      }
    }
    c.tokens[static_cast<std::size_t>(i)] = pick;
  }
  return c;
}

Clause predict_clause(const NextClauseModel& model, std::span<const Clause> context, DecodeMode mode, Rng* rng) {
  if (context.empty()) throw std::invalid_argument("prediction needs a non-empty prefix");
  thread_local std::vector<double> dists;
  model.distributions(context, dists);
  if (mode == DecodeMode::Greedy) return greedy_clause(dists, model.vocabulary_size());
  if (rng == nullptr) throw std::invalid_argument("sampling needs a random stream");
  return sample_clause(dists, model.vocabulary_size(), *rng);
}

Clause predict_clause(const ModelParams& params, std::span<const Clause> context, DecodeMode mode, Rng* rng) {
  return predict_clause(TransformerModel(params), context, mode, rng);
}

Annotator greedy_annotator(const NextClauseModel& model) {
  return [&model](std::span<const Clause> context) { return predict_clause(model, context, DecodeMode::Greedy); };
}

}  // namespace lego
