#include "lego/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "lego/simd/kernels.hpp"
#include "parallel.hpp"

namespace lego {

namespace {

void check_batch(std::span<const LegoSentence> batch, const LossSpec& spec) {
  if (batch.empty()) throw std::invalid_argument("loss needs a non-empty batch");
  if (spec.steps.empty()) throw std::invalid_argument("loss needs at least one answer step");
  for (int l : spec.steps) {
    if (l < 1) throw std::invalid_argument("answer steps start at 1");
    for (const auto& s : batch) {
      if (l > s.horizon()) {
        throw std::invalid_argument("step " + std::to_string(l) + " has no target in a sentence with " +
                                    std::to_string(s.horizon()) + " answers");
      }
    }
  }
}

/// Per-thread buffers of the backward pass.
struct Worker {
  ForwardTrace trace;
  std::vector<double> delta;  // dLoss/dLambda, indexed like lambda
  std::vector<double> g;      // dLoss/d(aggregated), dense over d_c
  std::vector<double> u;      // dLoss/d(mean attention weight), per key
  LossValue loss;
};

double example_loss(const ForwardTrace& tr, const Clause& target, const PositionMask& positions, int d, double scale,
                    LossValue& acc) {
  double total = 0.0;
  for (int i = 0; i < 5; ++i) {
    if (!positions[static_cast<std::size_t>(i)]) continue;
    const int t = target.tokens[static_cast<std::size_t>(i)];
    const double li = tr.log_norm[static_cast<std::size_t>(i)] - tr.logits[static_cast<std::size_t>(i * d + t)];
    acc.token_losses[static_cast<std::size_t>(i)] += scale * li;
    total += li;
  }
  acc.loss += scale * total;
  return total;
}

void accumulate_example(const ModelParams& params, std::span<const Clause> context, const Clause& target,
                        const LossSpec& spec, Trainable which, double scale, Worker& wk, GradientBundle& acc) {
  const auto& K = simd::kernels();
  const int d = params.d();
  const int m = params.m();
  const int dc = params.clause_dim();
  const std::size_t slice = static_cast<std::size_t>(d) * static_cast<std::size_t>(m);
  const double clip = params.config().clip;
  auto& tr = wk.trace;
  forward_into(params, context, spec.positions, tr);
  for (int t : target.tokens) {
    if (t < 0 || t >= d) throw std::invalid_argument("target token outside the model vocabulary");
  }
  example_loss(tr, target, spec.positions, d, scale, wk.loss);

  wk.delta.resize(params.neurons());
  for (int i = 0; i < 5; ++i) {
    if (!spec.positions[static_cast<std::size_t>(i)]) continue;
    const int t = target.tokens[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) {
      const std::size_t ij = static_cast<std::size_t>(i * d + j);
      double e = tr.dist[ij] - (j == t ? 1.0 : 0.0);
      if (tr.raw[ij] > clip) e = 0.0;
      e *= scale;
      const std::size_t base = static_cast<std::size_t>(i) * slice + static_cast<std::size_t>(j) * static_cast<std::size_t>(m);
      for (int r = 0; r < m; ++r) wk.delta[base + static_cast<std::size_t>(r)] = e * tr.act_deriv[base + static_cast<std::size_t>(r)];
    }
  }

  const auto& att = tr.attention;
  if (which.w) {
    for (int c : att.coords) {
      const double a = att.dense[static_cast<std::size_t>(c)];
      double* row = acc.dw.data() + static_cast<std::size_t>(c) * params.neurons();
      for (int i = 0; i < 5; ++i) {
        if (!spec.positions[static_cast<std::size_t>(i)]) continue;
        const std::size_t off = static_cast<std::size_t>(i) * slice;
        K.axpy(a, wk.delta.data() + off, row + off, slice);
      }
      acc.w_rows[static_cast<std::size_t>(c)] = 1;
    }
  }
  if (!which.q) return;

  wk.g.resize(static_cast<std::size_t>(dc));
  for (int c : att.coords) {
    const double* row = params.w_row(c).data();
    double s = 0.0;
    for (int i = 0; i < 5; ++i) {
      if (!spec.positions[static_cast<std::size_t>(i)]) continue;
      const std::size_t off = static_cast<std::size_t>(i) * slice;
      s += K.dot(row + off, wk.delta.data() + off, slice);
    }
    wk.g[static_cast<std::size_t>(c)] = s;
  }
  const std::size_t n = context.size();
  const int blank = d - 1;
  wk.u.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (int slot = 0; slot < 5; ++slot) {
      const int t = context[k].tokens[static_cast<std::size_t>(slot)];
      if (t != blank) s += wk.g[static_cast<std::size_t>(slot * d + t)];
    }
    wk.u[k] = s;
  }
  std::array<int, 5> qc{};
  int nq = 0;
  for (int slot = 0; slot < 5; ++slot) {
    const int t = context.back().tokens[static_cast<std::size_t>(slot)];
    if (t != blank) qc[static_cast<std::size_t>(nq++)] = slot * d + t;
  }
  const double inv_heads = 1.0 / params.heads();
  for (int h = 0; h < params.heads(); ++h) {
    const auto& a = att.weights[static_cast<std::size_t>(h)];
    double ubar = 0.0;
    for (std::size_t k = 0; k < n; ++k) ubar += a[k] * wk.u[k];
    auto& dq = acc.dq[static_cast<std::size_t>(h)];
    auto& rows = acc.q_rows[static_cast<std::size_t>(h)];
    for (int qi = 0; qi < nq; ++qi) {
      const int row = qc[static_cast<std::size_t>(qi)];
      const auto [cb, ce] = params.q_trainable_columns(row);
      if (cb >= ce) continue;
      rows[static_cast<std::size_t>(row)] = 1;
      double* dqrow = dq.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(dc);
      for (std::size_t k = 0; k < n; ++k) {
        const double ds = a[k] * (wk.u[k] - ubar) * inv_heads;
        for (int slot = 0; slot < 5; ++slot) {
          const int t = context[k].tokens[static_cast<std::size_t>(slot)];
          if (t == blank) continue;
          const int col = slot * d + t;
          if (col >= cb && col < ce) dqrow[col] += ds;
        }
      }
    }
  }
}

void add_loss(LossValue& dst, const LossValue& src) {
  dst.loss += src.loss;
  for (std::size_t i = 0; i < 5; ++i) dst.token_losses[i] += src.token_losses[i];
}

void add_bundle(const ModelParams& params, GradientBundle& dst, const GradientBundle& src) {
  const auto& K = simd::kernels();
  const std::size_t N = params.neurons();
  if (dst.trainable.w) {
    for (std::size_t c = 0; c < src.w_rows.size(); ++c) {
      if (src.w_rows[c] == 0) continue;
      K.axpy(1.0, src.dw.data() + c * N, dst.dw.data() + c * N, N);
      dst.w_rows[c] = 1;
    }
  }
  if (dst.trainable.q) {
    const auto dc = static_cast<std::size_t>(params.clause_dim());
    for (std::size_t h = 0; h < src.dq.size(); ++h) {
      for (std::size_t row = 0; row < dc; ++row) {
        if (src.q_rows[h][row] == 0) continue;
        K.axpy(1.0, src.dq[h].data() + row * dc, dst.dq[h].data() + row * dc, dc);
        dst.q_rows[h][row] = 1;
      }
    }
  }
  add_loss(dst.loss, src.loss);
}

struct GradScratch {
  std::vector<Worker> workers;
  std::vector<GradientBundle> partials;  // for workers 1..n-1
};

GradScratch& scratch() {
  thread_local GradScratch s;
  return s;
}

}  // namespace

LossValue next_clause_loss(const ModelParams& params, std::span<const LegoSentence> batch, const LossSpec& spec) {
  check_batch(batch, spec);
  const double scale = 1.0 / static_cast<double>(batch.size());
  LossValue out;
  out.sentences = batch.size();
  ForwardTrace tr;
  for (const auto& s : batch) {
    for (int l : spec.steps) {
      forward_into(params, s.prefix(l - 1), spec.positions, tr);
      const Clause& target = s.clauses[static_cast<std::size_t>(s.length + l)];
      for (int t : target.tokens) {
        if (t < 0 || t >= params.d()) throw std::invalid_argument("target token outside the model vocabulary");
      }
      example_loss(tr, target, spec.positions, params.d(), scale, out);
    }
  }
  return out;
}

void GradientBundle::reset(const ModelParams& params, Trainable which) {
  const std::size_t dc = static_cast<std::size_t>(params.clause_dim());
  const std::size_t N = params.neurons();
  if (which.w) {
    if (dw.size() != dc * N || w_rows.size() != dc) {
      dw.assign(dc * N, 0.0);
      w_rows.assign(dc, 0);
    } else {
      for (std::size_t c = 0; c < dc; ++c) {
        if (w_rows[c] == 0) continue;
        std::fill_n(dw.data() + c * N, N, 0.0);
        w_rows[c] = 0;
      }
    }
  } else {
    dw.clear();
    w_rows.clear();
  }
  const auto heads = static_cast<std::size_t>(params.heads());
  if (which.q) {
    if (dq.size() != heads || q_rows.size() != heads || dq[0].size() != dc * dc) {
      dq.assign(heads, std::vector<double>(dc * dc, 0.0));
      q_rows.assign(heads, std::vector<std::uint8_t>(dc, 0));
    } else {
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t row = 0; row < dc; ++row) {
          if (q_rows[h][row] == 0) continue;
          std::fill_n(dq[h].data() + row * dc, dc, 0.0);
          q_rows[h][row] = 0;
        }
      }
    }
  } else {
    dq.clear();
    q_rows.clear();
  }
  trainable = which;
  batch_size = 0;
  loss = LossValue{};
}

void grad_analytic_into(const ModelParams& params, std::span<const LegoSentence> batch, const LossSpec& spec,
                        Trainable which, int workers, GradientBundle& out) {
  check_batch(batch, spec);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(batch.size())));
  auto& sc = scratch();
  if (sc.workers.size() < static_cast<std::size_t>(workers)) sc.workers.resize(static_cast<std::size_t>(workers));
  if (sc.partials.size() < static_cast<std::size_t>(workers - 1)) sc.partials.resize(static_cast<std::size_t>(workers - 1));
  out.reset(params, which);
  for (int w = 1; w < workers; ++w) sc.partials[static_cast<std::size_t>(w - 1)].reset(params, which);
  const double scale = 1.0 / static_cast<double>(batch.size());

  detail::parallel_chunks(workers, batch.size(), [&](int w, std::size_t begin, std::size_t end) {
    Worker& wk = sc.workers[static_cast<std::size_t>(w)];
    wk.loss = LossValue{};
    GradientBundle& acc = w == 0 ? out : sc.partials[static_cast<std::size_t>(w - 1)];
    for (std::size_t b = begin; b < end; ++b) {
      const auto& s = batch[b];
      for (int l : spec.steps) {
        accumulate_example(params, s.prefix(l - 1), s.clauses[static_cast<std::size_t>(s.length + l)], spec, which,
                           scale, wk, acc);
      }
    }
    acc.loss = wk.loss;
  });
  auto slot = [&](int i) -> GradientBundle& { return i == 0 ? out : sc.partials[static_cast<std::size_t>(i - 1)]; };
  detail::tree_reduce(workers, [&](int dst, int src) { add_bundle(params, slot(dst), slot(src)); });
  out.batch_size = batch.size();
  out.loss.sentences = batch.size();
}

GradientBundle grad_analytic(const ModelParams& params, std::span<const LegoSentence> batch, const LossSpec& spec,
                             Trainable which, int workers) {
  GradientBundle out;
  grad_analytic_into(params, batch, spec, which, workers, out);
  return out;
}

GradientBundle grad_fd(const ModelParams& params, std::span<const LegoSentence> batch, const LossSpec& spec,
                       Trainable which, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  GradientBundle out;
  out.reset(params, which);
  out.loss = next_clause_loss(params, batch, spec);
  out.batch_size = batch.size();
  ModelParams p = params;
  auto central = [&](double& slot) {
    const double orig = slot;
    slot = orig + h;
    const double up = next_clause_loss(p, batch, spec).loss;
    slot = orig - h;
    const double down = next_clause_loss(p, batch, spec).loss;
    slot = orig;
    return (up - down) / (2.0 * h);
  };
  const std::size_t N = params.neurons();
  const auto dc = static_cast<std::size_t>(params.clause_dim());
  if (which.w) {
    auto w = p.w_data();
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
      out.dw[idx] = central(w[idx]);
      if (out.dw[idx] != 0.0) out.w_rows[idx / N] = 1;
    }
  }
  if (which.q) {
    for (int hd = 0; hd < params.heads(); ++hd) {
      auto q = p.q_data(hd);
      for (std::size_t row = 0; row < dc; ++row) {
        const auto [cb, ce] = params.q_trainable_columns(static_cast<int>(row));
        for (int col = cb; col < ce; ++col) {
          const double g = central(q[row * dc + static_cast<std::size_t>(col)]);
          out.dq[static_cast<std::size_t>(hd)][row * dc + static_cast<std::size_t>(col)] = g;
          if (g != 0.0) out.q_rows[static_cast<std::size_t>(hd)][row] = 1;
        }
      }
    }
  }
  return out;
}

const char* to_string(OptimizerKind kind) { return kind == OptimizerKind::PlainGD ? "gd" : "adam"; }

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "gd") return OptimizerKind::PlainGD;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + name + "' (expected gd or adam)");
}

Optimizer::Optimizer(const ModelParams& params, OptimizerConfig config) : config_(config) {
  if (!(config_.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config_.kind == OptimizerKind::Adam) {
    if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
      throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(config_.eps > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
  }
  (void)params;
}

void Optimizer::step(ModelParams& params, const GradientBundle& grad, Trainable which) {
  const auto& K = simd::kernels();
  const std::size_t N = params.neurons();
  const auto dc = static_cast<std::size_t>(params.clause_dim());
  ++t_;
  if (which.w && !grad.trainable.w) throw std::invalid_argument("gradient bundle has no W gradient");
  if (which.q && !grad.trainable.q) throw std::invalid_argument("gradient bundle has no Q gradient");

  if (config_.kind == OptimizerKind::PlainGD) {
    if (which.w) {
      for (std::size_t c = 0; c < dc; ++c) {
        if (grad.w_rows[c] == 0) continue;
        K.axpy(-config_.lr, grad.dw.data() + c * N, params.w_row(static_cast<int>(c)).data(), N);
      }
    }
    if (which.q) {
      for (int h = 0; h < params.heads(); ++h) {
        auto q = params.q_data(h);
        for (std::size_t row = 0; row < dc; ++row) {
          if (grad.q_rows[static_cast<std::size_t>(h)][row] == 0) continue;
          const auto [cb, ce] = params.q_trainable_columns(static_cast<int>(row));
          if (cb >= ce) continue;
          K.axpy(-config_.lr, grad.dq[static_cast<std::size_t>(h)].data() + row * dc + static_cast<std::size_t>(cb),
                 q.data() + row * dc + static_cast<std::size_t>(cb), static_cast<std::size_t>(ce - cb));
        }
      }
    }
    return;
  }

  simd::AdamStep s;
  s.lr = config_.lr;
  s.beta1 = config_.beta1;
  s.beta2 = config_.beta2;
  s.eps = config_.eps;
  s.correction1 = 1.0 / (1.0 - std::pow(config_.beta1, static_cast<double>(t_)));
  s.correction2 = 1.0 / (1.0 - std::pow(config_.beta2, static_cast<double>(t_)));
  // Rows whose gradient and moments are all zero would not move, so only rows
  // touched at least once are visited.
  if (which.w) {
    if (mw_.size() != dc * N) {
      mw_.assign(dc * N, 0.0);
      vw_.assign(dc * N, 0.0);
      w_live_.assign(dc, 0);
    }
    for (std::size_t c = 0; c < dc; ++c) {
      if (grad.w_rows[c] != 0) w_live_[c] = 1;
      if (w_live_[c] == 0) continue;
      K.adam(params.w_row(static_cast<int>(c)).data(), grad.dw.data() + c * N, mw_.data() + c * N, vw_.data() + c * N, N, s);
    }
  }
  if (which.q) {
    const auto heads = static_cast<std::size_t>(params.heads());
    if (mq_.size() != heads) {
      mq_.assign(heads, std::vector<double>(dc * dc, 0.0));
      vq_.assign(heads, std::vector<double>(dc * dc, 0.0));
      q_live_.assign(heads, std::vector<std::uint8_t>(dc, 0));
    }
    for (std::size_t h = 0; h < heads; ++h) {
      auto q = params.q_data(static_cast<int>(h));
      for (std::size_t row = 0; row < dc; ++row) {
        if (grad.q_rows[h][row] != 0) q_live_[h][row] = 1;
        if (q_live_[h][row] == 0) continue;
        const auto [cb, ce] = params.q_trainable_columns(static_cast<int>(row));
        if (cb >= ce) continue;
        const std::size_t off = row * dc + static_cast<std::size_t>(cb);
        K.adam(q.data() + off, grad.dq[h].data() + off, mq_[h].data() + off, vq_[h].data() + off,
               static_cast<std::size_t>(ce - cb), s);
      }
    }
  }
}

StageSchedule curriculum_schedule(long steps1, long steps2, const OptimizerConfig& opt, int batch_size) {
  StageSchedule s;
  StageSpec st1;
  st1.name = "stage1";
  st1.trainable = {true, false};
  st1.length = 1;
  st1.loss = {{1}, kAllPositions};
  st1.batch_size = batch_size;
  st1.max_steps = steps1;
  st1.optimizer = opt;
  StageSpec st2 = st1;
  st2.name = "stage2";
  st2.trainable = {false, true};
  st2.length = 2;
  st2.loss = {{1, 2}, kValuePosition};
  st2.max_steps = steps2;
  s.stages = {st1, st2};
  return s;
}

StageSchedule self_training_schedule(int K, long steps1, long steps2, long max_steps_k, double threshold,
                                     const OptimizerConfig& opt, int batch_size) {
  if (K < 1) throw std::invalid_argument("self-training needs K >= 1");
  StageSchedule s = curriculum_schedule(steps1, steps2, opt, batch_size);
  s.stages[0].name = "stage1.1";
  s.stages[1].name = "stage1.2";
  s.stages[1].loss.steps = {2};
  for (int k = 2; k <= K; ++k) {
    StageSpec st = s.stages[1];
    st.name = "stage" + std::to_string(k);
    st.length = 1 << k;
    st.loss = {{2}, kValuePosition};
    st.source = DataSource::Bootstrapped;
    st.max_steps = max_steps_k;
    st.threshold = threshold;
    s.stages.push_back(st);
  }
  return s;
}

StageSchedule joint_schedule(std::span<const int> lengths, long steps_per_stage, const OptimizerConfig& opt,
                             int batch_size) {
  if (lengths.empty()) throw std::invalid_argument("joint schedule needs at least one length");
  StageSchedule s;
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    StageSpec st;
    st.name = "joint-L" + std::to_string(lengths[k]);
    st.trainable = {true, true};
    st.length = lengths[k];
    st.loss.steps.clear();
    for (int l = 1; l <= lengths[k]; ++l) st.loss.steps.push_back(l);
    st.loss.positions = kAllPositions;
    st.source = k == 0 ? DataSource::GroundTruth : DataSource::Bootstrapped;
    st.batch_size = batch_size;
    st.max_steps = steps_per_stage;
    st.optimizer = opt;
    s.stages.push_back(st);
  }
  return s;
}

std::vector<LegoSentence> draw_batch(const Vocabulary& vocab, const StageSpec& stage, std::uint64_t stage_seed,
                                     long step, const NextClauseModel* annotator, int workers) {
  const int horizon = *std::max_element(stage.loss.steps.begin(), stage.loss.steps.end());
  if (horizon > stage.length) throw std::invalid_argument("loss step beyond the stage length");
  const auto count = static_cast<std::size_t>(stage.batch_size);
  std::vector<LegoSentence> batch(count);
  const std::uint64_t base = static_cast<std::uint64_t>(step) * count;
  if (stage.source == DataSource::GroundTruth) {
    for (std::size_t b = 0; b < count; ++b) {
      batch[b] = truncate(sample_sentence_at(vocab, stage.length, stage_seed, base + b), horizon);
    }
    return batch;
  }
  if (annotator == nullptr) throw std::invalid_argument("bootstrapped batch needs an annotator");
  const Annotator annotate = greedy_annotator(*annotator);
  detail::parallel_chunks(workers, count, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const std::uint64_t seed = derive_seed(stage_seed, base + b);
      Rng rng(seed);
      batch[b] = bootstrap_sentence(vocab, stage.length, horizon, annotate, rng);
      batch[b].seed = seed;
      batch[b].index = base + b;
    }
  });
  return batch;
}

TrainRun run_stages(const StageSchedule& schedule, const Vocabulary& vocab, ModelParams& params,
                    const TrainOptions& options) {
  if (params.d() != vocab.size()) throw std::invalid_argument("model and vocabulary sizes differ");
  TrainRun run;
  GradientBundle grad;
  long total = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < schedule.stages.size(); ++k) {
    const StageSpec& st = schedule.stages[k];
    if (st.length + 1 > vocab.variables()) throw std::invalid_argument("stage length needs more variables");
    if (st.batch_size < 1) throw std::invalid_argument("batch size must be positive");
    if (st.max_steps < 0) throw std::invalid_argument("step budget must be non-negative");
    const std::uint64_t stage_seed = derive_seed(options.seed, k + 1);
    StageResult res;
    res.name = st.name;
    res.length = st.length;

    std::optional<ModelParams> frozen;
    std::optional<TransformerModel> annotator;
    if (st.source == DataSource::Bootstrapped) {
      frozen.emplace(params);
      annotator.emplace(*frozen);
      res.annotator_hash_start = frozen->content_hash();
    }

    Optimizer opt(params, st.optimizer);
    double ema = 0.0;
    bool have_ema = false;
    bool stopped = false;
    long step = 0;
    while (step < st.max_steps) {
      ++step;
      const auto batch = draw_batch(vocab, st, stage_seed, step - 1, annotator ? &*annotator : nullptr, options.workers);
      grad_analytic_into(params, batch, st.loss, st.trainable, options.workers, grad);
      const double loss = grad.loss.loss;
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "loss became " << loss << " at stage '" << st.name << "' step " << step;
        throw TrainingDiverged(msg.str());
      }
      opt.step(params, grad, st.trainable);
      ema = have_ema ? st.ema_decay * ema + (1.0 - st.ema_decay) * loss : loss;
      have_ema = true;

      StepRecord rec;
      rec.stage = static_cast<int>(k + 1);
      rec.step = step;
      rec.loss = loss;
      rec.token_losses = grad.loss.token_losses;
      if (options.record_wallclock) {
        rec.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      }
      run.metrics.push_back(rec);
      if (options.on_step) options.on_step(rec);
      res.final_loss = loss;
      if (st.threshold && ema < *st.threshold) {
        stopped = true;
        break;
      }
    }
    total += step;
    res.steps = step;
    res.end_step = total;
    res.final_ema = ema;
    res.converged = !st.threshold || stopped;
    if (frozen) res.annotator_hash_end = frozen->content_hash();
    run.stages.push_back(res);
    if (options.on_stage_end) options.on_stage_end(res, params);
  }
  return run;
}

TrainRun run_curriculum(const StageSchedule& schedule, const Vocabulary& vocab, ModelParams& params,
                        const TrainOptions& options) {
  if (schedule.stages.size() != 2 || schedule.stages[0].trainable != Trainable{true, false} ||
      schedule.stages[1].trainable != Trainable{false, true}) {
    throw std::invalid_argument("a curriculum has a W stage followed by a Q stage");
  }
  return run_stages(schedule, vocab, params, options);
}

TrainRun run_self_training(const StageSchedule& schedule, const Vocabulary& vocab, ModelParams& params,
                           const TrainOptions& options) {
  if (schedule.stages.empty() || schedule.stages.front().source != DataSource::GroundTruth) {
    throw std::invalid_argument("self-training starts from a ground-truth stage");
  }
  return run_stages(schedule, vocab, params, options);
}

}  // namespace lego
