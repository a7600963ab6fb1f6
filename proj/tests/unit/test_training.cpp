#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "lego/training.hpp"

using namespace lego;

namespace {


// Random model with nonzero Q and weights spread over every sReLU branch.
ModelParams spread_params(const Vocabulary& v, Sparsity sp, SReluVariant variant, std::uint64_t seed) {
  auto cfg = ModelConfig::defaults(v.size(), 4, 2, sp);
  cfg.srelu.variant = variant;
  cfg.srelu.slope = 0.05;
  cfg.srelu.cap = 1.5;
  cfg.sigma0 = 0.4;
  Rng rng(seed);
  auto p = ModelParams::initialize(cfg, rng);
  for (int h = 0; h < cfg.heads; ++h) {
    for (int a = 0; a < p.clause_dim(); ++a) {
      for (int b = 0; b < p.clause_dim(); ++b) {
        if (p.q_trainable(a, b)) p.q(h, a, b) = 0.8 * rng.normal();
      }
    }
  }
  return p;
}

// Whether some example puts neuron u within `gap` of an sReLU breakpoint.
std::vector<std::uint8_t> near_breakpoint(const ModelParams& p, std::span<const LegoSentence> batch, const LossSpec& spec,
                                          double gap) {
  double bp[8];
  const int nb = srelu_breakpoints(p.config().srelu, bp);
  std::vector<std::uint8_t> flag(p.neurons(), 0);
  for (const auto& s : batch) {
    for (int l : spec.steps) {
      const auto tr = forward(p, s.prefix(l - 1));
      for (std::size_t u = 0; u < tr.lambda.size(); ++u) {
        for (int k = 0; k < nb; ++k) {
          if (std::abs(tr.lambda[u] - bp[k]) < gap) flag[u] = 1;
        }
      }
    }
  }
  return flag;
}

// Relative error; entries more than four orders of magnitude below the largest
// gradient component are measured against that floor, where the O(h^2)
// truncation of the central difference dominates.
double rel_err(double a, double b, double floor) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}); }

double max_abs(const GradientBundle& g) {
  double m = 0.0;
  for (double x : g.dw) m = std::max(m, std::abs(x));
  for (const auto& q : g.dq) {
    for (double x : q) m = std::max(m, std::abs(x));
  }
  return m;
}

// Redraws the weights of every neuron whose pre-activation lies within `gap`
// of an sReLU breakpoint on some example, until none does.
void move_off_breakpoints(ModelParams& p, std::span<const LegoSentence> batch, const LossSpec& spec, double gap,
                          Rng& rng) {
  const std::size_t N = p.neurons();
  for (int round = 0; round < 100; ++round) {
    const auto near = near_breakpoint(p, batch, spec, gap);
    if (std::none_of(near.begin(), near.end(), [](auto f) { return f != 0; })) return;
    for (std::size_t u = 0; u < N; ++u) {
      if (!near[u]) continue;
      for (int c = 0; c < p.clause_dim(); ++c) p.w_data()[static_cast<std::size_t>(c) * N + u] = p.config().sigma0 * rng.normal();
    }
  }
  FAIL("could not move pre-activations off the breakpoints");
}

// Max relative error between analytic and central-difference gradients over
// every trainable entry.
double max_fd_error(const ModelParams& p, std::span<const LegoSentence> batch, const LossSpec& spec, Trainable which,
                    int* checked) {
  const auto ga = grad_analytic(p, batch, spec, which);
  const auto gf = grad_fd(p, batch, spec, which, 1e-4);
  const double floor = 1e-4 * max_abs(gf);
  double worst = 0.0;
  *checked = 0;
  if (which.w) {
    for (std::size_t idx = 0; idx < gf.dw.size(); ++idx) {
      worst = std::max(worst, rel_err(ga.dw[idx], gf.dw[idx], floor));
      ++*checked;
    }
  }
  if (which.q) {
    for (int h = 0; h < p.heads(); ++h) {
      for (std::size_t idx = 0; idx < gf.dq[h].size(); ++idx) {
        worst = std::max(worst, rel_err(ga.dq[h][idx], gf.dq[h][idx], floor));
        ++*checked;
      }
    }
  }
  return worst;
}

std::vector<LegoSentence> ground_truth_batch(const Vocabulary& v, int L, int n, std::uint64_t seed) {
  std::vector<LegoSentence> b;
  for (int i = 0; i < n; ++i) b.push_back(sample_sentence_at(v, L, seed, static_cast<std::uint64_t>(i)));
  return b;
}

std::vector<LegoSentence> bootstrapped_batch(const Vocabulary& v, const ModelParams& annot, int L, int n,
                                             std::uint64_t seed) {
  TransformerModel model(annot);
  const auto a = greedy_annotator(model);
  std::vector<LegoSentence> b;
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    b.push_back(bootstrap_sentence(v, L, L, a, rng));
  }
  return b;
}

}  // namespace

TEST_CASE("analytic gradients match finite differences") {
  // d = 16, n_y = 3: 9 variables for C_3 and 6 for S_3.
  const Vocabulary vocabs[] = {Vocabulary(9, ActionKind::Cyclic, 3), Vocabulary(6, ActionKind::Symmetry, 3)};
  for (const auto& v : vocabs) {
    REQUIRE(v.size() == 16);
    for (auto sp : {Sparsity::Full, Sparsity::Blocks43_44}) {
      for (auto variant : {SReluVariant::Main, SReluVariant::Modified}) {
        for (bool boot : {false, true}) {
          for (const Trainable which : {Trainable{true, false}, Trainable{false, true}, Trainable{true, true}}) {
            auto p = spread_params(v, sp, variant, 31);
            LossSpec spec{{1, 2}, kAllPositions};
            const auto batch = boot ? bootstrapped_batch(v, spread_params(v, sp, variant, 77), 2, 3, 5)
                                    : ground_truth_batch(v, 2, 3, 5);
            Rng rng(32);
            move_off_breakpoints(p, batch, spec, 1e-3, rng);
            int checked = 0;
            const double err = max_fd_error(p, batch, spec, which, &checked);
            CAPTURE(std::string(to_string(sp)));
            CAPTURE(variant == SReluVariant::Main);
            CAPTURE(boot);
            CAPTURE(which.w);
            CAPTURE(which.q);
            CHECK(checked > 0);
            CHECK(err < 1e-4);
          }
        }
      }
    }
  }
}

TEST_CASE("value-position gradients match finite differences") {
  Vocabulary v(9, ActionKind::Cyclic, 3);
  auto p = spread_params(v, Sparsity::Blocks43_44, SReluVariant::Main, 41);
  const auto batch = ground_truth_batch(v, 2, 4, 6);
  const LossSpec spec{{1, 2}, kValuePosition};
  Rng rng(33);
  move_off_breakpoints(p, batch, spec, 1e-3, rng);
  int checked = 0;
  CHECK(max_fd_error(p, batch, spec, Trainable{true, true}, &checked) < 1e-4);
  CHECK(checked > 0);
}

TEST_CASE("masked Q entries get no gradient") {
  Vocabulary v(9, ActionKind::Cyclic, 3);
  const auto p = spread_params(v, Sparsity::Blocks43_44, SReluVariant::Main, 42);
  const auto g = grad_analytic(p, ground_truth_batch(v, 2, 4, 7), LossSpec{{1, 2}, kAllPositions}, Trainable{true, true});
  const int dc = p.clause_dim();
  for (int h = 0; h < p.heads(); ++h) {
    for (int a = 0; a < dc; ++a) {
      for (int b = 0; b < dc; ++b) {
        if (!p.q_trainable(a, b)) CHECK(g.dq[h][static_cast<std::size_t>(a * dc + b)] == 0.0);
      }
    }
  }
}

TEST_CASE("clipped logits pass no gradient") {
  Vocabulary v(9, ActionKind::Cyclic, 3);
  auto p = spread_params(v, Sparsity::Blocks43_44, SReluVariant::Main, 43);
  // Every neuron of class 5 at position 2 saturates far above B.
  for (int r = 0; r < p.m(); ++r) {
    for (int c = 0; c < p.clause_dim(); ++c) p.w(1, 5, r, c) = 1e3;
  }
  const auto batch = ground_truth_batch(v, 2, 3, 8);
  const auto g = grad_analytic(p, batch, LossSpec{{1}, kAllPositions}, Trainable{true, false});
  for (int r = 0; r < p.m(); ++r) {
    for (int c = 0; c < p.clause_dim(); ++c) CHECK(g.dw_at(p, 1, 5, r, c) == 0.0);
  }
  const auto gf = grad_fd(p, batch, LossSpec{{1}, kAllPositions}, Trainable{true, false}, 1e-4);
  for (int r = 0; r < p.m(); ++r) CHECK(gf.dw_at(p, 1, 5, r, 0) == 0.0);
}

TEST_CASE("finite differences of a constant model vanish") {
  Vocabulary v(9, ActionKind::Cyclic, 3);
  // With W = 0 every pre-activation equals the bias, so Q cannot change the output.
  ModelParams p(ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44));
  const auto batch = ground_truth_batch(v, 2, 3, 9);
  const auto g = grad_fd(p, batch, LossSpec{{1, 2}, kAllPositions}, Trainable{false, true}, 1e-4);
  for (double x : g.dq[0]) CHECK(std::abs(x) < 1e-10);
}

TEST_CASE("loss values") {
  Vocabulary v(9, ActionKind::Cyclic, 3);
  const int d = v.size();
  SUBCASE("uniform logits give log d per token") {
    ModelParams p(ModelConfig::defaults(d, 2, 1, Sparsity::Blocks43_44));
    const auto lv = next_clause_loss(p, ground_truth_batch(v, 2, 5, 10), LossSpec{{1, 2}, kAllPositions});
    CHECK(lv.loss == doctest::Approx(2 * 5 * std::log(static_cast<double>(d))).epsilon(1e-12));
    for (double t : lv.token_losses) CHECK(t == doctest::Approx(2 * std::log(static_cast<double>(d))).epsilon(1e-12));
  }
  SUBCASE("single example equals the sum of -log p") {
    const auto p = spread_params(v, Sparsity::Full, SReluVariant::Main, 44);
    const auto batch = ground_truth_batch(v, 2, 1, 11);
    const auto& s = batch[0];
    const auto tr = forward(p, s.prefix(0));
    const auto& target = s.clauses[static_cast<std::size_t>(s.length + 1)];
    double expect = 0.0;
    for (int i = 0; i < 5; ++i) {
      // Softmax written out from the clipped logits.
      double z = 0.0;
      for (int j = 0; j < d; ++j) z += std::exp(tr.logits[i * d + j]);
      expect -= std::log(std::exp(tr.logits[i * d + target.tokens[i]]) / z);
    }
    CHECK(next_clause_loss(p, batch, LossSpec{{1}, kAllPositions}).loss == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("duplicating the batch leaves the loss unchanged") {
    const auto p = spread_params(v, Sparsity::Full, SReluVariant::Main, 45);
    auto batch = ground_truth_batch(v, 2, 4, 12);
    const double once = next_clause_loss(p, batch, LossSpec{{1, 2}, kAllPositions}).loss;
    const auto copy = batch;
    batch.insert(batch.end(), copy.begin(), copy.end());
    CHECK(next_clause_loss(p, batch, LossSpec{{1, 2}, kAllPositions}).loss == doctest::Approx(once).epsilon(1e-13));
  }
  SUBCASE("errors") {
    ModelParams p(ModelConfig::defaults(d, 2, 1, Sparsity::Blocks43_44));
    CHECK_THROWS_AS(next_clause_loss(p, std::span<const LegoSentence>(), LossSpec{}), std::invalid_argument);
    const auto batch = ground_truth_batch(v, 2, 2, 13);
    CHECK_THROWS_AS(next_clause_loss(p, batch, LossSpec{{3}, kAllPositions}), std::invalid_argument);
    CHECK_THROWS_AS(next_clause_loss(p, batch, LossSpec{{0}, kAllPositions}), std::invalid_argument);
  }
}

TEST_CASE("multi-worker gradients agree with one worker") {
  Vocabulary v(9, ActionKind::Cyclic, 3);
  const auto p = spread_params(v, Sparsity::Blocks43_44, SReluVariant::Main, 46);
  const auto batch = ground_truth_batch(v, 2, 13, 14);
  const LossSpec spec{{1, 2}, kAllPositions};
  const auto one = grad_analytic(p, batch, spec, Trainable{true, true}, 1);
  const auto four = grad_analytic(p, batch, spec, Trainable{true, true}, 4);
  const auto again = grad_analytic(p, batch, spec, Trainable{true, true}, 4);
  CHECK(four.dw == again.dw);
  CHECK(four.dq == again.dq);
  for (std::size_t i = 0; i < one.dw.size(); ++i) CHECK(std::abs(one.dw[i] - four.dw[i]) < 1e-12);
  CHECK(one.loss.loss == doctest::Approx(four.loss.loss).epsilon(1e-13));
}

TEST_CASE("optimizer steps") {
  Vocabulary v(9, ActionKind::Cyclic, 3);
  auto p = spread_params(v, Sparsity::Blocks43_44, SReluVariant::Main, 47);
  const Trainable both{true, true};
  SUBCASE("zero gradient leaves parameters unchanged") {
    for (auto kind : {OptimizerKind::PlainGD, OptimizerKind::Adam}) {
      const auto before = p;
      GradientBundle g;
      g.reset(p, both);
      Optimizer opt(p, OptimizerConfig{kind, 0.1});
      for (int t = 0; t < 3; ++t) opt.step(p, g, both);
      CHECK(p.bitwise_equal(before));
    }
  }
  SUBCASE("plain gradient descent on one scalar") {
    p.w(0, 0, 0, 0) = 1.0;
    GradientBundle g;
    g.reset(p, Trainable{true, false});
    g.dw[p.neuron_index(0, 0, 0)] = 2.0;
    g.w_rows[0] = 1;
    Optimizer opt(p, OptimizerConfig{OptimizerKind::PlainGD, 0.1});
    opt.step(p, g, Trainable{true, false});
    CHECK(p.w(0, 0, 0, 0) == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("first Adam step moves by the learning rate") {
    const double before = p.w(2, 3, 1, 7);
    GradientBundle g;
    g.reset(p, Trainable{true, false});
    g.dw[7 * p.neurons() + p.neuron_index(2, 3, 1)] = -0.37;
    g.w_rows[7] = 1;
    Optimizer opt(p, OptimizerConfig{OptimizerKind::Adam, 0.01});
    opt.step(p, g, Trainable{true, false});
    CHECK(p.w(2, 3, 1, 7) - before == doctest::Approx(0.01).epsilon(1e-6));
  }
  SUBCASE("frozen parameters stay bit identical") {
    const auto before = p;
    const auto batch = ground_truth_batch(v, 2, 4, 15);
    const LossSpec spec{{1, 2}, kAllPositions};
    Optimizer opt(p, OptimizerConfig{OptimizerKind::Adam, 1e-2});
    for (int t = 0; t < 100; ++t) {
      const auto g = grad_analytic(p, batch, spec, Trainable{true, false});
      opt.step(p, g, Trainable{true, false});
    }
    for (int h = 0; h < p.heads(); ++h) {
      const auto a = p.q_data(h);
      const auto b = before.q_data(h);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    CHECK_FALSE(p.bitwise_equal(before));
  }
  SUBCASE("masked Q entries are never written") {
    GradientBundle g;
    g.reset(p, Trainable{false, true});
    std::fill(g.dq[0].begin(), g.dq[0].end(), 1.0);
    std::fill(g.q_rows[0].begin(), g.q_rows[0].end(), 1);
    const auto before = p;
    Optimizer opt(p, OptimizerConfig{OptimizerKind::PlainGD, 0.1});
    opt.step(p, g, Trainable{false, true});
    for (int a = 0; a < p.clause_dim(); ++a) {
      for (int b = 0; b < p.clause_dim(); ++b) {
        if (!p.q_trainable(a, b)) CHECK(p.q(0, a, b) == before.q(0, a, b));
        else CHECK(p.q(0, a, b) == doctest::Approx(before.q(0, a, b) - 0.1));
      }
    }
  }
  SUBCASE("bad configuration") {
    CHECK_THROWS_AS(Optimizer(p, OptimizerConfig{OptimizerKind::Adam, -1.0}), std::invalid_argument);
    CHECK(optimizer_kind_from_string("adam") == OptimizerKind::Adam);
    CHECK(optimizer_kind_from_string("gd") == OptimizerKind::PlainGD);
    CHECK_THROWS_AS(optimizer_kind_from_string("sgd-momentum"), std::invalid_argument);
  }
}

TEST_CASE("curriculum freeze contracts") {
  Vocabulary v(12, ActionKind::Cyclic, 3);
  auto cfg = ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44);
  Rng rng(48);
  auto p = ModelParams::initialize(cfg, rng);
  const auto sched = curriculum_schedule(30, 30, OptimizerConfig{OptimizerKind::Adam, 1e-2}, 8);
  std::vector<ModelParams> ends;
  TrainOptions o;
  o.seed = 5;
  o.on_stage_end = [&](const StageResult&, const ModelParams& mp) { ends.push_back(mp); };
  const auto run = run_curriculum(sched, v, p, o);
  REQUIRE(ends.size() == 2);
  const auto q1 = ends[0].q_data(0);
  CHECK(std::all_of(q1.begin(), q1.end(), [](double x) { return x == 0.0 && !std::signbit(x); }));
  const auto w1 = ends[0].w_data();
  const auto w2 = ends[1].w_data();
  CHECK(std::equal(w1.begin(), w1.end(), w2.begin()));
  CHECK(p.bitwise_equal(ends[1]));

  REQUIRE(run.metrics.size() == 60);
  for (std::size_t i = 0; i < run.metrics.size(); ++i) {
    CHECK(run.metrics[i].stage == (i < 30 ? 1 : 2));
    CHECK(run.metrics[i].step == static_cast<long>(i % 30) + 1);
  }
  CHECK(run.stages[1].end_step == 60);

  auto bad = sched;
  std::swap(bad.stages[0], bad.stages[1]);
  CHECK_THROWS_AS(run_curriculum(bad, v, p, o), std::invalid_argument);
}

TEST_CASE("self-training schedule and annotator stability") {
  const OptimizerConfig opt{OptimizerKind::Adam, 1e-2};
  SUBCASE("K = 1 is the two-stage curriculum with a step-2 second stage") {
    const auto s = self_training_schedule(1, 10, 20, 100, 0.01, opt, 4);
    REQUIRE(s.stages.size() == 2);
    CHECK(s.stages[0].trainable == Trainable{true, false});
    CHECK(s.stages[0].length == 1);
    CHECK(s.stages[1].trainable == Trainable{false, true});
    CHECK(s.stages[1].length == 2);
    CHECK(s.stages[1].loss.steps == std::vector<int>{2});
    CHECK(s.stages[1].loss.positions == kValuePosition);
  }
  SUBCASE("K = 3 run keeps each annotator hash-stable") {
    Vocabulary v(12, ActionKind::Cyclic, 3);
    auto cfg = ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44);
    Rng rng(49);
    auto p = ModelParams::initialize(cfg, rng);
    const auto s = self_training_schedule(3, 20, 20, 15, 1e-9, opt, 4);
    REQUIRE(s.stages.size() == 4);
    CHECK(s.stages[2].length == 4);
    CHECK(s.stages[3].length == 8);
    std::vector<std::uint64_t> end_hashes;
    TrainOptions o;
    o.seed = 6;
    o.on_stage_end = [&](const StageResult&, const ModelParams& mp) { end_hashes.push_back(mp.content_hash()); };
    const auto run = run_self_training(s, v, p, o);
    REQUIRE(run.stages.size() == 4);
    for (std::size_t k = 2; k < 4; ++k) {
      REQUIRE(run.stages[k].annotator_hash_start.has_value());
      CHECK(run.stages[k].annotator_hash_start == run.stages[k].annotator_hash_end);
      CHECK(*run.stages[k].annotator_hash_start == end_hashes[k - 1]);
      CHECK_FALSE(run.stages[k].converged);
      CHECK(run.stages[k].steps == 15);
    }
    CHECK(run.stages[3].end_step == 20 + 20 + 15 + 15);
  }
  SUBCASE("threshold stops a stage early") {
    Vocabulary v(12, ActionKind::Cyclic, 3);
    auto cfg = ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44);
    Rng rng(50);
    auto p = ModelParams::initialize(cfg, rng);
    const auto s = self_training_schedule(2, 5, 5, 50, 1e9, opt, 4);
    TrainOptions o;
    const auto run = run_self_training(s, v, p, o);
    CHECK(run.stages[2].steps == 1);
    CHECK(run.stages[2].converged);
  }
}

TEST_CASE("perfect annotator reproduces oracle labels") {
  Vocabulary v(30, ActionKind::Symmetry, 4);
  OracleModel oracle(v);
  StageSpec st;
  st.length = 8;
  st.loss = {{2}, kValuePosition};
  st.source = DataSource::Bootstrapped;
  st.batch_size = 1000;
  const auto batch = draw_batch(v, st, 77, 0, &oracle, 1);
  for (const auto& s : batch) {
    CHECK(s.well_formed);
    CHECK_FALSE(validate_sentence(v, s).has_value());
  }
  // Same predicates and labels as the ground-truth stream with matching seeds.
  StageSpec gt = st;
  gt.source = DataSource::GroundTruth;
  ModelParams p(ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44));
  CHECK(next_clause_loss(p, batch, st.loss).loss ==
        doctest::Approx(next_clause_loss(p, draw_batch(v, gt, 77, 0, nullptr, 1), gt.loss).loss));
}

TEST_CASE("training is deterministic") {
  Vocabulary v(12, ActionKind::Cyclic, 3);
  auto cfg = ModelConfig::defaults(v.size(), 2, 2, Sparsity::Blocks43_44);
  const int lengths[] = {3, 4};
  const auto sched = joint_schedule(lengths, 10, OptimizerConfig{OptimizerKind::Adam, 1e-2}, 6);
  auto run_once = [&](int workers) {
    Rng rng(51);
    auto p = ModelParams::initialize(cfg, rng);
    TrainOptions o;
    o.seed = 9;
    o.workers = workers;
    auto run = run_stages(sched, v, p, o);
    return std::pair{run, p};
  };
  const auto [a, pa] = run_once(1);
  const auto [b, pb] = run_once(1);
  CHECK(pa.bitwise_equal(pb));
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].loss == b.metrics[i].loss);
    CHECK(a.metrics[i].token_losses == b.metrics[i].token_losses);
  }
  const auto [c, pc] = run_once(3);
  const auto [e, pe] = run_once(3);
  CHECK(pc.bitwise_equal(pe));
}

TEST_CASE("stage-1 loss halves within a short budget") {
  Vocabulary v(20, ActionKind::Cyclic, 6);
  auto cfg = ModelConfig::defaults(v.size(), 4, 1, Sparsity::Blocks43_44);
  Rng rng(52);
  auto p = ModelParams::initialize(cfg, rng);
  auto sched = curriculum_schedule(400, 0, OptimizerConfig{OptimizerKind::Adam, 1e-2}, 16);
  sched.stages.pop_back();
  TrainOptions o;
  o.seed = 10;
  const auto run = run_stages(sched, v, p, o);
  auto window = [&](std::size_t end) {
    double s = 0.0;
    for (std::size_t i = end - 50; i < end; ++i) s += run.metrics[i].loss;
    return s / 50.0;
  };
  const double initial = run.metrics.front().loss;
  CHECK(window(run.metrics.size()) <= 0.5 * initial);
}

TEST_CASE("non-finite loss aborts training") {
  Vocabulary v(12, ActionKind::Cyclic, 3);
  auto cfg = ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44);
  ModelParams p(cfg);
  for (int c = 0; c < p.clause_dim(); ++c) p.w(0, 0, 0, c) = std::nan("");
  const auto sched = curriculum_schedule(5, 5, OptimizerConfig{}, 2);
  TrainOptions o;
  CHECK_THROWS_AS(run_curriculum(sched, v, p, o), TrainingDiverged);
}
