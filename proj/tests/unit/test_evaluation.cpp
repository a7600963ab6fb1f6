#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "lego/evaluation.hpp"

using namespace lego;

namespace {

ModelParams with_random_q(const Vocabulary& v, Sparsity sp, std::uint64_t seed, double scale) {
  auto cfg = ModelConfig::defaults(v.size(), 2, 2, sp);
  Rng rng(seed);
  auto p = ModelParams::initialize(cfg, rng);
  for (int h = 0; h < 2; ++h) {
    for (int a = 0; a < p.clause_dim(); ++a) {
      for (int b = 0; b < p.clause_dim(); ++b) {
        if (p.q_trainable(a, b)) p.q(h, a, b) = scale * rng.normal();
      }
    }
  }
  return p;
}

// Q that sends each answer query almost all of its mass to the two target keys.
ModelParams targeted_attention(const Vocabulary& v, double strength) {
  ModelParams p(ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44));
  const int d = v.size();
  for (int x = 0; x < v.variables(); ++x) {
    p.q(0, 3 * d + x, 2 * d + x) = strength;
    p.q(0, 3 * d + x, 3 * d + x) = strength;
  }
  return p;
}

}  // namespace

TEST_CASE("perfect predictor scores one") {
  Vocabulary v(40, ActionKind::Symmetry, 4);
  OracleModel oracle(v);
  for (std::uint64_t seed : {1ULL, 99ULL}) {
    CHECK(acc_teacher_forced(oracle, v, 10, 50, seed) == 1.0);
    CHECK(acc_teacher_forced(oracle, v, 10, 50, seed, DecodeMode::Greedy) == 1.0);
    const auto r = evaluate_length(oracle, v, 12, 50, seed);
    CHECK(r.rollout_final == 1.0);
    CHECK(r.rollout_value_only == 1.0);
    CHECK(r.teacher_forced == 1.0);
  }
}

TEST_CASE("uniform model almost never matches a clause") {
  Vocabulary v(30, ActionKind::Cyclic, 6);
  REQUIRE(v.size() == 43);
  ModelParams p(ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44));
  TransformerModel m(p);
  // Each clause matches with probability 43^-5, about 6.8e-9.
  CHECK(acc_teacher_forced(m, v, 1, 10000, 3) == 0.0);
}

TEST_CASE("constant predictor fails rollouts") {
  Vocabulary v(30, ActionKind::Cyclic, 6);
  ConstantModel c(v.size(), make_answer(v, 0, 0));
  for (int L : {2, 5, 9}) {
    const auto r = acc_rollout(c, v, L, 200, 4);
    CHECK(r.rollout_final == 0.0);
    CHECK(r.rollout_value_only <= 1.0);
  }
}

TEST_CASE("teacher-forced estimates agree across seeds") {
  Vocabulary v(12, ActionKind::Cyclic, 2);
  // Model that knows the variables and guesses the value: p(correct) = 1/2.
  class HalfModel final : public NextClauseModel {
   public:
    explicit HalfModel(Vocabulary v) : v_(std::move(v)), oracle_(v_) {}
    int vocabulary_size() const override { return v_.size(); }
    void distributions(std::span<const Clause> ctx, std::vector<double>& out) const override {
      oracle_.distributions(ctx, out);
      const int d = v_.size();
      for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(4 * d + j)] = 0.0;
      out[static_cast<std::size_t>(4 * d + v_.value_token(0))] = 0.5;
      out[static_cast<std::size_t>(4 * d + v_.value_token(1))] = 0.5;
    }

   private:
    Vocabulary v_;
    OracleModel oracle_;
  };
  HalfModel m(v);
  const int n = 2000;
  const int L = 3;
  const double a = acc_teacher_forced(m, v, L, n, 10);
  const double b = acc_teacher_forced(m, v, L, n, 11);
  const double sigma = std::sqrt(0.25 / (n * L));
  CHECK(std::abs(a - 0.5) < 3 * sigma);
  CHECK(std::abs(a - b) < 3 * std::sqrt(2.0) * sigma);
  CHECK(acc_teacher_forced(m, v, L, n, 10) == a);
  CHECK(acc_teacher_forced(m, v, L, n, 10, DecodeMode::Sample, 3) == a);
}

TEST_CASE("attention diagnostics at Q = 0") {
  Vocabulary v(20, ActionKind::Cyclic, 6);
  ModelParams p(ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44));
  const auto diag = attention_diagnostics(p, v, 2, 10, 5);
  // l = 2: context Z^{2,1} has 4 clauses.
  CHECK(diag.eps[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(diag.gap[1] == doctest::Approx(0.0));
  CHECK(diag.eps[0] == doctest::Approx(1.0 - 2.0 / 3.0).epsilon(1e-12));
  for (const auto& row : diag.heatmap) {
    CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("attention diagnostics: extreme and generic cases") {
  Vocabulary v(20, ActionKind::Cyclic, 6);
  SUBCASE("all mass on the predicate") {
    ModelParams p(ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44));
    const int d = v.size();
    for (int x = 0; x < v.variables(); ++x) p.q(0, 3 * d + x, 2 * d + x) = 200.0;
    const auto diag = attention_diagnostics(p, v, 4, 5, 6);
    for (int l = 0; l < 4; ++l) {
      CHECK(diag.eps[l] < 1e-12);
      CHECK(diag.gap[l] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("targets dominate with a keyed Q") {
    const auto p = targeted_attention(v, 3.0);
    const auto diag = attention_diagnostics(p, v, 5, 20, 7);
    CHECK(diag.targets_dominate());
    for (int l = 0; l < 5; ++l) CHECK(diag.eps[l] < 0.35);
  }
  SUBCASE("identities hold for random Q") {
    const auto p = with_random_q(v, Sparsity::Full, 8, 1.0);
    const auto diag = attention_diagnostics(p, v, 6, 30, 8);
    for (int l = 0; l < 6; ++l) {
      CHECK(diag.eps[l] >= 0.0);
      CHECK(diag.eps[l] <= 1.0);
      CHECK(diag.eps[l] + diag.target_pred[l] + diag.target_ans[l] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(diag.gap[l] <= 1.0 - diag.eps[l] + 1e-12);
      CHECK(std::accumulate(diag.heatmap[l].begin(), diag.heatmap[l].end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      // Keys after the query carry nothing.
      for (int k = 6 + l + 1; k <= 12; ++k) CHECK(diag.heatmap[l][k] == 0.0);
    }
  }
}

TEST_CASE("permutation ablation") {
  Vocabulary v(30, ActionKind::Cyclic, 6);
  SUBCASE("Q = 0 is order blind") {
    ModelParams p(ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44));
    const auto r = permutation_ablation(p, v, 6, 20, 9);
    CHECK(r.max_weight_change < 1e-15);
    CHECK(r.eps_mean == doctest::Approx(r.eps_mean_permuted).epsilon(1e-12));
  }
  SUBCASE("block-sparse attention is content keyed") {
    const auto p = with_random_q(v, Sparsity::Blocks43_44, 10, 1.5);
    const auto r = permutation_ablation(p, v, 8, 20, 10);
    CHECK(r.max_weight_change < 1e-12);
    CHECK(r.eps_mean == doctest::Approx(r.eps_mean_permuted).epsilon(1e-9));
  }
  SUBCASE("full Q sees positions through content only") {
    const auto p = with_random_q(v, Sparsity::Full, 11, 1.5);
    const auto r = permutation_ablation(p, v, 8, 20, 11);
    CHECK(r.max_weight_change < 1e-12);
  }
  SUBCASE("permute_predicates keeps answers and the predicate multiset") {
    Rng rng(12);
    const auto s = sample_sentence(v, 10, rng);
    const auto t = permute_predicates(s, rng);
    CHECK(std::equal(s.answers().begin(), s.answers().end(), t.answers().begin()));
    for (const auto& c : s.predicates()) CHECK(std::find(t.predicates().begin(), t.predicates().end(), c) != t.predicates().end());
  }
}

TEST_CASE("feature probe reads weights directly") {
  Vocabulary v(10, ActionKind::Cyclic, 6);
  const auto cfg = ModelConfig::defaults(v.size(), 3, 1, Sparsity::Blocks43_44);
  Rng rng(13);
  auto p = ModelParams::initialize(cfg, rng);
  const auto probe = feature_probe(p, v);
  CHECK(probe.table.size() == static_cast<std::size_t>(6 * 3 * 12));
  const double bound = 10.0 * cfg.sigma0 * std::sqrt(std::log(static_cast<double>(v.size())));
  for (double x : probe.table) CHECK(std::abs(x) < bound);

  const int d = v.size();
  p.w(4, v.value_token(2), 1, d + v.action_token(4)) = 3.0;
  p.w(4, v.value_token(5), 0, 4 * d + v.value_token(1)) = -2.5;
  const auto probe2 = feature_probe(p, v);
  CHECK(probe2.at(2, 1, 4) == 3.0);
  CHECK(probe2.at(5, 0, 6 + 1) == -2.5);
  const auto margins = probe2.class_margins();
  REQUIRE(margins.size() == 6);
  CHECK(margins[2] > 2.5);
}

TEST_CASE("csv exports") {
  Vocabulary v(10, ActionKind::Cyclic, 6);
  ModelParams p(ModelConfig::defaults(v.size(), 2, 1, Sparsity::Blocks43_44));
  const auto diag = attention_diagnostics(p, v, 3, 4, 14);
  std::ostringstream h, a, dg, pm, acc;
  write_heatmap_csv(h, diag);
  write_heatmap_axes_csv(a, diag);
  write_diagnostics_csv(dg, diag);
  write_permutation_csv(pm, {permutation_ablation(p, v, 3, 4, 14)});
  write_accuracy_csv(acc, "run", "final", {AccReport{3, 0.5, 0.25, 0.5, 4, 14}}, 5);
  const auto hs = h.str();
  CHECK(std::count(hs.begin(), hs.end(), '\n') == 3);
  CHECK(a.str().rfind("axis,index,position,clause\n", 0) == 0);
  CHECK(dg.str().find("L,l,eps,gap") == 0);
  const auto ps = pm.str();
  CHECK(ps.find(",baseline,") != std::string::npos);
  CHECK(ps.find(",permuted,") != std::string::npos);
  CHECK(acc.str() ==
        "run_id,stage,eval_L,teacher_forced,rollout_final,rollout_value_only,n_eval,train_L\nrun,final,3,0.5,0.25,0.5,4,5\n");
}
