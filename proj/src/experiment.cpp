#include "lego/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lego/checkpoint.hpp"
#include "lego/corpus_io.hpp"

namespace lego {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

const char* to_string(TrainingMode mode) {
  return mode == TrainingMode::TheoryStaged ? "theory_staged" : "experiment_joint";
}

TrainingMode training_mode_from_string(const std::string& name) {
  if (name == "theory_staged") return TrainingMode::TheoryStaged;
  if (name == "experiment_joint") return TrainingMode::ExperimentJoint;
  throw ConfigError("unknown training mode '" + name + "'");
}

const char* to_string(TheoryAlgorithm algorithm) {
  return algorithm == TheoryAlgorithm::Curriculum ? "curriculum" : "self_training";
}

TheoryAlgorithm theory_algorithm_from_string(const std::string& name) {
  if (name == "curriculum") return TheoryAlgorithm::Curriculum;
  if (name == "self_training") return TheoryAlgorithm::SelfTraining;
  throw ConfigError("unknown theory algorithm '" + name + "'");
}

namespace {

const char* variant_name(SReluVariant v) { return v == SReluVariant::Main ? "main" : "modified"; }

SReluVariant variant_from_string(const std::string& name) {
  if (name == "main") return SReluVariant::Main;
  if (name == "modified") return SReluVariant::Modified;
  throw ConfigError("unknown sReLU variant '" + name + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_length(const ExperimentConfig& cfg, int L, const char* what) {
  require(L >= 1, std::string(what) + " length must be at least 1");
  require(L + 1 <= cfg.n_x, std::string(what) + " length " + std::to_string(L) + " needs n_x >= " +
                                std::to_string(L + 1));
}

std::string hex(const unsigned char* bytes, unsigned n) {
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned i = 0; i < n; ++i) out << std::setw(2) << static_cast<int>(bytes[i]);
  return out.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::uint64_t eval_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, 0xE7A1); }

ModelParams load_matching(const ExperimentConfig& cfg, const fs::path& checkpoint, int* train_length) {
  auto ck = load_checkpoint(checkpoint);
  if (ck.info.n_x != cfg.n_x || ck.info.kind != cfg.action_kind || ck.info.n_y != cfg.n_y) {
    throw ConfigError("checkpoint " + checkpoint.string() + " was trained on a different task");
  }
  if (train_length) *train_length = ck.info.train_length;
  return std::move(ck.params);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(n_y >= 2, "n_y must be at least 2");
  if (action_kind == ActionKind::Symmetry) require(n_y <= 8, "symmetry actions need n_y <= 8");
  if (action_kind == ActionKind::Cyclic) require(n_y <= 4096, "cyclic actions need n_y <= 4096");
  require(n_x >= 2, "n_x must be at least 2");
  require(m >= 1, "m must be at least 1");
  require(heads >= 1, "heads must be at least 1");
  require(q >= 4 && q % 2 == 0, "q must be an even integer >= 4");
  require(!rho || *rho > 0.0, "rho must be positive");
  require(!sigma0 || *sigma0 >= 0.0, "sigma0 must be non-negative");
  require(clip_constant > 0.0, "clip_constant must be positive");
  require(optimizer.lr > 0.0, "learning rate must be positive");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(ema_decay >= 0.0 && ema_decay < 1.0, "ema_decay must lie in [0, 1)");
  require(!(threshold && threshold_exponent), "set either threshold or threshold_exponent, not both");
  require(!threshold || *threshold > 0.0, "threshold must be positive");
  require(!threshold_exponent || *threshold_exponent > 0.0, "threshold_exponent must be positive");

  if (mode == TrainingMode::ExperimentJoint) {
    require(!train_lengths.empty(), "train_lengths must not be empty");
    for (int L : train_lengths) check_length(*this, L, "training");
    require(steps_per_stage >= 1, "steps_per_stage must be at least 1");
    require(stage_steps.empty() || stage_steps.size() == train_lengths.size(),
            "stage_steps must be empty or match train_lengths");
    for (long s : stage_steps) require(s >= 1, "stage_steps entries must be at least 1");
  } else {
    require(steps_stage1 >= 1 && steps_stage2 >= 1, "stage budgets must be at least 1");
    check_length(*this, 2, "training");
    if (algorithm == TheoryAlgorithm::SelfTraining) {
      require(K >= 1 && K <= 20, "K must lie in [1, 20]");
      require(max_steps_k >= 1, "max_steps_k must be at least 1");
      check_length(*this, 1 << K, "training");
      require(threshold || threshold_exponent, "self-training needs a threshold or threshold_exponent");
    }
  }

  require(!eval_lengths.empty(), "eval_lengths must not be empty");
  for (int L : eval_lengths) check_length(*this, L, "evaluation");
  require(n_eval >= 1, "n_eval must be at least 1");
  require(diag_samples >= 1, "diag_samples must be at least 1");
  try {
    model_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Vocabulary ExperimentConfig::vocabulary() const { return Vocabulary(n_x, action_kind, n_y); }

ModelConfig ExperimentConfig::model_config() const {
  const int d = Vocabulary(n_x, action_kind, n_y).size();
  auto c = ModelConfig::defaults(d, m, heads, sparsity, clip_constant);
  const double log_d = std::log(static_cast<double>(d));
  c.srelu.q = q;
  c.srelu.variant = srelu_variant;
  if (rho) c.srelu.rho = *rho;
  if (srelu_slope) c.srelu.slope = *srelu_slope;
  if (srelu_cap) c.srelu.cap = *srelu_cap;
  c.srelu.lambda = (d - 1.0) / (d - 1.0 + std::exp(c.srelu.cap));
  if (sigma0) c.sigma0 = *sigma0;
  c.bias = bias ? *bias : c.sigma0 * log_d;
  return c;
}

double ExperimentConfig::stop_threshold() const {
  if (threshold) return *threshold;
  if (threshold_exponent) return std::pow(static_cast<double>(vocabulary().size()), -*threshold_exponent);
  return 0.0;
}

int ExperimentConfig::max_train_length() const {
  if (mode == TrainingMode::ExperimentJoint) return *std::max_element(train_lengths.begin(), train_lengths.end());
  return algorithm == TheoryAlgorithm::SelfTraining ? std::max(2, 1 << K) : 2;
}

StageSchedule ExperimentConfig::schedule() const {
  StageSchedule s;
  if (mode == TrainingMode::ExperimentJoint) {
    s = joint_schedule(train_lengths, steps_per_stage, optimizer, batch_size);
    for (std::size_t k = 0; k < stage_steps.size(); ++k) s.stages[k].max_steps = stage_steps[k];
  } else if (algorithm == TheoryAlgorithm::Curriculum) {
    s = curriculum_schedule(steps_stage1, steps_stage2, optimizer, batch_size);
  } else {
    s = self_training_schedule(K, steps_stage1, steps_stage2, max_steps_k, stop_threshold(), optimizer, batch_size);
  }
  for (auto& st : s.stages) st.ema_decay = ema_decay;
  return s;
}

std::string ExperimentConfig::run_id() const { return name + "-seed" + std::to_string(seed); }

std::vector<std::string> preset_names() {
  return {"c6-lengthgen", "s5-selfimprove", "c6-lengthgen-full", "theory-curriculum", "theory-selftrain"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  // Desk-scale training: polynomial-regime activation constants with a
  // larger step size and a short budget.
  const auto desk = [](ExperimentConfig& e) {
    e.rho = 1.0;
    e.sigma0 = 0.5;
    e.bias = 0.3;
    e.optimizer.lr = 3e-2;
    e.batch_size = 32;
    e.steps_per_stage = 2000;
    e.declared_choices = {"m = 8, heads = 2 (not reported)",
                          "rho = 1, sigma0 = 0.5, bias = 0.3 (polynomial regime instead of 1/log^2 d)",
                          "Adam lr = 3e-2, batch 32, 2000 steps per stage (instead of lr 1e-4 for 300 epochs)"};
  };
  if (name == "c6-lengthgen") {
    c.declared_choices.push_back("n_x = 200 (vocabulary size not reported)");
    c.action_kind = ActionKind::Cyclic;
    c.n_y = 6;
    c.train_lengths = {5};
    desk(c);
  } else if (name == "s5-selfimprove") {
    c.action_kind = ActionKind::Symmetry;
    c.n_y = 5;
    c.train_lengths = {5, 10, 20, 40};
    c.eval_lengths = {5, 10, 20, 40, 80};
    desk(c);
    c.stage_steps = {2000, 500, 500, 500};
    c.declared_choices.push_back("bootstrapped stages after the first: 500 steps each");
  } else if (name == "c6-lengthgen-full") {
    c.action_kind = ActionKind::Cyclic;
    c.n_y = 6;
    c.train_lengths = {5};
    c.optimizer.lr = 1e-4;
    c.batch_size = 256;
    c.steps_per_stage = 11719;
    c.declared_choices = {"n_x = 200 (vocabulary size not reported)", "m = 8, heads = 2 (not reported)",
                          "300 epochs of 10000 sentences at batch 256 = 11719 steps"};
  } else if (name == "theory-curriculum") {
    c.action_kind = ActionKind::Cyclic;
    c.n_y = 6;
    c.mode = TrainingMode::TheoryStaged;
    c.algorithm = TheoryAlgorithm::Curriculum;
    desk(c);
    c.n_x = 40;
    c.steps_stage1 = 1000;
    c.steps_stage2 = 1000;
    c.eval_lengths = {2, 4, 8, 16};
    c.declared_choices.push_back("n_x = 40, 1000 steps per stage");
  } else if (name == "theory-selftrain") {
    c.action_kind = ActionKind::Cyclic;
    c.n_y = 6;
    c.mode = TrainingMode::TheoryStaged;
    c.algorithm = TheoryAlgorithm::SelfTraining;
    desk(c);
    c.n_x = 40;
    c.steps_stage1 = 1000;
    c.steps_stage2 = 1000;
    c.max_steps_k = 1000;
    c.K = 3;
    c.eval_lengths = {2, 4, 8, 16, 32};
    c.declared_choices.push_back("n_x = 40, 1000 steps per stage, at most 1000 per self-training stage");
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const auto mc = cfg.model_config();
  ojson j;
  j["name"] = cfg.name;
  j["action_kind"] = to_string(cfg.action_kind);
  j["n_y"] = cfg.n_y;
  j["n_x"] = cfg.n_x;
  j["m"] = cfg.m;
  j["heads"] = cfg.heads;
  j["sparsity"] = to_string(cfg.sparsity);
  j["q"] = cfg.q;
  j["rho"] = mc.srelu.rho;
  j["srelu_variant"] = variant_name(cfg.srelu_variant);
  j["srelu_slope"] = mc.srelu.slope;
  j["srelu_cap"] = mc.srelu.cap;
  j["sigma0"] = mc.sigma0;
  j["bias"] = mc.bias;
  j["clip_constant"] = cfg.clip_constant;
  j["mode"] = to_string(cfg.mode);
  j["algorithm"] = to_string(cfg.algorithm);
  j["optimizer"] = {{"kind", to_string(cfg.optimizer.kind)},
                    {"lr", cfg.optimizer.lr},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"eps", cfg.optimizer.eps}};
  j["batch_size"] = cfg.batch_size;
  j["train_lengths"] = cfg.train_lengths;
  j["steps_per_stage"] = cfg.steps_per_stage;
  j["stage_steps"] = cfg.stage_steps;
  j["steps_stage1"] = cfg.steps_stage1;
  j["steps_stage2"] = cfg.steps_stage2;
  j["max_steps_k"] = cfg.max_steps_k;
  j["K"] = cfg.K;
  j["threshold"] = cfg.threshold ? ojson(*cfg.threshold) : ojson(nullptr);
  j["threshold_exponent"] = cfg.threshold_exponent ? ojson(*cfg.threshold_exponent) : ojson(nullptr);
  j["ema_decay"] = cfg.ema_decay;
  j["eval_lengths"] = cfg.eval_lengths;
  j["n_eval"] = cfg.n_eval;
  j["diag_samples"] = cfg.diag_samples;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["record_wallclock"] = cfg.record_wallclock;
  j["declared_choices"] = cfg.declared_choices;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), "config must be a JSON object");
  ExperimentConfig c;
  static const std::set<std::string> known{
      "name",          "action_kind",  "n_y",          "n_x",          "m",
      "heads",         "sparsity",     "q",            "rho",          "srelu_variant",
      "srelu_slope",   "srelu_cap",    "sigma0",       "bias",         "clip_constant",
      "mode",          "algorithm",    "optimizer",    "batch_size",   "train_lengths",
      "steps_per_stage", "stage_steps", "steps_stage1", "steps_stage2", "max_steps_k",
      "K",             "threshold",    "threshold_exponent", "ema_decay", "eval_lengths",
      "n_eval",        "diag_samples", "seed",         "out_dir",      "record_wallclock",
      "declared_choices"};
  for (const auto& [key, _] : j.items()) require(known.count(key) > 0, "unknown config field '" + key + "'");

  try {
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    const auto get_opt = [&](const char* key, std::optional<double>& field) {
      if (!j.contains(key)) return;
      if (j.at(key).is_null()) {
        field.reset();
      } else {
        field = j.at(key).get<double>();
      }
    };
    get("name", c.name);
    if (j.contains("action_kind")) {
      try {
        c.action_kind = action_kind_from_string(j.at("action_kind").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    get("n_y", c.n_y);
    get("n_x", c.n_x);
    get("m", c.m);
    get("heads", c.heads);
    if (j.contains("sparsity")) {
      try {
        c.sparsity = sparsity_from_string(j.at("sparsity").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    get("q", c.q);
    get_opt("rho", c.rho);
    if (j.contains("srelu_variant")) c.srelu_variant = variant_from_string(j.at("srelu_variant").get<std::string>());
    get_opt("srelu_slope", c.srelu_slope);
    get_opt("srelu_cap", c.srelu_cap);
    get_opt("sigma0", c.sigma0);
    get_opt("bias", c.bias);
    get("clip_constant", c.clip_constant);
    if (j.contains("mode")) c.mode = training_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("algorithm")) c.algorithm = theory_algorithm_from_string(j.at("algorithm").get<std::string>());
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      require(o.is_object(), "optimizer must be an object");
      for (const auto& [key, _] : o.items()) {
        require(key == "kind" || key == "lr" || key == "beta1" || key == "beta2" || key == "eps",
                "unknown optimizer field '" + key + "'");
      }
      if (o.contains("kind")) {
        try {
          c.optimizer.kind = optimizer_kind_from_string(o.at("kind").get<std::string>());
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
      if (o.contains("lr")) o.at("lr").get_to(c.optimizer.lr);
      if (o.contains("beta1")) o.at("beta1").get_to(c.optimizer.beta1);
      if (o.contains("beta2")) o.at("beta2").get_to(c.optimizer.beta2);
      if (o.contains("eps")) o.at("eps").get_to(c.optimizer.eps);
    }
    get("batch_size", c.batch_size);
    get("train_lengths", c.train_lengths);
    get("steps_per_stage", c.steps_per_stage);
    get("stage_steps", c.stage_steps);
    get("steps_stage1", c.steps_stage1);
    get("steps_stage2", c.steps_stage2);
    get("max_steps_k", c.max_steps_k);
    get("K", c.K);
    if (j.contains("threshold_exponent") && !j.contains("threshold")) c.threshold.reset();
    get_opt("threshold", c.threshold);
    get_opt("threshold_exponent", c.threshold_exponent);
    get("ema_decay", c.ema_decay);
    get("eval_lengths", c.eval_lengths);
    get("n_eval", c.n_eval);
    get("diag_samples", c.diag_samples);
    get("seed", c.seed);
    get("out_dir", c.out_dir);
    get("record_wallclock", c.record_wallclock);
    get("declared_choices", c.declared_choices);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string git_blob_sha1(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("cannot allocate a digest context");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  return hex(digest, len);
}

std::vector<ManifestEntry> build_manifest(const fs::path& dir) {
  std::vector<ManifestEntry> entries;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    const auto bytes = read_file(e.path());
    entries.push_back({rel, bytes.size(), git_blob_sha1(bytes)});
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return entries;
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg) {
  ojson j;
  j["run_id"] = cfg.run_id();
  j["declared_choices"] = cfg.declared_choices;
  ojson files = ojson::array();
  for (const auto& e : build_manifest(dir)) files.push_back({{"path", e.path}, {"size", e.size}, {"sha1", e.sha1}});
  j["files"] = files;
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
  ojson j;
  try {
    j = ojson::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  std::vector<ManifestEntry> entries;
  for (const auto& f : j.at("files")) {
    entries.push_back({f.at("path").get<std::string>(), f.at("size").get<std::uintmax_t>(),
                       f.at("sha1").get<std::string>()});
  }
  return entries;
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
  std::vector<std::string> bad;
  for (const auto& e : read_manifest(dir)) {
    const auto p = dir / e.path;
    if (!fs::is_regular_file(p) || git_blob_sha1(read_file(p)) != e.sha1) bad.push_back(e.path);
  }
  return bad;
}

void cmd_gen(const ExperimentConfig& cfg, int length, int count, const fs::path& out) {
  cfg.validate();
  check_length(cfg, length, "corpus");
  require(count >= 0, "count must be non-negative");
  const auto vocab = cfg.vocabulary();
  std::vector<LegoSentence> sentences;
  sentences.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    sentences.push_back(sample_sentence_at(vocab, length, cfg.seed, static_cast<std::uint64_t>(i)));
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_corpus(out, vocab, sentences);
}

TrainSummary cmd_train(const ExperimentConfig& cfg, const fs::path& run_dir, int workers,
                       const std::function<void(const StepRecord&)>& on_step) {
  cfg.validate();
  const auto vocab = cfg.vocabulary();
  const auto schedule = cfg.schedule();
  fs::create_directories(run_dir / "checkpoints");
  write_file(run_dir / "config.json", config_to_json(cfg));

  Rng init_rng(derive_seed(cfg.seed, 0));
  auto params = ModelParams::initialize(cfg.model_config(), init_rng);

  TrainSummary summary;
  summary.run_dir = run_dir;
  TrainOptions opts;
  opts.seed = cfg.seed;
  opts.workers = workers;
  opts.record_wallclock = cfg.record_wallclock;
  opts.on_step = on_step;
  int stage_index = 0;
  opts.on_stage_end = [&](const StageResult& r, const ModelParams& p) {
    ++stage_index;
    std::ostringstream name;
    name << "stage" << std::setw(2) << std::setfill('0') << stage_index << "_" << r.name << ".ckpt";
    const auto path = run_dir / "checkpoints" / name.str();
    save_checkpoint(path, p, CheckpointInfo{cfg.n_x, cfg.action_kind, cfg.n_y, r.length});
    summary.checkpoints.push_back(path);
  };

  if (cfg.mode == TrainingMode::ExperimentJoint) {
    summary.run = run_stages(schedule, vocab, params, opts);
  } else if (cfg.algorithm == TheoryAlgorithm::Curriculum) {
    summary.run = run_curriculum(schedule, vocab, params, opts);
  } else {
    summary.run = run_self_training(schedule, vocab, params, opts);
  }

  {
    auto out = open_out(run_dir / "metrics.csv");
    out << std::setprecision(17);
    out << "run_id,stage,step,loss,token_loss_1,token_loss_2,token_loss_3,token_loss_4,token_loss_5,wallclock_ms\n";
    for (const auto& m : summary.run.metrics) {
      out << cfg.run_id() << ',' << m.stage << ',' << m.step << ',' << m.loss;
      for (double t : m.token_losses) out << ',' << t;
      out << ',' << m.wallclock_ms << '\n';
    }
  }
  {
    auto out = open_out(run_dir / "stages.csv");
    out << std::setprecision(17);
    out << "run_id,stage,name,length,steps,end_step,converged,final_loss,final_ema,annotator_hash_start,"
           "annotator_hash_end\n";
    int k = 0;
    for (const auto& s : summary.run.stages) {
      out << cfg.run_id() << ',' << ++k << ',' << s.name << ',' << s.length << ',' << s.steps << ',' << s.end_step
          << ',' << (s.converged ? 1 : 0) << ',' << s.final_loss << ',' << s.final_ema << ',';
      if (s.annotator_hash_start) out << std::hex << *s.annotator_hash_start << std::dec;
      out << ',';
      if (s.annotator_hash_end) out << std::hex << *s.annotator_hash_end << std::dec;
      out << '\n';
    }
  }
  write_manifest(run_dir, cfg);
  return summary;
}

std::vector<AccReport> evaluate_checkpoint(const ExperimentConfig& cfg, const ModelParams& params,
                                           std::vector<int> lengths, int workers) {
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  for (int L : lengths) check_length(cfg, L, "evaluation");
  const auto vocab = cfg.vocabulary();
  TransformerModel model(params);
  std::vector<AccReport> out;
  for (int L : lengths) {
    out.push_back(evaluate_length(model, vocab, L, cfg.n_eval, eval_seed(cfg), DecodeMode::Sample, workers));
  }
  return out;
}

void cmd_eval(const ExperimentConfig& cfg, const fs::path& checkpoint, std::vector<int> lengths,
              const fs::path& out_csv, int workers) {
  cfg.validate();
  int train_length = 0;
  const auto params = load_matching(cfg, checkpoint, &train_length);
  const auto reports = evaluate_checkpoint(cfg, params, std::move(lengths), workers);
  auto out = open_out(out_csv);
  write_accuracy_csv(out, cfg.run_id(), checkpoint.stem().string(), reports, train_length);
}

void cmd_attn(const ExperimentConfig& cfg, const fs::path& checkpoint, int length, const fs::path& out_dir) {
  cfg.validate();
  check_length(cfg, length, "attention");
  const auto params = load_matching(cfg, checkpoint, nullptr);
  const auto vocab = cfg.vocabulary();
  const auto seed = eval_seed(cfg);
  const auto diag = attention_diagnostics(params, vocab, length, cfg.diag_samples, seed);
  const auto perm = permutation_ablation(params, vocab, length, cfg.diag_samples, seed);
  const auto probe = feature_probe(params, vocab);
  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "heatmap.csv");
    write_heatmap_csv(out, diag);
  }
  {
    auto out = open_out(out_dir / "heatmap_axes.csv");
    write_heatmap_axes_csv(out, diag);
  }
  {
    auto out = open_out(out_dir / "diagnostics.csv");
    write_diagnostics_csv(out, diag);
  }
  {
    auto out = open_out(out_dir / "permutation.csv");
    write_permutation_csv(out, {perm});
  }
  {
    auto out = open_out(out_dir / "feature_probe.csv");
    write_feature_probe_csv(out, probe);
  }
}

}  // namespace lego
