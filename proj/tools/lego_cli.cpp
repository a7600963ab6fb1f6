// Command-line driver: gen, train, eval, attn, validate-config, show-manifest.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "lego/checkpoint.hpp"
#include "lego/experiment.hpp"

namespace fs = std::filesystem;
using namespace lego;

namespace {

int env_threads() {
  const char* t = std::getenv("THREADS");
  if (!t || !*t) return 1;
  char* end = nullptr;
  const long n = std::strtol(t, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) throw ConfigError(std::string("THREADS must be a positive integer, got '") + t + "'");
  return static_cast<int>(n);
}

struct ConfigSource {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    auto* c = cmd->add_option("-c,--config", config_path, "experiment config (JSON)");
    auto* p = cmd->add_option("-p,--preset", preset_name, "shipped preset name");
    c->excludes(p);
    cmd->add_option("--seed", seed, "override the config seed");
  }

  ExperimentConfig load() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else if (!preset_name.empty()) {
      cfg = preset(preset_name);
    } else {
      throw ConfigError("pass --config or --preset");
    }
    if (seed) cfg.seed = *seed;
    if (const char* out = std::getenv("OUT_DIR"); out && *out) cfg.out_dir = out;
    cfg.validate();
    return cfg;
  }
};

fs::path run_dir_of(const ExperimentConfig& cfg) { return fs::path(cfg.out_dir) / cfg.run_id(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LEGO state-tracking transformer experiments"};
  app.require_subcommand(1);

  ConfigSource gen_src, train_src, eval_src, attn_src, val_src;

  auto* gen = app.add_subcommand("gen", "write an oracle-labeled JSONL corpus");
  gen_src.attach(gen);
  int gen_length = 5;
  int gen_count = 1000;
  std::string gen_out;
  gen->add_option("-L,--length", gen_length, "sentence length")->required();
  gen->add_option("-n,--count", gen_count, "number of sentences");
  gen->add_option("-o,--out", gen_out, "output file");

  auto* train = app.add_subcommand("train", "run the configured training pipeline");
  train_src.attach(train);
  std::string train_out;
  long log_every = 100;
  train->add_option("-o,--out", train_out, "run directory");
  train->add_option("--log-every", log_every, "progress line every N steps on stderr (0 = quiet)");

  auto* eval = app.add_subcommand("eval", "accuracy per length for a checkpoint");
  eval_src.attach(eval);
  std::string eval_ckpt, eval_out;
  std::vector<int> eval_lengths;
  eval->add_option("-k,--checkpoint", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("-L,--lengths", eval_lengths, "evaluation lengths (default: config eval_lengths)");
  eval->add_option("-o,--out", eval_out, "output CSV");

  auto* attn = app.add_subcommand("attn", "attention heatmap, diagnostics, permutation and probe CSVs");
  attn_src.attach(attn);
  std::string attn_ckpt, attn_out;
  int attn_length = 0;
  attn->add_option("-k,--checkpoint", attn_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  attn->add_option("-L,--length", attn_length, "sentence length (default: checkpoint training length)");
  attn->add_option("-o,--out", attn_out, "output directory");

  auto* val = app.add_subcommand("validate-config", "check a config and print it with every field resolved");
  val_src.attach(val);

  auto* show = app.add_subcommand("show-manifest", "list and verify a run directory manifest");
  std::string show_dir;
  show->add_option("run_dir", show_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    const int workers = env_threads();
    if (gen->parsed()) {
      const auto cfg = gen_src.load();
      const fs::path out = gen_out.empty()
                               ? run_dir_of(cfg) / ("corpus_L" + std::to_string(gen_length) + ".jsonl")
                               : fs::path(gen_out);
      cmd_gen(cfg, gen_length, gen_count, out);
      std::cout << out.string() << '\n';
    } else if (train->parsed()) {
      const auto cfg = train_src.load();
      const fs::path dir = train_out.empty() ? run_dir_of(cfg) : fs::path(train_out);
      std::function<void(const StepRecord&)> progress;
      if (log_every > 0) {
        progress = [&](const StepRecord& r) {
          if (r.step % log_every == 0) {
            std::cerr << "stage " << r.stage << " step " << r.step << " loss " << std::setprecision(6) << r.loss
                      << '\n';
          }
        };
      }
      const auto summary = cmd_train(cfg, dir, workers, progress);
      for (std::size_t k = 0; k < summary.run.stages.size(); ++k) {
        const auto& s = summary.run.stages[k];
        std::cout << s.name << " L=" << s.length << " steps=" << s.steps << " loss=" << std::setprecision(6)
                  << s.final_loss << (s.converged ? "" : " (not converged)") << " -> "
                  << summary.checkpoints[k].string() << '\n';
      }
    } else if (eval->parsed()) {
      const auto cfg = eval_src.load();
      const fs::path ckpt(eval_ckpt);
      const fs::path out = eval_out.empty() ? run_dir_of(cfg) / ("eval_" + ckpt.stem().string() + ".csv")
                                            : fs::path(eval_out);
      cmd_eval(cfg, ckpt, eval_lengths.empty() ? cfg.eval_lengths : eval_lengths, out, workers);
      std::cout << out.string() << '\n';
    } else if (attn->parsed()) {
      const auto cfg = attn_src.load();
      const fs::path ckpt(attn_ckpt);
      int L = attn_length;
      if (L == 0) L = load_checkpoint(ckpt).info.train_length;
      if (L == 0) throw ConfigError("checkpoint has no training length; pass --length");
      const fs::path out = attn_out.empty()
                               ? run_dir_of(cfg) / ("attn_" + ckpt.stem().string() + "_L" + std::to_string(L))
                               : fs::path(attn_out);
      cmd_attn(cfg, ckpt, L, out);
      std::cout << out.string() << '\n';
    } else if (val->parsed()) {
      std::cout << config_to_json(val_src.load());
    } else if (show->parsed()) {
      const auto entries = read_manifest(show_dir);
      const auto bad = verify_manifest(show_dir);
      for (const auto& e : entries) {
        const bool ok = std::find(bad.begin(), bad.end(), e.path) == bad.end();
        std::cout << e.sha1 << "  " << std::setw(10) << e.size << "  " << e.path << (ok ? "" : "  MODIFIED") << '\n';
      }
      if (!bad.empty()) {
        std::cerr << bad.size() << " file(s) differ from the manifest\n";
        return 1;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
