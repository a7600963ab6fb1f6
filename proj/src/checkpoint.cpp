#include "lego/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include "json.hpp"

namespace lego {

using nlohmann::json;

namespace {

void put_le(std::vector<char>& buf, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) {
    buf.push_back(static_cast<char>(bits & 0xFFU));
    bits >>= 8;
  }
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(p[b]);
  return std::bit_cast<double>(bits);
}

const char* variant_name(SReluVariant v) { return v == SReluVariant::Main ? "main" : "modified"; }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const CheckpointInfo& info) {
  const auto& cfg = params.config();
  json header;
  header["version"] = kCheckpointVersion;
  header["d"] = cfg.d;
  header["m"] = cfg.m;
  header["n_x"] = info.n_x;
  header["n_y"] = info.n_y;
  header["action_kind"] = to_string(info.kind);
  header["heads"] = cfg.heads;
  header["sparsity"] = to_string(cfg.sparsity);
  header["srelu"] = {{"q", cfg.srelu.q},         {"rho", cfg.srelu.rho}, {"variant", variant_name(cfg.srelu.variant)},
                     {"slope", cfg.srelu.slope}, {"cap", cfg.srelu.cap}, {"lambda", cfg.srelu.lambda}};
  header["sigma0"] = cfg.sigma0;
  header["bias"] = cfg.bias;
  header["B"] = cfg.clip;
  header["train_length"] = info.train_length;

  std::vector<char> payload;
  const std::size_t total = params.w_data().size() + static_cast<std::size_t>(cfg.heads) * params.q_data(0).size();
  payload.reserve(total * 8);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < cfg.d; ++j) {
      for (int r = 0; r < cfg.m; ++r) {
        for (int c = 0; c < params.clause_dim(); ++c) put_le(payload, params.w(i, j, r, c));
      }
    }
  }
  for (int h = 0; h < cfg.heads; ++h) {
    for (double v : params.q_data(h)) put_le(payload, v);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::string line = header.dump() + "\n";
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw CorruptCheckpoint("checkpoint has no header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  try {
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw UnsupportedCheckpointVersion("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                         std::to_string(kCheckpointVersion) + ")");
    }
    ModelConfig cfg;
    cfg.d = header.at("d").get<int>();
    cfg.m = header.at("m").get<int>();
    cfg.heads = header.at("heads").get<int>();
    cfg.sparsity = sparsity_from_string(header.at("sparsity").get<std::string>());
    const auto& s = header.at("srelu");
    cfg.srelu.q = s.at("q").get<int>();
    cfg.srelu.rho = s.at("rho").get<double>();
    cfg.srelu.variant = s.at("variant").get<std::string>() == "modified" ? SReluVariant::Modified : SReluVariant::Main;
    cfg.srelu.slope = s.at("slope").get<double>();
    cfg.srelu.cap = s.at("cap").get<double>();
    cfg.srelu.lambda = s.at("lambda").get<double>();
    cfg.sigma0 = header.at("sigma0").get<double>();
    cfg.bias = header.at("bias").get<double>();
    cfg.clip = header.at("B").get<double>();
    cfg.validate();

    CheckpointInfo info;
    info.n_x = header.at("n_x").get<int>();
    info.n_y = header.at("n_y").get<int>();
    info.kind = action_kind_from_string(header.at("action_kind").get<std::string>());
    info.train_length = header.value("train_length", 0);

    const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto dc = static_cast<std::size_t>(cfg.clause_dim());
    const std::size_t expected = (dc * cfg.neurons() + static_cast<std::size_t>(cfg.heads) * dc * dc) * 8;
    if (payload.size() != expected) {
      throw CorruptCheckpoint("checkpoint payload has " + std::to_string(payload.size()) + " bytes, header implies " +
                              std::to_string(expected));
    }
    Checkpoint ck{ModelParams(cfg), info};
    const char* p = payload.data();
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < cfg.d; ++j) {
        for (int r = 0; r < cfg.m; ++r) {
          for (int c = 0; c < cfg.clause_dim(); ++c, p += 8) ck.params.w(i, j, r, c) = get_le(p);
        }
      }
    }
    for (int h = 0; h < cfg.heads; ++h) {
      for (double& v : ck.params.q_data(h)) {
        v = get_le(p);
        p += 8;
      }
    }
    return ck;
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("checkpoint header is incomplete: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CorruptCheckpoint(std::string("checkpoint header is inconsistent: ") + e.what());
  }
}

}  // namespace lego
