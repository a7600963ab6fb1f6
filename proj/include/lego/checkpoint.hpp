#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "lego/group_action.hpp"
#include "lego/model.hpp"

namespace lego {

class CorruptCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedCheckpointVersion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

/// Task description stored next to the parameters.
struct CheckpointInfo {
  int n_x = 0;
  ActionKind kind = ActionKind::Cyclic;
  int n_y = 0;
  int train_length = 0;  // 0 when unknown

  bool operator==(const CheckpointInfo&) const = default;
};

struct Checkpoint {
  ModelParams params;
  CheckpointInfo info;
};

// File layout: one line of JSON header
//   {"version":1,"d":..,"m":..,"n_x":..,"n_y":..,"action_kind":"cyclic",
//    "heads":..,"sparsity":"blocks43_44","srelu":{...},"sigma0":..,"bias":..,
//    "B":..,"train_length":..}
// terminated by '\n', then little-endian IEEE-754 binary64 values: W in
// row-major [5][d][m][5d] order, then each Q head row-major [5d][5d].

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const CheckpointInfo& info);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lego
