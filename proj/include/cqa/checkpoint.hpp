#pragma once

// Versioned binary checkpoints and softmax-layer transfer surgery.
//
// Layout (little endian):
//   magic "CQACKPT\0" | u32 version | u64 n + n bytes of key=value header lines
//   | u64 vocab count, each u32 len + bytes | u64 tensor count, each
//   u32 len + name, u64 rows, u64 cols, rows*cols f64 | u64 FNV-1a of all
//   preceding bytes.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cqa/data.hpp"
#include "cqa/model.hpp"

namespace cqa {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelConfig model;
  /// Training configuration echo, informational.
  std::vector<std::pair<std::string, std::string>> train_echo;
  Vocabulary vocab;
  std::vector<Param> tensors;  // gradients unused

  const Matrix* find(const std::string& name) const;
};

Checkpoint make_checkpoint(const Model& model, const Vocabulary& vocab,
                           std::vector<std::pair<std::string, std::string>> train_echo = {});
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Model& model, const Vocabulary& vocab, const std::string& path,
                     std::vector<std::pair<std::string, std::string>> train_echo = {});
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds the model a checkpoint describes, with every tensor restored.
Model model_from_checkpoint(const Checkpoint& ckpt);

/// True for tensors of the softmax output layer(s).
bool is_softmax_tensor(const std::string& name);

/// Copies every non-softmax tensor from `pretrained` into a model of
/// architecture `target`; softmax layers are freshly drawn from `rng`.
/// Throws listing every non-softmax tensor whose shape differs or is missing.
Model transfer_init(const Checkpoint& pretrained, const ModelConfig& target, Rng& rng);

}  // namespace cqa
