#pragma once

#include <map>
#include <optional>
#include <string>

#include "lilt/model.hpp"
#include "lilt/optimizer.hpp"

namespace lilt {

// Binary checkpoint (see docs/FORMATS.md): magic "LILTCKPT", u32 version,
// u64 header length, JSON header with config and tensor manifest, then raw
// little-endian IEEE-754 doubles in column-major order.

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

// Human-readable list of geometry fields that differ; empty when compatible.
std::string config_diff(const ModelConfig& a, const ModelConfig& b);

struct CheckpointData {
  ModelConfig config;
  long step = 0;
  long opt_step = 0;
  bool has_optimizer = false;
  std::string rng_state;
  std::string vocab_hash;
  std::map<std::string, Mat> tensors;  // parameters, plus opt.m.* / opt.v.*
};

void save_checkpoint(const std::string& path, const Model& model, const AdamW* opt, long step,
                     const std::string& rng_state, const std::string& vocab_hash);

CheckpointData read_checkpoint(const std::string& path);

// strict: every model parameter must be present with matching shape.
// Otherwise loads the intersection (used to warm-start fine-tuning) and
// returns how many tensors were restored.
int restore_params(Model& model, const CheckpointData& ckpt, bool strict);

void restore_optimizer(AdamW& opt, const Model& model, const CheckpointData& ckpt);

}  // namespace lilt
