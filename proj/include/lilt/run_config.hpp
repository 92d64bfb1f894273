#pragma once

#include <set>
#include <string>

#include "lilt/model.hpp"
#include "lilt/trainer.hpp"

namespace lilt {

// Flat run configuration: JSON config file keys and CLI flags share these
// names (flags in kebab-case). Flags override file values.
struct RunConfig {
  // model geometry
  int layers = 4;
  int heads = 4;
  int d_text = 128;
  int d_layout = 48;
  int ffn_text = 0;  // 0 -> 4 * d_text
  int ffn_layout = 0;
  int max_seq = 128;
  int kpl_grid = 7;
  int type_dim = 32;
  int d_rel = 64;
  double dropout = 0.1;

  // masking
  double mvlm_rate = 0.15;
  double kpl_rate = 0.15;
  double mask_frac = 0.80;
  double random_frac = 0.10;

  // optimizer
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double warmup_frac = 0.10;
  double slow_ratio = 1000.0;  // "inf" in JSON freezes the text stream
  double clip_norm = 1.0;

  // run
  std::uint64_t seed = 0;
  long steps = 100;
  int batch_size = 8;
  int threads = 0;
  long checkpoint_every = 0;
  int min_count = 1;

  // keys that were given explicitly (config file or flag)
  std::set<std::string> provided;
  bool provided_geometry() const;

  void load_json_file(const std::string& path);
  ModelConfig model_config(int vocab_size, Mode mode, bool pretrain_heads, bool ser,
                           bool re) const;
  void adopt_geometry(const ModelConfig& cfg);
  TrainHyper hyper() const;
};

inline const std::set<std::string> kGeometryKeys = {
    "layers",  "heads",   "d_text",   "d_layout", "ffn_text",
    "ffn_layout", "max_seq", "kpl_grid", "type_dim", "d_rel"};

}  // namespace lilt
