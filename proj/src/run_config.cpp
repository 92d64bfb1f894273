#include "lilt/run_config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "lilt/errors.hpp"

using nlohmann::json;

namespace lilt {

namespace {

double parse_slow_ratio(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") {
      return std::numeric_limits<double>::infinity();
    }
    throw ConfigError("slow_ratio: expected a number or \"inf\", got \"" + s + "\"");
  }
  return v.get<double>();
}

}  // namespace

bool RunConfig::provided_geometry() const {
  for (const auto& k : kGeometryKeys) {
    if (provided.count(k)) return true;
  }
  return false;
}

void RunConfig::load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");

  auto get_field = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      field = j.at(key).template get<std::decay_t<decltype(field)>>();
      provided.insert(key);
    }
  };
  get_field("layers", layers);
  get_field("heads", heads);
  get_field("d_text", d_text);
  get_field("d_layout", d_layout);
  get_field("ffn_text", ffn_text);
  get_field("ffn_layout", ffn_layout);
  get_field("max_seq", max_seq);
  get_field("kpl_grid", kpl_grid);
  get_field("type_dim", type_dim);
  get_field("d_rel", d_rel);
  get_field("dropout", dropout);
  get_field("mvlm_rate", mvlm_rate);
  get_field("kpl_rate", kpl_rate);
  get_field("mask_frac", mask_frac);
  get_field("random_frac", random_frac);
  get_field("lr", lr);
  get_field("beta1", beta1);
  get_field("beta2", beta2);
  get_field("eps", eps);
  get_field("weight_decay", weight_decay);
  get_field("warmup_frac", warmup_frac);
  get_field("clip_norm", clip_norm);
  get_field("seed", seed);
  get_field("steps", steps);
  get_field("batch_size", batch_size);
  get_field("threads", threads);
  get_field("checkpoint_every", checkpoint_every);
  get_field("min_count", min_count);
  if (j.contains("slow_ratio")) {
    slow_ratio = parse_slow_ratio(j.at("slow_ratio"));
    provided.insert("slow_ratio");
  }

  static const std::set<std::string> known = {
      "layers",     "heads",        "d_text",     "d_layout",    "ffn_text",
      "ffn_layout", "max_seq",      "kpl_grid",   "type_dim",    "d_rel",
      "dropout",    "mvlm_rate",    "kpl_rate",   "mask_frac",   "random_frac",
      "lr",         "beta1",        "beta2",      "eps",         "weight_decay",
      "warmup_frac","slow_ratio",   "clip_norm",  "seed",        "steps",
      "batch_size", "threads",      "checkpoint_every",          "min_count"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(path + ": unknown config key \"" + it.key() + "\"");
  }
}

ModelConfig RunConfig::model_config(int vocab_size, Mode mode, bool pretrain_heads, bool ser,
                                    bool re) const {
  ModelConfig c;
  c.layers = layers;
  c.heads = heads;
  c.d_text = d_text;
  c.d_layout = d_layout;
  c.ffn_text = ffn_text > 0 ? ffn_text : 4 * d_text;
  c.ffn_layout = ffn_layout > 0 ? ffn_layout : 4 * d_layout;
  c.max_seq = max_seq;
  c.vocab_size = vocab_size;
  c.kpl_grid = kpl_grid;
  c.type_dim = type_dim;
  c.d_rel = d_rel;
  c.dropout = dropout;
  c.mode = mode;
  c.with_pretrain_heads = pretrain_heads;
  c.with_ser_head = ser;
  c.with_re_head = re;
  c.validate();
  return c;
}

void RunConfig::adopt_geometry(const ModelConfig& cfg) {
  layers = cfg.layers;
  heads = cfg.heads;
  d_text = cfg.d_text;
  d_layout = cfg.d_layout;
  ffn_text = cfg.ffn_text;
  ffn_layout = cfg.ffn_layout;
  max_seq = cfg.max_seq;
  kpl_grid = cfg.kpl_grid;
  type_dim = cfg.type_dim;
  d_rel = cfg.d_rel;
}

TrainHyper RunConfig::hyper() const {
  TrainHyper h;
  h.steps = steps;
  h.batch_size = batch_size;
  h.base_lr = lr;
  h.adam = {beta1, beta2, eps, weight_decay};
  h.warmup_frac = warmup_frac;
  h.slow_ratio = slow_ratio;
  h.clip_norm = clip_norm;
  h.masking = {mvlm_rate, kpl_rate, mask_frac, random_frac};
  h.seed = seed;
  h.threads = threads;
  h.validate();
  return h;
}

}  // namespace lilt
