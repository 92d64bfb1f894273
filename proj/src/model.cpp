#include "lilt/model.hpp"

#include "lilt/errors.hpp"

namespace lilt {

const char* mode_name(Mode m) { return m == Mode::pretrain ? "pretrain" : "finetune"; }

Mode mode_from(const std::string& s) {
  if (s == "pretrain") return Mode::pretrain;
  if (s == "finetune") return Mode::finetune;
  throw ConfigError("unknown mode: \"" + s + "\"");
}

void ModelConfig::validate() const {
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (heads < 1) throw ConfigError("heads must be >= 1");
  if (d_text % heads != 0) throw ConfigError("d_text must be divisible by heads");
  if (d_layout % heads != 0) throw ConfigError("d_layout must be divisible by heads");
  if (d_layout % 6 != 0) throw ConfigError("d_layout must be divisible by 6");
  if (ffn_text < 1 || ffn_layout < 1) throw ConfigError("ffn widths must be >= 1");
  if (max_seq < 2) throw ConfigError("max_seq must be >= 2");
  if (vocab_size < 5) throw ConfigError("vocab_size must be >= 5");
  if (kpl_grid < 1) throw ConfigError("kpl_grid must be >= 1");
  if (n_categories < 1) throw ConfigError("n_categories must be >= 1");
  if (type_dim < 1 || d_rel < 1) throw ConfigError("re head dims must be >= 1");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  if (ln_eps <= 0) throw ConfigError("ln_eps must be positive");
}

namespace {

Model::LayerIds add_layer(ParamStore& p, const std::string& prefix, int d, int ffn) {
  Model::LayerIds ids;
  ids.wq = p.add(prefix + ".att.wq", d, d, true);
  ids.wk = p.add(prefix + ".att.wk", d, d, true);
  ids.wv = p.add(prefix + ".att.wv", d, d, true);
  ids.bv = p.add(prefix + ".att.bv", 1, d, false);
  ids.wo = p.add(prefix + ".att.wo", d, d, true);
  ids.bo = p.add(prefix + ".att.bo", 1, d, false);
  ids.ln1_gain = p.add(prefix + ".ln1.gain", 1, d, false);
  ids.ln1_shift = p.add(prefix + ".ln1.shift", 1, d, false);
  ids.ffn_w1 = p.add(prefix + ".ffn.w1", d, ffn, true);
  ids.ffn_b1 = p.add(prefix + ".ffn.b1", 1, ffn, false);
  ids.ffn_w2 = p.add(prefix + ".ffn.w2", ffn, d, true);
  ids.ffn_b2 = p.add(prefix + ".ffn.b2", 1, d, false);
  ids.ln2_gain = p.add(prefix + ".ln2.gain", 1, d, false);
  ids.ln2_shift = p.add(prefix + ".ln2.shift", 1, d, false);
  return ids;
}

}  // namespace

Model::Model(ModelConfig cfg) : config(cfg) {
  config.validate();

  text_emb.token_table = params.add("text.tok", config.vocab_size, config.d_text, true);
  text_emb.pos_table = params.add("text.pos", config.max_seq, config.d_text, true);
  text_emb.ln_gain = params.add("text.emb_ln.gain", 1, config.d_text, false);
  text_emb.ln_shift = params.add("text.emb_ln.shift", 1, config.d_text, false);

  const int dc = config.d_coord();
  layout_emb.x_table = params.add("layout.x", 1001, dc, true);
  layout_emb.y_table = params.add("layout.y", 1001, dc, true);
  layout_emb.w_table = params.add("layout.w", 1001, dc, true);
  layout_emb.h_table = params.add("layout.h", 1001, dc, true);
  layout_emb.proj_w = params.add("layout.proj.w", 6 * dc, config.d_layout, true);
  layout_emb.proj_b = params.add("layout.proj.b", 1, config.d_layout, false);
  layout_emb.pos_table = params.add("layout.pos", config.max_seq, config.d_layout, true);
  layout_emb.ln_gain = params.add("layout.emb_ln.gain", 1, config.d_layout, false);
  layout_emb.ln_shift = params.add("layout.emb_ln.shift", 1, config.d_layout, false);

  for (int l = 0; l < config.layers; ++l) {
    text_layers.push_back(
        add_layer(params, "enc.text." + std::to_string(l), config.d_text, config.ffn_text));
    layout_layers.push_back(
        add_layer(params, "enc.layout." + std::to_string(l), config.d_layout, config.ffn_layout));
  }

  const int dj = config.d_joint();
  if (config.with_pretrain_heads) {
    pretrain_heads.mvlm_w = params.add("head.mvlm.w", dj, config.vocab_size, true);
    pretrain_heads.mvlm_b = params.add("head.mvlm.b", 1, config.vocab_size, false);
    const int g2 = config.kpl_grid * config.kpl_grid;
    const char* const kp[3] = {"tl", "br", "ctr"};
    for (int k = 0; k < 3; ++k) {
      pretrain_heads.kpl_w[k] = params.add(std::string("head.kpl.") + kp[k] + ".w", dj, g2, true);
      pretrain_heads.kpl_b[k] = params.add(std::string("head.kpl.") + kp[k] + ".b", 1, g2, false);
    }
    pretrain_heads.cai_w = params.add("head.cai.w", dj, 2, true);
    pretrain_heads.cai_b = params.add("head.cai.b", 1, 2, false);
  }
  if (config.with_ser_head) {
    ser_head.w = params.add("head.ser.w", dj, config.n_tags(), true);
    ser_head.b = params.add("head.ser.b", 1, config.n_tags(), false);
  }
  if (config.with_re_head) {
    re_head.type_table = params.add("head.re.type", config.n_categories, config.type_dim, true);
    re_head.head_w = params.add("head.re.head.w", dj + config.type_dim, config.d_rel, true);
    re_head.head_b = params.add("head.re.head.b", 1, config.d_rel, false);
    re_head.tail_w = params.add("head.re.tail.w", dj + config.type_dim, config.d_rel, true);
    re_head.tail_b = params.add("head.re.tail.b", 1, config.d_rel, false);
    re_head.u0 = params.add("head.re.u0", config.d_rel, config.d_rel, true);
    re_head.u1 = params.add("head.re.u1", config.d_rel, config.d_rel, true);
    re_head.v = params.add("head.re.v", 2 * config.d_rel, 2, true);
    re_head.bias = params.add("head.re.bias", 1, 2, false);
  }
}

void Model::init_params(Rng& rng) {
  for (int i = 0; i < params.size(); ++i) {
    const ParamInfo& info = params.info(i);
    Mat& v = params.value(i);
    if (info.weight_decay) {
      for (int r = 0; r < v.rows(); ++r) {
        for (int c = 0; c < v.cols(); ++c) v(r, c) = rng.normal(0.0, 0.02);
      }
    } else if (info.name.ends_with(".gain")) {
      v.setOnes();
    } else {
      v.setZero();
    }
  }
}

bool Model::is_text_stream(int param_id) const {
  const std::string& n = params.info(param_id).name;
  return n.starts_with("text.") || n.starts_with("enc.text.");
}

}  // namespace lilt
