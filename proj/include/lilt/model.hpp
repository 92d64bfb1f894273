#pragma once

#include <array>
#include <string>

#include "lilt/autograd.hpp"

namespace lilt {

// Gradient routing differs between the two phases: during pre-training the
// layout flow receives detached text attention scores; fine-tuning cancels
// the detach and trains end to end.
enum class Mode { pretrain, finetune };

const char* mode_name(Mode m);
Mode mode_from(const std::string& s);

struct ModelConfig {
  int layers = 4;
  int heads = 4;
  int d_text = 128;
  int d_layout = 48;
  int ffn_text = 512;
  int ffn_layout = 192;
  int max_seq = 128;
  int vocab_size = 0;

  int kpl_grid = 7;
  int n_categories = 4;
  int type_dim = 32;  // entity-type embedding width for the RE head
  int d_rel = 64;     // bi-affine projection width

  double dropout = 0.1;
  double ln_eps = 1e-12;
  Mode mode = Mode::pretrain;

  bool with_pretrain_heads = true;
  bool with_ser_head = false;
  bool with_re_head = false;

  int d_coord() const { return d_layout / 6; }
  int d_joint() const { return d_text + d_layout; }
  int n_tags() const { return 2 * n_categories + 1; }  // BIO over categories
  void validate() const;
};

// Parameter registry for both flows plus task heads. Field values are ids
// into `params`; -1 marks heads that were not instantiated.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  void init_params(Rng& rng);

  struct TextEmbeddingIds {
    int token_table = -1, pos_table = -1, ln_gain = -1, ln_shift = -1;
  };
  struct LayoutEmbeddingIds {
    int x_table = -1, y_table = -1, w_table = -1, h_table = -1;
    int proj_w = -1, proj_b = -1;
    int pos_table = -1, ln_gain = -1, ln_shift = -1;
  };
  struct LayerIds {
    int wq = -1, wk = -1, wv = -1, bv = -1, wo = -1, bo = -1;
    int ln1_gain = -1, ln1_shift = -1;
    int ffn_w1 = -1, ffn_b1 = -1, ffn_w2 = -1, ffn_b2 = -1;
    int ln2_gain = -1, ln2_shift = -1;
  };
  struct PretrainHeadIds {
    int mvlm_w = -1, mvlm_b = -1;
    std::array<int, 3> kpl_w = {-1, -1, -1};  // top-left, bottom-right, center
    std::array<int, 3> kpl_b = {-1, -1, -1};
    int cai_w = -1, cai_b = -1;
  };
  struct SerHeadIds {
    int w = -1, b = -1;
  };
  struct ReHeadIds {
    int type_table = -1;
    int head_w = -1, head_b = -1, tail_w = -1, tail_b = -1;
    int u0 = -1, u1 = -1, v = -1, bias = -1;
  };

  ModelConfig config;
  ParamStore params;
  TextEmbeddingIds text_emb;
  LayoutEmbeddingIds layout_emb;
  std::vector<LayerIds> text_layers;
  std::vector<LayerIds> layout_layers;
  PretrainHeadIds pretrain_heads;
  SerHeadIds ser_head;
  ReHeadIds re_head;

  // Text-stream membership for the asymmetric optimization strategy: token
  // table, text 1D position table and LN, and all text-flow layer params.
  bool is_text_stream(int param_id) const;
};

}  // namespace lilt
