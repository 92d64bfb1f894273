#include "lilt/encoder.hpp"

#include <cmath>

#include "lilt/errors.hpp"

namespace lilt {

Var text_embedding(Tape& t, const Model& m, const std::vector<int>& token_ids,
                   const std::vector<int>& position_ids) {
  if (token_ids.size() != position_ids.size()) {
    throw ShapeError("text_embedding: id/position length mismatch");
  }
  Var tok = t.lookup(m.text_emb.token_table, token_ids);
  Var pos = t.lookup(m.text_emb.pos_table, position_ids);
  return t.layer_norm(t.add(tok, pos), m.text_emb.ln_gain, m.text_emb.ln_shift, m.config.ln_eps);
}

Var layout_embedding(Tape& t, const Model& m, const std::vector<NormalizedBBox>& boxes,
                     const std::vector<int>& position_ids) {
  if (boxes.size() != position_ids.size()) {
    throw ShapeError("layout_embedding: box/position length mismatch");
  }
  const std::size_t n = boxes.size();
  std::vector<int> xmin(n), xmax(n), ymin(n), ymax(n), w(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const NormalizedBBox& b = boxes[i];
    if (!b.valid()) throw IndexError("layout_embedding: box coordinates outside [0, 1000]");
    xmin[i] = b.xmin;
    xmax[i] = b.xmax;
    ymin[i] = b.ymin;
    ymax[i] = b.ymax;
    w[i] = b.width;
    h[i] = b.height;
  }
  const auto& e = m.layout_emb;
  Var cat = t.concat_cols({t.lookup(e.x_table, xmin), t.lookup(e.x_table, xmax),
                           t.lookup(e.y_table, ymin), t.lookup(e.y_table, ymax),
                           t.lookup(e.w_table, w), t.lookup(e.h_table, h)});
  Var p2d = t.linear(cat, e.proj_w, e.proj_b);
  Var pos = t.lookup(e.pos_table, position_ids);
  return t.layer_norm(t.add(p2d, pos), e.ln_gain, e.ln_shift, m.config.ln_eps);
}

std::vector<Var> attention_scores(Tape& t, Var x, int wq, int wk, int heads) {
  const int d = t.cols(x);
  if (heads < 1 || d % heads != 0) {
    throw ShapeError("attention_scores: width not divisible by head count");
  }
  const int dh = d / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  Var q = t.linear(x, wq);
  Var k = t.linear(x, wk);
  std::vector<Var> scores;
  scores.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var qh = t.slice_cols(q, h * dh, dh);
    Var kh = t.slice_cols(k, h * dh, dh);
    scores.push_back(t.matmul_nt_scaled(qh, kh, inv_sqrt_dh));
  }
  return scores;
}

std::pair<std::vector<Var>, std::vector<Var>> biacm_combine(Tape& t,
                                                            const std::vector<Var>& text_scores,
                                                            const std::vector<Var>& layout_scores,
                                                            Mode mode) {
  if (text_scores.size() != layout_scores.size()) {
    throw ShapeError("biacm_combine: head counts differ");
  }
  std::vector<Var> comb_text, comb_layout;
  comb_text.reserve(text_scores.size());
  comb_layout.reserve(text_scores.size());
  for (std::size_t h = 0; h < text_scores.size(); ++h) {
    Var st = text_scores[h];
    Var sl = layout_scores[h];
    if (t.rows(st) != t.rows(sl) || t.cols(st) != t.cols(sl)) {
      throw ShapeError("biacm_combine: score shapes differ");
    }
    Var both = t.add(sl, st);
    comb_text.push_back(both);
    // Same value either way; only the gradient path to the text scores
    // changes between the phases.
    comb_layout.push_back(mode == Mode::pretrain ? t.add_detached_rhs(sl, st) : both);
  }
  return {comb_text, comb_layout};
}

Mat attention_bias(const std::vector<int>& attention_mask) {
  const int n = static_cast<int>(attention_mask.size());
  Mat bias = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    if (attention_mask[j] == 0) bias.col(j).setConstant(-1e9);
  }
  return bias;
}

namespace {

// Masked softmax over shared scores, value mixing, projection, and the
// post-LN residual FFN block for one flow.
Var flow_layer(Tape& t, const Model& m, Var x, const std::vector<Var>& comb,
               const Model::LayerIds& p, const Mat& bias, Rng* dropout_rng) {
  const ModelConfig& cfg = m.config;
  const int d = t.cols(x);
  const int dh = d / cfg.heads;
  auto drop = [&](Var v) {
    return dropout_rng != nullptr ? t.dropout(v, cfg.dropout, *dropout_rng) : v;
  };

  Var values = t.linear(x, p.wv, p.bv);
  std::vector<Var> ctx;
  ctx.reserve(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    Var probs = t.softmax_rows_biased(comb[h], bias);
    probs = drop(probs);
    ctx.push_back(t.matmul(probs, t.slice_cols(values, h * dh, dh)));
  }
  Var attn = drop(t.linear(t.concat_cols(ctx), p.wo, p.bo));
  Var x1 = t.layer_norm(t.add(x, attn), p.ln1_gain, p.ln1_shift, cfg.ln_eps);
  Var ff = drop(t.linear(t.gelu(t.linear(x1, p.ffn_w1, p.ffn_b1)), p.ffn_w2, p.ffn_b2));
  return t.layer_norm(t.add(x1, ff), p.ln2_gain, p.ln2_shift, cfg.ln_eps);
}

}  // namespace

EncoderResult encoder_forward(Tape& t, const Model& m, Var e_text, Var e_layout,
                              const std::vector<int>& attention_mask, Rng* dropout_rng) {
  const ModelConfig& cfg = m.config;
  const int n = static_cast<int>(attention_mask.size());
  if (t.rows(e_text) != n || t.rows(e_layout) != n) {
    throw ShapeError("encoder_forward: sequence length mismatch with mask");
  }
  if (t.cols(e_text) != cfg.d_text || t.cols(e_layout) != cfg.d_layout) {
    throw ShapeError("encoder_forward: embedding widths do not match config");
  }
  if (cfg.dropout <= 0.0) dropout_rng = nullptr;

  const Mat bias = attention_bias(attention_mask);
  auto drop = [&](Var v) {
    return dropout_rng != nullptr ? t.dropout(v, cfg.dropout, *dropout_rng) : v;
  };
  Var xt = drop(e_text);
  Var xl = drop(e_layout);
  for (int l = 0; l < cfg.layers; ++l) {
    auto st = attention_scores(t, xt, m.text_layers[l].wq, m.text_layers[l].wk, cfg.heads);
    auto sl = attention_scores(t, xl, m.layout_layers[l].wq, m.layout_layers[l].wk, cfg.heads);
    auto [comb_t, comb_l] = biacm_combine(t, st, sl, cfg.mode);
    xt = flow_layer(t, m, xt, comb_t, m.text_layers[l], bias, dropout_rng);
    xl = flow_layer(t, m, xl, comb_l, m.layout_layers[l], bias, dropout_rng);
    if (!t.val(xt).allFinite() || !t.val(xl).allFinite()) {
      throw NumericError("non-finite activation after encoder layer " + std::to_string(l));
    }
  }
  return {xt, xl};
}

Var concat_features(Tape& t, Var h_text, Var h_layout) {
  if (t.rows(h_text) != t.rows(h_layout)) {
    throw ShapeError("concat_features: sequence lengths differ");
  }
  return t.concat_cols({h_text, h_layout});
}

SequenceForward forward_sequence(Tape& t, const Model& m, const ModelInputs& inputs,
                                 Rng* dropout_rng) {
  Var et = text_embedding(t, m, inputs.token_ids, inputs.position_ids);
  Var el = layout_embedding(t, m, inputs.boxes, inputs.position_ids);
  EncoderResult enc = encoder_forward(t, m, et, el, inputs.attention_mask, dropout_rng);
  return {enc.text, enc.layout, concat_features(t, enc.text, enc.layout)};
}

}  // namespace lilt
