#pragma once

#include <utility>
#include <vector>

#include "lilt/model.hpp"
#include "lilt/sequence.hpp"

namespace lilt {

// E_T: per-position token embedding plus 1D position embedding, layer-normed.
Var text_embedding(Tape& t, const Model& m, const std::vector<int>& token_ids,
                   const std::vector<int>& position_ids);

// E_L: projected concatenation of the six coordinate embeddings plus the
// layout-flow 1D position embedding, layer-normed. The x table serves
// xmin/xmax and the y table ymin/ymax.
Var layout_embedding(Tape& t, const Model& m, const std::vector<NormalizedBBox>& boxes,
                     const std::vector<int>& position_ids);

// Per-head pre-softmax attention scores (x W_q)(x W_k)^T / sqrt(d_head).
std::vector<Var> attention_scores(Tape& t, Var x, int wq, int wk, int heads);

// Additively shares pre-softmax scores between the flows. The text-flow sum
// always carries gradient from both; the layout-flow sum sees detached text
// scores in pretrain mode. Values are identical in both modes.
std::pair<std::vector<Var>, std::vector<Var>> biacm_combine(Tape& t,
                                                            const std::vector<Var>& text_scores,
                                                            const std::vector<Var>& layout_scores,
                                                            Mode mode);

// N x N additive mask, -1e9 on pad key columns.
Mat attention_bias(const std::vector<int>& attention_mask);

struct EncoderResult {
  Var text;
  Var layout;
};

// Full dual-stream encoder: per layer, both flows compute scores, share them
// through biacm_combine, then independently apply masked softmax, value
// mixing, output projection, and a post-LN residual FFN block.
// `dropout_rng` enables dropout at the training sites; pass nullptr for eval.
EncoderResult encoder_forward(Tape& t, const Model& m, Var e_text, Var e_layout,
                              const std::vector<int>& attention_mask,
                              Rng* dropout_rng = nullptr);

// Channel concatenation, text features first.
Var concat_features(Tape& t, Var h_text, Var h_layout);

struct SequenceForward {
  Var text;
  Var layout;
  Var joint;
};

// Embeddings -> encoder -> concatenated features for one sequence.
SequenceForward forward_sequence(Tape& t, const Model& m, const ModelInputs& inputs,
                                 Rng* dropout_rng = nullptr);

}  // namespace lilt
