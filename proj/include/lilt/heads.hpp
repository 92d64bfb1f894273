#pragma once

#include <utility>
#include <vector>

#include "lilt/model.hpp"
#include "lilt/sequence.hpp"

namespace lilt {

// --- semantic entity recognition (BIO token tagging) -----------------------

// Tag layout: O = 0, B-c = 1 + 2c, I-c = 2 + 2c.
int bio_tag_b(int category);
int bio_tag_i(int category);

// Per-token gold tags; [CLS]/[SEP]/[PAD] positions get the ignore label.
std::vector<int> encode_bio(const std::vector<SpanEntity>& entities, const ModelInputs& inputs,
                            int n_categories);

// N x (2C+1) tag logits.
Var ser_logits(Tape& t, Var h_joint, const Model& m);

// Mean cross-entropy over labeled (content) positions.
Var ser_loss(Tape& t, Var logits, const std::vector<int>& bio_labels);

// Maximal runs; an I-c without an open run of category c starts a new
// entity; O and ignored positions break runs.
std::vector<SpanEntity> decode_bio(const std::vector<int>& tags, int n_categories);

// --- relation extraction (bi-affine over entity pairs) ---------------------

// All ordered pairs (head, tail), head != tail.
std::vector<std::pair<int, int>> re_candidates(int n_entities);

// 1 for pairs that appear as a gold key -> value link, else 0.
std::vector<int> re_gold_labels(const std::vector<std::pair<int, int>>& pairs,
                                const std::vector<Relation>& relations);

// Per-pair binary logits. Each entity is represented by its first token's
// joint feature concatenated with a learned type embedding, projected by the
// head/tail FFNs; the pair score is h^T U_c t + V_c [h; t] + b_c.
Var re_logits(Tape& t, Var h_joint, const std::vector<SpanEntity>& entities,
              const std::vector<std::pair<int, int>>& pairs, const Model& m);

// --- decoding helpers for evaluation ---------------------------------------

struct SpanLink {
  int head_begin = 0, head_end = 0, tail_begin = 0, tail_end = 0;

  bool operator==(const SpanLink&) const = default;
  auto operator<=>(const SpanLink&) const = default;
};

std::vector<SpanLink> links_from_relations(const std::vector<SpanEntity>& entities,
                                           const std::vector<Relation>& relations);

}  // namespace lilt
