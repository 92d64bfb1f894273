#pragma once

#include <vector>

#include "lilt/bbox.hpp"
#include "lilt/document.hpp"
#include "lilt/vocab.hpp"

namespace lilt {

// Fixed-length model input: token ids, one normalized box per token, pad
// mask, and 0..N-1 position ids. Pad positions carry the [PAD] box.
struct ModelInputs {
  std::vector<int> token_ids;
  std::vector<NormalizedBBox> boxes;
  std::vector<int> attention_mask;
  std::vector<int> position_ids;

  int length() const { return static_cast<int>(token_ids.size()); }
  int num_content() const;  // non-pad, non-[CLS]/[SEP] positions
  bool is_content(int pos) const {
    return attention_mask[pos] == 1 && token_ids[pos] != Vocabulary::kCls &&
           token_ids[pos] != Vocabulary::kSep;
  }
};

// Entity projected onto the built token sequence, [begin, end) half-open.
struct SpanEntity {
  int label = 0;
  int begin = 0;
  int end = 0;

  bool operator==(const SpanEntity&) const = default;
  auto operator<=>(const SpanEntity&) const = default;
};

struct SequencedDoc {
  ModelInputs inputs;
  std::vector<SpanEntity> entities;    // entities that survived truncation
  std::vector<Relation> relations;     // reindexed against `entities`
  int dropped_entities = 0;            // lost to truncation
  int dropped_relations = 0;
};

// Linearizes a document in reading order into a length-N sequence:
// [CLS] + tokens (first N-2 kept) + [SEP] + [PAD]*. Each content token
// carries its segment's normalized box.
ModelInputs build_sequence(const Document& doc, const Vocabulary& vocab, int n);

// build_sequence plus entity span assignment. Entities whose segments are
// cut off by truncation are dropped from supervision, as are relations that
// lose an endpoint.
SequencedDoc build_sequenced_doc(const Document& doc, const Vocabulary& vocab, int n);

}  // namespace lilt
