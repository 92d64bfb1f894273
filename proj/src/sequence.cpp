#include "lilt/sequence.hpp"

#include <algorithm>
#include <unordered_map>

#include "lilt/errors.hpp"

namespace lilt {

int ModelInputs::num_content() const {
  int n = 0;
  for (int i = 0; i < length(); ++i) n += is_content(i) ? 1 : 0;
  return n;
}

namespace {

struct TokenRange {
  int begin = 0, end = 0;  // full-sequence coordinates, [CLS] at 0
};

struct Linearized {
  ModelInputs inputs;
  std::unordered_map<int, TokenRange> segment_ranges;  // pre-truncation plan
  int kept_content = 0;                                // tokens that survived
};

Linearized linearize(const Document& doc, const Vocabulary& vocab, int n) {
  if (n < 2) throw ConfigError("build_sequence: sequence length must be at least 2");

  Linearized out;
  std::vector<int> ids;
  std::vector<NormalizedBBox> boxes;

  const std::vector<int> order = sort_reading_order(doc.segments);
  int cursor = 1;  // position after [CLS]
  for (int seg_idx : order) {
    const Segment& seg = doc.segments[seg_idx];
    const NormalizedBBox box = normalize_bbox(seg.bbox, doc.page_width, doc.page_height);
    const auto tokens = tokenize(seg.text);
    out.segment_ranges[seg.id] = {cursor, cursor + static_cast<int>(tokens.size())};
    cursor += static_cast<int>(tokens.size());
    for (const auto& tok : tokens) {
      ids.push_back(vocab.id_of(tok));
      boxes.push_back(box);
    }
  }

  const int keep = std::min<int>(static_cast<int>(ids.size()), n - 2);
  out.kept_content = keep;

  ModelInputs& m = out.inputs;
  m.token_ids.reserve(n);
  m.boxes.reserve(n);
  m.token_ids.push_back(Vocabulary::kCls);
  m.boxes.push_back(cls_box());
  for (int i = 0; i < keep; ++i) {
    m.token_ids.push_back(ids[i]);
    m.boxes.push_back(boxes[i]);
  }
  m.token_ids.push_back(Vocabulary::kSep);
  m.boxes.push_back(sep_box());
  while (static_cast<int>(m.token_ids.size()) < n) {
    m.token_ids.push_back(Vocabulary::kPad);
    m.boxes.push_back(pad_box());
  }
  m.attention_mask.assign(n, 0);
  for (int i = 0; i < keep + 2; ++i) m.attention_mask[i] = 1;
  m.position_ids.resize(n);
  for (int i = 0; i < n; ++i) m.position_ids[i] = i;
  return out;
}

}  // namespace

ModelInputs build_sequence(const Document& doc, const Vocabulary& vocab, int n) {
  return linearize(doc, vocab, n).inputs;
}

SequencedDoc build_sequenced_doc(const Document& doc, const Vocabulary& vocab, int n) {
  Linearized lin = linearize(doc, vocab, n);

  SequencedDoc out;
  out.inputs = std::move(lin.inputs);

  const int last_kept = 1 + lin.kept_content;  // one past the last content token
  std::vector<int> remap(doc.entities.size(), -1);
  for (std::size_t e = 0; e < doc.entities.size(); ++e) {
    const Entity& ent = doc.entities[e];
    int begin = n, end = 0;
    bool ok = !ent.segment_ids.empty();
    for (int sid : ent.segment_ids) {
      auto it = lin.segment_ranges.find(sid);
      if (it == lin.segment_ranges.end()) {
        ok = false;
        break;
      }
      begin = std::min(begin, it->second.begin);
      end = std::max(end, it->second.end);
    }
    if (!ok || begin >= end || end > last_kept) {
      ++out.dropped_entities;
      continue;
    }
    remap[e] = static_cast<int>(out.entities.size());
    out.entities.push_back({ent.label, begin, end});
  }
  for (const Relation& r : doc.relations) {
    if (remap[r.head] >= 0 && remap[r.tail] >= 0) {
      out.relations.push_back({remap[r.head], remap[r.tail]});
    } else {
      ++out.dropped_relations;
    }
  }
  return out;
}

}  // namespace lilt
