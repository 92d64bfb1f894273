#include "lilt/heads.hpp"

#include "lilt/errors.hpp"
#include "lilt/masking.hpp"

namespace lilt {

int bio_tag_b(int category) { return 1 + 2 * category; }
int bio_tag_i(int category) { return 2 + 2 * category; }

std::vector<int> encode_bio(const std::vector<SpanEntity>& entities, const ModelInputs& inputs,
                            int n_categories) {
  std::vector<int> tags(inputs.length(), kIgnoreLabel);
  for (int i = 0; i < inputs.length(); ++i) {
    if (inputs.is_content(i)) tags[i] = 0;  // O
  }
  for (const SpanEntity& e : entities) {
    if (e.label < 0 || e.label >= n_categories) throw IndexError("entity category out of range");
    if (e.begin < 0 || e.end > inputs.length() || e.begin >= e.end) {
      throw IndexError("entity span outside sequence");
    }
    tags[e.begin] = bio_tag_b(e.label);
    for (int i = e.begin + 1; i < e.end; ++i) tags[i] = bio_tag_i(e.label);
  }
  return tags;
}

Var ser_logits(Tape& t, Var h_joint, const Model& m) {
  if (!m.config.with_ser_head) throw ConfigError("model built without the SER head");
  return t.linear(h_joint, m.ser_head.w, m.ser_head.b);
}

Var ser_loss(Tape& t, Var logits, const std::vector<int>& bio_labels) {
  return t.mean_cross_entropy(logits, bio_labels);
}

std::vector<SpanEntity> decode_bio(const std::vector<int>& tags, int n_categories) {
  std::vector<SpanEntity> out;
  int open_cat = -1, open_begin = -1;
  auto close = [&](int end) {
    if (open_cat >= 0) out.push_back({open_cat, open_begin, end});
    open_cat = -1;
  };
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const int tag = tags[i];
    if (tag <= 0) {  // O or ignored
      close(i);
      continue;
    }
    const int cat = (tag - 1) / 2;
    if (cat >= n_categories) throw IndexError("tag out of range for category count");
    const bool is_b = tag == bio_tag_b(cat);
    if (is_b || cat != open_cat) {
      close(i);  // I-c with no open run of c starts a fresh entity
      open_cat = cat;
      open_begin = i;
    }
  }
  close(static_cast<int>(tags.size()));
  return out;
}

std::vector<std::pair<int, int>> re_candidates(int n_entities) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n_entities) * (n_entities - 1));
  for (int h = 0; h < n_entities; ++h) {
    for (int t = 0; t < n_entities; ++t) {
      if (h != t) pairs.emplace_back(h, t);
    }
  }
  return pairs;
}

std::vector<int> re_gold_labels(const std::vector<std::pair<int, int>>& pairs,
                                const std::vector<Relation>& relations) {
  std::vector<int> labels(pairs.size(), 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (const Relation& r : relations) {
      if (r.head == pairs[i].first && r.tail == pairs[i].second) {
        labels[i] = 1;
        break;
      }
    }
  }
  return labels;
}

Var re_logits(Tape& t, Var h_joint, const std::vector<SpanEntity>& entities,
              const std::vector<std::pair<int, int>>& pairs, const Model& m) {
  if (!m.config.with_re_head) throw ConfigError("model built without the RE head");
  const auto& rh = m.re_head;

  std::vector<int> head_rows, tail_rows, head_types, tail_types;
  head_rows.reserve(pairs.size());
  tail_rows.reserve(pairs.size());
  for (const auto& [h, tl] : pairs) {
    const SpanEntity& he = entities.at(h);
    const SpanEntity& te = entities.at(tl);
    head_rows.push_back(he.begin);  // first token of the entity
    tail_rows.push_back(te.begin);
    head_types.push_back(he.label);
    tail_types.push_back(te.label);
  }

  Var h_repr = t.gelu(t.linear(
      t.concat_cols({t.gather_rows(h_joint, head_rows), t.lookup(rh.type_table, head_types)}),
      rh.head_w, rh.head_b));
  Var t_repr = t.gelu(t.linear(
      t.concat_cols({t.gather_rows(h_joint, tail_rows), t.lookup(rh.type_table, tail_types)}),
      rh.tail_w, rh.tail_b));

  Var bilinear0 = t.rowwise_dot(t.linear(h_repr, rh.u0), t_repr);
  Var bilinear1 = t.rowwise_dot(t.linear(h_repr, rh.u1), t_repr);
  Var linear_term = t.linear(t.concat_cols({h_repr, t_repr}), rh.v, rh.bias);
  return t.add(t.concat_cols({bilinear0, bilinear1}), linear_term);
}

std::vector<SpanLink> links_from_relations(const std::vector<SpanEntity>& entities,
                                           const std::vector<Relation>& relations) {
  std::vector<SpanLink> out;
  out.reserve(relations.size());
  for (const Relation& r : relations) {
    const SpanEntity& h = entities.at(r.head);
    const SpanEntity& t = entities.at(r.tail);
    out.push_back({h.begin, h.end, t.begin, t.end});
  }
  return out;
}

}  // namespace lilt
