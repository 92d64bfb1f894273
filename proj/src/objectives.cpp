#include "lilt/objectives.hpp"

#include "lilt/errors.hpp"

namespace lilt {

namespace {

// Rows that carry a label, with the labels compacted to match.
std::vector<int> labeled_rows(const std::vector<int>& labels, std::vector<int>* compact) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kIgnoreLabel) {
      rows.push_back(static_cast<int>(i));
      compact->push_back(labels[i]);
    }
  }
  return rows;
}

}  // namespace

PretrainLosses pretrain_loss(Tape& t, Var h_joint, const MaskingPlan& plan, const Model& m) {
  if (!m.config.with_pretrain_heads) throw ConfigError("model built without pretrain heads");
  const auto& heads = m.pretrain_heads;
  PretrainLosses out;

  {
    std::vector<int> labels;
    const std::vector<int> rows = labeled_rows(plan.mvlm_label, &labels);
    out.n_mvlm = static_cast<int>(rows.size());
    if (rows.empty()) {
      out.mvlm = t.scalar(0.0);
    } else {
      Var feats = t.gather_rows(h_joint, rows);
      out.mvlm = t.mean_cross_entropy(t.linear(feats, heads.mvlm_w, heads.mvlm_b), labels);
    }
  }

  {
    // All three key points are labeled on the same positions.
    std::vector<int> tl_labels;
    const std::vector<int> rows = labeled_rows(plan.kpl_label[0], &tl_labels);
    out.n_kpl = static_cast<int>(rows.size());
    if (rows.empty()) {
      out.kpl = t.scalar(0.0);
    } else {
      Var feats = t.gather_rows(h_joint, rows);
      std::vector<Var> parts;
      for (int k = 0; k < 3; ++k) {
        std::vector<int> labels;
        labels.reserve(rows.size());
        for (int r : rows) labels.push_back(plan.kpl_label[k][r]);
        parts.push_back(
            t.mean_cross_entropy(t.linear(feats, heads.kpl_w[k], heads.kpl_b[k]), labels));
      }
      out.kpl = t.scale(t.sum_scalars(parts), 1.0 / 3.0);
    }
  }

  {
    std::vector<int> labels;
    const std::vector<int> rows = labeled_rows(plan.cai_label, &labels);
    out.n_cai = static_cast<int>(rows.size());
    if (rows.empty()) {
      out.cai = t.scalar(0.0);
    } else {
      Var feats = t.gather_rows(h_joint, rows);
      out.cai = t.mean_cross_entropy(t.linear(feats, heads.cai_w, heads.cai_b), labels);
    }
  }

  out.total = t.sum_scalars({out.mvlm, out.kpl, out.cai});
  return out;
}

}  // namespace lilt
