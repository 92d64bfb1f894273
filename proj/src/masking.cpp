#include "lilt/masking.hpp"

#include "lilt/errors.hpp"
#include "lilt/vocab.hpp"

namespace lilt {

void MaskParams::validate() const {
  if (mvlm_rate < 0 || mvlm_rate > 1 || kpl_rate < 0 || kpl_rate > 1) {
    throw ConfigError("masking rates must be in [0, 1]");
  }
  if (mask_frac < 0 || random_frac < 0 || mask_frac + random_frac > 1) {
    throw ConfigError("bucket fractions must be non-negative and sum to at most 1");
  }
}

MaskingPlan MaskingPlan::empty(int n) {
  MaskingPlan p;
  p.mvlm_bucket.assign(n, MvlmBucket::none);
  p.mvlm_label.assign(n, kIgnoreLabel);
  p.mvlm_replacement.assign(n, -1);
  p.kpl_bucket.assign(n, KplBucket::none);
  for (auto& l : p.kpl_label) l.assign(n, kIgnoreLabel);
  p.kpl_replacement.assign(n, NormalizedBBox{});
  p.cai_label.assign(n, kIgnoreLabel);
  return p;
}

BoxPool build_box_pool(const std::vector<const ModelInputs*>& batch,
                       std::vector<std::vector<int>>* pool_index_per_seq) {
  BoxPool pool;
  if (pool_index_per_seq != nullptr) {
    pool_index_per_seq->assign(batch.size(), {});
  }
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const ModelInputs& m = *batch[s];
    std::vector<int> index(m.length(), -1);
    for (int i = 0; i < m.length(); ++i) {
      if (m.is_content(i)) {
        index[i] = static_cast<int>(pool.boxes.size());
        pool.boxes.push_back(m.boxes[i]);
      }
    }
    if (pool_index_per_seq != nullptr) (*pool_index_per_seq)[s] = std::move(index);
  }
  return pool;
}

int kpl_grid_cell(int coord, int grid) {
  if (coord < 0 || coord > 1000) {
    throw IndexError("key point coordinate outside [0, 1000]: " + std::to_string(coord));
  }
  const int cell = static_cast<int>(static_cast<long>(coord) * grid / 1001);
  return std::min(cell, grid - 1);
}

KeyPointRegions key_point_regions(const NormalizedBBox& box, int grid) {
  if (grid < 1) throw ConfigError("key point grid must be >= 1");
  auto region = [grid](int x, int y) { return kpl_grid_cell(y, grid) * grid + kpl_grid_cell(x, grid); };
  KeyPointRegions r;
  r.tl = region(box.xmin, box.ymin);
  r.br = region(box.xmax, box.ymax);
  r.center = region((box.xmin + box.xmax) / 2, (box.ymin + box.ymax) / 2);
  return r;
}

namespace {

enum class Bucket { replace, random, keep };

Bucket draw_bucket(const MaskParams& mp, Rng& rng) {
  const double u = rng.uniform();
  if (u < mp.mask_frac) return Bucket::replace;
  if (u < mp.mask_frac + mp.random_frac) return Bucket::random;
  return Bucket::keep;
}

}  // namespace

void plan_mvlm(const ModelInputs& inputs, int vocab_size, const MaskParams& mp, Rng& rng,
               MaskingPlan& plan) {
  for (int i = 0; i < inputs.length(); ++i) {
    if (!inputs.is_content(i)) continue;
    if (rng.uniform() >= mp.mvlm_rate) continue;
    plan.mvlm_label[i] = inputs.token_ids[i];
    switch (draw_bucket(mp, rng)) {
      case Bucket::replace:
        plan.mvlm_bucket[i] = MvlmBucket::mask_token;
        break;
      case Bucket::random:
        plan.mvlm_bucket[i] = MvlmBucket::random_token;
        plan.mvlm_replacement[i] = static_cast<int>(rng.uniform_int(vocab_size));
        break;
      case Bucket::keep:
        plan.mvlm_bucket[i] = MvlmBucket::keep;
        break;
    }
  }
}

void plan_kpl(const ModelInputs& inputs, const BoxPool& pool, const std::vector<int>& pool_index,
              int grid, const MaskParams& mp, Rng& rng, MaskingPlan& plan) {
  const int pool_size = static_cast<int>(pool.boxes.size());
  for (int i = 0; i < inputs.length(); ++i) {
    if (!inputs.is_content(i)) continue;
    if (rng.uniform() >= mp.kpl_rate) continue;
    const KeyPointRegions regions = key_point_regions(inputs.boxes[i], grid);
    plan.kpl_label[0][i] = regions.tl;
    plan.kpl_label[1][i] = regions.br;
    plan.kpl_label[2][i] = regions.center;
    switch (draw_bucket(mp, rng)) {
      case Bucket::replace:
        plan.kpl_bucket[i] = KplBucket::zero_box;
        break;
      case Bucket::random: {
        const int self = pool_index[i];
        const int donors = pool_size - (self >= 0 ? 1 : 0);
        if (donors <= 0) {
          // No other eligible box in the batch; fall back to the zero box.
          plan.kpl_bucket[i] = KplBucket::zero_box;
          ++plan.kpl_donor_fallbacks;
        } else {
          int k = static_cast<int>(rng.uniform_int(donors));
          if (self >= 0 && k >= self) ++k;
          plan.kpl_bucket[i] = KplBucket::random_box;
          plan.kpl_replacement[i] = pool.boxes[k];
        }
        break;
      }
      case Bucket::keep:
        plan.kpl_bucket[i] = KplBucket::keep;
        break;
    }
  }
}

void plan_cai(MaskingPlan& plan) {
  const int n = static_cast<int>(plan.mvlm_bucket.size());
  for (int i = 0; i < n; ++i) {
    const MvlmBucket mb = plan.mvlm_bucket[i];
    const KplBucket kb = plan.kpl_bucket[i];
    const bool token_side = mb == MvlmBucket::random_token || mb == MvlmBucket::keep;
    const bool box_side = kb == KplBucket::random_box || kb == KplBucket::keep;
    if (!token_side && !box_side) continue;  // [MASK]/zero-box-only positions stay unlabeled
    const bool misaligned = mb == MvlmBucket::random_token || kb == KplBucket::random_box;
    plan.cai_label[i] = misaligned ? kCaiMisaligned : kCaiAligned;
  }
}

MaskingPlan make_masking_plan(const ModelInputs& inputs, const BoxPool& pool,
                              const std::vector<int>& pool_index, int vocab_size, int grid,
                              const MaskParams& mp, Rng& rng) {
  mp.validate();
  MaskingPlan plan = MaskingPlan::empty(inputs.length());
  plan_mvlm(inputs, vocab_size, mp, rng, plan);
  plan_kpl(inputs, pool, pool_index, grid, mp, rng, plan);
  plan_cai(plan);
  return plan;
}

ModelInputs apply_plan(const ModelInputs& inputs, const MaskingPlan& plan) {
  ModelInputs out = inputs;
  for (int i = 0; i < inputs.length(); ++i) {
    switch (plan.mvlm_bucket[i]) {
      case MvlmBucket::mask_token:
        out.token_ids[i] = Vocabulary::kMask;
        break;
      case MvlmBucket::random_token:
        out.token_ids[i] = plan.mvlm_replacement[i];
        break;
      default:
        break;
    }
    switch (plan.kpl_bucket[i]) {
      case KplBucket::zero_box:
        out.boxes[i] = NormalizedBBox{0, 0, 0, 0, 0, 0};
        break;
      case KplBucket::random_box:
        out.boxes[i] = plan.kpl_replacement[i];
        break;
      default:
        break;
    }
  }
  return out;
}

}  // namespace lilt
