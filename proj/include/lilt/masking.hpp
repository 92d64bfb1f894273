#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lilt/rng.hpp"
#include "lilt/sequence.hpp"

namespace lilt {

enum class MvlmBucket : std::uint8_t { none, mask_token, random_token, keep };
enum class KplBucket : std::uint8_t { none, zero_box, random_box, keep };

inline constexpr int kIgnoreLabel = -1;
inline constexpr int kCaiMisaligned = 0;
inline constexpr int kCaiAligned = 1;

struct MaskParams {
  double mvlm_rate = 0.15;
  double kpl_rate = 0.15;
  double mask_frac = 0.80;    // -> [MASK] / zero box
  double random_frac = 0.10;  // -> random vocab token / random batch box
  void validate() const;
};

// Per-position masking decisions for one sequence. Labels are present iff
// the bucket is not `none`; special tokens and pads always stay `none`.
struct MaskingPlan {
  std::vector<MvlmBucket> mvlm_bucket;
  std::vector<int> mvlm_label;               // original token id or ignore
  std::vector<int> mvlm_replacement;         // sampled id for random_token
  std::vector<KplBucket> kpl_bucket;
  std::array<std::vector<int>, 3> kpl_label;  // tl / br / center regions of the original box
  std::vector<NormalizedBBox> kpl_replacement;
  std::vector<int> cai_label;                // aligned / misaligned / ignore
  int kpl_donor_fallbacks = 0;

  static MaskingPlan empty(int n);
};

// Donor boxes for the KPL random bucket, drawn from eligible positions of
// the whole batch.
struct BoxPool {
  std::vector<NormalizedBBox> boxes;
};

// Builds the pool over a batch and, per sequence, a map position -> pool
// index (-1 for ineligible positions) used to exclude self-donation.
BoxPool build_box_pool(const std::vector<const ModelInputs*>& batch,
                       std::vector<std::vector<int>>* pool_index_per_seq);

int kpl_grid_cell(int coord, int grid);

struct KeyPointRegions {
  int tl = 0, br = 0, center = 0;
};

// Grid region ids of a box's top-left corner, bottom-right corner, and
// center point on a grid x grid partition of [0, 1000].
KeyPointRegions key_point_regions(const NormalizedBBox& box, int grid);

void plan_mvlm(const ModelInputs& inputs, int vocab_size, const MaskParams& mp, Rng& rng,
               MaskingPlan& plan);
void plan_kpl(const ModelInputs& inputs, const BoxPool& pool, const std::vector<int>& pool_index,
              int grid, const MaskParams& mp, Rng& rng, MaskingPlan& plan);
// CAI labels derive from the two plans: labeled iff either side is in its
// replace/keep bucket, misaligned iff either side was randomly replaced.
void plan_cai(MaskingPlan& plan);

MaskingPlan make_masking_plan(const ModelInputs& inputs, const BoxPool& pool,
                              const std::vector<int>& pool_index, int vocab_size, int grid,
                              const MaskParams& mp, Rng& rng);

// Applies token/box replacements; originals stay in the plan's labels.
ModelInputs apply_plan(const ModelInputs& inputs, const MaskingPlan& plan);

}  // namespace lilt
