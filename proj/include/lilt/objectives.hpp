#pragma once

#include "lilt/masking.hpp"
#include "lilt/model.hpp"

namespace lilt {

struct PretrainLosses {
  Var mvlm, kpl, cai, total;
  int n_mvlm = 0, n_kpl = 0, n_cai = 0;  // labeled positions per task
};

// Mean cross-entropy per task over labeled positions; the KPL loss is the
// average of its three key-point heads; total is the unweighted sum. Tasks
// without labeled positions contribute zero.
PretrainLosses pretrain_loss(Tape& t, Var h_joint, const MaskingPlan& plan, const Model& m);

}  // namespace lilt
