#pragma once

#include <string>
#include <vector>

#include "lilt/model.hpp"

namespace lilt {

// Linear warmup over the first warmup_frac of steps, then linear decay to 0.
double lr_at(long step, long total_steps, double base_lr, double warmup_frac = 0.10);

struct ParamGroup {
  std::string name;
  std::vector<int> param_ids;
  double lr_mult = 1.0;
  bool frozen = false;
};

// Pre-training slows the text stream down by slow_ratio (an infinite ratio
// freezes it); fine-tuning uses a single unified group. slow_ratio must be
// positive.
std::vector<ParamGroup> make_param_groups(const Model& m, Mode mode, double slow_ratio);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled-weight-decay adaptive optimizer with bias correction. Decay is
// skipped on parameters registered without the weight_decay flag (LN params
// and biases).
class AdamW {
 public:
  AdamW(const ParamStore& params, AdamConfig cfg);

  // Applies one update with the given absolute learning rate (schedule
  // already applied); per-group multipliers scale it further. Throws
  // NumericError naming the parameter if any gradient is non-finite, leaving
  // parameters untouched.
  void step(ParamStore& params, const GradStore& grads, const std::vector<ParamGroup>& groups,
            double lr);

  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }
  const Mat& moment_m(int id) const { return m_[id]; }
  const Mat& moment_v(int id) const { return v_[id]; }
  Mat& moment_m(int id) { return m_[id]; }
  Mat& moment_v(int id) { return v_[id]; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

}  // namespace lilt
