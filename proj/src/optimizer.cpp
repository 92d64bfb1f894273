#include "lilt/optimizer.hpp"

#include <cmath>

#include "lilt/errors.hpp"

namespace lilt {

double lr_at(long step, long total_steps, double base_lr, double warmup_frac) {
  if (total_steps <= 0) throw ConfigError("lr_at: total_steps must be positive");
  if (step < 0 || step > total_steps) throw ConfigError("lr_at: step outside [0, total_steps]");
  const double warmup = warmup_frac * static_cast<double>(total_steps);
  if (warmup > 0 && step <= warmup) {
    return base_lr * static_cast<double>(step) / warmup;
  }
  const double rest = static_cast<double>(total_steps) - warmup;
  if (rest <= 0) return 0.0;
  return base_lr * (1.0 - (static_cast<double>(step) - warmup) / rest);
}

std::vector<ParamGroup> make_param_groups(const Model& m, Mode mode, double slow_ratio) {
  if (!(slow_ratio > 0)) throw ConfigError("slow_ratio must be positive");

  std::vector<ParamGroup> groups;
  if (mode == Mode::finetune) {
    ParamGroup all{"unified", {}, 1.0, false};
    for (int i = 0; i < m.params.size(); ++i) all.param_ids.push_back(i);
    groups.push_back(std::move(all));
    return groups;
  }

  const bool freeze = std::isinf(slow_ratio);
  ParamGroup text{"text_stream", {}, freeze ? 0.0 : 1.0 / slow_ratio, freeze};
  ParamGroup rest{"rest", {}, 1.0, false};
  for (int i = 0; i < m.params.size(); ++i) {
    (m.is_text_stream(i) ? text : rest).param_ids.push_back(i);
  }
  groups.push_back(std::move(text));
  groups.push_back(std::move(rest));
  return groups;
}

AdamW::AdamW(const ParamStore& params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (int i = 0; i < params.size(); ++i) {
    m_.emplace_back(Mat::Zero(params.info(i).rows, params.info(i).cols));
    v_.emplace_back(Mat::Zero(params.info(i).rows, params.info(i).cols));
  }
}

void AdamW::step(ParamStore& params, const GradStore& grads,
                 const std::vector<ParamGroup>& groups, double lr) {
  // Validate before mutating anything so a bad step leaves state intact.
  for (const ParamGroup& g : groups) {
    if (g.frozen) continue;
    for (int id : g.param_ids) {
      const Mat* grad = grads.get(id);
      if (grad != nullptr && !grad->allFinite()) {
        throw NumericError("non-finite gradient for parameter " + params.info(id).name);
      }
    }
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (const ParamGroup& g : groups) {
    if (g.frozen) continue;
    const double lr_g = lr * g.lr_mult;
    for (int id : g.param_ids) {
      Mat& p = params.value(id);
      Mat& m = m_[id];
      Mat& v = v_[id];
      const Mat* grad = grads.get(id);
      if (grad != nullptr) {
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * (*grad);
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad->array().square().matrix();
      } else {
        m *= cfg_.beta1;
        v *= cfg_.beta2;
      }
      p.array() -= lr_g * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.eps);
      if (params.info(id).weight_decay) {
        p.array() -= lr_g * cfg_.weight_decay * p.array();
      }
    }
  }
}

}  // namespace lilt
