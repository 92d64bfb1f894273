#include "lilt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "lilt/encoder.hpp"
#include "lilt/errors.hpp"
#include "lilt/heads.hpp"
#include "lilt/objectives.hpp"

namespace lilt {

void TrainHyper::validate() const {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (base_lr < 0) throw ConfigError("lr must be >= 0");
  if (warmup_frac < 0 || warmup_frac > 1) throw ConfigError("warmup_frac must be in [0, 1]");
  if (!(slow_ratio > 0)) throw ConfigError("slow_ratio must be positive");
  if (clip_norm < 0) throw ConfigError("clip_norm must be >= 0");
  masking.validate();
}

Task task_from(const std::string& s) {
  if (s == "ser") return Task::ser;
  if (s == "re") return Task::re;
  throw ConfigError("unknown task: \"" + s + "\" (expected ser or re)");
}

const char* task_name(Task t) { return t == Task::ser ? "ser" : "re"; }

void parallel_slots(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Trainer::Trainer(Model& model, const TrainHyper& hyper, Mode mode)
    : model_(model),
      hyper_(hyper),
      mode_(mode),
      opt_(model.params, hyper.adam),
      groups_(make_param_groups(model, mode, hyper.slow_ratio)),
      rng_(hyper.seed) {
  hyper_.validate();
  model_.config.mode = mode;
}

std::vector<int> Trainer::next_batch(std::size_t data_size) {
  if (order_.size() != data_size) {
    order_.resize(data_size);
    for (std::size_t i = 0; i < data_size; ++i) order_[i] = static_cast<int>(i);
    cursor_ = data_size;  // force a shuffle on first use
  }
  std::vector<int> batch;
  batch.reserve(hyper_.batch_size);
  while (static_cast<int>(batch.size()) < hyper_.batch_size) {
    if (cursor_ >= order_.size()) {
      for (std::size_t i = order_.size(); i > 1; --i) {
        std::swap(order_[i - 1], order_[rng_.uniform_int(static_cast<std::int64_t>(i))]);
      }
      cursor_ = 0;
      if (!batch.empty()) break;  // keep the last partial batch of the epoch
    }
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

std::vector<PretrainTraceRow> Trainer::run_pretrain(const std::vector<ModelInputs>& data) {
  if (data.empty()) throw DataError("pretrain: empty corpus");
  std::vector<PretrainTraceRow> trace;
  trace.reserve(hyper_.steps);

  for (long step = 1; step <= hyper_.steps; ++step) {
    const std::vector<int> batch = next_batch(data.size());
    const int b = static_cast<int>(batch.size());

    std::vector<const ModelInputs*> batch_inputs(b);
    for (int s = 0; s < b; ++s) batch_inputs[s] = &data[batch[s]];
    std::vector<std::vector<int>> pool_index;
    const BoxPool pool = build_box_pool(batch_inputs, &pool_index);

    std::vector<GradStore> slot_grads(b, GradStore(model_.params));
    std::vector<PretrainLosses> slot_losses(b);
    std::vector<double> slot_vals(4 * b, 0.0);
    std::vector<long> slot_fallbacks(b, 0);

    parallel_slots(b, hyper_.threads, [&](int s) {
      Rng plan_rng(child_seed(hyper_.seed, static_cast<std::uint64_t>(step), 2 * s));
      Rng drop_rng(child_seed(hyper_.seed, static_cast<std::uint64_t>(step), 2 * s + 1));
      const ModelInputs& orig = *batch_inputs[s];
      const MaskingPlan plan =
          make_masking_plan(orig, pool, pool_index[s], model_.config.vocab_size,
                            model_.config.kpl_grid, hyper_.masking, plan_rng);
      slot_fallbacks[s] = plan.kpl_donor_fallbacks;
      const ModelInputs masked = apply_plan(orig, plan);

      Tape tape(model_.params, &slot_grads[s]);
      SequenceForward fwd = forward_sequence(tape, model_, masked, &drop_rng);
      PretrainLosses losses = pretrain_loss(tape, fwd.joint, plan, model_);
      tape.backward(losses.total, 1.0 / b);
      slot_vals[4 * s + 0] = tape.val(losses.mvlm)(0, 0);
      slot_vals[4 * s + 1] = tape.val(losses.kpl)(0, 0);
      slot_vals[4 * s + 2] = tape.val(losses.cai)(0, 0);
      slot_vals[4 * s + 3] = tape.val(losses.total)(0, 0);
    });

    GradStore grads(model_.params);
    for (int s = 0; s < b; ++s) slot_grads[s].add_into(grads);
    for (int s = 0; s < b; ++s) kpl_donor_fallbacks_ += slot_fallbacks[s];

    PretrainTraceRow row;
    row.step = step;
    for (int s = 0; s < b; ++s) {
      row.mvlm += slot_vals[4 * s + 0] / b;
      row.kpl += slot_vals[4 * s + 1] / b;
      row.cai += slot_vals[4 * s + 2] / b;
      row.total += slot_vals[4 * s + 3] / b;
    }
    if (!std::isfinite(row.total)) {
      throw NumericError("pretrain loss diverged at step " + std::to_string(step));
    }

    if (hyper_.clip_norm > 0) {
      const double norm = std::sqrt(grads.squared_norm());
      if (norm > hyper_.clip_norm) grads.scale(hyper_.clip_norm / norm);
    }
    row.lr = lr_at(step, hyper_.steps, hyper_.base_lr, hyper_.warmup_frac);
    opt_.step(model_.params, grads, groups_, row.lr);
    trace.push_back(row);
    step_ = step;
    if (hyper_.checkpoint_every > 0 && checkpoint_hook && step % hyper_.checkpoint_every == 0) {
      checkpoint_hook(step);
    }
  }
  return trace;
}

namespace {

double finetune_slot_loss(const Model& model, const SequencedDoc& doc, Task task, Rng* drop_rng,
                          GradStore* grads, double backward_seed) {
  Tape tape(model.params, grads);
  SequenceForward fwd = forward_sequence(tape, model, doc.inputs, drop_rng);
  Var loss;
  if (task == Task::ser) {
    const std::vector<int> labels =
        encode_bio(doc.entities, doc.inputs, model.config.n_categories);
    loss = ser_loss(tape, ser_logits(tape, fwd.joint, model), labels);
  } else {
    const auto pairs = re_candidates(static_cast<int>(doc.entities.size()));
    if (pairs.empty()) return 0.0;  // fewer than two entities: nothing to score
    const std::vector<int> labels = re_gold_labels(pairs, doc.relations);
    loss = tape.mean_cross_entropy(re_logits(tape, fwd.joint, doc.entities, pairs, model), labels);
  }
  if (grads != nullptr) tape.backward(loss, backward_seed);
  return tape.val(loss)(0, 0);
}

}  // namespace

std::vector<FinetuneTraceRow> Trainer::run_finetune(const std::vector<SequencedDoc>& data,
                                                    Task task) {
  if (data.empty()) throw DataError("finetune: empty corpus");
  std::vector<FinetuneTraceRow> trace;
  trace.reserve(hyper_.steps);

  for (long step = 1; step <= hyper_.steps; ++step) {
    const std::vector<int> batch = next_batch(data.size());
    const int b = static_cast<int>(batch.size());

    std::vector<GradStore> slot_grads(b, GradStore(model_.params));
    std::vector<double> slot_loss(b, 0.0);
    parallel_slots(b, hyper_.threads, [&](int s) {
      Rng drop_rng(child_seed(hyper_.seed, static_cast<std::uint64_t>(step), 2 * s + 1));
      slot_loss[s] = finetune_slot_loss(model_, data[batch[s]], task, &drop_rng, &slot_grads[s],
                                        1.0 / b);
    });

    GradStore grads(model_.params);
    for (int s = 0; s < b; ++s) slot_grads[s].add_into(grads);

    FinetuneTraceRow row;
    row.step = step;
    for (int s = 0; s < b; ++s) row.loss += slot_loss[s] / b;
    if (!std::isfinite(row.loss)) {
      throw NumericError("finetune loss diverged at step " + std::to_string(step));
    }
    if (hyper_.clip_norm > 0) {
      const double norm = std::sqrt(grads.squared_norm());
      if (norm > hyper_.clip_norm) grads.scale(hyper_.clip_norm / norm);
    }
    row.lr = lr_at(step, hyper_.steps, hyper_.base_lr, hyper_.warmup_frac);
    opt_.step(model_.params, grads, groups_, row.lr);
    trace.push_back(row);
    step_ = step;
    if (hyper_.checkpoint_every > 0 && checkpoint_hook && step % hyper_.checkpoint_every == 0) {
      checkpoint_hook(step);
    }
  }
  return trace;
}

void write_pretrain_trace(const std::string& path, const std::vector<PretrainTraceRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trace: " + path);
  out << "step,lr,loss_mvlm,loss_kpl,loss_cai,total\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.step << ',' << r.lr << ',' << r.mvlm << ',' << r.kpl << ',' << r.cai << ','
        << r.total << '\n';
  }
}

void write_finetune_trace(const std::string& path, const std::vector<FinetuneTraceRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trace: " + path);
  out << "step,lr,loss\n";
  out.precision(17);
  for (const auto& r : rows) out << r.step << ',' << r.lr << ',' << r.loss << '\n';
}

std::vector<SpanEntity> predict_entities(const Model& m, const SequencedDoc& doc) {
  Tape tape(m.params, nullptr);
  SequenceForward fwd = forward_sequence(tape, m, doc.inputs, nullptr);
  const Mat logits = tape.val(ser_logits(tape, fwd.joint, m));
  std::vector<int> tags(doc.inputs.length(), kIgnoreLabel);
  for (int i = 0; i < doc.inputs.length(); ++i) {
    if (!doc.inputs.is_content(i)) continue;
    int best = 0;
    logits.row(i).maxCoeff(&best);
    tags[i] = best;
  }
  return decode_bio(tags, m.config.n_categories);
}

std::vector<SpanLink> predict_links(const Model& m, const SequencedDoc& doc) {
  const auto pairs = re_candidates(static_cast<int>(doc.entities.size()));
  if (pairs.empty()) return {};
  Tape tape(m.params, nullptr);
  SequenceForward fwd = forward_sequence(tape, m, doc.inputs, nullptr);
  const Mat logits = tape.val(re_logits(tape, fwd.joint, doc.entities, pairs, m));
  std::vector<SpanLink> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (logits(static_cast<int>(p), 1) > logits(static_cast<int>(p), 0)) {
      const SpanEntity& h = doc.entities[pairs[p].first];
      const SpanEntity& t = doc.entities[pairs[p].second];
      out.push_back({h.begin, h.end, t.begin, t.end});
    }
  }
  return out;
}

namespace {

template <typename Fn>
void eval_docs(const std::vector<SequencedDoc>& docs, int threads, Fn per_doc) {
  parallel_slots(static_cast<int>(docs.size()), threads, per_doc);
}

}  // namespace

PRF evaluate_ser(const Model& m, const std::vector<SequencedDoc>& docs, int threads) {
  std::vector<std::vector<SpanEntity>> pred(docs.size()), gold(docs.size());
  eval_docs(docs, threads, [&](int d) {
    pred[d] = predict_entities(m, docs[d]);
    gold[d] = docs[d].entities;
  });
  return entity_f1(pred, gold);
}

PRF evaluate_re(const Model& m, const std::vector<SequencedDoc>& docs, int threads) {
  std::vector<std::vector<SpanLink>> pred(docs.size()), gold(docs.size());
  eval_docs(docs, threads, [&](int d) {
    pred[d] = predict_links(m, docs[d]);
    gold[d] = links_from_relations(docs[d].entities, docs[d].relations);
  });
  return relation_f1(pred, gold);
}

}  // namespace lilt
