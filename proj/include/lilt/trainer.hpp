#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lilt/masking.hpp"
#include "lilt/metrics.hpp"
#include "lilt/model.hpp"
#include "lilt/optimizer.hpp"

namespace lilt {

struct TrainHyper {
  long steps = 0;
  int batch_size = 8;
  double base_lr = 3e-4;
  AdamConfig adam;
  double warmup_frac = 0.10;
  double slow_ratio = 1000.0;  // infinity freezes the text stream (pretrain only)
  double clip_norm = 1.0;      // 0 disables clipping
  MaskParams masking;
  std::uint64_t seed = 0;
  int threads = 0;             // 0 = hardware concurrency
  long checkpoint_every = 0;   // 0 = no periodic checkpoints
  void validate() const;
};

struct PretrainTraceRow {
  long step = 0;
  double lr = 0, mvlm = 0, kpl = 0, cai = 0, total = 0;
};

struct FinetuneTraceRow {
  long step = 0;
  double lr = 0, loss = 0;
};

enum class Task { ser, re };
Task task_from(const std::string& s);
const char* task_name(Task t);

// Runs training with deterministic batching: per-epoch shuffles come from the
// run seed, each batch slot gets its own child RNG streams, and per-slot
// gradients are reduced in slot order, so results do not depend on thread
// count. Losses are per-sequence means averaged over the batch.
class Trainer {
 public:
  Trainer(Model& model, const TrainHyper& hyper, Mode mode);

  std::vector<PretrainTraceRow> run_pretrain(const std::vector<ModelInputs>& data);
  std::vector<FinetuneTraceRow> run_finetune(const std::vector<SequencedDoc>& data, Task task);

  AdamW& optimizer() { return opt_; }
  Rng& rng() { return rng_; }
  long kpl_donor_fallbacks() const { return kpl_donor_fallbacks_; }
  long steps_done() const { return step_; }

  // Invoked every hyper.checkpoint_every steps, after the update is applied.
  std::function<void(long)> checkpoint_hook;

 private:
  std::vector<int> next_batch(std::size_t data_size);

  Model& model_;
  TrainHyper hyper_;
  Mode mode_;
  AdamW opt_;
  std::vector<ParamGroup> groups_;
  Rng rng_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  long step_ = 0;
  long kpl_donor_fallbacks_ = 0;
};

void write_pretrain_trace(const std::string& path, const std::vector<PretrainTraceRow>& rows);
void write_finetune_trace(const std::string& path, const std::vector<FinetuneTraceRow>& rows);

// Forward-only evaluation (no dropout). Predictions are decoded with the
// fine-tune graph wiring; RE scores gold entity pairs.
PRF evaluate_ser(const Model& m, const std::vector<SequencedDoc>& docs, int threads = 0);
PRF evaluate_re(const Model& m, const std::vector<SequencedDoc>& docs, int threads = 0);

std::vector<SpanEntity> predict_entities(const Model& m, const SequencedDoc& doc);
std::vector<SpanLink> predict_links(const Model& m, const SequencedDoc& doc);

// Deterministic static partition over [0, n): worker w handles w, w+T, ...
void parallel_slots(int n, int threads, const std::function<void(int)>& fn);

}  // namespace lilt
