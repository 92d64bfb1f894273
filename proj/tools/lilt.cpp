// Command-line driver: corpus generation, pre-training, fine-tuning,
// evaluation, and checkpoint inspection.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lilt/checkpoint.hpp"
#include "lilt/document.hpp"
#include "lilt/encoder.hpp"
#include "lilt/errors.hpp"
#include "lilt/metrics.hpp"
#include "lilt/run_config.hpp"
#include "lilt/synth.hpp"
#include "lilt/trainer.hpp"
#include "lilt/vocab.hpp"

namespace fs = std::filesystem;
using namespace lilt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct DataOpts {
  std::string dir;
  std::string format = "native";  // native | funsd
};

std::vector<Document> load_docs(const DataOpts& d, Split split) {
  if (d.format == "native") return load_corpus_dir(d.dir);
  if (d.format == "funsd") return load_funsd_dir(d.dir, split);
  throw ConfigError("unknown data format: \"" + d.format + "\"");
}

void add_run_config_flags(CLI::App* cmd, RunConfig& rc) {
  auto opt = [&](const std::string& flag, auto& field, const std::string& key) {
    cmd->add_option(flag, field)->each([&rc, key](const std::string&) { rc.provided.insert(key); });
  };
  opt("--layers", rc.layers, "layers");
  opt("--heads", rc.heads, "heads");
  opt("--d-text", rc.d_text, "d_text");
  opt("--d-layout", rc.d_layout, "d_layout");
  opt("--ffn-text", rc.ffn_text, "ffn_text");
  opt("--ffn-layout", rc.ffn_layout, "ffn_layout");
  opt("--max-seq", rc.max_seq, "max_seq");
  opt("--kpl-grid", rc.kpl_grid, "kpl_grid");
  opt("--type-dim", rc.type_dim, "type_dim");
  opt("--d-rel", rc.d_rel, "d_rel");
  opt("--dropout", rc.dropout, "dropout");
  opt("--mvlm-rate", rc.mvlm_rate, "mvlm_rate");
  opt("--kpl-rate", rc.kpl_rate, "kpl_rate");
  opt("--mask-frac", rc.mask_frac, "mask_frac");
  opt("--random-frac", rc.random_frac, "random_frac");
  opt("--lr", rc.lr, "lr");
  opt("--beta1", rc.beta1, "beta1");
  opt("--beta2", rc.beta2, "beta2");
  opt("--eps", rc.eps, "eps");
  opt("--weight-decay", rc.weight_decay, "weight_decay");
  opt("--warmup-frac", rc.warmup_frac, "warmup_frac");
  opt("--clip-norm", rc.clip_norm, "clip_norm");
  opt("--seed", rc.seed, "seed");
  opt("--steps", rc.steps, "steps");
  opt("--batch-size", rc.batch_size, "batch_size");
  opt("--threads", rc.threads, "threads");
  opt("--checkpoint-every", rc.checkpoint_every, "checkpoint_every");
  opt("--min-count", rc.min_count, "min_count");
  cmd->add_option_function<std::string>(
      "--slow-ratio",
      [&rc](const std::string& s) {
        rc.slow_ratio = (s == "inf" || s == "+inf" || s == "infinity")
                            ? std::numeric_limits<double>::infinity()
                            : std::stod(s);
        rc.provided.insert("slow_ratio");
      },
      "text-stream slow-down ratio (number or \"inf\")");
}

// Applies --config (if any) before CLI11 binds the remaining flags.
void preload_config(int argc, char** argv, RunConfig& rc) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      rc.load_json_file(argv[i + 1]);
      return;
    }
    if (a.rfind("--config=", 0) == 0) {
      rc.load_json_file(a.substr(9));
      return;
    }
  }
}

void enforce_geometry(const RunConfig& rc, const ModelConfig& requested,
                      const ModelConfig& from_ckpt) {
  const std::string diff = config_diff(from_ckpt, requested);
  if (rc.provided_geometry() && !diff.empty()) {
    throw ConfigError("checkpoint/config geometry mismatch:\n" + diff);
  }
}

std::string sibling_vocab(const std::string& checkpoint_path) {
  return (fs::path(checkpoint_path).parent_path() / "vocab.tsv").string();
}

void save_with_abort_guard(Model& model, Trainer& trainer, const std::string& out_dir,
                           const Vocabulary& vocab, const std::function<void()>& run) {
  try {
    run();
  } catch (const NumericError&) {
    // Parameters still hold the last good state; persist them before failing.
    save_checkpoint((fs::path(out_dir) / "checkpoint.aborted.lilt").string(), model,
                    &trainer.optimizer(), trainer.steps_done(), trainer.rng().serialize(),
                    vocab.fingerprint());
    throw;
  }
}

int cmd_gen_corpus(const GenConfig& gen, const std::string& out) {
  const std::vector<Document> docs = generate_corpus(gen);
  write_corpus(docs, gen, out);
  std::cout << "wrote " << docs.size() << " documents to " << out << "\n";
  return 0;
}

int cmd_pretrain(RunConfig rc, const DataOpts& data, const std::string& out,
                 const std::string& vocab_path) {
  fs::create_directories(out);
  const std::vector<Document> docs = load_docs(data, Split::train);
  if (docs.empty()) throw DataError("pretrain: no documents in " + data.dir);

  const Vocabulary vocab = vocab_path.empty() ? Vocabulary::build(docs, rc.min_count)
                                              : Vocabulary::load(vocab_path);
  vocab.save((fs::path(out) / "vocab.tsv").string());

  Model model(rc.model_config(vocab.size(), Mode::pretrain, true, false, false));
  Rng init_rng(child_seed(rc.seed, 0x1217));
  model.init_params(init_rng);

  std::vector<ModelInputs> seqs;
  seqs.reserve(docs.size());
  for (const auto& d : docs) seqs.push_back(build_sequence(d, vocab, model.config.max_seq));

  TrainHyper hyper = rc.hyper();
  hyper.checkpoint_every = rc.checkpoint_every;
  Trainer trainer(model, hyper, Mode::pretrain);
  trainer.checkpoint_hook = [&](long step) {
    save_checkpoint(
        (fs::path(out) / ("checkpoint.step" + std::to_string(step) + ".lilt")).string(), model,
        &trainer.optimizer(), step, trainer.rng().serialize(), vocab.fingerprint());
  };

  std::vector<PretrainTraceRow> trace;
  save_with_abort_guard(model, trainer, out, vocab, [&] { trace = trainer.run_pretrain(seqs); });

  write_pretrain_trace((fs::path(out) / "trace.csv").string(), trace);
  save_checkpoint((fs::path(out) / "checkpoint.lilt").string(), model, &trainer.optimizer(),
                  trainer.steps_done(), trainer.rng().serialize(), vocab.fingerprint());
  if (trainer.kpl_donor_fallbacks() > 0) {
    std::cerr << "note: " << trainer.kpl_donor_fallbacks()
              << " KPL random-box draws fell back to the zero box\n";
  }
  if (!trace.empty()) {
    std::cout << "final losses: mvlm=" << trace.back().mvlm << " kpl=" << trace.back().kpl
              << " cai=" << trace.back().cai << " total=" << trace.back().total << "\n";
  }
  std::cout << "checkpoint written to " << (fs::path(out) / "checkpoint.lilt").string() << "\n";
  return 0;
}

int cmd_finetune(RunConfig rc, const DataOpts& data, const std::string& task_str,
                 const std::string& out, const std::string& checkpoint_path, bool scratch,
                 std::string vocab_path) {
  const Task task = task_from(task_str);
  fs::create_directories(out);

  CheckpointData ckpt;
  if (!scratch) {
    if (checkpoint_path.empty()) {
      throw ConfigError("finetune needs --checkpoint, or --scratch with --vocab");
    }
    ckpt = read_checkpoint(checkpoint_path);
    if (vocab_path.empty()) vocab_path = sibling_vocab(checkpoint_path);
  } else if (vocab_path.empty()) {
    throw ConfigError("--scratch requires --vocab");
  }
  const Vocabulary vocab = Vocabulary::load(vocab_path);
  vocab.save((fs::path(out) / "vocab.tsv").string());

  if (!scratch) {
    if (!ckpt.vocab_hash.empty() && ckpt.vocab_hash != vocab.fingerprint()) {
      throw DataError("vocabulary does not match the checkpoint (fingerprint mismatch)");
    }
    if (rc.provided_geometry()) {
      enforce_geometry(rc, rc.model_config(vocab.size(), Mode::finetune, false,
                                           task == Task::ser, task == Task::re),
                       ckpt.config);
    }
    rc.adopt_geometry(ckpt.config);
  }

  Model model(rc.model_config(vocab.size(), Mode::finetune, false, task == Task::ser,
                              task == Task::re));
  Rng init_rng(child_seed(rc.seed, 0x1217));
  model.init_params(init_rng);
  if (!scratch) {
    const int restored = restore_params(model, ckpt, /*strict=*/false);
    std::cerr << "restored " << restored << " tensors from " << checkpoint_path << "\n";
  }

  const std::vector<Document> docs = load_docs(data, Split::train);
  if (docs.empty()) throw DataError("finetune: no documents in " + data.dir);
  std::vector<SequencedDoc> seqs;
  long dropped = 0;
  for (const auto& d : docs) {
    seqs.push_back(build_sequenced_doc(d, vocab, model.config.max_seq));
    dropped += seqs.back().dropped_entities;
  }
  if (dropped > 0) std::cerr << "note: " << dropped << " entities dropped by truncation\n";

  TrainHyper hyper = rc.hyper();
  hyper.checkpoint_every = rc.checkpoint_every;
  Trainer trainer(model, hyper, Mode::finetune);
  trainer.checkpoint_hook = [&](long step) {
    save_checkpoint(
        (fs::path(out) / ("checkpoint.step" + std::to_string(step) + ".lilt")).string(), model,
        &trainer.optimizer(), step, trainer.rng().serialize(), vocab.fingerprint());
  };

  std::vector<FinetuneTraceRow> trace;
  save_with_abort_guard(model, trainer, out, vocab,
                        [&] { trace = trainer.run_finetune(seqs, task); });

  write_finetune_trace((fs::path(out) / "trace.csv").string(), trace);
  save_checkpoint((fs::path(out) / "checkpoint.lilt").string(), model, &trainer.optimizer(),
                  trainer.steps_done(), trainer.rng().serialize(), vocab.fingerprint());
  if (!trace.empty()) std::cout << "final loss: " << trace.back().loss << "\n";
  std::cout << "checkpoint written to " << (fs::path(out) / "checkpoint.lilt").string() << "\n";
  return 0;
}

int cmd_eval(RunConfig rc, const DataOpts& data, const std::string& task_str,
             const std::string& checkpoint_path, std::string vocab_path,
             const std::string& out_file, Split split) {
  const Task task = task_from(task_str);
  const CheckpointData ckpt = read_checkpoint(checkpoint_path);
  if (vocab_path.empty()) vocab_path = sibling_vocab(checkpoint_path);
  const Vocabulary vocab = Vocabulary::load(vocab_path);
  if (!ckpt.vocab_hash.empty() && ckpt.vocab_hash != vocab.fingerprint()) {
    throw DataError("vocabulary does not match the checkpoint (fingerprint mismatch)");
  }
  if (task == Task::ser && !ckpt.config.with_ser_head) {
    throw ConfigError("checkpoint has no SER head; fine-tune with --task ser first");
  }
  if (task == Task::re && !ckpt.config.with_re_head) {
    throw ConfigError("checkpoint has no RE head; fine-tune with --task re first");
  }
  if (rc.provided_geometry()) {
    enforce_geometry(rc, rc.model_config(vocab.size(), Mode::finetune, false,
                                         task == Task::ser, task == Task::re),
                     ckpt.config);
  }

  ModelConfig cfg = ckpt.config;
  cfg.mode = Mode::finetune;
  Model model(cfg);
  restore_params(model, ckpt, /*strict=*/true);

  const std::vector<Document> docs = load_docs(data, split);
  std::vector<SequencedDoc> seqs;
  for (const auto& d : docs) seqs.push_back(build_sequenced_doc(d, vocab, cfg.max_seq));

  const PRF prf = task == Task::ser ? evaluate_ser(model, seqs, rc.threads)
                                    : evaluate_re(model, seqs, rc.threads);
  const std::string json = metrics_json(task_str, prf, static_cast<int>(docs.size()));
  std::cout << json;
  if (!out_file.empty()) {
    std::ofstream f(out_file, std::ios::binary);
    if (!f) throw DataError("cannot write metrics file: " + out_file);
    f << json;
  }
  return 0;
}

int cmd_inspect(const std::string& checkpoint_path) {
  const CheckpointData ckpt = read_checkpoint(checkpoint_path);
  std::cout << "config: " << model_config_to_json(ckpt.config) << "\n";
  std::cout << "step: " << ckpt.step << "\n";
  std::cout << "vocab_hash: " << ckpt.vocab_hash << "\n";
  std::cout << "optimizer state: " << (ckpt.has_optimizer ? "present" : "absent") << "\n";
  std::cout << "tensors (name rows x cols l2norm):\n";
  for (const auto& [name, m] : ckpt.tensors) {
    std::cout << "  " << name << " " << m.rows() << "x" << m.cols() << " " << m.norm() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-stream text+layout transformer for structured documents"};
  app.require_subcommand(1);

  RunConfig rc;
  try {
    preload_config(argc, argv, rc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::string config_path;  // consumed by preload_config; registered so CLI11 accepts it

  // gen-corpus
  GenConfig gen;
  std::string gen_out, gen_split = "train";
  CLI::App* cg = app.add_subcommand("gen-corpus", "generate a synthetic form corpus");
  cg->add_option("--out", gen_out)->required();
  cg->add_option("--n-docs", gen.n_docs);
  cg->add_option("--seed", gen.seed);
  cg->add_option("--rows", gen.grid_rows);
  cg->add_option("--cols", gen.grid_cols);
  cg->add_option("--key-lexicon", gen.key_lexicon);
  cg->add_option("--dates", gen.dates);
  cg->add_option("--amounts", gen.amounts);
  cg->add_option("--codes", gen.codes);
  cg->add_option("--names", gen.names);
  cg->add_option("--jitter", gen.jitter);
  cg->add_option("--header-prob", gen.header_prob);
  cg->add_option("--distractors", gen.n_distractors);
  cg->add_option("--split", gen_split)->check(CLI::IsMember({"train", "test"}));

  // pretrain
  DataOpts pt_data;
  std::string pt_out, pt_vocab;
  CLI::App* cp = app.add_subcommand("pretrain", "run self-supervised pre-training");
  cp->add_option("--config", config_path);
  cp->add_option("--data", pt_data.dir)->required();
  cp->add_option("--format", pt_data.format)->check(CLI::IsMember({"native", "funsd"}));
  cp->add_option("--out", pt_out)->required();
  cp->add_option("--vocab", pt_vocab);
  add_run_config_flags(cp, rc);

  // finetune
  DataOpts ft_data;
  std::string ft_out, ft_task, ft_ckpt, ft_vocab;
  bool ft_scratch = false;
  CLI::App* cf = app.add_subcommand("finetune", "fine-tune for SER or RE");
  cf->add_option("--config", config_path);
  cf->add_option("--data", ft_data.dir)->required();
  cf->add_option("--format", ft_data.format)->check(CLI::IsMember({"native", "funsd"}));
  cf->add_option("--task", ft_task)->required()->check(CLI::IsMember({"ser", "re"}));
  cf->add_option("--out", ft_out)->required();
  cf->add_option("--checkpoint", ft_ckpt);
  cf->add_flag("--scratch", ft_scratch, "train from random initialization");
  cf->add_option("--vocab", ft_vocab);
  add_run_config_flags(cf, rc);

  // eval
  DataOpts ev_data;
  std::string ev_task, ev_ckpt, ev_vocab, ev_out, ev_split = "test";
  CLI::App* ce = app.add_subcommand("eval", "evaluate a fine-tuned checkpoint");
  ce->add_option("--config", config_path);
  ce->add_option("--data", ev_data.dir)->required();
  ce->add_option("--format", ev_data.format)->check(CLI::IsMember({"native", "funsd"}));
  ce->add_option("--task", ev_task)->required()->check(CLI::IsMember({"ser", "re"}));
  ce->add_option("--checkpoint", ev_ckpt)->required();
  ce->add_option("--vocab", ev_vocab);
  ce->add_option("--out", ev_out);
  ce->add_option("--split", ev_split)->check(CLI::IsMember({"train", "test"}));
  add_run_config_flags(ce, rc);

  // inspect
  std::string in_ckpt;
  CLI::App* ci = app.add_subcommand("inspect", "dump checkpoint header and tensor norms");
  ci->add_option("--checkpoint", in_ckpt)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (cg->parsed()) {
      gen.split = gen_split == "train" ? Split::train : Split::test;
      return cmd_gen_corpus(gen, gen_out);
    }
    if (cp->parsed()) return cmd_pretrain(rc, pt_data, pt_out, pt_vocab);
    if (cf->parsed()) {
      return cmd_finetune(rc, ft_data, ft_task, ft_out, ft_ckpt, ft_scratch, ft_vocab);
    }
    if (ce->parsed()) {
      return cmd_eval(rc, ev_data, ev_task, ev_ckpt, ev_vocab, ev_out,
                      ev_split == "train" ? Split::train : Split::test);
    }
    if (ci->parsed()) return cmd_inspect(in_ckpt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
