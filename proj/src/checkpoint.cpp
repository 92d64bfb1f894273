#include "lilt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lilt/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

using nlohmann::json;

namespace lilt {

namespace {
constexpr char kMagic[8] = {'L', 'I', 'L', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

json config_json(const ModelConfig& c) {
  return json{{"layers", c.layers},
              {"heads", c.heads},
              {"d_text", c.d_text},
              {"d_layout", c.d_layout},
              {"ffn_text", c.ffn_text},
              {"ffn_layout", c.ffn_layout},
              {"max_seq", c.max_seq},
              {"vocab_size", c.vocab_size},
              {"kpl_grid", c.kpl_grid},
              {"n_categories", c.n_categories},
              {"type_dim", c.type_dim},
              {"d_rel", c.d_rel},
              {"dropout", c.dropout},
              {"ln_eps", c.ln_eps},
              {"mode", mode_name(c.mode)},
              {"with_pretrain_heads", c.with_pretrain_heads},
              {"with_ser_head", c.with_ser_head},
              {"with_re_head", c.with_re_head}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.d_text = j.at("d_text").get<int>();
  c.d_layout = j.at("d_layout").get<int>();
  c.ffn_text = j.at("ffn_text").get<int>();
  c.ffn_layout = j.at("ffn_layout").get<int>();
  c.max_seq = j.at("max_seq").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.kpl_grid = j.at("kpl_grid").get<int>();
  c.n_categories = j.at("n_categories").get<int>();
  c.type_dim = j.at("type_dim").get<int>();
  c.d_rel = j.at("d_rel").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.ln_eps = j.at("ln_eps").get<double>();
  c.mode = mode_from(j.at("mode").get<std::string>());
  c.with_pretrain_heads = j.at("with_pretrain_heads").get<bool>();
  c.with_ser_head = j.at("with_ser_head").get<bool>();
  c.with_re_head = j.at("with_re_head").get<bool>();
  return c;
}

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(2); }

ModelConfig model_config_from_json(const std::string& text) {
  return config_from(json::parse(text));
}

std::string config_diff(const ModelConfig& a, const ModelConfig& b) {
  const json ja = config_json(a);
  const json jb = config_json(b);
  std::ostringstream os;
  for (auto it = ja.begin(); it != ja.end(); ++it) {
    const std::string& key = it.key();
    // Mode and head selection legitimately change between phases.
    if (key == "mode" || key.rfind("with_", 0) == 0 || key == "dropout") continue;
    if (jb.at(key) != it.value()) {
      os << "  " << key << ": checkpoint=" << it.value() << " requested=" << jb.at(key) << "\n";
    }
  }
  return os.str();
}

void save_checkpoint(const std::string& path, const Model& model, const AdamW* opt, long step,
                     const std::string& rng_state, const std::string& vocab_hash) {
  json header;
  header["format_version"] = kVersion;
  header["config"] = config_json(model.config);
  header["step"] = step;
  header["rng"] = rng_state;
  header["vocab_hash"] = vocab_hash;
  header["has_optimizer"] = opt != nullptr;
  if (opt != nullptr) header["opt_step"] = opt->step_count();

  json manifest = json::array();
  std::uint64_t offset = 0;
  auto add_tensor = [&](const std::string& name, const Mat& m) {
    manifest.push_back({{"name", name},
                        {"dtype", "f64"},
                        {"rows", m.rows()},
                        {"cols", m.cols()},
                        {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  };
  for (int i = 0; i < model.params.size(); ++i) {
    add_tensor(model.params.info(i).name, model.params.value(i));
  }
  if (opt != nullptr) {
    for (int i = 0; i < model.params.size(); ++i) {
      add_tensor("opt.m." + model.params.info(i).name, opt->moment_m(i));
      add_tensor("opt.v." + model.params.info(i).name, opt->moment_v(i));
    }
  }
  header["tensors"] = manifest;

  const std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u64(out, header_str.size());
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  auto write_mat = [&out](const Mat& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  };
  for (int i = 0; i < model.params.size(); ++i) write_mat(model.params.value(i));
  if (opt != nullptr) {
    for (int i = 0; i < model.params.size(); ++i) {
      write_mat(opt->moment_m(i));
      write_mat(opt->moment_v(i));
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path + ": not a checkpoint file");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError(path + ": truncated header");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": bad checkpoint header: " + e.what());
  }

  CheckpointData data;
  data.config = config_from(header.at("config"));
  data.step = header.at("step").get<long>();
  data.rng_state = header.value("rng", std::string());
  data.vocab_hash = header.value("vocab_hash", std::string());
  data.has_optimizer = header.value("has_optimizer", false);
  data.opt_step = header.value("opt_step", 0L);

  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const long rows = t.at("rows").get<long>();
    const long cols = t.at("cols").get<long>();
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw DataError(path + ": truncated tensor payload at " + name);
    data.tensors.emplace(name, std::move(m));
  }
  return data;
}

int restore_params(Model& model, const CheckpointData& ckpt, bool strict) {
  int restored = 0;
  for (int i = 0; i < model.params.size(); ++i) {
    const std::string& name = model.params.info(i).name;
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) {
      if (strict) throw DataError("checkpoint is missing tensor " + name);
      continue;
    }
    const Mat& src = it->second;
    Mat& dst = model.params.value(i);
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
      throw DataError("tensor shape mismatch for " + name);
    }
    dst = src;
    ++restored;
  }
  return restored;
}

void restore_optimizer(AdamW& opt, const Model& model, const CheckpointData& ckpt) {
  if (!ckpt.has_optimizer) throw DataError("checkpoint has no optimizer state");
  for (int i = 0; i < model.params.size(); ++i) {
    const std::string& name = model.params.info(i).name;
    auto im = ckpt.tensors.find("opt.m." + name);
    auto iv = ckpt.tensors.find("opt.v." + name);
    if (im == ckpt.tensors.end() || iv == ckpt.tensors.end()) {
      throw DataError("checkpoint is missing optimizer moments for " + name);
    }
    opt.moment_m(i) = im->second;
    opt.moment_v(i) = iv->second;
  }
  opt.set_step_count(ckpt.opt_step);
}

}  // namespace lilt
