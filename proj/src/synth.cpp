#include "lilt/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lilt/errors.hpp"
#include "lilt/rng.hpp"

namespace fs = std::filesystem;

namespace lilt {

namespace {

constexpr int kPage = 1000;
constexpr int kGridTop = 100;
constexpr int kGridLeft = 20;
constexpr int kGridRight = 980;
constexpr int kGridBottom = 980;
constexpr int kLineHeight = 30;

const char* const kKeyRoster[] = {"date:",   "total:",  "name:",   "code:",  "city:",  "phone:",
                                  "ref:",    "status:", "amount:", "id:",    "type:",  "origin:",
                                  "due:",    "tax:",    "owner:",  "batch:", "zone:",  "fax:",
                                  "account:", "fee:",   "agent:",  "lot:",   "dept:",  "case:"};
const char* const kFirstNames[] = {"john",  "mary",  "james", "linda", "robert", "susan",
                                   "david", "karen", "peter", "nancy", "frank",  "laura",
                                   "henry", "alice", "tom",   "rose",  "carl",   "jane",
                                   "louis", "anna"};
const char* const kLastNames[] = {"smith", "jones", "brown", "davis", "miller", "wilson",
                                  "moore", "clark", "lewis", "walker"};
const char* const kHeaderFirst[] = {"invoice", "receipt", "order", "claim", "report", "statement"};
const char* const kHeaderSecond[] = {"form", "sheet", "record"};
const char* const kFiller[] = {"page",     "copy",         "void",     "draft",  "internal",
                               "approved", "confidential", "original", "file",   "pending"};

enum class Pattern { date, amount, code, name };

std::string fmt(const char* f, auto... args) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::string pattern_value(Pattern p, int i, const GenConfig& cfg) {
  switch (p) {
    case Pattern::date: {
      const int k = i % cfg.dates;
      return fmt("%02d/%02d/%04d", 1 + (k * 7) % 12, 1 + (k * 11) % 28, 1980 + (k * 13) % 40);
    }
    case Pattern::amount: {
      const int k = i % cfg.amounts;
      return fmt("$%d.%02d", 3 + (k * 97) % 9000, (k * 37) % 100);
    }
    case Pattern::code: {
      const int k = i % cfg.codes;
      return fmt("%c%c-%04d", 'a' + (k * 5) % 26, 'a' + (k * 17) % 26, 1000 + (k * 271) % 9000);
    }
    case Pattern::name: {
      const int k = i % cfg.names;
      const int nf = static_cast<int>(std::size(kFirstNames));
      const int nl = static_cast<int>(std::size(kLastNames));
      return std::string(kFirstNames[k % nf]) + " " + kLastNames[(k / nf) % nl];
    }
  }
  return {};
}

std::string key_word(int k) {
  const int n = static_cast<int>(std::size(kKeyRoster));
  std::string base = kKeyRoster[k % n];
  if (k >= n) base = base.substr(0, base.size() - 1) + std::to_string(k / n) + ":";
  return base;
}

Pattern key_pattern(int k) { return static_cast<Pattern>(k % 4); }

int pattern_size(Pattern p, const GenConfig& cfg) {
  switch (p) {
    case Pattern::date:
      return cfg.dates;
    case Pattern::amount:
      return cfg.amounts;
    case Pattern::code:
      return cfg.codes;
    case Pattern::name:
      return cfg.names;
  }
  return 1;
}

RawBBox jittered(double x0, double y0, double x1, double y1, int jitter, Rng& rng) {
  auto j = [&]() {
    return jitter > 0 ? static_cast<double>(rng.uniform_int(2 * jitter + 1) - jitter) : 0.0;
  };
  RawBBox b{x0 + j(), y0 + j(), x1 + j(), y1 + j()};
  b.x0 = std::clamp(b.x0, 0.0, static_cast<double>(kPage));
  b.x1 = std::clamp(b.x1, 0.0, static_cast<double>(kPage));
  b.y0 = std::clamp(b.y0, 0.0, static_cast<double>(kPage));
  b.y1 = std::clamp(b.y1, 0.0, static_cast<double>(kPage));
  if (b.x0 > b.x1) std::swap(b.x0, b.x1);
  if (b.y0 > b.y1) std::swap(b.y0, b.y1);
  return b;
}

}  // namespace

void GenConfig::validate() const {
  if (n_docs < 0) throw ConfigError("n_docs must be >= 0");
  if (grid_rows < 1 || grid_cols < 1) throw ConfigError("grid must be at least 1x1");
  if (key_lexicon < 1) throw ConfigError("key lexicon must be >= 1");
  if (dates < 1 || amounts < 1 || codes < 1 || names < 1) {
    throw ConfigError("value pattern lexicons must be >= 1");
  }
  if (header_prob < 0 || header_prob > 1) throw ConfigError("header_prob must be in [0, 1]");
  if (n_distractors < 0) throw ConfigError("n_distractors must be >= 0");
  const int cell_w = (kGridRight - kGridLeft) / grid_cols;
  const int cell_h = (kGridBottom - kGridTop) / grid_rows;
  if (jitter < 0 || 2 * jitter >= std::min(cell_w, cell_h)) {
    throw ConfigError("jitter must be non-negative and smaller than half a grid cell");
  }
}

Document generate_document(const GenConfig& cfg, int doc_index) {
  Rng rng(child_seed(cfg.seed, static_cast<std::uint64_t>(doc_index)));

  Document doc;
  doc.page_width = kPage;
  doc.page_height = kPage;
  doc.split = cfg.split;

  int next_id = 0;
  auto add_segment = [&](const std::string& text, const RawBBox& box, int label) {
    Segment s;
    s.id = next_id++;
    s.text = text;
    s.bbox = box;
    doc.segments.push_back(s);
    Entity e;
    e.label = label;
    e.segment_ids = {s.id};
    doc.entities.push_back(e);
    return static_cast<int>(doc.entities.size()) - 1;
  };

  if (rng.uniform() < cfg.header_prob) {
    const std::string text =
        std::string(kHeaderFirst[rng.uniform_int(std::size(kHeaderFirst))]) + " " +
        kHeaderSecond[rng.uniform_int(std::size(kHeaderSecond))];
    add_segment(text, jittered(kGridLeft, 15, 400, 15 + kLineHeight, cfg.jitter, rng),
                category_id("header"));
  }

  const double cell_w = static_cast<double>(kGridRight - kGridLeft) / cfg.grid_cols;
  const double cell_h = static_cast<double>(kGridBottom - kGridTop) / cfg.grid_rows;
  for (int r = 0; r < cfg.grid_rows; ++r) {
    for (int c = 0; c < cfg.grid_cols; ++c) {
      const double x0 = kGridLeft + c * cell_w;
      const double yc = kGridTop + r * cell_h + cell_h / 2 - kLineHeight / 2.0;
      const int key = static_cast<int>(rng.uniform_int(cfg.key_lexicon));
      const Pattern pat = key_pattern(key);
      const std::string value =
          pattern_value(pat, static_cast<int>(rng.uniform_int(pattern_size(pat, cfg))), cfg);

      const int q = add_segment(key_word(key),
                                jittered(x0 + 5, yc, x0 + 0.32 * cell_w, yc + kLineHeight,
                                         cfg.jitter, rng),
                                category_id("question"));
      const int a = add_segment(value,
                                jittered(x0 + 0.40 * cell_w, yc, x0 + 0.92 * cell_w,
                                         yc + kLineHeight, cfg.jitter, rng),
                                category_id("answer"));
      doc.relations.push_back({q, a});
    }
  }

  for (int d = 0; d < cfg.n_distractors; ++d) {
    std::string text;
    if (rng.uniform() < 0.5) {
      // Value-pattern text with no key next to it; label depends on layout.
      const Pattern pat = static_cast<Pattern>(rng.uniform_int(4));
      text = pattern_value(pat, static_cast<int>(rng.uniform_int(pattern_size(pat, cfg))), cfg);
    } else {
      text = kFiller[rng.uniform_int(std::size(kFiller))];
      if (rng.uniform() < 0.5) {
        text += std::string(" ") + kFiller[rng.uniform_int(std::size(kFiller))];
      }
    }
    const double x0 = static_cast<double>(rng.uniform_int(kPage - 160));
    const double y0 = static_cast<double>(rng.uniform_int(kPage - kLineHeight));
    add_segment(text, jittered(x0, y0, x0 + 60 + rng.uniform_int(100), y0 + kLineHeight,
                               cfg.jitter, rng),
                category_id("other"));
  }
  return doc;
}

std::vector<Document> generate_corpus(const GenConfig& cfg) {
  cfg.validate();
  std::vector<Document> docs;
  docs.reserve(cfg.n_docs);
  for (int i = 0; i < cfg.n_docs; ++i) docs.push_back(generate_document(cfg, i));
  return docs;
}

void write_corpus(const std::vector<Document>& docs, const GenConfig& cfg,
                  const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["n_docs"] = docs.size();
  manifest["seed"] = cfg.seed;
  manifest["grid_rows"] = cfg.grid_rows;
  manifest["grid_cols"] = cfg.grid_cols;
  manifest["key_lexicon"] = cfg.key_lexicon;
  manifest["jitter"] = cfg.jitter;
  manifest["header_prob"] = cfg.header_prob;
  manifest["n_distractors"] = cfg.n_distractors;
  manifest["files"] = nlohmann::json::array();
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::string name = fmt("doc_%05d.json", static_cast<int>(i));
    save_document(docs[i], (fs::path(dir) / name).string());
    manifest["files"].push_back(name);
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw DataError("cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

}  // namespace lilt
