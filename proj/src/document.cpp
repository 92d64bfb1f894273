#include "lilt/document.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "lilt/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lilt {

const char* const kCategoryNames[kNumCategories] = {"header", "question", "answer", "other"};

int category_id(const std::string& name) {
  for (int i = 0; i < kNumCategories; ++i) {
    if (name == kCategoryNames[i]) return i;
  }
  throw DataError("unknown entity label: \"" + name + "\"");
}

const char* category_name(int id) {
  if (id < 0 || id >= kNumCategories) throw IndexError("category id out of range");
  return kCategoryNames[id];
}

const Segment* Document::segment_by_id(int id) const {
  for (const auto& s : segments) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::vector<int> sort_reading_order(const std::vector<Segment>& segments) {
  std::vector<int> perm(segments.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    const RawBBox& ba = segments[a].bbox;
    const RawBBox& bb = segments[b].bbox;
    if (ba.y0 != bb.y0) return ba.y0 < bb.y0;
    if (ba.x0 != bb.x0) return ba.x0 < bb.x0;
    return a < b;
  });
  return perm;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Converts a byte offset from nlohmann's parse_error into line:column context.
std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_json_or_throw(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(origin + " (" + locate(text, e.byte) + "): " + e.what());
  }
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw DataError("unknown split tag: \"" + s + "\"");
}

}  // namespace

Document parse_funsd_json(const std::string& text, const std::string& origin) {
  const json root = parse_json_or_throw(text, origin);
  if (!root.contains("form") || !root["form"].is_array()) {
    throw DataError(origin + ": FUNSD file has no top-level \"form\" array");
  }

  Document doc;
  std::unordered_map<int, int> item_to_entity;  // FUNSD item id -> entity index
  std::vector<std::pair<int, int>> raw_links;   // FUNSD item id pairs, key -> value

  int next_segment_id = 0;
  for (const auto& item : root["form"]) {
    const std::string text_field = item.value("text", std::string());
    if (text_field.empty() || is_blank(text_field)) continue;  // nothing to tokenize

    const auto& box = item.at("box");
    if (!box.is_array() || box.size() != 4) {
      throw DataError(origin + ": item box must be [x0, y0, x1, y1]");
    }
    Segment seg;
    seg.id = next_segment_id++;
    seg.text = text_field;
    seg.bbox.x0 = box[0].get<double>();
    seg.bbox.y0 = box[1].get<double>();
    seg.bbox.x1 = box[2].get<double>();
    seg.bbox.y1 = box[3].get<double>();
    // Scanned annotations occasionally carry inverted corners; repair them.
    if (seg.bbox.x0 > seg.bbox.x1) std::swap(seg.bbox.x0, seg.bbox.x1);
    if (seg.bbox.y0 > seg.bbox.y1) std::swap(seg.bbox.y0, seg.bbox.y1);
    doc.segments.push_back(seg);

    Entity ent;
    ent.label = category_id(item.value("label", std::string("other")));
    ent.segment_ids = {seg.id};
    const int item_id = item.value("id", -1);
    if (item_id >= 0) item_to_entity[item_id] = static_cast<int>(doc.entities.size());
    doc.entities.push_back(ent);

    if (item.contains("linking")) {
      for (const auto& pair : item["linking"]) {
        if (pair.is_array() && pair.size() == 2) {
          raw_links.emplace_back(pair[0].get<int>(), pair[1].get<int>());
        }
      }
    }
  }

  // Links are repeated on both endpoints in FUNSD files; dedup and drop pairs
  // whose endpoints were filtered out.
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : raw_links) {
    if (a == b || !seen.insert({a, b}).second) continue;
    auto ia = item_to_entity.find(a);
    auto ib = item_to_entity.find(b);
    if (ia == item_to_entity.end() || ib == item_to_entity.end()) continue;
    doc.relations.push_back({ia->second, ib->second});
  }

  // FUNSD annotations do not carry page geometry; XFUND-style files do.
  if (root.contains("img") && root["img"].is_object()) {
    doc.page_width = root["img"].value("width", 0.0);
    doc.page_height = root["img"].value("height", 0.0);
  }
  if (doc.page_width <= 0 || doc.page_height <= 0) {
    double w = 1, h = 1;
    for (const auto& s : doc.segments) {
      w = std::max(w, s.bbox.x1);
      h = std::max(h, s.bbox.y1);
    }
    doc.page_width = w;
    doc.page_height = h;
  }
  // Clamp boxes into the page so downstream normalization preconditions hold.
  for (auto& s : doc.segments) {
    s.bbox.x0 = std::clamp(s.bbox.x0, 0.0, doc.page_width);
    s.bbox.x1 = std::clamp(s.bbox.x1, 0.0, doc.page_width);
    s.bbox.y0 = std::clamp(s.bbox.y0, 0.0, doc.page_height);
    s.bbox.y1 = std::clamp(s.bbox.y1, 0.0, doc.page_height);
  }
  return doc;
}

Document parse_funsd(const std::string& path) {
  return parse_funsd_json(read_file(path), path);
}

std::vector<Document> load_funsd_dir(const std::string& dir, Split split) {
  fs::path base(dir);
  if (fs::exists(base / "annotations")) base /= "annotations";
  if (!fs::exists(base)) throw DataError("no such directory: " + dir);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(base)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& f : files) {
    Document d = parse_funsd(f.string());
    d.split = split;
    docs.push_back(std::move(d));
  }
  return docs;
}

std::string to_json(const Document& doc) {
  json j;
  j["schema_version"] = 1;
  j["page_width"] = doc.page_width;
  j["page_height"] = doc.page_height;
  j["split"] = split_name(doc.split);
  j["segments"] = json::array();
  for (const auto& s : doc.segments) {
    j["segments"].push_back({{"id", s.id},
                             {"text", s.text},
                             {"box", {s.bbox.x0, s.bbox.y0, s.bbox.x1, s.bbox.y1}}});
  }
  j["entities"] = json::array();
  for (const auto& e : doc.entities) {
    j["entities"].push_back({{"label", category_name(e.label)}, {"segments", e.segment_ids}});
  }
  j["relations"] = json::array();
  for (const auto& r : doc.relations) {
    j["relations"].push_back({{"head", r.head}, {"tail", r.tail}});
  }
  return j.dump(2) + "\n";
}

Document from_json(const std::string& text, const std::string& origin) {
  const json j = parse_json_or_throw(text, origin);
  const int version = j.value("schema_version", -1);
  if (version != 1) {
    throw DataError(origin + ": unsupported document schema_version " + std::to_string(version));
  }
  Document doc;
  doc.page_width = j.at("page_width").get<double>();
  doc.page_height = j.at("page_height").get<double>();
  if (doc.page_width <= 0 || doc.page_height <= 0) {
    throw DataError(origin + ": page dimensions must be positive");
  }
  doc.split = split_from(j.value("split", std::string("train")));
  for (const auto& s : j.at("segments")) {
    Segment seg;
    seg.id = s.at("id").get<int>();
    seg.text = s.at("text").get<std::string>();
    const auto& b = s.at("box");
    seg.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    doc.segments.push_back(std::move(seg));
  }
  for (const auto& e : j.at("entities")) {
    Entity ent;
    ent.label = category_id(e.at("label").get<std::string>());
    ent.segment_ids = e.at("segments").get<std::vector<int>>();
    for (int sid : ent.segment_ids) {
      if (doc.segment_by_id(sid) == nullptr) {
        throw DataError(origin + ": entity references missing segment " + std::to_string(sid));
      }
    }
    doc.entities.push_back(std::move(ent));
  }
  for (const auto& r : j.at("relations")) {
    Relation rel{r.at("head").get<int>(), r.at("tail").get<int>()};
    const int n = static_cast<int>(doc.entities.size());
    if (rel.head < 0 || rel.head >= n || rel.tail < 0 || rel.tail >= n || rel.head == rel.tail) {
      throw DataError(origin + ": invalid relation endpoints");
    }
    doc.relations.push_back(rel);
  }
  return doc;
}

Document load_document(const std::string& path) { return from_json(read_file(path), path); }

void save_document(const Document& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << to_json(doc);
}

std::vector<Document> load_corpus_dir(const std::string& dir) {
  if (!fs::exists(dir)) throw DataError("no such directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json" && e.path().filename() != "manifest.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& f : files) docs.push_back(load_document(f.string()));
  return docs;
}

}  // namespace lilt
