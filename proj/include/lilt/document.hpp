#pragma once

#include <string>
#include <vector>

#include "lilt/bbox.hpp"

namespace lilt {

// Entity categories shared by FUNSD-style forms and the synthetic corpus.
inline constexpr int kNumCategories = 4;
extern const char* const kCategoryNames[kNumCategories];  // header, question, answer, other

int category_id(const std::string& name);  // DataError on unknown label
const char* category_name(int id);

struct Segment {
  int id = 0;
  std::string text;
  RawBBox bbox;
};

struct Entity {
  int label = 0;                 // category id
  std::vector<int> segment_ids;  // segments whose tokens make up the entity
};

struct Relation {
  int head = 0;  // key entity index
  int tail = 0;  // value entity index
};

enum class Split { train, test };

struct Document {
  double page_width = 0;
  double page_height = 0;
  std::vector<Segment> segments;
  std::vector<Entity> entities;
  std::vector<Relation> relations;
  Split split = Split::train;

  const Segment* segment_by_id(int id) const;
};

// Stable permutation ordering segments top-left to bottom-right, key
// (y0, x0, original index) on raw boxes. Returns the permutation applied.
std::vector<int> sort_reading_order(const std::vector<Segment>& segments);

// FUNSD-format annotation JSON: top-level "form" array of items with
// "text", "box", "label", "linking", "id". Word-level "words" entries are
// ignored; the segment box covers the whole text string.
Document parse_funsd(const std::string& path);
Document parse_funsd_json(const std::string& json_text, const std::string& origin = "<string>");

// Loads every *.json under <dir>/annotations (or <dir> itself if there is no
// annotations subdirectory), in lexicographic filename order.
std::vector<Document> load_funsd_dir(const std::string& dir, Split split);

// Versioned native document schema (see docs/FORMATS.md).
std::string to_json(const Document& doc);
Document from_json(const std::string& json_text, const std::string& origin = "<string>");
Document load_document(const std::string& path);
void save_document(const Document& doc, const std::string& path);
std::vector<Document> load_corpus_dir(const std::string& dir);

}  // namespace lilt
