#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lilt/document.hpp"

namespace lilt {

// Synthetic structured forms on a virtual 1000x1000 page: an optional header
// band, a grid of key/value pairs (key left of its value, boxes jittered),
// and distractor segments. Value text is drawn from a pattern lexicon chosen
// by the key, so layout and content are correlated. Fully determined by seed.
struct GenConfig {
  std::uint64_t seed = 1;
  int n_docs = 100;
  int grid_rows = 4;
  int grid_cols = 2;
  int key_lexicon = 12;
  int dates = 150;    // value pattern lexicon sizes
  int amounts = 150;
  int codes = 150;
  int names = 60;
  int jitter = 6;     // normalized units
  double header_prob = 1.0;
  int n_distractors = 3;
  Split split = Split::train;

  void validate() const;
};

Document generate_document(const GenConfig& cfg, int doc_index);
std::vector<Document> generate_corpus(const GenConfig& cfg);

// Writes doc_%05d.json files plus a manifest.json into dir.
void write_corpus(const std::vector<Document>& docs, const GenConfig& cfg,
                  const std::string& dir);

}  // namespace lilt
