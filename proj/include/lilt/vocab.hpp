#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lilt/document.hpp"

namespace lilt {

// Lowercased whitespace tokenization.
std::vector<std::string> tokenize(const std::string& text);

// Word-level vocabulary with five reserved ids. Word types below min_count
// fall back to [UNK]. Id assignment is deterministic: count desc, then
// lexicographic.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumReserved = 5;

  static Vocabulary build(const std::vector<Document>& corpus, int min_count);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int id_of(const std::string& token) const;             // [UNK] when absent
  const std::string& token_of(int id) const;
  static bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }

  void save(const std::string& path) const;              // "token<TAB>id" lines
  static Vocabulary load(const std::string& path);
  std::string fingerprint() const;                       // FNV-1a of the serialized form

 private:
  Vocabulary();
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace lilt
