#include "lilt/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "lilt/errors.hpp"

namespace lilt {

namespace {
const char* const kReservedNames[Vocabulary::kNumReserved] = {"[PAD]", "[UNK]", "[CLS]",
                                                              "[SEP]", "[MASK]"};
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vocabulary::Vocabulary() {
  for (int i = 0; i < kNumReserved; ++i) {
    id_to_token_.emplace_back(kReservedNames[i]);
    token_to_id_[kReservedNames[i]] = i;
  }
}

Vocabulary Vocabulary::build(const std::vector<Document>& corpus, int min_count) {
  if (corpus.empty()) throw DataError("build_vocabulary: empty corpus");

  std::map<std::string, long> counts;  // ordered map gives a stable tie-break base
  for (const auto& doc : corpus) {
    for (const auto& seg : doc.segments) {
      for (const auto& tok : tokenize(seg.text)) ++counts[tok];
    }
  }

  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (const auto& [tok, n] : kept) {
    (void)n;
    v.token_to_id_[tok] = static_cast<int>(v.id_to_token_.size());
    v.id_to_token_.push_back(tok);
  }
  return v;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) throw IndexError("token id out of range: " + std::to_string(id));
  return id_to_token_[id];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file: " + path);
  for (int i = 0; i < size(); ++i) {
    out << id_to_token_[i] << '\t' << i << '\n';
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file: " + path);
  Vocabulary v;
  v.id_to_token_.clear();
  v.token_to_id_.clear();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected token<TAB>id");
    }
    const std::string tok = line.substr(0, tab);
    const int id = std::stoi(line.substr(tab + 1));
    if (id != static_cast<int>(v.id_to_token_.size())) {
      throw DataError(path + ":" + std::to_string(line_no) + ": non-contiguous token id");
    }
    v.token_to_id_[tok] = id;
    v.id_to_token_.push_back(tok);
  }
  if (v.size() < kNumReserved) throw DataError(path + ": vocabulary missing reserved tokens");
  for (int i = 0; i < kNumReserved; ++i) {
    if (v.id_to_token_[i] != kReservedNames[i]) {
      throw DataError(path + ": reserved token ids are not stable");
    }
  }
  return v;
}

std::string Vocabulary::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  };
  for (const auto& t : id_to_token_) mix(t);
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace lilt
