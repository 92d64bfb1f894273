#include "lilt/metrics.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lilt/errors.hpp"

namespace lilt {

PRF prf_from_counts(long tp, long fp, long fn) {
  PRF r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

namespace {

void check_no_overlap(const std::vector<SpanEntity>& entities) {
  std::vector<SpanEntity> sorted = entities;
  std::sort(sorted.begin(), sorted.end(),
            [](const SpanEntity& a, const SpanEntity& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].begin < sorted[i - 1].end) {
      throw DataError("overlapping gold entities at token " + std::to_string(sorted[i].begin));
    }
  }
}

template <typename T>
void count_doc(const std::vector<T>& pred, const std::vector<T>& gold, long& tp, long& fp,
               long& fn) {
  const std::set<T> ps(pred.begin(), pred.end());
  const std::set<T> gs(gold.begin(), gold.end());
  long hits = 0;
  for (const T& p : ps) hits += gs.count(p) ? 1 : 0;
  tp += hits;
  fp += static_cast<long>(ps.size()) - hits;
  fn += static_cast<long>(gs.size()) - hits;
}

}  // namespace

PRF entity_f1(const std::vector<std::vector<SpanEntity>>& pred,
              const std::vector<std::vector<SpanEntity>>& gold) {
  if (pred.size() != gold.size()) throw ShapeError("entity_f1: document counts differ");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t d = 0; d < pred.size(); ++d) {
    check_no_overlap(gold[d]);
    count_doc(pred[d], gold[d], tp, fp, fn);
  }
  return prf_from_counts(tp, fp, fn);
}

PRF relation_f1(const std::vector<std::vector<SpanLink>>& pred,
                const std::vector<std::vector<SpanLink>>& gold) {
  if (pred.size() != gold.size()) throw ShapeError("relation_f1: document counts differ");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t d = 0; d < pred.size(); ++d) {
    count_doc(pred[d], gold[d], tp, fp, fn);
  }
  return prf_from_counts(tp, fp, fn);
}

std::string metrics_json(const std::string& task, const PRF& prf, int n_docs) {
  nlohmann::json j;
  j["task"] = task;
  j["precision"] = prf.precision;
  j["recall"] = prf.recall;
  j["f1"] = prf.f1;
  j["tp"] = prf.tp;
  j["fp"] = prf.fp;
  j["fn"] = prf.fn;
  j["n_docs"] = n_docs;
  return j.dump(2) + "\n";
}

}  // namespace lilt
