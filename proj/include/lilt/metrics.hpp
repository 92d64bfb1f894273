#pragma once

#include <string>
#include <vector>

#include "lilt/heads.hpp"
#include "lilt/sequence.hpp"

namespace lilt {

struct PRF {
  double precision = 0, recall = 0, f1 = 0;
  long tp = 0, fp = 0, fn = 0;
};

PRF prf_from_counts(long tp, long fp, long fn);

// Micro-averaged exact-match entity F1: a prediction counts iff category and
// token span both match a gold entity of the same document. Overlapping gold
// entities are rejected.
PRF entity_f1(const std::vector<std::vector<SpanEntity>>& pred,
              const std::vector<std::vector<SpanEntity>>& gold);

// Micro-averaged F1 over directed (head span, tail span) links.
PRF relation_f1(const std::vector<std::vector<SpanLink>>& pred,
                const std::vector<std::vector<SpanLink>>& gold);

std::string metrics_json(const std::string& task, const PRF& prf, int n_docs);

}  // namespace lilt
