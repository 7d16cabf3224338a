#ifndef SIGEVAL_CANDIDATES_H_
#define SIGEVAL_CANDIDATES_H_

#include <optional>
#include <vector>

#include "sigeval/expr.h"

namespace sigeval {

// Ranked integral predictions, rank 1 first. When present, `scores` holds
// one sequence probability per candidate and is non-increasing.
struct CandidateList {
  std::vector<TokenSeq> candidates;
  std::optional<std::vector<double>> scores;

  std::size_t size() const { return candidates.size(); }
  bool empty() const { return candidates.empty(); }
};

}  // namespace sigeval

#endif  // SIGEVAL_CANDIDATES_H_
