#ifndef SIGEVAL_CALCULUS_H_
#define SIGEVAL_CALCULUS_H_

#include <cstdint>
#include <string_view>
#include <variant>

#include "sigeval/expr.h"

namespace sigeval {

// Exact d/dx, returned in canonical form.
Expr differentiate(const Expr& e);

struct EquivConfig {
  int sample_count = 12;
  double rel_tolerance = 1e-9;
  double abs_tolerance = 1e-12;
  double domain_lo = -3.0;
  double domain_hi = 3.0;
  int max_retries_per_point = 20;
  // Wall-clock budget for one verify_integral call.
  double per_candidate_budget = 1.0;
  // Timeouts count as Incorrect instead of success.
  bool strict_timeout = false;
  std::uint64_t seed = 0x5eed;

  bool valid() const;
};

enum class EquivResult { kEquivalent, kNotEquivalent, kInsufficientDomain };

// Probabilistic identity test by evaluation at seeded sample points. A point
// where either side is undefined is redrawn, up to max_retries_per_point.
EquivResult check_equivalence(const Expr& a, const Expr& b, const EquivConfig& cfg);
bool numeric_equiv(const Expr& a, const Expr& b, const EquivConfig& cfg);

// True when at least sample_count points of the sample domain evaluate.
bool has_sample_domain(const Expr& e, const EquivConfig& cfg);

enum class VerdictStatus { kCorrect, kIncorrect, kTimeoutCountedCorrect, kUnparseable };

std::string_view status_name(VerdictStatus status);
VerdictStatus status_from_name(std::string_view name);

struct Verdict {
  VerdictStatus status = VerdictStatus::kIncorrect;
  double elapsed = 0.0;
  // 1-based rank of the candidate, filled in by callers that know it.
  int candidate_rank = 0;

  bool success() const {
    return status == VerdictStatus::kCorrect || status == VerdictStatus::kTimeoutCountedCorrect;
  }
};

using Candidate = std::variant<Expr, TokenSeq>;

// Correct iff d/dx candidate matches the problem numerically. Running past
// cfg.per_candidate_budget yields TimeoutCountedCorrect (Incorrect when
// cfg.strict_timeout).
Verdict verify_integral(const Expr& problem, const Candidate& candidate, const EquivConfig& cfg);

}  // namespace sigeval

#endif  // SIGEVAL_CALCULUS_H_
