#ifndef SIGEVAL_ORACLE_H_
#define SIGEVAL_ORACLE_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sigeval/calculus.h"
#include "sigeval/candidates.h"
#include "sigeval/expr.h"
#include "sigeval/rng.h"

namespace sigeval {

// Rule-based integrator for linear combinations of
//   constants, x^q (q rational, x^-1 -> ln(x)),
//   sin/cos/exp of k*x + c, tan/ln of k*x, sqrt(k*x + c),
//   a^(k*x + c) for a positive integer a != 1.
// Anything else, including the sin(x)/x and x^x families, is unsupported
// and yields nullopt. The result is canonical.
std::optional<Expr> integrate_reference(const Expr& e);

enum class Family { kConstant, kPower, kSin, kCos, kTan, kExp, kLn, kExponential, kSqrt, kSum, kOther };

inline constexpr Family kAllFamilies[] = {Family::kConstant, Family::kPower,  Family::kSin,
                                          Family::kCos,      Family::kTan,    Family::kExp,
                                          Family::kLn,       Family::kExponential, Family::kSqrt,
                                          Family::kSum,      Family::kOther};

std::string_view family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

// Classification of the canonical form:
//   Add with at least two non-constant terms     -> sum
//   no x at all                                  -> constant
//   (constant) * x^q, or x                       -> power
//   (constant) * fn(u), fn in sin..sqrt          -> that function's family
//   (constant) * a^u with constant a             -> exponential
//   a sum of one non-constant term and constants is classified by that term;
//   everything else                              -> other
Family classify(const Expr& e);

enum class FaultKind { kDropDivision, kCorruptConstant, kTemplateSwap, kGarbageTokens, kNonterminating };

std::string_view fault_kind_name(FaultKind k);
std::optional<FaultKind> fault_kind_from_name(std::string_view name);

struct FaultSpec {
  // Failure probability for families without an explicit entry.
  double p = 0.0;
  std::map<Family, double> family_p;
  std::vector<FaultKind> kinds = {FaultKind::kDropDivision, FaultKind::kCorruptConstant,
                                  FaultKind::kTemplateSwap, FaultKind::kGarbageTokens,
                                  FaultKind::kNonterminating};
  // Rank at which the correct integral is placed on success; nullopt means
  // it never appears.
  std::optional<int> rank_of_correct = 1;
  // Length of the stream emitted by the nonterminating fault.
  std::size_t max_tokens = 512;

  // Synthetic scores: candidate at rank r gets top_score * decay^(r-1).
  double top_score = 0.9;
  double score_decay = 0.1;
  // Score reported for a correct integral that is not in the list. Unset
  // means one decay step below the last listed candidate.
  std::optional<double> truth_score;

  // Per-run seed mixed into every per-problem stream.
  std::uint64_t seed = 0;

  double probability(Family f) const;
  // Throws std::invalid_argument on out-of-range values.
  void validate() const;

  // Parses "p=0.5,cos=0.3,kinds=drop_division+corrupt_constant,rank=2,
  // seed=7,max_tokens=512,top=0.9,decay=0.1,truth_score=0.001". `rank=none`
  // removes the correct answer. Unknown keys throw std::invalid_argument.
  static FaultSpec parse(std::string_view text);
  std::string to_string() const;
};

// Builds a candidate list of length k. With probability 1 - p (p for the
// problem's family) the correct integral sits at rank_of_correct; all other
// slots, and every slot on failure, hold corruptions that are checked to
// fail verification under `cfg`. Problems the reference cannot integrate
// only ever get corruptions. Deterministic given `rng`.
CandidateList faulty_integrate(const Expr& problem, const FaultSpec& spec, Rng& rng, int k,
                               const EquivConfig& cfg = {});

// The stream faulty backends use for `problem`: depends only on the spec
// seed and the problem's canonical form.
Rng problem_stream(const FaultSpec& spec, const Expr& problem);

}  // namespace sigeval

#endif  // SIGEVAL_ORACLE_H_
