#ifndef SIGEVAL_PROBLEMGEN_H_
#define SIGEVAL_PROBLEMGEN_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sigeval/problem.h"
#include "sigeval/rng.h"

namespace sigeval {

// Primitive templates: k1*ln(k2*x), k1*exp(k2*x), k1*x, k1*x^42,
// k1*sin(k2*x), k1*cos(k2*x), k1*tan(k2*x).
enum class Template { kLn, kExp, kX, kX42, kSin, kCos, kTan };

inline constexpr Template kAllTemplates[] = {Template::kLn,  Template::kExp, Template::kX,  Template::kX42,
                                             Template::kSin, Template::kCos, Template::kTan};

std::string_view template_name(Template t);
std::optional<Template> template_from_name(std::string_view name);

// Canonical instance; k2 is ignored by the two power templates.
Expr instantiate(Template t, long k1, long k2);

// Inclusive integer range.
struct IntRange {
  long lo = 1;
  long hi = 100;

  std::uint64_t size() const { return hi < lo ? 0 : static_cast<std::uint64_t>(hi - lo) + 1; }
  // "lo:hi".
  static IntRange parse(std::string_view text);
};

// n distinct (k1, k2) pairs from range x range, in draw order. Throws
// RangeTooSmall when fewer than n pairs exist.
std::vector<std::pair<long, long>> draw_pairs(IntRange range, std::size_t n, Rng& rng);

// n problems per template with reference integrals. `range` must lie
// within [1, 10^6]. Family labels are the template names.
std::vector<Problem> primitives_suite(IntRange range, std::size_t n, std::uint64_t seed,
                                      const std::vector<Template>& templates = {std::begin(kAllTemplates),
                                                                                std::end(kAllTemplates)});

// k*f, (1/k)*f, f + exp(x), f + ln(x).
enum class Perturbation { kScale, kDivide, kAddExp, kAddLn };

std::string_view perturbation_name(Perturbation p);
std::optional<Perturbation> perturbation_from_name(std::string_view name);

// Ground truth follows by linearity. Throws NoGroundTruth if `base` has none.
Problem perturb(const Problem& base, Perturbation kind, long k = 1);

// Applies `kind` to every base problem with k drawn from `k_range`.
std::vector<Problem> perturb_suite(const std::vector<Problem>& base, Perturbation kind, IntRange k_range,
                                   std::uint64_t seed);

// n sums of `arity` pool problems drawn uniformly with replacement. The sum
// is left unsimplified, so its term count is the sum of the parts'. Throws
// EmptyPool, or NoGroundTruth if a drawn part has no truth.
std::vector<Problem> composition_suite(const std::vector<Problem>& pool, int arity, std::size_t n,
                                       std::uint64_t seed);

// x^c and x^(1/c) for n distinct c drawn from [1, 1000].
std::vector<Problem> exponent_pool(std::size_t n, std::uint64_t seed);

// n_per_bucket problems of template t per coefficient bucket (both k1 and
// k2 drawn from the bucket). Family labels are "<template>[lo,hi]".
std::vector<Problem> integer_extrapolation_suite(Template t, const std::vector<IntRange>& buckets,
                                                 std::size_t n_per_bucket, std::uint64_t seed);

// n random trees with exactly op_count operator nodes (as counted by
// metrics().op_node_count). Operators are drawn uniformly from add, mul,
// sin, cos, tan, exp, ln, sqrt. Leaves are x or a small nonzero integer in
// a 5:3 ratio; a subtree that must hold exactly one operator becomes a
// simple composite k*x or x^k with probability 0.2. Problems whose oracle
// integral does not verify are verify-only.
std::vector<Problem> random_tree_suite(std::size_t op_count, std::size_t n, std::uint64_t seed);

// Named seed lists for the search: "default", "poly", "trig", "trig-general".
std::map<std::string, std::vector<Expr>> seed_sets();

// Problem files: one problem per line in infix, optionally followed by a tab
// and the ground-truth integral. Blank lines and lines starting with '#'
// are skipped. Throws ParseError with the 1-based line in the message.
std::vector<Problem> read_problem_file(std::istream& in);
void write_problem_file(std::ostream& out, const std::vector<Problem>& problems);

}  // namespace sigeval

#endif  // SIGEVAL_PROBLEMGEN_H_
