#include "sigeval/problemgen.h"

#include <gmpxx.h>

#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "sigeval/calculus.h"
#include "sigeval/errors.h"
#include "sigeval/oracle.h"

namespace sigeval {

namespace {

constexpr long kMaxCoefficient = 1000000;

Expr scaled_fn(FnKind fn, long k1, long k2) {
  return Expr::mul(Expr::integer(k1), Expr::fn(fn, Expr::mul(Expr::integer(k2), Expr::var())));
}

void check_range(IntRange r) {
  if (r.lo < 1 || r.hi > kMaxCoefficient || r.lo > r.hi) {
    throw std::invalid_argument("coefficient range must satisfy 1 <= lo <= hi <= 1000000");
  }
}

// Floyd's sampling: n distinct values from [0, universe), in insertion order.
std::vector<std::uint64_t> sample_distinct(std::uint64_t universe, std::size_t n, Rng& rng) {
  if (n > universe) {
    throw RangeTooSmall("cannot draw " + std::to_string(n) + " distinct values from " + std::to_string(universe));
  }
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::uint64_t> out;
  out.reserve(n);
  for (std::uint64_t j = universe - n; j < universe; ++j) {
    const auto t = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(j)));
    const std::uint64_t pick = seen.count(t) ? j : t;
    seen.insert(pick);
    out.push_back(pick);
  }
  return out;
}

Problem make_primitive(Template t, long k1, long k2, std::string family) {
  Problem p{instantiate(t, k1, k2), std::nullopt, std::move(family)};
  p.truth = integrate_reference(p.problem);
  if (!p.truth) throw std::logic_error("oracle does not cover template " + std::string(template_name(t)));
  return p;
}

std::vector<Problem> template_draws(Template t, IntRange range, std::size_t n, Rng& rng, const std::string& family) {
  std::vector<Problem> out;
  out.reserve(n);
  for (auto [k1, k2] : draw_pairs(range, n, rng)) out.push_back(make_primitive(t, k1, k2, family));
  return out;
}

const Expr& require_truth(const Problem& p) {
  if (!p.truth) throw NoGroundTruth("problem has no ground truth: " + to_infix(p.problem));
  return *p.truth;
}

// x*(ln(x) - 1)
Expr ln_integral() {
  return Expr::mul(Expr::var(), Expr::add(Expr::fn(FnKind::kLn, Expr::var()), Expr::integer(-1)));
}

class TreeBuilder {
 public:
  explicit TreeBuilder(Rng& rng) : rng_(rng) {}

  Expr build(std::size_t ops) {
    if (ops == 0) return leaf();
    if (ops == 1 && rng_.bernoulli(0.2)) return composite();
    const std::size_t choice = rng_.index(8);
    if (choice < 2) {
      const std::size_t left = rng_.index(ops);  // [0, ops-1]
      Expr a = build(left);
      Expr b = build(ops - 1 - left);
      return choice == 0 ? Expr::add(std::move(a), std::move(b)) : Expr::mul(std::move(a), std::move(b));
    }
    static constexpr FnKind kFns[] = {FnKind::kSin, FnKind::kCos, FnKind::kTan,
                                      FnKind::kExp, FnKind::kLn,  FnKind::kSqrt};
    return Expr::fn(kFns[choice - 2], build(ops - 1));
  }

 private:
  long small_int() {
    const long v = rng_.uniform_int(1, 5);
    return rng_.bernoulli(0.5) ? v : -v;
  }

  Expr leaf() {
    if (rng_.uniform_int(0, 7) < 5) return Expr::var();
    return Expr::integer(small_int());
  }

  Expr composite() {
    if (rng_.bernoulli(0.5)) return Expr::mul(Expr::integer(small_int()), Expr::var());
    return Expr::pow(Expr::var(), Expr::integer(rng_.uniform_int(2, 5)));
  }

  Rng& rng_;
};

}  // namespace

std::string_view template_name(Template t) {
  switch (t) {
    case Template::kLn:
      return "ln";
    case Template::kExp:
      return "exp";
    case Template::kX:
      return "x";
    case Template::kX42:
      return "x42";
    case Template::kSin:
      return "sin";
    case Template::kCos:
      return "cos";
    case Template::kTan:
      return "tan";
  }
  return "?";
}

std::optional<Template> template_from_name(std::string_view name) {
  for (Template t : kAllTemplates) {
    if (template_name(t) == name) return t;
  }
  return std::nullopt;
}

Expr instantiate(Template t, long k1, long k2) {
  Expr raw = Expr::integer(0);
  switch (t) {
    case Template::kLn:
      raw = scaled_fn(FnKind::kLn, k1, k2);
      break;
    case Template::kExp:
      raw = scaled_fn(FnKind::kExp, k1, k2);
      break;
    case Template::kSin:
      raw = scaled_fn(FnKind::kSin, k1, k2);
      break;
    case Template::kCos:
      raw = scaled_fn(FnKind::kCos, k1, k2);
      break;
    case Template::kTan:
      raw = scaled_fn(FnKind::kTan, k1, k2);
      break;
    case Template::kX:
      raw = Expr::mul(Expr::integer(k1), Expr::var());
      break;
    case Template::kX42:
      raw = Expr::mul(Expr::integer(k1), Expr::pow(Expr::var(), Expr::integer(42)));
      break;
  }
  return canonicalize(raw);
}

IntRange IntRange::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("range must look like lo:hi");
  try {
    std::size_t used = 0;
    const std::string lo(text.substr(0, colon));
    const std::string hi(text.substr(colon + 1));
    IntRange r{std::stol(lo, &used), 0};
    if (used != lo.size()) throw std::invalid_argument("");
    r.hi = std::stol(hi, &used);
    if (used != hi.size()) throw std::invalid_argument("");
    return r;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("bad range: " + std::string(text));
  }
}

std::vector<std::pair<long, long>> draw_pairs(IntRange range, std::size_t n, Rng& rng) {
  const std::uint64_t side = range.size();
  std::vector<std::pair<long, long>> out;
  out.reserve(n);
  for (std::uint64_t v : sample_distinct(side * side, n, rng)) {
    out.emplace_back(range.lo + static_cast<long>(v / side), range.lo + static_cast<long>(v % side));
  }
  return out;
}

std::vector<Problem> primitives_suite(IntRange range, std::size_t n, std::uint64_t seed,
                                      const std::vector<Template>& templates) {
  check_range(range);
  std::vector<Problem> out;
  for (Template t : templates) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    auto part = template_draws(t, range, n, rng, std::string(template_name(t)));
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

std::string_view perturbation_name(Perturbation p) {
  switch (p) {
    case Perturbation::kScale:
      return "scale";
    case Perturbation::kDivide:
      return "divide";
    case Perturbation::kAddExp:
      return "add_exp";
    case Perturbation::kAddLn:
      return "add_ln";
  }
  return "?";
}

std::optional<Perturbation> perturbation_from_name(std::string_view name) {
  for (Perturbation p : {Perturbation::kScale, Perturbation::kDivide, Perturbation::kAddExp, Perturbation::kAddLn}) {
    if (perturbation_name(p) == name) return p;
  }
  return std::nullopt;
}

Problem perturb(const Problem& base, Perturbation kind, long k) {
  const Expr& truth = require_truth(base);
  if (k == 0) throw std::invalid_argument("perturbation constant must be nonzero");
  Problem out;
  out.family = base.family + "+" + std::string(perturbation_name(kind));
  switch (kind) {
    case Perturbation::kScale:
    case Perturbation::kDivide: {
      const Expr c = kind == Perturbation::kScale ? Expr::integer(k) : Expr::number(mpq_class(1, k));
      out.problem = canonicalize(Expr::mul(c, base.problem));
      out.truth = canonicalize(Expr::mul(c, truth));
      break;
    }
    case Perturbation::kAddExp: {
      const Expr ex = Expr::fn(FnKind::kExp, Expr::var());
      out.problem = canonicalize(Expr::add(base.problem, ex));
      out.truth = canonicalize(Expr::add(truth, ex));
      break;
    }
    case Perturbation::kAddLn:
      out.problem = canonicalize(Expr::add(base.problem, Expr::fn(FnKind::kLn, Expr::var())));
      out.truth = canonicalize(Expr::add(truth, ln_integral()));
      break;
  }
  return out;
}

std::vector<Problem> perturb_suite(const std::vector<Problem>& base, Perturbation kind, IntRange k_range,
                                   std::uint64_t seed) {
  check_range(k_range);
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(kind)}));
  std::vector<Problem> out;
  out.reserve(base.size());
  for (const auto& p : base) out.push_back(perturb(p, kind, rng.uniform_int(k_range.lo, k_range.hi)));
  return out;
}

std::vector<Problem> composition_suite(const std::vector<Problem>& pool, int arity, std::size_t n,
                                       std::uint64_t seed) {
  if (pool.empty()) throw EmptyPool();
  if (arity < 1) throw std::invalid_argument("arity must be at least 1");
  Rng rng(seed);
  std::vector<Problem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Expr> parts;
    std::vector<Expr> truths;
    for (int j = 0; j < arity; ++j) {
      const Problem& p = pool[rng.index(pool.size())];
      truths.push_back(require_truth(p));
      parts.push_back(p.problem);
    }
    Problem c;
    c.family = "compose" + std::to_string(arity);
    if (arity == 1) {
      c.problem = parts[0];
      c.truth = truths[0];
    } else {
      c.problem = Expr::add(std::move(parts));
      c.truth = canonicalize(Expr::add(std::move(truths)));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Problem> exponent_pool(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Problem> out;
  for (std::uint64_t v : sample_distinct(1000, n, rng)) {
    const long c = static_cast<long>(v) + 1;
    for (const Expr& exponent : {Expr::integer(c), Expr::number(mpq_class(1, c))}) {
      Problem p{canonicalize(Expr::pow(Expr::var(), exponent)), std::nullopt, "power"};
      p.truth = integrate_reference(p.problem);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<Problem> integer_extrapolation_suite(Template t, const std::vector<IntRange>& buckets,
                                                 std::size_t n_per_bucket, std::uint64_t seed) {
  std::vector<Problem> out;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    const IntRange r = buckets[b];
    check_range(r);
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t), b}));
    const std::string family =
        std::string(template_name(t)) + "[" + std::to_string(r.lo) + "," + std::to_string(r.hi) + "]";
    auto part = template_draws(t, r, n_per_bucket, rng, family);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<Problem> random_tree_suite(std::size_t op_count, std::size_t n, std::uint64_t seed) {
  if (op_count == 0) throw std::invalid_argument("op_count must be positive");
  const EquivConfig cfg;
  std::vector<Problem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {op_count, i}));
    Problem p{TreeBuilder(rng).build(op_count), std::nullopt, "ops" + std::to_string(op_count)};
    try {
      if (auto truth = integrate_reference(p.problem)) {
        if (verify_integral(p.problem, *truth, cfg).status == VerdictStatus::kCorrect) p.truth = std::move(truth);
      }
    } catch (const Error&) {
      // Left verify-only.
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::map<std::string, std::vector<Expr>> seed_sets() {
  static const std::map<std::string, std::vector<std::string>> kText = {
      {"default", {"1", "x", "x + 1", "x^2 + x + 1"}},
      {"poly",
       {"1", "2*x", "2/x", "2*x + 1", "2/x + 1", "2*x^2 + 2*x + 1", "2*x^2 + 2/x + 1", "2*x^3 + 2*x^2 + 1",
        "2*x^42 + 2*x^3 + 2*x^2 + 1"}},
      {"trig",
       {"17*cos(83*x)", "17*cos(83*x) + 1", "34*sin(77*x)", "34*sin(77*x) + 1", "2*cos(2*x) + 2*x",
        "2*cos(2*x) + 2*x + 1", "2*sin(2*x) + 2*x", "2*sin(2*x) + 2*x + 1", "2*sin(2*x)*cos(2*x)"}},
      {"trig-general",
       {"2*cos(2*x)", "2*cos(2*x) + 1", "2*sin(2*x)", "2*sin(2*x) + 1", "2*cos(2*x) + 2*x", "2*cos(2*x) + 2*x + 1",
        "2*sin(2*x) + 2*x", "2*sin(2*x) + 2*x + 1", "2*sin(2*x)*cos(2*x)"}},
  };
  std::map<std::string, std::vector<Expr>> out;
  for (const auto& [name, texts] : kText) {
    auto& list = out[name];
    for (const auto& t : texts) list.push_back(canonicalize(parse_infix(t)));
  }
  return out;
}

std::vector<Problem> read_problem_file(std::istream& in) {
  std::vector<Problem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tab = line.find('\t');
    try {
      Problem p{parse_infix(line.substr(0, tab)), std::nullopt, ""};
      if (tab != std::string::npos) {
        const std::string rest = line.substr(tab + 1);
        if (rest.find_first_not_of(" \t") != std::string::npos) p.truth = parse_infix(rest);
      }
      out.push_back(std::move(p));
    } catch (const ParseError& e) {
      std::string msg = e.what();
      if (const auto at = msg.rfind(" at position "); at != std::string::npos) msg.erase(at);
      throw ParseError(e.code(), e.position(), "line " + std::to_string(line_no) + ": " + msg);
    }
  }
  return out;
}

void write_problem_file(std::ostream& out, const std::vector<Problem>& problems) {
  for (const auto& p : problems) {
    out << to_infix(p.problem);
    if (p.truth) out << '\t' << to_infix(*p.truth);
    out << '\n';
  }
}

}  // namespace sigeval
