#include "sigeval/calculus.h"

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "sigeval/rng.h"

namespace sigeval {

namespace {

Expr minus_one() { return Expr::integer(-1); }

Expr d(const Expr& e);

Expr d_pow(const Expr& e) {
  const Expr& b = e.base();
  const Expr& n = e.exponent();
  if (!n.depends_on_x()) {
    return Expr::mul({n, Expr::pow(b, Expr::add(n, minus_one())), d(b)});
  }
  if (!b.depends_on_x()) {
    return Expr::mul({e, Expr::fn(FnKind::kLn, b), d(n)});
  }
  // b^n = exp(n ln b): (b^n)' = b^n (n' ln b + n b'/b)
  Expr inner = Expr::add(Expr::mul(d(n), Expr::fn(FnKind::kLn, b)),
                         Expr::mul({n, d(b), Expr::pow(b, minus_one())}));
  return Expr::mul(e, inner);
}

Expr d_fn(const Expr& e) {
  const Expr& u = e.arg();
  const Expr du = d(u);
  switch (e.fn_kind()) {
    case FnKind::kSin:
      return Expr::mul(Expr::fn(FnKind::kCos, u), du);
    case FnKind::kCos:
      return Expr::mul({minus_one(), Expr::fn(FnKind::kSin, u), du});
    case FnKind::kTan:
      return Expr::mul(
          Expr::add(Expr::integer(1), Expr::pow(Expr::fn(FnKind::kTan, u), Expr::integer(2))), du);
    case FnKind::kExp:
      return Expr::mul(e, du);
    case FnKind::kLn:
      return Expr::mul(du, Expr::pow(u, minus_one()));
    case FnKind::kSqrt:
      return Expr::mul({Expr::number(mpq_class(1, 2)), du, Expr::pow(e, minus_one())});
  }
  throw std::logic_error("unhandled function kind");
}

Expr d(const Expr& e) {
  if (!e.depends_on_x()) return Expr::integer(0);
  switch (e.kind()) {
    case Expr::Kind::kVar:
      return Expr::integer(1);
    case Expr::Kind::kAdd: {
      std::vector<Expr> terms;
      for (const auto& a : e.args()) {
        if (a.depends_on_x()) terms.push_back(d(a));
      }
      return terms.size() == 1 ? terms[0] : Expr::add(std::move(terms));
    }
    case Expr::Kind::kMul: {
      const auto args = e.args();
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (!args[i].depends_on_x()) continue;
        std::vector<Expr> product;
        for (std::size_t j = 0; j < args.size(); ++j) product.push_back(i == j ? d(args[j]) : args[j]);
        terms.push_back(Expr::mul(std::move(product)));
      }
      return terms.size() == 1 ? terms[0] : Expr::add(std::move(terms));
    }
    case Expr::Kind::kPow:
      return d_pow(e);
    case Expr::Kind::kFn:
      return d_fn(e);
    default:
      return Expr::integer(0);
  }
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

enum class Outcome { kEquivalent, kNotEquivalent, kInsufficientDomain, kTimedOut };

bool close(double a, double b, const EquivConfig& cfg) {
  return std::abs(a - b) <= cfg.abs_tolerance + cfg.rel_tolerance * std::max(std::abs(a), std::abs(b));
}

Outcome sample_compare(const Expr& a, const Expr& b, const EquivConfig& cfg,
                       std::optional<Clock::time_point> deadline) {
  Rng rng(cfg.seed);
  for (int i = 0; i < cfg.sample_count; ++i) {
    if (deadline && Clock::now() > *deadline) return Outcome::kTimedOut;
    bool found = false;
    for (int attempt = 0; attempt <= cfg.max_retries_per_point && !found; ++attempt) {
      const double x0 = rng.uniform(cfg.domain_lo, cfg.domain_hi);
      auto va = try_eval_at(a, x0);
      if (!va) continue;
      auto vb = try_eval_at(b, x0);
      if (!vb) continue;
      found = true;
      if (!close(*va, *vb, cfg)) return Outcome::kNotEquivalent;
    }
    if (!found) return Outcome::kInsufficientDomain;
  }
  return Outcome::kEquivalent;
}

}  // namespace

Expr differentiate(const Expr& e) { return canonicalize(d(e)); }

bool EquivConfig::valid() const {
  return sample_count >= 3 && per_candidate_budget > 0 && rel_tolerance >= 0 && abs_tolerance >= 0 &&
         domain_lo < domain_hi && max_retries_per_point >= 0;
}

EquivResult check_equivalence(const Expr& a, const Expr& b, const EquivConfig& cfg) {
  switch (sample_compare(a, b, cfg, std::nullopt)) {
    case Outcome::kEquivalent:
      return EquivResult::kEquivalent;
    case Outcome::kInsufficientDomain:
      return EquivResult::kInsufficientDomain;
    default:
      return EquivResult::kNotEquivalent;
  }
}

bool numeric_equiv(const Expr& a, const Expr& b, const EquivConfig& cfg) {
  return check_equivalence(a, b, cfg) == EquivResult::kEquivalent;
}

bool has_sample_domain(const Expr& e, const EquivConfig& cfg) {
  Rng rng(cfg.seed);
  int found = 0;
  const int draws = cfg.sample_count * (cfg.max_retries_per_point + 1);
  for (int i = 0; i < draws && found < cfg.sample_count; ++i) {
    if (try_eval_at(e, rng.uniform(cfg.domain_lo, cfg.domain_hi))) ++found;
  }
  return found >= cfg.sample_count;
}

std::string_view status_name(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::kCorrect:
      return "correct";
    case VerdictStatus::kIncorrect:
      return "incorrect";
    case VerdictStatus::kTimeoutCountedCorrect:
      return "timeout";
    case VerdictStatus::kUnparseable:
      return "unparseable";
  }
  return "?";
}

VerdictStatus status_from_name(std::string_view name) {
  for (auto s : {VerdictStatus::kCorrect, VerdictStatus::kIncorrect,
                 VerdictStatus::kTimeoutCountedCorrect, VerdictStatus::kUnparseable}) {
    if (status_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown verdict status '" + std::string(name) + "'");
}

Verdict verify_integral(const Expr& problem, const Candidate& candidate, const EquivConfig& cfg) {
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(cfg.per_candidate_budget));
  Verdict v;
  auto finish = [&](VerdictStatus s) {
    v.status = s;
    v.elapsed = seconds_since(start);
    return v;
  };
  auto timed_out = [&] {
    return finish(cfg.strict_timeout ? VerdictStatus::kIncorrect
                                     : VerdictStatus::kTimeoutCountedCorrect);
  };

  Expr integral;
  if (const auto* tokens = std::get_if<TokenSeq>(&candidate)) {
    try {
      integral = parse_prefix(*tokens);
    } catch (const ParseError&) {
      return finish(VerdictStatus::kUnparseable);
    }
  } else {
    integral = std::get<Expr>(candidate);
  }

  Expr derivative;
  try {
    derivative = differentiate(integral);
  } catch (const DivisionByZero&) {
    return finish(VerdictStatus::kIncorrect);
  }
  if (Clock::now() > deadline) return timed_out();

  switch (sample_compare(derivative, problem, cfg, deadline)) {
    case Outcome::kEquivalent:
      return finish(VerdictStatus::kCorrect);
    case Outcome::kTimedOut:
      return timed_out();
    default:
      return finish(VerdictStatus::kIncorrect);
  }
}

}  // namespace sigeval
