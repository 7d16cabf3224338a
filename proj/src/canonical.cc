#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "sigeval/expr.h"

namespace sigeval {

namespace {

// Literal powers are folded exactly only while the result stays below this
// many bits; larger ones are kept symbolic (and overflow at evaluation).
constexpr std::size_t kMaxFoldBits = 4096;

Expr canon(const Expr& e);
Expr canon_add(std::vector<Expr> terms);
Expr canon_mul(std::vector<Expr> factors);
Expr canon_pow(const Expr& base, const Expr& exponent);

std::size_t bits(const mpz_class& v) { return mpz_sizeinbase(v.get_mpz_t(), 2); }

std::optional<mpz_class> exact_root(const mpz_class& v, unsigned long n) {
  mpz_class r;
  if (mpz_root(r.get_mpz_t(), v.get_mpz_t(), n) == 0) return std::nullopt;
  return r;
}

std::optional<mpq_class> pow_integer(const mpq_class& base, const mpz_class& n) {
  if (base == 0) {
    if (n < 0) throw DivisionByZero();
    return n == 0 ? mpq_class(1) : mpq_class(0);
  }
  if (!n.fits_slong_p()) return std::nullopt;
  const long e = n.get_si();
  const unsigned long mag = static_cast<unsigned long>(e < 0 ? -e : e);
  if ((bits(base.get_num()) + bits(base.get_den())) * mag > kMaxFoldBits) return std::nullopt;
  mpz_class num, den;
  mpz_pow_ui(num.get_mpz_t(), base.get_num().get_mpz_t(), mag);
  mpz_pow_ui(den.get_mpz_t(), base.get_den().get_mpz_t(), mag);
  mpq_class out(num, den);
  out.canonicalize();
  if (e < 0) out = 1 / out;
  return out;
}

std::optional<Expr> fold_literal_pow(const mpq_class& base, const mpq_class& exponent) {
  if (exponent.get_den() == 1) {
    if (auto v = pow_integer(base, exponent.get_num())) return Expr::number(*v);
    return std::nullopt;
  }
  // Rational exponent p/q: only perfect q-th powers of non-negative bases fold.
  if (base < 0 || !exponent.get_den().fits_ulong_p()) return std::nullopt;
  const unsigned long q = exponent.get_den().get_ui();
  auto num = exact_root(base.get_num(), q);
  auto den = exact_root(base.get_den(), q);
  if (!num || !den) return std::nullopt;
  if (auto v = pow_integer(mpq_class(*num, *den), exponent.get_num())) return Expr::number(*v);
  return std::nullopt;
}

std::optional<Expr> fold_fn(FnKind kind, const mpq_class& v) {
  switch (kind) {
    case FnKind::kSin:
    case FnKind::kTan:
      if (v == 0) return Expr::integer(0);
      break;
    case FnKind::kCos:
    case FnKind::kExp:
      if (v == 0) return Expr::integer(1);
      break;
    case FnKind::kLn:
      if (v == 1) return Expr::integer(0);
      break;
    case FnKind::kSqrt:
      if (v >= 0) {
        auto num = exact_root(v.get_num(), 2);
        auto den = exact_root(v.get_den(), 2);
        if (num && den) return Expr::number(mpq_class(*num, *den));
      }
      break;
  }
  return std::nullopt;
}

Expr canon_fn(FnKind kind, const Expr& arg) {
  if (arg.is_literal()) {
    if (auto folded = fold_fn(kind, arg.value())) return *folded;
  }
  if (kind == FnKind::kLn && arg.is(Expr::Kind::kFn) && arg.fn_kind() == FnKind::kExp) {
    return arg.arg();
  }
  return Expr::fn(kind, arg);
}

bool is_exp(const Expr& e) { return e.is(Expr::Kind::kFn) && e.fn_kind() == FnKind::kExp; }

Expr canon_pow(const Expr& base, const Expr& exponent) {
  if (exponent.is_literal()) {
    const mpq_class& n = exponent.value();
    if (n == 0) return Expr::integer(1);
    if (n == 1) return base;
    if (base.is_literal()) {
      if (auto folded = fold_literal_pow(base.value(), n)) return *folded;
      return Expr::pow(base, exponent);
    }
    if (n.get_den() == 1) {
      // (c^f)^n = c^(f*n) and (a*b)^n = a^n * b^n hold for integer n.
      if (base.is(Expr::Kind::kPow)) {
        return canon_pow(base.base(), canon_mul({base.exponent(), exponent}));
      }
      if (base.is(Expr::Kind::kMul)) {
        std::vector<Expr> factors;
        for (const auto& f : base.args()) factors.push_back(canon_pow(f, exponent));
        return canon_mul(std::move(factors));
      }
    }
  }
  if (base.is_literal() && base.value() == 1) return Expr::integer(1);
  if (is_exp(base)) return canon_fn(FnKind::kExp, canon_mul({base.arg(), exponent}));
  return Expr::pow(base, exponent);
}

// Base/exponent view of a factor for power collection. exp(a) is viewed as
// exp(1)^a so that exp(a)*exp(b) collects into exp(a+b).
std::pair<Expr, Expr> as_power(const Expr& f) {
  if (f.is(Expr::Kind::kPow)) return {f.base(), f.exponent()};
  if (is_exp(f)) return {Expr::fn(FnKind::kExp, Expr::integer(1)), f.arg()};
  return {f, Expr::integer(1)};
}

Expr canon_mul(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  for (auto& f : factors) {
    if (f.is(Expr::Kind::kMul)) {
      flat.insert(flat.end(), f.args().begin(), f.args().end());
    } else {
      flat.push_back(std::move(f));
    }
  }

  mpq_class coeff = 1;
  std::map<Expr, std::vector<Expr>> by_base;
  for (const auto& f : flat) {
    if (f.is_literal()) {
      coeff *= f.value();
      continue;
    }
    auto [b, e] = as_power(f);
    by_base[b].push_back(e);
  }
  if (coeff == 0) return Expr::integer(0);

  std::vector<Expr> rebuilt;
  bool needs_merge = false;
  for (auto& [b, exps] : by_base) {
    Expr e = exps.size() == 1 ? exps[0] : canon_add(exps);
    Expr p = canon_pow(b, e);
    if (p.is_literal() && p.value() == 1) continue;
    if (p.is_literal() || p.is(Expr::Kind::kMul) || as_power(p).first != b) needs_merge = true;
    rebuilt.push_back(std::move(p));
  }
  if (needs_merge) {
    rebuilt.push_back(Expr::number(coeff));
    return canon_mul(std::move(rebuilt));
  }

  const auto sums = std::count_if(rebuilt.begin(), rebuilt.end(),
                                  [](const Expr& f) { return f.is(Expr::Kind::kAdd); });
  if (sums == 1 && (rebuilt.size() > 1 || coeff != 1)) {
    // Distribute the remaining factors over the single sum.
    auto it = std::find_if(rebuilt.begin(), rebuilt.end(),
                           [](const Expr& f) { return f.is(Expr::Kind::kAdd); });
    const Expr sum = *it;
    rebuilt.erase(it);
    std::vector<Expr> terms;
    for (const auto& t : sum.args()) {
      std::vector<Expr> product = rebuilt;
      product.push_back(Expr::number(coeff));
      product.push_back(t);
      terms.push_back(canon_mul(std::move(product)));
    }
    return canon_add(std::move(terms));
  }

  std::sort(rebuilt.begin(), rebuilt.end());
  if (coeff != 1) rebuilt.insert(rebuilt.begin(), Expr::number(coeff));
  if (rebuilt.empty()) return Expr::number(coeff);
  if (rebuilt.size() == 1) return rebuilt[0];
  return Expr::mul(std::move(rebuilt));
}

std::pair<mpq_class, Expr> split_coefficient(const Expr& term) {
  if (term.is(Expr::Kind::kMul) && term.args()[0].is_literal()) {
    const auto args = term.args();
    if (args.size() == 2) return {args[0].value(), args[1]};
    return {args[0].value(), Expr::mul(std::vector<Expr>(args.begin() + 1, args.end()))};
  }
  return {mpq_class(1), term};
}

Expr canon_add(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  for (auto& t : terms) {
    if (t.is(Expr::Kind::kAdd)) {
      flat.insert(flat.end(), t.args().begin(), t.args().end());
    } else {
      flat.push_back(std::move(t));
    }
  }

  mpq_class constant = 0;
  std::map<Expr, mpq_class> by_rest;
  for (const auto& t : flat) {
    if (t.is_literal()) {
      constant += t.value();
      continue;
    }
    auto [c, rest] = split_coefficient(t);
    by_rest[rest] += c;
  }

  std::vector<Expr> rebuilt;
  for (const auto& [rest, c] : by_rest) {
    if (c == 0) continue;
    rebuilt.push_back(c == 1 ? rest : canon_mul({Expr::number(c), rest}));
  }
  std::sort(rebuilt.begin(), rebuilt.end());
  if (constant != 0) rebuilt.insert(rebuilt.begin(), Expr::number(constant));
  if (rebuilt.empty()) return Expr::integer(0);
  if (rebuilt.size() == 1) return rebuilt[0];
  return Expr::add(std::move(rebuilt));
}

Expr canon(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::kInteger:
    case Expr::Kind::kRational:
    case Expr::Kind::kVar:
      return e;
    case Expr::Kind::kAdd:
    case Expr::Kind::kMul: {
      std::vector<Expr> args;
      args.reserve(e.args().size());
      for (const auto& a : e.args()) args.push_back(canon(a));
      return e.is(Expr::Kind::kAdd) ? canon_add(std::move(args)) : canon_mul(std::move(args));
    }
    case Expr::Kind::kPow:
      return canon_pow(canon(e.base()), canon(e.exponent()));
    case Expr::Kind::kFn:
      return canon_fn(e.fn_kind(), canon(e.arg()));
  }
  return e;
}

}  // namespace

Expr canonicalize(const Expr& e) { return canon(e); }

}  // namespace sigeval
