#include <string>
#include <vector>

#include "sigeval/expr.h"

namespace sigeval {

namespace {

// Binding strength of a printed form; a child is parenthesized when its
// strength is below what the parent position requires.
enum Prec : int { kSum = 1, kProduct = 2, kDenominator = 3, kPower = 4, kAtom = 5 };

struct Printed {
  std::string text;
  int prec;
};

std::string wrap(const Printed& p, int required) {
  return p.prec < required ? "(" + p.text + ")" : p.text;
}

Printed print(const Expr& e);

// Splits a product into a numeric coefficient, numerator factors and
// denominator factors (bases of negative integer powers).
struct ProductParts {
  mpq_class coeff = 1;
  std::vector<Expr> num;
  std::vector<Expr> den;
};

ProductParts split_product(const Expr& e) {
  ProductParts parts;
  auto take = [&](const Expr& f) {
    if (f.is_literal()) {
      parts.coeff *= f.value();
    } else if (f.is(Expr::Kind::kPow) && f.exponent().is(Expr::Kind::kInteger) &&
               f.exponent().value() < 0) {
      const mpz_class n = -f.exponent().value().get_num();
      parts.den.push_back(n == 1 ? f.base() : Expr::pow(f.base(), Expr::integer(n)));
    } else {
      parts.num.push_back(f);
    }
  };
  if (e.is(Expr::Kind::kMul)) {
    for (const auto& f : e.args()) take(f);
  } else {
    take(e);
  }
  return parts;
}

Printed print_product(const ProductParts& parts) {
  const bool negative = parts.coeff < 0;
  const mpq_class mag = abs(parts.coeff);
  std::string num;
  auto append = [&](const std::string& s) {
    if (!num.empty()) num += '*';
    num += s;
  };
  if (mag.get_num() != 1 || parts.num.empty()) append(mag.get_num().get_str());
  for (const auto& f : parts.num) append(wrap(print(f), kProduct));

  std::vector<std::string> den;
  if (mag.get_den() != 1) den.push_back(mag.get_den().get_str());
  for (const auto& f : parts.den) den.push_back(wrap(print(f), kDenominator));

  std::string text = num;
  if (den.size() == 1) {
    text += "/" + den[0];
  } else if (den.size() > 1) {
    std::string joined;
    for (const auto& d : den) {
      if (!joined.empty()) joined += '*';
      joined += d;
    }
    text += "/(" + joined + ")";
  }
  if (negative) return {"-" + text, kSum};
  return {text, kProduct};
}

bool is_negative_term(const Expr& t) {
  if (t.is_literal()) return t.value() < 0;
  if (t.is(Expr::Kind::kMul)) {
    mpq_class c = 1;
    for (const auto& f : t.args()) {
      if (f.is_literal()) c *= f.value();
    }
    return c < 0;
  }
  return false;
}

Printed print_sum(const Expr& e) {
  // Constant terms go last for readability.
  std::vector<Expr> terms;
  std::vector<Expr> constants;
  for (const auto& t : e.args()) (t.is_literal() ? constants : terms).push_back(t);
  terms.insert(terms.end(), constants.begin(), constants.end());

  std::string text;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Expr& t = terms[i];
    if (i > 0 && is_negative_term(t)) {
      ProductParts parts = split_product(t);
      parts.coeff = -parts.coeff;
      text += " - " + wrap(print_product(parts), kProduct);
    } else {
      if (i > 0) text += " + ";
      text += print(t).text;
    }
  }
  return {text, kSum};
}

Printed print(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::kInteger:
      return {e.value().get_num().get_str(), e.value() < 0 ? kSum : kAtom};
    case Expr::Kind::kRational:
      return {e.value().get_str(), e.value() < 0 ? kSum : kProduct};
    case Expr::Kind::kVar:
      return {"x", kAtom};
    case Expr::Kind::kFn:
      return {std::string(fn_name(e.fn_kind())) + "(" + print(e.arg()).text + ")", kAtom};
    case Expr::Kind::kAdd:
      return print_sum(e);
    case Expr::Kind::kMul:
      return print_product(split_product(e));
    case Expr::Kind::kPow: {
      if (e.exponent().is(Expr::Kind::kInteger) && e.exponent().value() < 0) {
        return print_product(split_product(e));
      }
      const Printed b = print(e.base());
      const Printed x = print(e.exponent());
      // Exponent binds right-associatively: x^y^z is x^(y^z).
      return {wrap(b, kAtom) + "^" + wrap(x, kPower), kPower};
    }
  }
  return {"?", kAtom};
}

}  // namespace

std::string to_infix(const Expr& e) { return print(e).text; }

}  // namespace sigeval
