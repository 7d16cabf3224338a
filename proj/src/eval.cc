#include <cmath>
#include <optional>

#include "sigeval/expr.h"

namespace sigeval {

namespace {

bool finite(double v) { return std::isfinite(v); }

std::optional<double> eval(const Expr& e, double x);

std::optional<double> eval_pow(const Expr& e, double x) {
  auto b = eval(e.base(), x);
  if (!b) return std::nullopt;
  const Expr& ex = e.exponent();
  if (ex.is(Expr::Kind::kInteger)) {
    if (!ex.value().get_num().fits_slong_p()) return std::nullopt;
    const long n = ex.value().get_num().get_si();
    if (*b == 0.0 && n < 0) return std::nullopt;
    return std::pow(*b, static_cast<double>(n));
  }
  if (ex.is(Expr::Kind::kRational)) {
    // Real powers with a non-integer exponent need a non-negative base.
    if (*b < 0.0) return std::nullopt;
    const double p = ex.value().get_d();
    if (*b == 0.0 && p < 0.0) return std::nullopt;
    return std::pow(*b, p);
  }
  auto p = eval(ex, x);
  if (!p) return std::nullopt;
  if (*b < 0.0 && std::nearbyint(*p) != *p) return std::nullopt;
  if (*b == 0.0 && *p < 0.0) return std::nullopt;
  return std::pow(*b, *p);
}

std::optional<double> eval_fn(const Expr& e, double x) {
  auto a = eval(e.arg(), x);
  if (!a) return std::nullopt;
  const double v = *a;
  switch (e.fn_kind()) {
    case FnKind::kSin:
      return std::sin(v);
    case FnKind::kCos:
      return std::cos(v);
    case FnKind::kTan:
      if (std::abs(std::cos(v)) < kTanPoleTolerance) return std::nullopt;
      return std::tan(v);
    case FnKind::kExp:
      return std::exp(v);
    case FnKind::kLn:
      if (v <= 0.0) return std::nullopt;
      return std::log(v);
    case FnKind::kSqrt:
      if (v < 0.0) return std::nullopt;
      return std::sqrt(v);
  }
  return std::nullopt;
}

std::optional<double> eval(const Expr& e, double x) {
  std::optional<double> out;
  switch (e.kind()) {
    case Expr::Kind::kInteger:
    case Expr::Kind::kRational:
      out = e.value().get_d();
      break;
    case Expr::Kind::kVar:
      out = x;
      break;
    case Expr::Kind::kAdd: {
      double s = 0.0;
      for (const auto& a : e.args()) {
        auto v = eval(a, x);
        if (!v) return std::nullopt;
        s += *v;
      }
      out = s;
      break;
    }
    case Expr::Kind::kMul: {
      double p = 1.0;
      for (const auto& a : e.args()) {
        auto v = eval(a, x);
        if (!v) return std::nullopt;
        p *= *v;
      }
      out = p;
      break;
    }
    case Expr::Kind::kPow:
      out = eval_pow(e, x);
      break;
    case Expr::Kind::kFn:
      out = eval_fn(e, x);
      break;
  }
  if (!out || !finite(*out)) return std::nullopt;
  return out;
}

}  // namespace

std::optional<double> try_eval_at(const Expr& e, double x0) {
  if (!std::isfinite(x0)) return std::nullopt;
  return eval(e, x0);
}

double eval_at(const Expr& e, double x0) {
  auto v = try_eval_at(e, x0);
  if (!v) throw DomainError("expression undefined or non-finite at x = " + std::to_string(x0));
  return *v;
}

}  // namespace sigeval
