#ifndef SIGEVAL_EXPR_H_
#define SIGEVAL_EXPR_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "sigeval/errors.h"

namespace sigeval {

enum class FnKind { kSin, kCos, kTan, kExp, kLn, kSqrt };

std::string_view fn_name(FnKind kind);
std::optional<FnKind> fn_from_name(std::string_view name);
bool is_trig(FnKind kind);

// Immutable single-variable expression tree. Copies share structure.
//
// Add and Mul are n-ary and always flat: the factories splice in children
// of the same kind, so an Add never has an Add argument. Integer-valued
// rationals are stored as integers.
class Expr {
 public:
  enum class Kind { kInteger, kRational, kVar, kAdd, kMul, kPow, kFn };

  // Defaults to the integer 0.
  Expr();

  static Expr integer(long value);
  static Expr integer(const mpz_class& value);
  // Integer or Rational depending on the reduced denominator.
  static Expr number(const mpq_class& value);
  static Expr var();
  static Expr add(std::vector<Expr> args);
  static Expr mul(std::vector<Expr> args);
  static Expr add(Expr a, Expr b) { return add(std::vector<Expr>{std::move(a), std::move(b)}); }
  static Expr mul(Expr a, Expr b) { return mul(std::vector<Expr>{std::move(a), std::move(b)}); }
  static Expr pow(Expr base, Expr exponent);
  static Expr fn(FnKind kind, Expr arg);

  Kind kind() const;
  bool is_literal() const { return kind() == Kind::kInteger || kind() == Kind::kRational; }
  bool is_var() const { return kind() == Kind::kVar; }
  bool is(Kind k) const { return kind() == k; }

  // Literal value; only valid when is_literal().
  const mpq_class& value() const;
  bool is_integer_value(long v) const;

  // Add/Mul: the operands. Pow: {base, exponent}. Fn: {argument}.
  std::span<const Expr> args() const;
  const Expr& base() const { return args()[0]; }
  const Expr& exponent() const { return args()[1]; }
  const Expr& arg() const { return args()[0]; }
  FnKind fn_kind() const;

  bool depends_on_x() const;
  // Same object, not just structurally equal.
  bool same_node(const Expr& other) const { return node_ == other.node_; }

  friend bool operator==(const Expr& a, const Expr& b);
  friend std::strong_ordering operator<=>(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Total order used for canonical argument ordering: variant rank, then
// children, then literal value.
std::strong_ordering compare(const Expr& a, const Expr& b);

using TokenSeq = std::vector<std::string>;

bool is_operator_token(std::string_view token);
bool is_vocabulary_token(std::string_view token);

Expr parse_prefix(std::span<const std::string> tokens);
TokenSeq to_prefix(const Expr& e);
std::string join_tokens(std::span<const std::string> tokens);
TokenSeq split_tokens(std::string_view text);

// Integer literal encoding used inside token streams.
TokenSeq encode_integer(const mpz_class& value);

// Grammar (whitespace insignificant):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/' | <implicit>) unary)*
//   unary  := '-' unary | power
//   power  := atom (('^' | '**') unary)?
//   atom   := integer | 'x' | 'e' | name '(' expr ')' | '(' expr ')'
//   name   := sin | cos | tan | exp | ln | log | sqrt
// Implicit multiplication applies between adjacent atoms such as `2x`,
// `17cos(83x)` or `(x+1)(x-1)`. `log` is natural log; `e` is exp(1).
Expr parse_infix(std::string_view text);
std::string to_infix(const Expr& e);

// Canonical prefix string; the key for dedup and caching.
std::string canonical_key(const Expr& e);

Expr canonicalize(const Expr& e);

struct ExprMetrics {
  std::size_t token_len = 0;
  std::size_t node_count = 0;
  std::size_t op_node_count = 0;
  std::size_t depth = 0;
  std::size_t term_count = 0;
};

// token_len, node_count and op_node_count are measured on the binary prefix
// serialization (an n-ary Add of m arguments contributes m-1 operators);
// depth is measured on the n-ary tree.
ExprMetrics metrics(const Expr& e);

double eval_at(const Expr& e, double x0);
// Non-throwing form used on hot paths; nullopt where eval_at would throw.
std::optional<double> try_eval_at(const Expr& e, double x0);

// Cosine magnitude below which tan(.) is treated as sitting on a pole.
inline constexpr double kTanPoleTolerance = 1e-6;

}  // namespace sigeval

#endif  // SIGEVAL_EXPR_H_
