#include "sigeval/expr.h"

#include <algorithm>
#include <array>
#include <cassert>
#include <stdexcept>
#include <utility>

namespace sigeval {

struct Expr::Node {
  Kind kind;
  FnKind fn = FnKind::kSin;
  mpq_class value;
  std::vector<Expr> args;
  bool has_x = false;
};

namespace {

constexpr std::array<std::pair<FnKind, std::string_view>, 6> kFnNames = {{
    {FnKind::kSin, "sin"},
    {FnKind::kCos, "cos"},
    {FnKind::kTan, "tan"},
    {FnKind::kExp, "exp"},
    {FnKind::kLn, "ln"},
    {FnKind::kSqrt, "sqrt"},
}};

int kind_rank(Expr::Kind kind) {
  switch (kind) {
    case Expr::Kind::kInteger:
    case Expr::Kind::kRational:
      return 0;
    case Expr::Kind::kVar:
      return 1;
    case Expr::Kind::kFn:
      return 2;
    case Expr::Kind::kPow:
      return 3;
    case Expr::Kind::kMul:
      return 4;
    case Expr::Kind::kAdd:
      return 5;
  }
  return 6;
}

std::strong_ordering compare_values(const mpq_class& a, const mpq_class& b) {
  const int c = cmp(a, b);
  if (c < 0) return std::strong_ordering::less;
  if (c > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace

std::string_view fn_name(FnKind kind) {
  for (const auto& [k, name] : kFnNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<FnKind> fn_from_name(std::string_view name) {
  for (const auto& [k, n] : kFnNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

bool is_trig(FnKind kind) {
  return kind == FnKind::kSin || kind == FnKind::kCos || kind == FnKind::kTan;
}

Expr::Expr() : Expr(integer(0)) {}

Expr Expr::integer(long value) { return integer(mpz_class(value)); }

Expr Expr::integer(const mpz_class& value) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kInteger;
  node->value = mpq_class(value);
  return Expr(std::move(node));
}

Expr Expr::number(const mpq_class& value) {
  mpq_class v(value);
  v.canonicalize();
  if (v.get_den() == 1) return integer(v.get_num());
  auto node = std::make_shared<Node>();
  node->kind = Kind::kRational;
  node->value = std::move(v);
  return Expr(std::move(node));
}

Expr Expr::var() {
  static const Expr x = [] {
    auto node = std::make_shared<Node>();
    node->kind = Kind::kVar;
    node->has_x = true;
    return Expr(std::move(node));
  }();
  return x;
}

namespace {

std::vector<Expr> splice(std::vector<Expr> args, Expr::Kind kind) {
  std::vector<Expr> flat;
  flat.reserve(args.size());
  for (auto& a : args) {
    if (a.kind() == kind) {
      for (const auto& inner : a.args()) flat.push_back(inner);
    } else {
      flat.push_back(std::move(a));
    }
  }
  return flat;
}

}  // namespace

Expr Expr::add(std::vector<Expr> args) {
  if (args.size() < 2) throw std::invalid_argument("Add needs at least two arguments");
  auto node = std::make_shared<Node>();
  node->kind = Kind::kAdd;
  node->args = splice(std::move(args), Kind::kAdd);
  node->has_x = std::any_of(node->args.begin(), node->args.end(),
                            [](const Expr& a) { return a.depends_on_x(); });
  return Expr(std::move(node));
}

Expr Expr::mul(std::vector<Expr> args) {
  if (args.size() < 2) throw std::invalid_argument("Mul needs at least two arguments");
  auto node = std::make_shared<Node>();
  node->kind = Kind::kMul;
  node->args = splice(std::move(args), Kind::kMul);
  node->has_x = std::any_of(node->args.begin(), node->args.end(),
                            [](const Expr& a) { return a.depends_on_x(); });
  return Expr(std::move(node));
}

Expr Expr::pow(Expr base, Expr exponent) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kPow;
  node->has_x = base.depends_on_x() || exponent.depends_on_x();
  node->args = {std::move(base), std::move(exponent)};
  return Expr(std::move(node));
}

Expr Expr::fn(FnKind kind, Expr arg) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kFn;
  node->fn = kind;
  node->has_x = arg.depends_on_x();
  node->args = {std::move(arg)};
  return Expr(std::move(node));
}

Expr::Kind Expr::kind() const { return node_->kind; }

const mpq_class& Expr::value() const {
  assert(is_literal());
  return node_->value;
}

bool Expr::is_integer_value(long v) const {
  return kind() == Kind::kInteger && node_->value == v;
}

std::span<const Expr> Expr::args() const { return node_->args; }

FnKind Expr::fn_kind() const { return node_->fn; }

bool Expr::depends_on_x() const { return node_->has_x; }

std::strong_ordering compare(const Expr& a, const Expr& b) {
  if (a.same_node(b)) return std::strong_ordering::equal;
  const int ra = kind_rank(a.kind());
  const int rb = kind_rank(b.kind());
  if (ra != rb) return ra <=> rb;
  switch (a.kind()) {
    case Expr::Kind::kInteger:
    case Expr::Kind::kRational:
      return compare_values(a.value(), b.value());
    case Expr::Kind::kVar:
      return std::strong_ordering::equal;
    case Expr::Kind::kFn:
      if (a.fn_kind() != b.fn_kind()) {
        return static_cast<int>(a.fn_kind()) <=> static_cast<int>(b.fn_kind());
      }
      return compare(a.arg(), b.arg());
    case Expr::Kind::kPow:
    case Expr::Kind::kMul:
    case Expr::Kind::kAdd: {
      const auto aa = a.args();
      const auto ba = b.args();
      const std::size_t n = std::min(aa.size(), ba.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (auto c = compare(aa[i], ba[i]); c != 0) return c;
      }
      return aa.size() <=> ba.size();
    }
  }
  return std::strong_ordering::equal;
}

bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

std::strong_ordering operator<=>(const Expr& a, const Expr& b) { return compare(a, b); }

namespace {

struct MetricsWalk {
  std::size_t tokens = 0;
  std::size_t nodes = 0;
  std::size_t ops = 0;
  std::size_t adds = 0;

  void integer_tokens(const mpz_class& v) {
    tokens += 1 + mpz_class(abs(v)).get_str().size();
    nodes += 1;
  }

  void walk(const Expr& e) {
    switch (e.kind()) {
      case Expr::Kind::kInteger:
        integer_tokens(e.value().get_num());
        return;
      case Expr::Kind::kRational:
        tokens += 1;
        nodes += 1;
        ops += 1;
        integer_tokens(e.value().get_num());
        integer_tokens(e.value().get_den());
        return;
      case Expr::Kind::kVar:
        tokens += 1;
        nodes += 1;
        return;
      case Expr::Kind::kAdd:
      case Expr::Kind::kMul: {
        const std::size_t extra = e.args().size() - 1;
        tokens += extra;
        nodes += extra;
        ops += extra;
        if (e.kind() == Expr::Kind::kAdd) adds += extra;
        for (const auto& a : e.args()) walk(a);
        return;
      }
      case Expr::Kind::kPow:
      case Expr::Kind::kFn:
        tokens += 1;
        nodes += 1;
        ops += 1;
        for (const auto& a : e.args()) walk(a);
        return;
    }
  }
};

std::size_t tree_depth(const Expr& e) {
  std::size_t d = 0;
  for (const auto& a : e.args()) d = std::max(d, tree_depth(a));
  return d + 1;
}

}  // namespace

ExprMetrics metrics(const Expr& e) {
  MetricsWalk w;
  w.walk(e);
  return ExprMetrics{
      .token_len = w.tokens,
      .node_count = w.nodes,
      .op_node_count = w.ops,
      .depth = tree_depth(e),
      .term_count = w.adds + 1,
  };
}

std::string canonical_key(const Expr& e) { return join_tokens(to_prefix(canonicalize(e))); }

}  // namespace sigeval
