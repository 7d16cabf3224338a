#include <algorithm>
#include <cctype>
#include <string>
#include <utility>

#include "sigeval/expr.h"

namespace sigeval {

namespace {

constexpr std::string_view kBinaryOps[] = {"add", "sub", "mul", "div", "pow"};

bool is_binary(std::string_view t) {
  return std::find(std::begin(kBinaryOps), std::end(kBinaryOps), t) != std::end(kBinaryOps);
}

bool is_digit_token(std::string_view t) {
  return t.size() == 1 && t[0] >= '0' && t[0] <= '9';
}

Expr negate(const Expr& e) {
  if (e.is_literal()) return Expr::number(-e.value());
  return Expr::mul(Expr::integer(-1), e);
}

// a - b and a / b desugar into the Add/Mul/Pow algebra; literal operands are
// folded so that `div INT+ 2 INT+ 3` reads back as the rational 2/3.
Expr make_difference(const Expr& a, const Expr& b) { return Expr::add(a, negate(b)); }

Expr make_quotient(const Expr& a, const Expr& b, std::size_t position) {
  if (b.is_literal()) {
    if (b.value() == 0) {
      throw ParseError(ParseError::Code::kDivisionByZero, position, "literal division by zero");
    }
    const mpq_class inv = 1 / b.value();
    if (a.is_literal()) return Expr::number(a.value() * inv);
    return Expr::mul(a, Expr::number(inv));
  }
  return Expr::mul(a, Expr::pow(b, Expr::integer(-1)));
}

}  // namespace

bool is_operator_token(std::string_view token) {
  return is_binary(token) || fn_from_name(token).has_value();
}

bool is_vocabulary_token(std::string_view token) {
  return is_operator_token(token) || token == "x" || token == "INT+" || token == "INT-" ||
         is_digit_token(token);
}

TokenSeq encode_integer(const mpz_class& value) {
  TokenSeq out;
  out.emplace_back(value < 0 ? "INT-" : "INT+");
  const std::string digits = mpz_class(abs(value)).get_str();
  for (char c : digits) out.emplace_back(1, c);
  return out;
}

namespace {

class PrefixReader {
 public:
  explicit PrefixReader(std::span<const std::string> tokens) : tokens_(tokens) {}

  Expr read_all() {
    Expr e = read();
    if (pos_ != tokens_.size()) {
      throw ParseError(ParseError::Code::kTrailingTokens, pos_, "trailing tokens");
    }
    return e;
  }

 private:
  const std::string& next() {
    if (pos_ >= tokens_.size()) {
      throw ParseError(ParseError::Code::kUnderflow, pos_, "token stream ended inside a subtree");
    }
    return tokens_[pos_++];
  }

  Expr read() {
    const std::size_t at = pos_;
    const std::string& t = next();
    if (t == "x") return Expr::var();
    if (t == "INT+" || t == "INT-") return read_integer(t == "INT-", at);
    if (auto fn = fn_from_name(t)) return Expr::fn(*fn, read());
    if (is_binary(t)) {
      Expr lhs = read();
      Expr rhs = read();
      if (t == "add") return Expr::add(std::move(lhs), std::move(rhs));
      if (t == "mul") return Expr::mul(std::move(lhs), std::move(rhs));
      if (t == "pow") return Expr::pow(std::move(lhs), std::move(rhs));
      if (t == "sub") return make_difference(lhs, rhs);
      return make_quotient(lhs, rhs, at);
    }
    throw ParseError(ParseError::Code::kUnknownToken, at, "unknown token '" + t + "'");
  }

  Expr read_integer(bool negative, std::size_t at) {
    std::string digits;
    while (pos_ < tokens_.size() && is_digit_token(tokens_[pos_])) digits += tokens_[pos_++];
    if (digits.empty()) {
      if (pos_ >= tokens_.size()) {
        throw ParseError(ParseError::Code::kUnderflow, pos_, "integer without digits");
      }
      throw ParseError(ParseError::Code::kUnknownToken, pos_,
                       "expected digit after sign token at " + std::to_string(at));
    }
    mpz_class v(digits, 10);
    return Expr::integer(negative ? mpz_class(-v) : v);
  }

  std::span<const std::string> tokens_;
  std::size_t pos_ = 0;
};

void emit(const Expr& e, TokenSeq& out) {
  switch (e.kind()) {
    case Expr::Kind::kInteger: {
      auto t = encode_integer(e.value().get_num());
      out.insert(out.end(), t.begin(), t.end());
      return;
    }
    case Expr::Kind::kRational: {
      out.emplace_back("div");
      auto n = encode_integer(e.value().get_num());
      auto d = encode_integer(e.value().get_den());
      out.insert(out.end(), n.begin(), n.end());
      out.insert(out.end(), d.begin(), d.end());
      return;
    }
    case Expr::Kind::kVar:
      out.emplace_back("x");
      return;
    case Expr::Kind::kAdd:
    case Expr::Kind::kMul: {
      // Left-nested: op op a b c for (a + b) + c.
      const char* op = e.kind() == Expr::Kind::kAdd ? "add" : "mul";
      const auto args = e.args();
      for (std::size_t i = 1; i < args.size(); ++i) out.emplace_back(op);
      for (const auto& a : args) emit(a, out);
      return;
    }
    case Expr::Kind::kPow:
      out.emplace_back("pow");
      emit(e.base(), out);
      emit(e.exponent(), out);
      return;
    case Expr::Kind::kFn:
      out.emplace_back(fn_name(e.fn_kind()));
      emit(e.arg(), out);
      return;
  }
}

}  // namespace

Expr parse_prefix(std::span<const std::string> tokens) { return PrefixReader(tokens).read_all(); }

TokenSeq to_prefix(const Expr& e) {
  TokenSeq out;
  emit(e, out);
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

TokenSeq split_tokens(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

namespace {

class InfixParser {
 public:
  explicit InfixParser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(ParseError::Code::kSyntax, pos_, what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool accept(std::string_view s) {
    skip_space();
    if (text_.substr(pos_, s.size()) == s) {
      pos_ += s.size();
      return true;
    }
    return false;
  }

  Expr expr() {
    std::vector<Expr> terms{term()};
    while (true) {
      if (accept("+")) {
        terms.push_back(term());
      } else if (peek() == '-') {
        ++pos_;
        terms.push_back(negate(term()));
      } else {
        break;
      }
    }
    return terms.size() == 1 ? terms[0] : Expr::add(std::move(terms));
  }

  bool starts_atom() {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || std::isalpha(static_cast<unsigned char>(c)) ||
           c == '(';
  }

  Expr term() {
    Expr acc = unary();
    while (true) {
      const std::size_t at = pos_;
      if (peek() == '*' && text_.substr(pos_, 2) != "**") {
        ++pos_;
        acc = Expr::mul(acc, unary());
      } else if (accept("/")) {
        Expr rhs = unary();
        acc = make_quotient(acc, rhs, at);
      } else if (starts_atom()) {
        acc = Expr::mul(acc, power());
      } else {
        break;
      }
    }
    return acc;
  }

  Expr unary() {
    if (peek() == '-') {
      ++pos_;
      return negate(unary());
    }
    if (peek() == '+') {
      ++pos_;
      return unary();
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (accept("**") || accept("^")) return Expr::pow(base, unary());
    return base;
  }

  Expr atom() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(")")) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return Expr::integer(mpz_class(std::string(text_.substr(start, pos_ - start)), 10));
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      // Function names are matched greedily; a bare `x` or `e` stops at one
      // character so that `ex` or `xsin(x)` do not glue together.
      for (std::string_view name : {"sqrt", "sin", "cos", "tan", "exp", "log", "ln"}) {
        if (text_.substr(pos_, name.size()) == name) {
          pos_ += name.size();
          if (!accept("(")) fail("expected '(' after " + std::string(name));
          Expr arg = expr();
          if (!accept(")")) fail("expected ')'");
          const FnKind kind = name == "log" ? FnKind::kLn : *fn_from_name(name);
          return Expr::fn(kind, std::move(arg));
        }
      }
      if (c == 'x') {
        ++pos_;
        return Expr::var();
      }
      if (c == 'e') {
        ++pos_;
        return Expr::fn(FnKind::kExp, Expr::integer(1));
      }
      pos_ = start;
      fail("unknown name");
    }
    fail(c == '\0' ? "unexpected end of input" : "unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_infix(std::string_view text) { return InfixParser(text).parse(); }

}  // namespace sigeval
