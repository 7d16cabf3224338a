#include <algorithm>
#include <map>
#include <stdexcept>

#include "sigeval/errors.h"
#include "sigeval/sagga.h"

namespace sigeval {

namespace {

enum class Op { kIntConstant, kIntSymbol, kIntOperation, kIntAddArg, kLeafConstant, kLeafSymbol, kLeafSimpleOp };

struct Site {
  std::vector<std::size_t> path;
  std::vector<Op> ops;
};

constexpr int kMaxAttempts = 20;

const std::map<std::string_view, InternalMutation> kInternalNames = {
    {"constant", InternalMutation::kConstant},
    {"symbol", InternalMutation::kSymbol},
    {"operation", InternalMutation::kOperation},
    {"addarg", InternalMutation::kAddArg},
};

const std::map<std::string_view, LeafMutation> kLeafNames = {
    {"constant", LeafMutation::kConstant},
    {"symbol", LeafMutation::kSymbol},
    {"simpleop", LeafMutation::kSimpleOp},
};

bool is_leaf(const Expr& e) { return e.is_literal() || e.is_var(); }

void collect_sites(const Expr& e, const MutationConfig& cfg, std::vector<std::size_t>& path, std::vector<Site>& out) {
  Site site{path, {}};
  if (is_leaf(e)) {
    const bool preserve = cfg.shape_preserving();
    if (cfg.leaf.count(LeafMutation::kConstant) && (!preserve || e.is_literal())) site.ops.push_back(Op::kLeafConstant);
    if (cfg.leaf.count(LeafMutation::kSymbol)) site.ops.push_back(Op::kLeafSymbol);
    if (cfg.leaf.count(LeafMutation::kSimpleOp)) site.ops.push_back(Op::kLeafSimpleOp);
  } else {
    if (cfg.internal.count(InternalMutation::kConstant)) site.ops.push_back(Op::kIntConstant);
    if (cfg.internal.count(InternalMutation::kSymbol)) site.ops.push_back(Op::kIntSymbol);
    if (cfg.internal.count(InternalMutation::kOperation) && !e.is(Expr::Kind::kFn)) {
      site.ops.push_back(Op::kIntOperation);
    }
    if (cfg.internal.count(InternalMutation::kAddArg)) site.ops.push_back(Op::kIntAddArg);
  }
  if (!site.ops.empty()) out.push_back(std::move(site));
  const auto args = e.args();
  for (std::size_t i = 0; i < args.size(); ++i) {
    path.push_back(i);
    collect_sites(args[i], cfg, path, out);
    path.pop_back();
  }
}

Expr rebuild(const Expr& e, std::vector<Expr> args) {
  switch (e.kind()) {
    case Expr::Kind::kAdd:
      return Expr::add(std::move(args));
    case Expr::Kind::kMul:
      return Expr::mul(std::move(args));
    case Expr::Kind::kPow:
      return Expr::pow(args[0], args[1]);
    case Expr::Kind::kFn:
      return Expr::fn(e.fn_kind(), args[0]);
    default:
      return e;
  }
}

Expr replace_at(const Expr& e, const std::vector<std::size_t>& path, std::size_t depth, const Expr& sub) {
  if (depth == path.size()) return sub;
  const auto args = e.args();
  std::vector<Expr> copy(args.begin(), args.end());
  copy[path[depth]] = replace_at(copy[path[depth]], path, depth + 1, sub);
  return rebuild(e, std::move(copy));
}

const Expr& node_at(const Expr& e, const std::vector<std::size_t>& path) {
  const Expr* cur = &e;
  for (std::size_t i : path) cur = &cur->args()[i];
  return *cur;
}

Expr change_operation(const Expr& node, Rng& rng) {
  using K = Expr::Kind;
  const K kinds[] = {K::kAdd, K::kMul, K::kPow};
  std::vector<K> others;
  for (K k : kinds) {
    if (k != node.kind()) others.push_back(k);
  }
  const K target = others[rng.index(others.size())];
  const auto args = node.args();
  std::vector<Expr> operands(args.begin(), args.end());
  if (target == K::kPow) {
    // Binary: the first operand becomes the base, the rest keep the old
    // operation in the exponent.
    Expr rest = operands.size() == 2 ? operands[1] : rebuild(node, {operands.begin() + 1, operands.end()});
    return Expr::pow(operands[0], rest);
  }
  return target == K::kAdd ? Expr::add(std::move(operands)) : Expr::mul(std::move(operands));
}

Expr add_argument(const Expr& node, const MutationConfig& cfg, Rng& rng) {
  Expr extra = random_simple_op(cfg.v_min, cfg.v_max, rng);
  switch (node.kind()) {
    case Expr::Kind::kAdd:
    case Expr::Kind::kMul: {
      const auto args = node.args();
      std::vector<Expr> operands(args.begin(), args.end());
      operands.push_back(std::move(extra));
      return rebuild(node, std::move(operands));
    }
    case Expr::Kind::kPow:
      return Expr::pow(node.base(), Expr::add(node.exponent(), std::move(extra)));
    case Expr::Kind::kFn:
      return Expr::fn(node.fn_kind(), Expr::add(node.arg(), std::move(extra)));
    default:
      return node;
  }
}

Expr apply(const Expr& node, Op op, const MutationConfig& cfg, Rng& rng) {
  auto k = [&] { return Expr::integer(rng.uniform_int(cfg.v_min, cfg.v_max)); };
  switch (op) {
    case Op::kIntConstant:
    case Op::kLeafConstant:
      return k();
    case Op::kIntSymbol:
      return Expr::var();
    case Op::kLeafSymbol:
      return Expr::mul(k(), Expr::var());
    case Op::kIntOperation:
      return change_operation(node, rng);
    case Op::kIntAddArg:
      return add_argument(node, cfg, rng);
    case Op::kLeafSimpleOp:
      return random_simple_op(cfg.v_min, cfg.v_max, rng);
  }
  return node;
}

std::string join_names(const std::vector<std::string_view>& names) {
  if (names.empty()) return "none";
  std::string out;
  for (auto n : names) {
    if (!out.empty()) out += '+';
    out += n;
  }
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(sep, start);
    out.push_back(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

MutationConfig MutationConfig::all(long v_min, long v_max) {
  MutationConfig c;
  c.v_min = v_min;
  c.v_max = v_max;
  return c;
}

MutationConfig MutationConfig::constant_only(long v_min, long v_max) {
  MutationConfig c;
  c.internal.clear();
  c.leaf = {LeafMutation::kConstant};
  c.v_min = v_min;
  c.v_max = v_max;
  return c;
}

bool MutationConfig::shape_preserving() const {
  return internal.empty() && leaf.size() == 1 && leaf.count(LeafMutation::kConstant);
}

void MutationConfig::validate() const {
  if (internal.empty() && leaf.empty()) throw std::invalid_argument("at least one mutation must be enabled");
  if (v_min >= v_max) throw std::invalid_argument("mutation range needs v_min < v_max");
}

MutationConfig MutationConfig::parse(std::string_view text) {
  MutationConfig c;
  for (auto part : split(text, ',')) {
    if (part == "all") {
      c = all();
      continue;
    }
    if (part == "constant") {
      c = constant_only();
      continue;
    }
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("bad mutation option: " + std::string(part));
    const auto key = part.substr(0, eq);
    const auto value = part.substr(eq + 1);
    if (key == "internal") {
      c.internal.clear();
      if (value == "none") continue;
      for (auto name : split(value, '+')) {
        auto it = kInternalNames.find(name);
        if (it == kInternalNames.end()) throw std::invalid_argument("unknown internal mutation: " + std::string(name));
        c.internal.insert(it->second);
      }
    } else if (key == "leaf") {
      c.leaf.clear();
      if (value == "none") continue;
      for (auto name : split(value, '+')) {
        auto it = kLeafNames.find(name);
        if (it == kLeafNames.end()) throw std::invalid_argument("unknown leaf mutation: " + std::string(name));
        c.leaf.insert(it->second);
      }
    } else if (key == "range") {
      const auto colon = value.find(':', 1);
      if (colon == std::string_view::npos) throw std::invalid_argument("range must look like lo:hi");
      try {
        c.v_min = std::stol(std::string(value.substr(0, colon)));
        c.v_max = std::stol(std::string(value.substr(colon + 1)));
      } catch (const std::logic_error&) {
        throw std::invalid_argument("bad mutation range: " + std::string(value));
      }
    } else {
      throw std::invalid_argument("unknown mutation option: " + std::string(key));
    }
  }
  c.validate();
  return c;
}

std::string MutationConfig::to_string() const {
  std::vector<std::string_view> in;
  for (const auto& [name, m] : kInternalNames) {
    if (internal.count(m)) in.push_back(name);
  }
  std::vector<std::string_view> lf;
  for (const auto& [name, m] : kLeafNames) {
    if (leaf.count(m)) lf.push_back(name);
  }
  return "internal=" + join_names(in) + ",leaf=" + join_names(lf) + ",range=" + std::to_string(v_min) + ":" +
         std::to_string(v_max);
}

Expr random_simple_op(long v_min, long v_max, Rng& rng) {
  const Expr k1 = Expr::integer(rng.uniform_int(v_min, v_max));
  const int op = static_cast<int>(rng.uniform_int(0, 2));
  const long k2 = rng.uniform_int(1, 2);
  const Expr power = k2 == 1 ? Expr::var() : Expr::pow(Expr::var(), Expr::integer(k2));
  switch (op) {
    case 0:
      return Expr::mul(k1, power);
    case 1:
      return Expr::pow(k1, power);
    default:
      return Expr::mul(k1, Expr::pow(Expr::var(), Expr::integer(-k2)));
  }
}

Expr mutate(const Expr& e, const MutationConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Site> sites;
  std::vector<std::size_t> path;
  collect_sites(e, cfg, path, sites);
  if (sites.empty()) throw NoApplicableSite("no node admits an enabled mutation in " + to_infix(e));
  const std::string shape = cfg.shape_preserving() ? shape_signature(e) : std::string();
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Site& site = sites[rng.index(sites.size())];
    const Op op = site.ops[rng.index(site.ops.size())];
    const Expr replaced = replace_at(e, site.path, 0, apply(node_at(e, site.path), op, cfg, rng));
    try {
      Expr out = canonicalize(replaced);
      if (!shape.empty() && shape_signature(out) != shape) continue;
      return out;
    } catch (const DivisionByZero&) {
      continue;
    }
  }
  throw NoApplicableSite("no valid mutation found for " + to_infix(e));
}

std::string shape_signature(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::kInteger:
    case Expr::Kind::kRational:
      return "c";
    case Expr::Kind::kVar:
      return "x";
    case Expr::Kind::kAdd:
    case Expr::Kind::kMul: {
      std::vector<std::string> parts;
      for (const auto& a : e.args()) parts.push_back(shape_signature(a));
      std::sort(parts.begin(), parts.end());
      std::string out = e.is(Expr::Kind::kAdd) ? "add(" : "mul(";
      for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
      return out + ")";
    }
    case Expr::Kind::kPow:
      return "pow(" + shape_signature(e.base()) + "," + shape_signature(e.exponent()) + ")";
    case Expr::Kind::kFn:
      return std::string(fn_name(e.fn_kind())) + "(" + shape_signature(e.arg()) + ")";
  }
  return "?";
}

bool contains_trig(const Expr& e) {
  if (e.is(Expr::Kind::kFn) && is_trig(e.fn_kind())) return true;
  for (const auto& a : e.args()) {
    if (contains_trig(a)) return true;
  }
  return false;
}

}  // namespace sigeval
