#include "sigeval/oracle.h"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sigeval {

namespace {

struct Affine {
  mpq_class k;
  mpq_class c;
};

// k*x + c with literal k != 0, in canonical shape.
std::optional<Affine> as_affine(const Expr& u) {
  if (u.is_var()) return Affine{1, 0};
  if (u.is(Expr::Kind::kMul) && u.args().size() == 2 && u.args()[0].is_literal() &&
      u.args()[1].is_var()) {
    return Affine{u.args()[0].value(), 0};
  }
  if (u.is(Expr::Kind::kAdd) && u.args().size() == 2 && u.args()[0].is_literal()) {
    if (auto inner = as_affine(u.args()[1]); inner && inner->c == 0) {
      return Affine{inner->k, u.args()[0].value()};
    }
  }
  return std::nullopt;
}

Expr q(const mpq_class& v) { return Expr::number(v); }

std::optional<Expr> integrate_atom(const Expr& f) {
  const Expr x = Expr::var();
  if (f.is_var()) return Expr::mul(q(mpq_class(1, 2)), Expr::pow(x, Expr::integer(2)));

  if (f.is(Expr::Kind::kPow)) {
    const Expr& b = f.base();
    const Expr& n = f.exponent();
    if (b.is_var() && n.is_literal()) {
      if (n.value() == -1) return Expr::fn(FnKind::kLn, x);
      const mpq_class m = n.value() + 1;
      return Expr::mul(q(1 / m), Expr::pow(x, q(m)));
    }
    if (b.is(Expr::Kind::kInteger) && b.value() > 1) {
      if (auto a = as_affine(n)) {
        return Expr::mul({q(1 / a->k), f, Expr::pow(Expr::fn(FnKind::kLn, b), Expr::integer(-1))});
      }
    }
    return std::nullopt;
  }

  if (!f.is(Expr::Kind::kFn)) return std::nullopt;
  const Expr& u = f.arg();
  const auto a = as_affine(u);
  if (!a) return std::nullopt;
  const Expr inv_k = q(1 / a->k);
  switch (f.fn_kind()) {
    case FnKind::kSin:
      return Expr::mul({q(-1 / a->k), Expr::fn(FnKind::kCos, u)});
    case FnKind::kCos:
      return Expr::mul(inv_k, Expr::fn(FnKind::kSin, u));
    case FnKind::kExp:
      return Expr::mul(inv_k, f);
    case FnKind::kTan:
      if (a->c != 0) return std::nullopt;
      return Expr::mul(q(-1 / a->k), Expr::fn(FnKind::kLn, Expr::fn(FnKind::kCos, u)));
    case FnKind::kLn:
      if (a->c != 0) return std::nullopt;
      return Expr::mul(x, Expr::add(f, Expr::integer(-1)));
    case FnKind::kSqrt:
      return Expr::mul(q(mpq_class(2, 3) / a->k), Expr::pow(u, q(mpq_class(3, 2))));
  }
  return std::nullopt;
}

// Constant factors and the single x-dependent factor of a canonical term.
std::optional<std::pair<std::vector<Expr>, Expr>> split_term(const Expr& term) {
  if (!term.is(Expr::Kind::kMul)) return std::make_pair(std::vector<Expr>{}, term);
  std::vector<Expr> constants;
  std::optional<Expr> atom;
  for (const auto& f : term.args()) {
    if (!f.depends_on_x()) {
      constants.push_back(f);
    } else if (atom) {
      return std::nullopt;
    } else {
      atom = f;
    }
  }
  return std::make_pair(std::move(constants), *atom);
}

std::optional<Expr> integrate_term(const Expr& term) {
  if (!term.depends_on_x()) return Expr::mul(term, Expr::var());
  auto split = split_term(term);
  if (!split) return std::nullopt;
  auto inner = integrate_atom(split->second);
  if (!inner) return std::nullopt;
  auto factors = std::move(split->first);
  factors.push_back(*inner);
  return factors.size() == 1 ? factors[0] : Expr::mul(std::move(factors));
}

std::optional<Family> atom_family(const Expr& f) {
  if (f.is_var()) return Family::kPower;
  if (f.is(Expr::Kind::kPow)) {
    if (f.base().is_var() && !f.exponent().depends_on_x()) return Family::kPower;
    if (!f.base().depends_on_x()) return Family::kExponential;
    return std::nullopt;
  }
  if (!f.is(Expr::Kind::kFn)) return std::nullopt;
  switch (f.fn_kind()) {
    case FnKind::kSin:
      return Family::kSin;
    case FnKind::kCos:
      return Family::kCos;
    case FnKind::kTan:
      return Family::kTan;
    case FnKind::kExp:
      return Family::kExp;
    case FnKind::kLn:
      return Family::kLn;
    case FnKind::kSqrt:
      return Family::kSqrt;
  }
  return std::nullopt;
}

Family term_family(const Expr& term) {
  auto split = split_term(term);
  if (!split) return Family::kOther;
  return atom_family(split->second).value_or(Family::kOther);
}

// Corruptions. Each takes the canonical base answer and returns a wrong one.

Expr map_terms(const Expr& e, const std::function<Expr(const Expr&)>& fn) {
  if (!e.is(Expr::Kind::kAdd)) return fn(e);
  std::vector<Expr> out;
  for (const auto& t : e.args()) out.push_back(fn(t));
  return Expr::add(std::move(out));
}

Expr drop_division(const Expr& base) {
  return map_terms(base, [](const Expr& t) {
    mpq_class c = 1;
    Expr rest = t;
    if (t.is_literal()) {
      c = t.value();
      rest = Expr::integer(1);
    } else if (t.is(Expr::Kind::kMul) && t.args()[0].is_literal()) {
      c = t.args()[0].value();
      const auto args = t.args();
      rest = args.size() == 2 ? args[1] : Expr::mul(std::vector<Expr>(args.begin() + 1, args.end()));
    }
    mpq_class wrong;
    if (c.get_den() != 1) {
      wrong = c.get_num();
    } else if (abs(c) > 1) {
      wrong = 1 / c;
    } else {
      wrong = 2 * c;
    }
    return Expr::mul(Expr::number(wrong), rest);
  });
}

void collect_literals(const Expr& e, std::vector<const Expr*>& out) {
  if (e.is_literal()) {
    out.push_back(&e);
    return;
  }
  for (const auto& a : e.args()) collect_literals(a, out);
}

Expr replace_node(const Expr& e, const Expr* target, const Expr& replacement) {
  if (&e == target) return replacement;
  if (e.args().empty()) return e;
  std::vector<Expr> args;
  for (const auto& a : e.args()) args.push_back(replace_node(a, target, replacement));
  switch (e.kind()) {
    case Expr::Kind::kAdd:
      return Expr::add(std::move(args));
    case Expr::Kind::kMul:
      return Expr::mul(std::move(args));
    case Expr::Kind::kPow:
      return Expr::pow(args[0], args[1]);
    default:
      return Expr::fn(e.fn_kind(), args[0]);
  }
}

Expr corrupt_constant(const Expr& base, Rng& rng) {
  static constexpr int kDeltas[] = {-2, -1, 1, 2};
  std::vector<const Expr*> literals;
  collect_literals(base, literals);
  const int delta = kDeltas[rng.index(4)];
  if (literals.empty()) return Expr::mul(Expr::integer(delta == -1 ? -1 : delta + 1), base);
  const Expr* target = literals[rng.index(literals.size())];
  return replace_node(base, target, Expr::number(target->value() + delta));
}

FnKind swapped(FnKind k) {
  switch (k) {
    case FnKind::kSin:
      return FnKind::kCos;
    case FnKind::kCos:
      return FnKind::kSin;
    case FnKind::kTan:
      return FnKind::kCos;
    case FnKind::kExp:
      return FnKind::kLn;
    case FnKind::kLn:
      return FnKind::kExp;
    case FnKind::kSqrt:
      return FnKind::kLn;
  }
  return k;
}

const Expr* first_of(const Expr& e, Expr::Kind kind) {
  if (e.is(kind)) return &e;
  for (const auto& a : e.args()) {
    if (const Expr* hit = first_of(a, kind)) return hit;
  }
  return nullptr;
}

Expr template_swap(const Expr& base) {
  if (const Expr* f = first_of(base, Expr::Kind::kFn)) {
    return replace_node(base, f, Expr::fn(swapped(f->fn_kind()), f->arg()));
  }
  if (const Expr* p = first_of(base, Expr::Kind::kPow)) {
    return replace_node(base, p, Expr::pow(p->base(), Expr::add(p->exponent(), Expr::integer(1))));
  }
  return Expr::mul(base, Expr::var());
}

TokenSeq garbage_tokens(const Expr& base, Rng& rng) {
  static const char* kOps[] = {"add", "mul", "pow"};
  TokenSeq out;
  const int extra = static_cast<int>(rng.uniform_int(1, 3));
  for (int i = 0; i < extra; ++i) out.push_back(kOps[rng.index(3)]);
  const TokenSeq body = to_prefix(base);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

TokenSeq nonterminating(std::size_t length) {
  TokenSeq out;
  out.reserve(length);
  while (out.size() < length) out.push_back(out.size() % 2 == 0 ? "add" : "x");
  return out;
}

std::string key_of(const Expr& e) {
  try {
    return canonical_key(e);
  } catch (const DivisionByZero&) {
    return join_tokens(to_prefix(e));
  }
}

}  // namespace

std::optional<Expr> integrate_reference(const Expr& e) {
  Expr ce;
  try {
    ce = canonicalize(e);
  } catch (const DivisionByZero&) {
    return std::nullopt;
  }
  std::vector<Expr> parts;
  if (ce.is(Expr::Kind::kAdd)) {
    for (const auto& t : ce.args()) {
      auto it = integrate_term(t);
      if (!it) return std::nullopt;
      parts.push_back(*it);
    }
  } else {
    auto it = integrate_term(ce);
    if (!it) return std::nullopt;
    parts.push_back(*it);
  }
  return canonicalize(parts.size() == 1 ? parts[0] : Expr::add(std::move(parts)));
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kConstant:
      return "constant";
    case Family::kPower:
      return "power";
    case Family::kSin:
      return "sin";
    case Family::kCos:
      return "cos";
    case Family::kTan:
      return "tan";
    case Family::kExp:
      return "exp";
    case Family::kLn:
      return "ln";
    case Family::kExponential:
      return "exponential";
    case Family::kSqrt:
      return "sqrt";
    case Family::kSum:
      return "sum";
    case Family::kOther:
      return "other";
  }
  return "other";
}

std::optional<Family> family_from_name(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

Family classify(const Expr& e) {
  Expr ce;
  try {
    ce = canonicalize(e);
  } catch (const DivisionByZero&) {
    return Family::kOther;
  }
  if (!ce.depends_on_x()) return Family::kConstant;
  if (ce.is(Expr::Kind::kAdd)) {
    std::vector<Expr> varying;
    for (const auto& t : ce.args()) {
      if (t.depends_on_x()) varying.push_back(t);
    }
    if (varying.size() >= 2) return Family::kSum;
    return term_family(varying[0]);
  }
  return term_family(ce);
}

std::string_view fault_kind_name(FaultKind k) {
  switch (k) {
    case FaultKind::kDropDivision:
      return "drop_division";
    case FaultKind::kCorruptConstant:
      return "corrupt_constant";
    case FaultKind::kTemplateSwap:
      return "template_swap";
    case FaultKind::kGarbageTokens:
      return "garbage_tokens";
    case FaultKind::kNonterminating:
      return "nonterminating";
  }
  return "?";
}

std::optional<FaultKind> fault_kind_from_name(std::string_view name) {
  for (auto k : {FaultKind::kDropDivision, FaultKind::kCorruptConstant, FaultKind::kTemplateSwap,
                 FaultKind::kGarbageTokens, FaultKind::kNonterminating}) {
    if (fault_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

double FaultSpec::probability(Family f) const {
  auto it = family_p.find(f);
  return it == family_p.end() ? p : it->second;
}

void FaultSpec::validate() const {
  auto check_p = [](double v, std::string_view what) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("fault probability for " + std::string(what) + " must be in [0,1]");
    }
  };
  check_p(p, "default");
  for (const auto& [f, v] : family_p) check_p(v, family_name(f));
  if (kinds.empty()) throw std::invalid_argument("fault spec enables no fault kinds");
  if (rank_of_correct && *rank_of_correct < 1) throw std::invalid_argument("rank must be >= 1");
  if (max_tokens < 2) throw std::invalid_argument("max_tokens must be >= 2");
  if (!(top_score > 0 && top_score <= 1)) throw std::invalid_argument("top score must be in (0,1]");
  if (!(score_decay > 0 && score_decay <= 1)) throw std::invalid_argument("decay must be in (0,1]");
  if (truth_score && !(*truth_score > 0 && *truth_score <= 1)) {
    throw std::invalid_argument("truth_score must be in (0,1]");
  }
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument("bad number for " + key + ": '" + v + "'");
  return out;
}

}  // namespace

FaultSpec FaultSpec::parse(std::string_view text) {
  FaultSpec spec;
  std::stringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "p") {
      spec.p = parse_double(key, value);
    } else if (auto fam = family_from_name(key)) {
      spec.family_p[*fam] = parse_double(key, value);
    } else if (key == "kinds") {
      spec.kinds.clear();
      std::stringstream names(value);
      std::string name;
      while (std::getline(names, name, '+')) {
        auto k = fault_kind_from_name(name);
        if (!k) throw std::invalid_argument("unknown fault kind '" + name + "'");
        spec.kinds.push_back(*k);
      }
    } else if (key == "rank") {
      if (value == "none") {
        spec.rank_of_correct.reset();
      } else {
        spec.rank_of_correct = static_cast<int>(parse_double(key, value));
      }
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
    } else if (key == "max_tokens") {
      spec.max_tokens = static_cast<std::size_t>(parse_double(key, value));
    } else if (key == "top") {
      spec.top_score = parse_double(key, value);
    } else if (key == "decay") {
      spec.score_decay = parse_double(key, value);
    } else if (key == "truth_score") {
      spec.truth_score = parse_double(key, value);
    } else {
      throw std::invalid_argument("unknown fault spec key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

std::string FaultSpec::to_string() const {
  std::ostringstream out;
  out << "p=" << p;
  for (const auto& [f, v] : family_p) out << ',' << family_name(f) << '=' << v;
  out << ",kinds=";
  for (std::size_t i = 0; i < kinds.size(); ++i) out << (i ? "+" : "") << fault_kind_name(kinds[i]);
  out << ",rank=";
  if (rank_of_correct) {
    out << *rank_of_correct;
  } else {
    out << "none";
  }
  out << ",seed=" << seed << ",max_tokens=" << max_tokens << ",top=" << top_score
      << ",decay=" << score_decay;
  if (truth_score) out << ",truth_score=" << *truth_score;
  return out.str();
}

Rng problem_stream(const FaultSpec& spec, const Expr& problem) {
  return Rng(derive_seed(spec.seed, {hash_string(key_of(problem))}));
}

constexpr int kCorruptionAttempts = 8;

CandidateList faulty_integrate(const Expr& problem, const FaultSpec& spec, Rng& rng, int k,
                               const EquivConfig& cfg) {
  const std::optional<Expr> truth = integrate_reference(problem);
  const bool succeed = !rng.bernoulli(spec.probability(classify(problem))) && truth.has_value();
  Expr base;
  if (truth) {
    base = *truth;
  } else {
    try {
      base = canonicalize(Expr::mul(problem, Expr::var()));
    } catch (const DivisionByZero&) {
      base = Expr::mul(problem, Expr::var());
    }
  }

  CandidateList out;
  std::set<std::string> seen;
  auto accept_tokens = [&](TokenSeq t) {
    while (seen.contains(join_tokens(t))) t.insert(t.begin(), "add");
    seen.insert(join_tokens(t));
    out.candidates.push_back(std::move(t));
  };
  auto accept_expr = [&](Expr c) {
    // A corruption that happens to verify, or repeats an earlier slot, is
    // pushed off by adding multiples of x, then by scaling. Problems with
    // huge values can absorb both within tolerance; those slots fall back
    // to an unparseable stream.
    const Expr original = c;
    for (int attempt = 1; attempt <= kCorruptionAttempts; ++attempt) {
      try {
        c = canonicalize(c);
      } catch (const DivisionByZero&) {
      }
      const std::string key = key_of(c);
      if (!seen.contains(key) && !verify_integral(problem, c, cfg).success()) {
        seen.insert(key);
        out.candidates.push_back(to_prefix(c));
        return;
      }
      c = attempt < kCorruptionAttempts / 2 ? Expr::add(c, Expr::mul(Expr::integer(attempt), Expr::var()))
                                            : Expr::mul(Expr::integer(attempt), original);
    }
    accept_tokens({"add", "x"});
  };

  for (int rank = 1; rank <= k; ++rank) {
    if (succeed && spec.rank_of_correct == rank) {
      seen.insert(key_of(*truth));
      out.candidates.push_back(to_prefix(*truth));
      continue;
    }
    switch (spec.kinds[rng.index(spec.kinds.size())]) {
      case FaultKind::kDropDivision:
        accept_expr(drop_division(base));
        break;
      case FaultKind::kCorruptConstant:
        accept_expr(corrupt_constant(base, rng));
        break;
      case FaultKind::kTemplateSwap:
        accept_expr(template_swap(base));
        break;
      case FaultKind::kGarbageTokens:
        accept_tokens(garbage_tokens(base, rng));
        break;
      case FaultKind::kNonterminating:
        accept_tokens(nonterminating(spec.max_tokens));
        break;
    }
  }

  std::vector<double> scores;
  double s = spec.top_score;
  for (std::size_t i = 0; i < out.candidates.size(); ++i, s *= spec.score_decay) scores.push_back(s);
  out.scores = std::move(scores);
  return out;
}

}  // namespace sigeval
