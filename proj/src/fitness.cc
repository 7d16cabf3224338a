#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sigeval/errors.h"
#include "sigeval/metrics.h"
#include "sigeval/sagga.h"

namespace sigeval {

namespace {

constexpr double kDistanceFloor = 1e-6;

// Feature layout.
constexpr std::size_t kHistogram = 0;      // 12 slots
constexpr std::size_t kDepth = 12;         // 1 slot
constexpr std::size_t kLengthBucket = 13;  // 5 slots
constexpr std::size_t kMagnitude = 18;     // 4 slots
constexpr std::size_t kBigrams = 22;       // 32 slots
constexpr std::size_t kBigramSlots = 32;
static_assert(kBigrams + kBigramSlots == kEmbeddingDim);

void histogram(const Expr& e, std::vector<double>& v) {
  switch (e.kind()) {
    case Expr::Kind::kAdd:
      v[kHistogram + 0] += static_cast<double>(e.args().size() - 1);
      break;
    case Expr::Kind::kMul:
      v[kHistogram + 1] += static_cast<double>(e.args().size() - 1);
      break;
    case Expr::Kind::kPow:
      v[kHistogram + 2] += 1;
      break;
    case Expr::Kind::kFn:
      v[kHistogram + 3 + static_cast<std::size_t>(e.fn_kind())] += 1;
      break;
    case Expr::Kind::kInteger:
    case Expr::Kind::kRational: {
      v[kHistogram + (e.is(Expr::Kind::kInteger) ? 9 : 10)] += 1;
      const mpz_class num = abs(e.value().get_num());
      const mpz_class& den = e.value().get_den();
      const mpz_class mag = num > den ? num : den;
      const std::size_t bucket = mag <= 1 ? 0 : mag <= 10 ? 1 : mag <= 100 ? 2 : 3;
      v[kMagnitude + bucket] += 1;
      break;
    }
    case Expr::Kind::kVar:
      v[kHistogram + 11] += 1;
      break;
  }
  for (const auto& a : e.args()) histogram(a, v);
}

std::string collapse_digits(const std::string& token) {
  const bool digits = !token.empty() && std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; });
  return digits ? "D" : token;
}

std::vector<double> normalized(const std::vector<double>& v) {
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  std::vector<double> out(v);
  if (norm > 0) {
    for (double& x : out) x /= norm;
  }
  return out;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

FitnessSpec FitnessSpec::short_default() { return FitnessSpec{}; }

FitnessSpec FitnessSpec::length(int target) {
  FitnessSpec s;
  s.kind = Kind::kTargetLength;
  s.target_length = target;
  s.validate();
  return s;
}

FitnessSpec FitnessSpec::near_targets(std::vector<Expr> targets) {
  FitnessSpec s;
  s.kind = Kind::kNearTargets;
  s.targets = std::move(targets);
  s.validate();
  return s;
}

FitnessSpec FitnessSpec::trig_gated(FitnessSpec inner) {
  FitnessSpec s;
  s.kind = Kind::kGated;
  s.inner = std::make_shared<const FitnessSpec>(std::move(inner));
  return s;
}

void FitnessSpec::validate() const {
  switch (kind) {
    case Kind::kShort:
      return;
    case Kind::kTargetLength:
      if (target_length < 1) throw std::invalid_argument("target length must be at least 1");
      return;
    case Kind::kNearTargets:
      if (targets.empty()) throw std::invalid_argument("near-target fitness needs a non-empty target set");
      return;
    case Kind::kGated:
      if (!inner) throw std::invalid_argument("gated fitness needs an inner fitness");
      inner->validate();
      return;
  }
}

FitnessSpec FitnessSpec::parse(std::string_view text) {
  if (text == "short") return short_default();
  if (text == "trig") return trig_gated(short_default());
  if (text.rfind("trig:", 0) == 0) return trig_gated(parse(text.substr(5)));
  if (text.rfind("length:", 0) == 0) {
    const std::string digits(text.substr(7));
    std::size_t used = 0;
    int target = 0;
    try {
      target = std::stoi(digits, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != digits.size()) throw std::invalid_argument("bad target length: " + digits);
    return length(target);
  }
  if (text == "near") throw std::invalid_argument("near-target fitness needs a target file");
  throw std::invalid_argument("unknown fitness: " + std::string(text));
}

std::string FitnessSpec::to_string() const {
  switch (kind) {
    case Kind::kShort:
      return "short";
    case Kind::kTargetLength:
      return "length:" + std::to_string(target_length);
    case Kind::kNearTargets:
      return "near:" + std::to_string(targets.size());
    case Kind::kGated:
      return inner->kind == Kind::kShort ? "trig" : "trig:" + inner->to_string();
  }
  return "?";
}

double shaping(const FitnessSpec& spec, const Expr& e) {
  switch (spec.kind) {
    case FitnessSpec::Kind::kShort:
      return 1.0 / static_cast<double>(metrics(e).token_len);
    case FitnessSpec::Kind::kTargetLength: {
      const long len = static_cast<long>(metrics(e).token_len);
      const long gap = std::labs(len - spec.target_length);
      return 1.0 / static_cast<double>(std::max(gap, 1L));
    }
    case FitnessSpec::Kind::kNearTargets: {
      const auto u = embed(e);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : spec.targets) best = std::min(best, cosine_distance(u, embed(t)));
      return 1.0 / std::max(best, kDistanceFloor);
    }
    case FitnessSpec::Kind::kGated:
      return contains_trig(e) ? shaping(*spec.inner, e) : 0.0;
  }
  return 0.0;
}

Evaluation evaluate_fitness(const FitnessSpec& spec, const Expr& e, Integrator& integrator, int k, int beam,
                            const EquivConfig& cfg) {
  Evaluation out;
  const double shape = shaping(spec, e);
  // A closed gate makes the fitness zero whatever the model does.
  if (spec.kind == FitnessSpec::Kind::kGated && shape == 0.0) return out;
  DecodeParams params;
  params.k = k;
  params.beam = std::max(beam, k);
  out.evaluated = true;
  try {
    out.candidates = integrator.propose(e, params);
    out.verdicts = verify_candidates(e, out.candidates, static_cast<std::size_t>(k), cfg);
    out.m = first_success_rank(out.verdicts) == 0 ? 1 : 0;
  } catch (const ResponseTooLarge&) {
    out.candidates = {};
    out.verdicts.clear();
    out.m = 1;
  }
  out.fitness = out.m * shape;
  return out;
}

std::vector<double> embed(const Expr& e) {
  std::vector<double> v(kEmbeddingDim, 0.0);
  histogram(e, v);
  const ExprMetrics m = metrics(e);
  v[kDepth] = static_cast<double>(m.depth);
  const std::size_t len = m.token_len;
  v[kLengthBucket + (len <= 5 ? 0 : len <= 10 ? 1 : len <= 20 ? 2 : len <= 40 ? 3 : 4)] = 1.0;
  const TokenSeq tokens = to_prefix(e);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const std::string pair = collapse_digits(tokens[i]) + " " + collapse_digits(tokens[i + 1]);
    v[kBigrams + hash_string(pair) % kBigramSlots] += 1;
  }
  return v;
}

double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw std::invalid_argument("embedding sizes differ");
  double dot = 0;
  double nu = 0;
  double nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) return 1.0;
  return std::clamp(1.0 - dot / std::sqrt(nu * nv), 0.0, 2.0);
}

std::vector<int> kmeans(const std::vector<std::vector<double>>& vectors, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const std::size_t n = vectors.size();
  if (n < static_cast<std::size_t>(k)) {
    throw TooFewPoints("k-means needs at least " + std::to_string(k) + " points, got " + std::to_string(n));
  }
  std::vector<std::vector<double>> points;
  points.reserve(n);
  for (const auto& v : vectors) points.push_back(normalized(v));

  std::vector<std::vector<double>> centers = {points[rng.index(n)]};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centers.size() < static_cast<std::size_t>(k)) {
    std::size_t far = 0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centers.back()));
      if (nearest[i] > nearest[far]) far = i;
    }
    centers.push_back(points[far]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(points[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(points[i], centers[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(points[0].size(), 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assign[i]);
      ++counts[c];
      for (std::size_t d = 0; d < points[i].size(); ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] == 0) continue;
      for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
      centers[c] = std::move(sums[c]);
    }
  }
  return assign;
}

}  // namespace sigeval
