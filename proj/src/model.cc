#include "sigeval/model.h"

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sigeval {

namespace {

std::string candidate_key(const TokenSeq& tokens) {
  try {
    return canonical_key(parse_prefix(tokens));
  } catch (const ParseError&) {
  } catch (const DivisionByZero&) {
  }
  return "!" + join_tokens(tokens);
}

}  // namespace

void DecodeParams::validate() const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (beam < 1) throw std::invalid_argument("beam must be >= 1");
  if (strategy == DecodeStrategy::kBeam && k > beam) {
    throw std::invalid_argument("k must not exceed the beam width");
  }
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be > 0");
}

std::string DecodeParams::key() const {
  std::ostringstream out;
  out << k << '/' << beam << '/' << (strategy == DecodeStrategy::kBeam ? "beam" : "sample") << '/'
      << temperature;
  return out.str();
}

CandidateList dedup_candidates(CandidateList list, std::size_t k) {
  CandidateList out;
  if (list.scores) out.scores.emplace();
  std::set<std::string> seen;
  for (std::size_t i = 0; i < list.candidates.size() && out.candidates.size() < k; ++i) {
    if (!seen.insert(candidate_key(list.candidates[i])).second) continue;
    out.candidates.push_back(std::move(list.candidates[i]));
    if (list.scores) out.scores->push_back((*list.scores)[i]);
  }
  return out;
}

CandidateList Integrator::propose(const Expr& problem, const DecodeParams& params) {
  params.validate();
  CandidateList list = do_propose(problem, params);
  if (list.scores) {
    const auto& s = *list.scores;
    if (s.size() != list.candidates.size()) {
      throw MalformedResponse("score count does not match candidate count");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!(s[i] > 0 && s[i] <= 1)) throw MalformedResponse("score outside (0,1]");
      if (i > 0 && s[i] > s[i - 1]) throw MalformedResponse("scores are not non-increasing");
    }
  }
  return dedup_candidates(std::move(list), static_cast<std::size_t>(params.k));
}

CandidateList ReferenceIntegrator::do_propose(const Expr& problem, const DecodeParams&) {
  CandidateList out;
  if (auto truth = integrate_reference(problem)) out.candidates.push_back(to_prefix(*truth));
  return out;
}

std::optional<double> ReferenceIntegrator::score(const Expr&, const TokenSeq&) { return std::nullopt; }

FaultyIntegrator::FaultyIntegrator(FaultSpec spec, EquivConfig verify, int score_beam)
    : spec_(std::move(spec)), verify_(verify), score_beam_(score_beam) {
  spec_.validate();
  if (score_beam_ < 1) throw std::invalid_argument("score beam must be >= 1");
}

CandidateList FaultyIntegrator::do_propose(const Expr& problem, const DecodeParams& params) {
  Rng rng = problem_stream(spec_, problem);
  return faulty_integrate(problem, spec_, rng, params.k, verify_);
}

std::optional<double> FaultyIntegrator::score(const Expr& problem, const TokenSeq& candidate) {
  if (candidate.empty()) throw std::invalid_argument("cannot score an empty candidate");
  Rng rng = problem_stream(spec_, problem);
  const CandidateList list = faulty_integrate(problem, spec_, rng, score_beam_, verify_);
  const std::string key = candidate_key(candidate);
  for (std::size_t i = 0; i < list.candidates.size(); ++i) {
    if (candidate_key(list.candidates[i]) == key) return (*list.scores)[i];
  }
  const double below_last = list.scores->back() * spec_.score_decay;
  if (verify_integral(problem, candidate, verify_).status == VerdictStatus::kCorrect) {
    return spec_.truth_score.value_or(below_last);
  }
  return below_last * spec_.score_decay;
}

CandidateList CachingIntegrator::do_propose(const Expr& problem, const DecodeParams& params) {
  const std::string key = candidate_key(to_prefix(problem)) + "|" + params.key();
  {
    std::shared_lock lock(mu_);
    if (auto it = proposals_.find(key); it != proposals_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  CandidateList list = inner_->propose(problem, params);
  std::unique_lock lock(mu_);
  return proposals_.emplace(key, std::move(list)).first->second;
}

std::optional<double> CachingIntegrator::score(const Expr& problem, const TokenSeq& candidate) {
  const std::string key = candidate_key(to_prefix(problem)) + "|" + join_tokens(candidate);
  {
    std::shared_lock lock(mu_);
    if (auto it = scores_.find(key); it != scores_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  auto s = inner_->score(problem, candidate);
  std::unique_lock lock(mu_);
  return scores_.emplace(key, s).first->second;
}

std::shared_ptr<Integrator> make_integrator(std::string_view selector, const EquivConfig& verify) {
  if (selector == "reference") return std::make_shared<ReferenceIntegrator>();
  if (selector == "faulty") return std::make_shared<FaultyIntegrator>(FaultSpec{}, verify);
  if (selector.starts_with("faulty:")) {
    return std::make_shared<FaultyIntegrator>(FaultSpec::parse(selector.substr(7)), verify);
  }
  if (selector == "external") {
    const char* env = std::getenv("SIGEVAL_MODEL");
    if (env == nullptr || *env == '\0') {
      throw std::invalid_argument("backend 'external' needs SIGEVAL_MODEL or an explicit address");
    }
    return std::make_shared<ExternalIntegrator>(ExternalEndpoint::parse(env));
  }
  if (selector.starts_with("external:")) {
    return std::make_shared<ExternalIntegrator>(ExternalEndpoint::parse(selector.substr(9)));
  }
  throw std::invalid_argument("unknown model backend '" + std::string(selector) + "'");
}

}  // namespace sigeval
