#ifndef SIGEVAL_MODEL_H_
#define SIGEVAL_MODEL_H_

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sigeval/calculus.h"
#include "sigeval/candidates.h"
#include "sigeval/expr.h"
#include "sigeval/oracle.h"

namespace sigeval {

enum class DecodeStrategy { kBeam, kSample };

struct DecodeParams {
  int k = 1;
  int beam = 10;
  DecodeStrategy strategy = DecodeStrategy::kBeam;
  double temperature = 1.0;

  // Throws std::invalid_argument unless 1 <= k (<= beam for beam search)
  // and temperature > 0.
  void validate() const;
  std::string key() const;
};

// Default per-candidate token cap; longer streams raise ResponseTooLarge.
inline constexpr std::size_t kDefaultTokenCap = 512;

// Removes candidates whose canonical form repeats an earlier one (streams
// that do not parse are compared token by token), then truncates to k.
// Scores follow their candidates.
CandidateList dedup_candidates(CandidateList list, std::size_t k);

// An integrator under test. propose() validates params, calls do_propose()
// and dedups the result; implementations must be safe to call from several
// threads at once.
class Integrator {
 public:
  virtual ~Integrator() = default;

  CandidateList propose(const Expr& problem, const DecodeParams& params);

  // p(candidate | problem), or nullopt when the backend cannot score.
  virtual std::optional<double> score(const Expr& problem, const TokenSeq& candidate) = 0;

  virtual std::string name() const = 0;

 protected:
  virtual CandidateList do_propose(const Expr& problem, const DecodeParams& params) = 0;
};

// The rule-based oracle as a model: one candidate, or none when the problem
// is outside its class. Does not score.
class ReferenceIntegrator : public Integrator {
 public:
  std::optional<double> score(const Expr& problem, const TokenSeq& candidate) override;
  std::string name() const override { return "reference"; }

 protected:
  CandidateList do_propose(const Expr& problem, const DecodeParams& params) override;
};

// faulty_integrate behind the model interface. Each problem gets its own
// stream, so results do not depend on call order.
//
// Scores are synthetic: the candidate at rank r of the list produced for
// `score_beam` candidates gets top * decay^(r-1). A correct integral that
// is not in that list gets spec.truth_score when set, else one decay step
// below the last candidate; any other stream gets two steps below.
class FaultyIntegrator : public Integrator {
 public:
  explicit FaultyIntegrator(FaultSpec spec, EquivConfig verify = {}, int score_beam = 10);

  std::optional<double> score(const Expr& problem, const TokenSeq& candidate) override;
  std::string name() const override { return "faulty:" + spec_.to_string(); }
  const FaultSpec& spec() const { return spec_; }

 protected:
  CandidateList do_propose(const Expr& problem, const DecodeParams& params) override;

 private:
  FaultSpec spec_;
  EquivConfig verify_;
  int score_beam_;
};

// Memoizes another integrator. Keys are the canonical prefix string plus the
// decode parameters, so nearby re-evaluations during search are free.
class CachingIntegrator : public Integrator {
 public:
  explicit CachingIntegrator(std::shared_ptr<Integrator> inner) : inner_(std::move(inner)) {}

  std::optional<double> score(const Expr& problem, const TokenSeq& candidate) override;
  std::string name() const override { return inner_->name(); }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 protected:
  CandidateList do_propose(const Expr& problem, const DecodeParams& params) override;

 private:
  std::shared_ptr<Integrator> inner_;
  mutable std::shared_mutex mu_;
  std::map<std::string, CandidateList> proposals_;
  std::map<std::string, std::optional<double>> scores_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// Client side of the line-delimited JSON protocol. The peer is either a
// child process speaking on its standard streams or a TCP endpoint.
// Requests from many threads share one connection and are matched to
// responses by id.
struct ExternalEndpoint {
  // Shell command for a child process; empty when tcp is used.
  std::string command;
  // host:port; empty when command is used.
  std::string tcp;
  std::size_t token_cap = kDefaultTokenCap;
  // Seconds to wait for one response before giving up.
  double timeout = 60.0;

  // "cmd=<shell command>" or "tcp=<host:port>"; extra ",cap=N" and
  // ",timeout=S" suffixes are accepted after a tcp address.
  static ExternalEndpoint parse(std::string_view text);
};

class ExternalIntegrator : public Integrator {
 public:
  // Connects (or spawns) immediately; throws ModelUnavailable on failure.
  explicit ExternalIntegrator(ExternalEndpoint endpoint);
  ~ExternalIntegrator() override;

  ExternalIntegrator(const ExternalIntegrator&) = delete;
  ExternalIntegrator& operator=(const ExternalIntegrator&) = delete;

  std::optional<double> score(const Expr& problem, const TokenSeq& candidate) override;
  std::string name() const override;

 protected:
  CandidateList do_propose(const Expr& problem, const DecodeParams& params) override;

 private:
  class Connection;
  std::unique_ptr<Connection> conn_;
  ExternalEndpoint endpoint_;
};

// Builds a backend from "reference", "faulty:<fault spec>" or
// "external:cmd=..." / "external:tcp=...". A bare "external" reads the
// address from the SIGEVAL_MODEL environment variable. Throws
// std::invalid_argument on a bad selector.
std::shared_ptr<Integrator> make_integrator(std::string_view selector, const EquivConfig& verify = {});

}  // namespace sigeval

#endif  // SIGEVAL_MODEL_H_
