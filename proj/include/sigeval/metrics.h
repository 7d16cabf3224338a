#ifndef SIGEVAL_METRICS_H_
#define SIGEVAL_METRICS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sigeval/calculus.h"
#include "sigeval/candidates.h"
#include "sigeval/model.h"
#include "sigeval/parallel.h"
#include "sigeval/problem.h"

namespace sigeval {

// Verifies candidates in rank order, at most `limit` of them. Stops after
// the first success unless `exhaustive`. Each verdict carries its rank.
std::vector<Verdict> verify_candidates(const Expr& problem, const CandidateList& candidates,
                                       std::size_t limit, const EquivConfig& cfg, bool exhaustive = false);

// 1-based rank of the first successful verdict, 0 if none.
int first_success_rank(const std::vector<Verdict>& verdicts);

// 0 if one of the first k candidates verifies (timeouts included), else 1.
int failure_indicator(const Expr& problem, const CandidateList& candidates, int k, const EquivConfig& cfg);

struct EvalRecord {
  std::size_t index = 0;
  Problem problem;
  CandidateList candidates;
  std::vector<Verdict> verdicts;
  int first_correct_rank = 0;
  double verify_seconds = 0.0;
  // Set when the backend's answer could not be used, e.g. "response_too_large".
  std::string note;

  int m(int k) const { return first_correct_rank == 0 || first_correct_rank > k ? 1 : 0; }
};

struct FailAtKOptions {
  std::vector<int> ks = {1};
  // k and beam are raised to cover max(ks).
  DecodeParams params;
  EquivConfig verify;
  int workers = default_workers();
  std::uint64_t seed = 0;
  bool exhaustive = false;
};

struct FailAtKResult {
  std::vector<int> ks;
  std::vector<double> rates;
  std::vector<EvalRecord> records;
  double total_verify_seconds = 0.0;
  double max_verify_seconds = 0.0;
  // max(ks) * budget * N: verification time without early stopping when
  // every candidate runs into its budget.
  double worst_case_seconds = 0.0;

  double rate(int k) const;
};

// Evaluates every problem in parallel. The verification seed of problem i
// is derived from (opts.seed, i). A response over the token cap counts as a
// failure; ModelUnavailable and MalformedResponse propagate.
FailAtKResult fail_at_k(const std::vector<Problem>& problems, Integrator& integrator,
                        const FailAtKOptions& opts);

// Rates recomputed from stored records.
std::vector<double> rates_from_records(const std::vector<EvalRecord>& records, const std::vector<int>& ks);

// The problems whose Fail@k is 0 against `integrator`.
std::vector<Problem> solved_subset(const std::vector<Problem>& problems, Integrator& integrator,
                                   const FailAtKOptions& opts);

struct SearchReport {
  std::vector<int> ks;
  std::size_t problems = 0;
  // Mean score of the rank-1 candidate, of the rank-max(ks) candidate, and
  // of the total mass of the first max(ks) candidates.
  double mean_p_at_1 = 0.0;
  double mean_p_at_kmax = 0.0;
  double mean_mass = 0.0;
  std::vector<int> first_correct_rank;
  std::vector<double> truth_scores;
  // Per k: failures at k, and the fraction of them where the correct
  // integral scores below the k-th candidate (the last one if the list is
  // shorter), so no search at width k could have found it.
  std::map<int, std::size_t> failures;
  std::map<int, double> unresolved;
};

// Throws ScoringUnsupported if a record has no candidate scores.
SearchReport search_vs_model_report(const std::vector<EvalRecord>& records, const std::vector<int>& ks,
                                    const std::vector<double>& truth_scores);
// Scores each record's ground truth with `scorer`. Throws NoGroundTruth for
// a record without one and ScoringUnsupported if the backend cannot score.
SearchReport search_vs_model_report(const std::vector<EvalRecord>& records, const std::vector<int>& ks,
                                    Integrator& scorer);

std::string format_search_report(const SearchReport& report);

// Rows of (label, rates), one Fail@k column per entry of ks.
std::string format_fail_table(const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                              const std::vector<int>& ks);

// Record files: a header object on the first line, then one record per
// line. Only the header carries a timestamp; timings are not written, so
// identical runs produce identical record lines.
struct RecordHeader {
  std::string suite;
  std::string model;
  std::vector<int> ks;
  std::uint64_t seed = 0;
  std::string created;
};

void write_records(std::ostream& out, const RecordHeader& header, const std::vector<EvalRecord>& records);
std::pair<RecordHeader, std::vector<EvalRecord>> read_records(std::istream& in);

std::string record_to_json(const EvalRecord& record);
EvalRecord record_from_json(const std::string& line);

// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace sigeval

#endif  // SIGEVAL_METRICS_H_
