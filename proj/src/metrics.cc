#include "sigeval/metrics.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sigeval {

using json = nlohmann::json;

std::vector<Verdict> verify_candidates(const Expr& problem, const CandidateList& candidates,
                                       std::size_t limit, const EquivConfig& cfg, bool exhaustive) {
  std::vector<Verdict> out;
  const std::size_t n = std::min(limit, candidates.size());
  for (std::size_t i = 0; i < n; ++i) {
    Verdict v = verify_integral(problem, candidates.candidates[i], cfg);
    v.candidate_rank = static_cast<int>(i + 1);
    out.push_back(v);
    if (v.success() && !exhaustive) break;
  }
  return out;
}

int first_success_rank(const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts) {
    if (v.success()) return v.candidate_rank;
  }
  return 0;
}

int failure_indicator(const Expr& problem, const CandidateList& candidates, int k, const EquivConfig& cfg) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return first_success_rank(verify_candidates(problem, candidates, static_cast<std::size_t>(k), cfg)) == 0
             ? 1
             : 0;
}

double FailAtKResult::rate(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return rates[i];
  }
  throw std::out_of_range("Fail@" + std::to_string(k) + " was not computed");
}

std::vector<double> rates_from_records(const std::vector<EvalRecord>& records, const std::vector<int>& ks) {
  std::vector<double> rates;
  for (int k : ks) {
    std::size_t failures = 0;
    for (const auto& r : records) failures += static_cast<std::size_t>(r.m(k));
    rates.push_back(records.empty() ? 0.0 : static_cast<double>(failures) / static_cast<double>(records.size()));
  }
  return rates;
}

FailAtKResult fail_at_k(const std::vector<Problem>& problems, Integrator& integrator,
                        const FailAtKOptions& opts) {
  if (problems.empty()) throw std::invalid_argument("fail_at_k needs at least one problem");
  if (opts.ks.empty()) throw std::invalid_argument("fail_at_k needs at least one k");
  const int kmax = *std::max_element(opts.ks.begin(), opts.ks.end());
  if (*std::min_element(opts.ks.begin(), opts.ks.end()) < 1) throw std::invalid_argument("k must be >= 1");
  DecodeParams params = opts.params;
  params.k = kmax;
  params.beam = std::max(params.beam, kmax);

  FailAtKResult result;
  result.ks = opts.ks;
  result.records.resize(problems.size());
  parallel_for(problems.size(), opts.workers, [&](std::size_t i) {
    EvalRecord& rec = result.records[i];
    rec.index = i;
    rec.problem = problems[i];
    try {
      rec.candidates = integrator.propose(problems[i].problem, params);
    } catch (const ResponseTooLarge&) {
      rec.note = "response_too_large";
      return;
    }
    EquivConfig cfg = opts.verify;
    cfg.seed = derive_seed(opts.seed, {i});
    const auto start = std::chrono::steady_clock::now();
    rec.verdicts = verify_candidates(problems[i].problem, rec.candidates, static_cast<std::size_t>(kmax), cfg,
                                     opts.exhaustive);
    rec.verify_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.first_correct_rank = first_success_rank(rec.verdicts);
  });

  result.rates = rates_from_records(result.records, opts.ks);
  for (const auto& r : result.records) {
    result.total_verify_seconds += r.verify_seconds;
    result.max_verify_seconds = std::max(result.max_verify_seconds, r.verify_seconds);
  }
  result.worst_case_seconds =
      static_cast<double>(kmax) * opts.verify.per_candidate_budget * static_cast<double>(problems.size());
  return result;
}

std::vector<Problem> solved_subset(const std::vector<Problem>& problems, Integrator& integrator,
                                   const FailAtKOptions& opts) {
  const FailAtKResult r = fail_at_k(problems, integrator, opts);
  const int kmax = *std::max_element(opts.ks.begin(), opts.ks.end());
  std::vector<Problem> out;
  for (const auto& rec : r.records) {
    if (rec.m(kmax) == 0) out.push_back(rec.problem);
  }
  return out;
}

SearchReport search_vs_model_report(const std::vector<EvalRecord>& records, const std::vector<int>& ks,
                                    const std::vector<double>& truth_scores) {
  if (truth_scores.size() != records.size()) {
    throw std::invalid_argument("one ground-truth score per record is required");
  }
  if (ks.empty()) throw std::invalid_argument("report needs at least one k");
  const int kmax = *std::max_element(ks.begin(), ks.end());
  SearchReport rep;
  rep.ks = ks;
  rep.problems = records.size();
  rep.truth_scores = truth_scores;
  for (const auto& r : records) {
    if (!r.candidates.scores) throw ScoringUnsupported("record " + std::to_string(r.index) + " has no scores");
    const auto& s = *r.candidates.scores;
    rep.first_correct_rank.push_back(r.first_correct_rank);
    if (s.empty()) continue;
    const std::size_t top = std::min<std::size_t>(s.size(), static_cast<std::size_t>(kmax));
    rep.mean_p_at_1 += s[0];
    rep.mean_p_at_kmax += s[top - 1];
    rep.mean_mass += std::accumulate(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(top), 0.0);
  }
  if (!records.empty()) {
    const double n = static_cast<double>(records.size());
    rep.mean_p_at_1 /= n;
    rep.mean_p_at_kmax /= n;
    rep.mean_mass /= n;
  }
  for (int k : ks) {
    std::size_t failures = 0;
    std::size_t unresolved = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.m(k) == 0) continue;
      ++failures;
      const auto& s = *r.candidates.scores;
      if (s.empty()) continue;
      const double kth = s[std::min<std::size_t>(s.size(), static_cast<std::size_t>(k)) - 1];
      if (truth_scores[i] < kth) ++unresolved;
    }
    rep.failures[k] = failures;
    rep.unresolved[k] = failures == 0 ? 0.0 : static_cast<double>(unresolved) / static_cast<double>(failures);
  }
  return rep;
}

SearchReport search_vs_model_report(const std::vector<EvalRecord>& records, const std::vector<int>& ks,
                                    Integrator& scorer) {
  std::vector<double> truth_scores;
  for (const auto& r : records) {
    if (!r.problem.truth) throw NoGroundTruth("record " + std::to_string(r.index) + " has no ground truth");
    auto s = scorer.score(r.problem.problem, to_prefix(*r.problem.truth));
    if (!s) throw ScoringUnsupported("backend '" + scorer.name() + "' cannot score sequences");
    truth_scores.push_back(*s);
  }
  return search_vs_model_report(records, ks, truth_scores);
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

}  // namespace

std::string format_search_report(const SearchReport& rep) {
  std::ostringstream out;
  out << "problems          " << rep.problems << "\n";
  out << "mean p@1          " << std::setprecision(6) << rep.mean_p_at_1 << "\n";
  out << "mean p@" << std::left << std::setw(11) << *std::max_element(rep.ks.begin(), rep.ks.end())
      << rep.mean_p_at_kmax << "\n";
  out << "mean mass         " << rep.mean_mass << "\n";
  out << std::left << std::setw(6) << "k" << std::setw(10) << "failures" << "unresolved@k\n";
  for (int k : rep.ks) {
    out << std::setw(6) << k << std::setw(10) << rep.failures.at(k) << fixed(rep.unresolved.at(k), 3) << "\n";
  }
  return out.str();
}

std::string format_fail_table(const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                              const std::vector<int>& ks) {
  std::size_t width = 6;
  for (const auto& [label, rates] : rows) width = std::max(width, label.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width) + 2) << "family";
  for (int k : ks) out << std::right << std::setw(10) << ("Fail@" + std::to_string(k));
  out << "\n";
  for (const auto& [label, rates] : rows) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << label;
    for (double r : rates) out << std::right << std::setw(10) << fixed(100.0 * r, 1);
    out << "\n";
  }
  return out.str();
}

std::string record_to_json(const EvalRecord& r) {
  json j;
  j["id"] = std::to_string(r.index);
  j["problem"] = to_prefix(r.problem.problem);
  j["infix"] = to_infix(r.problem.problem);
  j["family"] = r.problem.family;
  j["truth"] = r.problem.truth ? json(to_prefix(*r.problem.truth)) : json(nullptr);
  j["candidates"] = r.candidates.candidates;
  if (r.candidates.scores) j["scores"] = *r.candidates.scores;
  json verdicts = json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(std::string(status_name(v.status)));
  j["verdicts"] = verdicts;
  j["first_correct_rank"] = r.first_correct_rank;
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

EvalRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  EvalRecord r;
  r.index = std::stoul(j.at("id").get<std::string>());
  r.problem.problem = parse_prefix(j.at("problem").get<TokenSeq>());
  r.problem.family = j.value("family", "");
  if (j.contains("truth") && !j["truth"].is_null()) r.problem.truth = parse_prefix(j["truth"].get<TokenSeq>());
  r.candidates.candidates = j.at("candidates").get<std::vector<TokenSeq>>();
  if (j.contains("scores")) r.candidates.scores = j["scores"].get<std::vector<double>>();
  int rank = 1;
  for (const auto& v : j.at("verdicts")) {
    Verdict verdict;
    verdict.status = status_from_name(v.get<std::string>());
    verdict.candidate_rank = rank++;
    r.verdicts.push_back(verdict);
  }
  r.first_correct_rank = j.at("first_correct_rank").get<int>();
  r.note = j.value("note", "");
  return r;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_records(std::ostream& out, const RecordHeader& h, const std::vector<EvalRecord>& records) {
  json header = {{"format", "sigeval-records"}, {"version", 1},  {"suite", h.suite},
                 {"model", h.model},           {"ks", h.ks},     {"seed", h.seed},
                 {"created", h.created.empty() ? utc_timestamp() : h.created}};
  out << header.dump() << "\n";
  for (const auto& r : records) out << record_to_json(r) << "\n";
}

std::pair<RecordHeader, std::vector<EvalRecord>> read_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("record file is empty");
  const json header = json::parse(line);
  if (header.value("format", "") != "sigeval-records") throw std::runtime_error("not a record file");
  RecordHeader h;
  h.suite = header.value("suite", "");
  h.model = header.value("model", "");
  h.ks = header.value("ks", std::vector<int>{});
  h.seed = header.value("seed", std::uint64_t{0});
  h.created = header.value("created", "");
  std::vector<EvalRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(record_from_json(line));
  }
  return {h, records};
}

}  // namespace sigeval
