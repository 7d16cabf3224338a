#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sigeval/errors.h"
#include "sigeval/metrics.h"
#include "sigeval/model.h"
#include "sigeval/oracle.h"
#include "sigeval/problemgen.h"
#include "sigeval/sagga.h"

namespace sigeval::cli {
namespace {

// Bad flag values and unreadable inputs; reported with exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kVerifyStream = 0x76657269667921;  // "verify!"

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  for (const auto& item : split(text, ',')) {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(item, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != item.size() || k < 1) throw UsageError("--k: bad value '" + item + "'");
    ks.push_back(k);
  }
  if (ks.empty()) throw UsageError("--k: needs at least one value");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

IntRange parse_range(const std::string& flag, const std::string& text) {
  try {
    return IntRange::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

std::ifstream open_in(const std::string& flag, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(flag + ": cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& flag, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError(flag + ": cannot write '" + path + "'");
  return out;
}

std::vector<Problem> read_problems(const std::string& flag, const std::string& path) {
  auto in = open_in(flag, path);
  try {
    return read_problem_file(in);
  } catch (const ParseError& e) {
    throw UsageError(flag + ": " + path + ": " + e.what());
  }
}

// A faulty backend without an explicit seed takes the run seed.
std::shared_ptr<Integrator> make_backend(const std::string& selector, std::uint64_t seed, const EquivConfig& verify) {
  try {
    if (selector == "faulty" || selector.rfind("faulty:", 0) == 0) {
      const std::string text = selector == "faulty" ? "" : selector.substr(7);
      FaultSpec spec = FaultSpec::parse(text);
      if (text.find("seed=") == std::string::npos) spec.seed = seed;
      return std::make_shared<FaultyIntegrator>(spec, verify);
    }
    return make_integrator(selector, verify);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--model: ") + e.what());
  }
}

EquivConfig verify_config(std::uint64_t seed, bool strict) {
  EquivConfig cfg;
  cfg.seed = derive_seed(seed, {kVerifyStream});
  cfg.strict_timeout = strict;
  return cfg;
}

std::vector<std::pair<std::string, std::vector<double>>> family_rows(const std::vector<EvalRecord>& records,
                                                                     const std::vector<int>& ks) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<EvalRecord>> groups;
  for (const auto& r : records) {
    auto& g = groups[r.problem.family];
    if (g.empty()) order.push_back(r.problem.family);
    g.push_back(r);
  }
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (const auto& f : order) rows.emplace_back(f.empty() ? "(none)" : f, rates_from_records(groups[f], ks));
  if (order.size() > 1) rows.emplace_back("all", rates_from_records(records, ks));
  return rows;
}

// ---------------------------------------------------------------------------
// suite

struct SuiteArgs {
  std::string family;
  std::string range = "1:100";
  std::size_t n = 1000;
  std::string templates;
  std::string perturbation = "scale";
  std::string k_range = "1:100";
  int arity = 2;
  std::size_t pool_n = 100;
  std::string tmpl = "cos";
  std::string buckets = "1:100";
  std::size_t ops = 3;
  std::string problems;
  std::string ks = "1";
  std::string model;
  std::uint64_t seed = 0;
  int beam = 10;
  std::string strategy = "beam";
  double temperature = 1.0;
  bool exhaustive = false;
  std::string out;
  std::string emit;
};

std::vector<Template> parse_templates(const std::string& text) {
  std::vector<Template> out;
  if (text.empty()) return {std::begin(kAllTemplates), std::end(kAllTemplates)};
  for (const auto& name : split(text, ',')) {
    auto t = template_from_name(name);
    if (!t) throw UsageError("--templates: unknown template '" + name + "'");
    out.push_back(*t);
  }
  return out;
}

std::vector<Problem> build_suite(const SuiteArgs& a) {
  const IntRange range = parse_range("--range", a.range);
  auto primitives = [&](std::size_t n) {
    try {
      return primitives_suite(range, n, a.seed, parse_templates(a.templates));
    } catch (const RangeTooSmall& e) {
      throw UsageError(std::string("--range: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--range: ") + e.what());
    }
  };
  if (a.family == "primitives") return primitives(a.n);
  if (a.family == "perturb") {
    auto kind = perturbation_from_name(a.perturbation);
    if (!kind) throw UsageError("--perturbation: unknown perturbation '" + a.perturbation + "'");
    return perturb_suite(primitives(a.n), *kind, parse_range("--k-range", a.k_range),
                         derive_seed(a.seed, {hash_string("perturb")}));
  }
  if (a.family == "compose") {
    if (a.arity < 2) throw UsageError("--arity: must be at least 2");
    return composition_suite(primitives(a.pool_n), a.arity, a.n, derive_seed(a.seed, {hash_string("compose")}));
  }
  if (a.family == "exponents") return exponent_pool(a.n, a.seed);
  if (a.family == "extrapolation") {
    auto t = template_from_name(a.tmpl);
    if (!t) throw UsageError("--template: unknown template '" + a.tmpl + "'");
    std::vector<IntRange> buckets;
    for (const auto& b : split(a.buckets, ',')) buckets.push_back(parse_range("--buckets", b));
    if (buckets.empty()) throw UsageError("--buckets: needs at least one range");
    try {
      return integer_extrapolation_suite(*t, buckets, a.n, a.seed);
    } catch (const RangeTooSmall& e) {
      throw UsageError(std::string("--buckets: ") + e.what());
    }
  }
  if (a.family == "random-tree") {
    if (a.ops < 1) throw UsageError("--ops: must be at least 1");
    return random_tree_suite(a.ops, a.n, a.seed);
  }
  if (a.family == "file") {
    if (a.problems.empty()) throw UsageError("--problems: required with --family file");
    auto problems = read_problems("--problems", a.problems);
    if (problems.empty()) throw UsageError("--problems: no problems in '" + a.problems + "'");
    return problems;
  }
  throw UsageError("--family: unknown family '" + a.family + "'");
}

int run_suite(const SuiteArgs& a, bool strict, int workers, std::ostream& out) {
  const std::vector<int> ks = parse_ks(a.ks);
  const std::vector<Problem> problems = build_suite(a);
  if (!a.emit.empty()) {
    auto f = open_out("--emit", a.emit);
    write_problem_file(f, problems);
  }
  if (a.model.empty()) {
    if (a.emit.empty()) throw UsageError("--model: required unless only --emit is given");
    out << "wrote " << problems.size() << " problems to " << a.emit << "\n";
    return kExitOk;
  }
  const EquivConfig verify = verify_config(a.seed, strict);
  auto model = make_backend(a.model, a.seed, verify);

  FailAtKOptions opts;
  opts.ks = ks;
  opts.verify = verify;
  opts.workers = workers;
  opts.seed = derive_seed(a.seed, {kVerifyStream});
  opts.exhaustive = a.exhaustive;
  opts.params.beam = a.beam;
  opts.params.temperature = a.temperature;
  if (a.strategy == "sample") {
    opts.params.strategy = DecodeStrategy::kSample;
  } else if (a.strategy != "beam") {
    throw UsageError("--strategy: expected beam or sample");
  }
  const FailAtKResult result = fail_at_k(problems, *model, opts);

  if (!a.out.empty()) {
    auto f = open_out("--out", a.out);
    write_records(f, {a.family, model->name(), ks, a.seed, utc_timestamp()}, result.records);
  }
  out << format_fail_table(family_rows(result.records, ks), ks);
  out << "problems " << problems.size() << ", verification " << std::fixed << std::setprecision(2)
      << result.total_verify_seconds << " s\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sagga

struct SaggaArgs {
  std::string fitness = "short";
  std::string targets;
  std::string seeds = "default";
  std::string mutations = "all";
  std::string model;
  std::uint64_t seed = 0;
  SaggaConfig cfg;
  std::size_t archive_target = 1000;
  std::string quota = "equal";
  std::string archive;
  std::string progress;
  std::string checkpoint;
  bool resume = false;
};

std::vector<Expr> load_seeds(const std::string& spec) {
  const auto sets = seed_sets();
  auto it = sets.find(spec);
  if (it != sets.end()) return it->second;
  if (!std::filesystem::exists(spec)) {
    std::string names;
    for (const auto& [name, list] : sets) names += (names.empty() ? "" : ", ") + name;
    throw UsageError("--seeds: '" + spec + "' is neither a seed set (" + names + ") nor a file");
  }
  std::vector<Expr> out;
  for (const auto& p : read_problems("--seeds", spec)) out.push_back(p.problem);
  if (out.empty()) throw UsageError("--seeds: no problems in '" + spec + "'");
  return out;
}

FitnessSpec load_fitness(const SaggaArgs& a) {
  if (a.fitness == "near" || a.fitness == "trig:near") {
    if (a.targets.empty()) throw UsageError("--targets: required with --fitness " + a.fitness);
    std::vector<Expr> targets;
    for (const auto& p : read_problems("--targets", a.targets)) targets.push_back(p.problem);
    if (targets.empty()) throw UsageError("--targets: no problems in '" + a.targets + "'");
    FitnessSpec near = FitnessSpec::near_targets(std::move(targets));
    return a.fitness == "near" ? near : FitnessSpec::trig_gated(std::move(near));
  }
  try {
    return FitnessSpec::parse(a.fitness);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--fitness: ") + e.what());
  }
}

void write_progress_row(std::ostream& f, const GenerationStats& s) {
  f << s.generation << ',' << s.children << ',' << s.discarded << ',' << s.collisions << ',' << s.evaluated << ','
    << s.failures << ',' << s.archived << ',' << s.archive_size << ',' << std::fixed << std::setprecision(3)
    << s.mean_token_len << "\n";
}

int run_sagga_command(SaggaArgs a, bool strict, int workers, std::ostream& out) {
  SaggaConfig cfg = a.cfg;
  cfg.seed = a.seed;
  cfg.workers = workers;
  cfg.archive_target = a.archive_target;
  cfg.verify = verify_config(a.seed, strict);
  try {
    cfg.quota = selection_quota_from_name(a.quota);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--quota: ") + e.what());
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  MutationConfig mcfg;
  try {
    mcfg = MutationConfig::parse(a.mutations);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--mutations: ") + e.what());
  }
  const FitnessSpec fitness = load_fitness(a);
  const std::vector<Expr> seeds = load_seeds(a.seeds);
  auto model = make_backend(a.model, a.seed, cfg.verify);

  // Fail on an unwritable archive path before spending time on the search.
  { open_out("--archive", a.archive); }
  std::ofstream progress;
  if (!a.progress.empty()) {
    progress = open_out("--progress", a.progress);
    progress << "generation,children,discarded,collisions,evaluated,failures,archived,archive_size,mean_token_len\n";
  }

  RunOptions options;
  options.checkpoint_path = a.checkpoint.empty() ? a.archive + ".ckpt" : a.checkpoint;
  options.resume = a.resume;
  options.on_generation = [&](const GenerationStats& s) {
    out << "generation " << s.generation << ": " << s.evaluated << " evaluated, " << s.failures << " failures, "
        << s.archived << " archived (archive " << s.archive_size << ")\n";
    if (progress.is_open()) {
      write_progress_row(progress, s);
      progress.flush();
    }
  };
  SaggaResult result;
  try {
    result = run_sagga(cfg, mcfg, fitness, seeds, *model, options);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  // A resumed run reports the generations restored from the checkpoint too.
  if (progress.is_open() && a.resume) {
    progress.close();
    progress = open_out("--progress", a.progress);
    progress << "generation,children,discarded,collisions,evaluated,failures,archived,archive_size,mean_token_len\n";
    for (const auto& s : result.progress) write_progress_row(progress, s);
  }

  ArchiveHeader header;
  header.model = model->name();
  header.fitness = fitness.to_string();
  header.mutations = mcfg.to_string();
  header.seed = a.seed;
  header.eval_k = cfg.eval_k;
  header.beam = cfg.beam;
  header.tau = cfg.tau;
  header.status = std::string(run_status_name(result.status));
  header.generations = result.generations;
  header.created = utc_timestamp();
  {
    auto f = open_out("--archive", a.archive);
    write_archive(f, header, result.archive);
  }
  out << "status " << header.status << " after " << result.generations << " generations\n";
  out << format_archive_summary({{"archive", summarize_archive(result.archive, result.generations)}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string archive;
  std::string records;
  std::string problems;
  std::string model;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int beam = 0;
};

int report_count(std::ostream& out, const std::string& what, std::size_t ok, std::size_t total) {
  const double pct = total == 0 ? 100.0 : 100.0 * static_cast<double>(ok) / static_cast<double>(total);
  out << what << ": " << ok << "/" << total << " (" << std::fixed << std::setprecision(1) << pct << "%)\n";
  return ok == total ? kExitOk : kExitMismatch;
}

int verify_archive(const VerifyArgs& a, bool strict, int workers, std::ostream& out) {
  auto in = open_in("--archive", a.archive);
  std::pair<ArchiveHeader, std::vector<ArchiveEntry>> loaded;
  try {
    loaded = read_archive(in);
  } catch (const std::exception& e) {
    throw UsageError("--archive: " + a.archive + ": " + e.what());
  }
  const auto& [header, entries] = loaded;
  const std::uint64_t seed = a.seed_given ? a.seed : header.seed;
  const EquivConfig cfg = verify_config(seed, strict);
  std::shared_ptr<Integrator> model;
  if (!a.model.empty()) model = make_backend(a.model, seed, cfg);
  const int beam = a.beam > 0 ? a.beam : header.beam;

  std::vector<char> genuine(entries.size(), 0);
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    const ArchiveEntry& e = entries[i];
    CandidateList list;
    if (model) {
      try {
        list = model->propose(e.problem, DecodeParams{header.eval_k, std::max(beam, header.eval_k)});
      } catch (const ResponseTooLarge&) {
        genuine[i] = e.fitness > header.tau;
        return;
      }
    } else {
      list.candidates = e.candidates;
    }
    genuine[i] = e.fitness > header.tau && failure_indicator(e.problem, list, header.eval_k, cfg) == 1;
  });
  const std::size_t ok = static_cast<std::size_t>(std::count(genuine.begin(), genuine.end(), 1));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!genuine[i]) out << "not a failure: " << to_infix(entries[i].problem) << "\n";
  }
  return report_count(out, model ? "re-verified failures (model re-queried)" : "re-verified failures", ok,
                      entries.size());
}

int verify_records(const VerifyArgs& a, bool strict, int workers, std::ostream& out) {
  auto in = open_in("--records", a.records);
  std::pair<RecordHeader, std::vector<EvalRecord>> loaded;
  try {
    loaded = read_records(in);
  } catch (const std::exception& e) {
    throw UsageError("--records: " + a.records + ": " + e.what());
  }
  const auto& [header, records] = loaded;
  const std::uint64_t seed = a.seed_given ? a.seed : header.seed;
  const int kmax = header.ks.empty() ? 1 : *std::max_element(header.ks.begin(), header.ks.end());
  std::vector<char> same(records.size(), 0);
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const EvalRecord& r = records[i];
    if (!r.note.empty()) {
      same[i] = 1;
      return;
    }
    EquivConfig cfg = verify_config(seed, strict);
    cfg.seed = derive_seed(derive_seed(seed, {kVerifyStream}), {r.index});
    const auto verdicts = verify_candidates(r.problem.problem, r.candidates, static_cast<std::size_t>(kmax), cfg);
    const int rank = first_success_rank(verdicts);
    bool agree = true;
    for (int k : header.ks) {
      const int m = rank == 0 || rank > k ? 1 : 0;
      agree = agree && m == r.m(k);
    }
    same[i] = agree;
  });
  const std::size_t ok = static_cast<std::size_t>(std::count(same.begin(), same.end(), 1));
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!same[i]) out << "verdict changed: " << to_infix(records[i].problem.problem) << "\n";
  }
  return report_count(out, "records with unchanged Fail@k", ok, records.size());
}

int verify_problems(const VerifyArgs& a, bool strict, int workers, std::ostream& out) {
  const auto problems = read_problems("--problems", a.problems);
  const EquivConfig base = verify_config(a.seed, strict);
  std::vector<char> ok(problems.size(), 0);
  parallel_for(problems.size(), workers, [&](std::size_t i) {
    if (!problems[i].truth) return;
    EquivConfig cfg = base;
    cfg.seed = derive_seed(base.seed, {i});
    ok[i] = verify_integral(problems[i].problem, *problems[i].truth, cfg).success();
  });
  std::size_t with_truth = 0;
  std::size_t good = 0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (!problems[i].truth) continue;
    ++with_truth;
    if (ok[i]) {
      ++good;
    } else {
      out << "wrong integral: " << to_infix(problems[i].problem) << "\n";
    }
  }
  out << "verify-only problems (no integral): " << problems.size() - with_truth << "\n";
  return report_count(out, "integrals that verify", good, with_truth);
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::vector<std::string> records;
  std::vector<std::string> archives;
  std::string ks;
  bool search = false;
  std::string model;
  std::uint64_t seed = 0;
};

std::string stem(const std::string& path) { return std::filesystem::path(path).filename().string(); }

int run_report(const ReportArgs& a, std::ostream& out) {
  if (a.records.empty() && a.archives.empty()) throw UsageError("report: give --records or --archive");
  for (const auto& path : a.records) {
    auto in = open_in("--records", path);
    std::pair<RecordHeader, std::vector<EvalRecord>> loaded;
    try {
      loaded = read_records(in);
    } catch (const std::exception& e) {
      throw UsageError("--records: " + path + ": " + e.what());
    }
    const auto& [header, records] = loaded;
    const std::vector<int> ks = a.ks.empty() ? header.ks : parse_ks(a.ks);
    out << "# " << stem(path) << " (suite " << header.suite << ", model " << header.model << ")\n";
    out << format_fail_table(family_rows(records, ks), ks);
    if (!a.search) continue;
    bool scored = std::all_of(records.begin(), records.end(),
                              [](const EvalRecord& r) { return r.candidates.scores.has_value(); });
    if (!scored) {
      out << "search-vs-model: records carry no candidate scores\n";
      continue;
    }
    if (a.model.empty()) throw UsageError("--model: needed to score ground truths for --search");
    auto scorer = make_backend(a.model, a.seed, verify_config(a.seed, false));
    try {
      out << format_search_report(search_vs_model_report(records, ks, *scorer));
    } catch (const ScoringUnsupported& e) {
      out << "search-vs-model: " << e.what() << "\n";
    } catch (const NoGroundTruth& e) {
      out << "search-vs-model: " << e.what() << "\n";
    }
  }
  if (!a.archives.empty()) {
    std::vector<std::pair<std::string, ArchiveSummary>> rows;
    for (const auto& path : a.archives) {
      auto in = open_in("--archive", path);
      try {
        auto [header, entries] = read_archive(in);
        rows.emplace_back(stem(path), summarize_archive(entries, header.generations));
      } catch (const std::exception& e) {
        throw UsageError("--archive: " + path + ": " + e.what());
      }
    }
    out << format_archive_summary(rows);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symbolic integration evaluation harness"};
  app.set_config("--config", "", "Read options from a key = value file (sections name subcommands)");
  app.require_subcommand(1);
  bool strict = false;
  int workers = 0;
  app.add_flag("--strict-timeout", strict, "Count verification timeouts as incorrect");
  app.add_option("--workers", workers, "Parallel workers (0: available cores)")->check(CLI::NonNegativeNumber);

  SuiteArgs suite;
  auto* s = app.add_subcommand("suite", "Generate a problem suite and measure Fail@k");
  s->add_option("--family", suite.family,
                "primitives | perturb | compose | exponents | extrapolation | random-tree | file")
      ->required();
  s->add_option("--range", suite.range, "Coefficient range lo:hi");
  s->add_option("--n", suite.n, "Problems per template, bucket or suite");
  s->add_option("--templates", suite.templates, "Comma list of templates (default all)");
  s->add_option("--perturbation", suite.perturbation, "scale | divide | add_exp | add_ln");
  s->add_option("--k-range", suite.k_range, "Perturbation constant range lo:hi");
  s->add_option("--arity", suite.arity, "Terms per composition");
  s->add_option("--pool-n", suite.pool_n, "Primitives per template in the composition pool");
  s->add_option("--template", suite.tmpl, "Template for integer extrapolation");
  s->add_option("--buckets", suite.buckets, "Comma list of coefficient buckets lo:hi");
  s->add_option("--ops", suite.ops, "Operator count for random trees");
  s->add_option("--problems", suite.problems, "Problem file for --family file");
  s->add_option("--k", suite.ks, "Comma list of k values");
  s->add_option("--model", suite.model, "reference | faulty:<spec> | external:cmd=... | external:tcp=...");
  s->add_option("--seed", suite.seed, "Run seed")->required();
  s->add_option("--beam", suite.beam, "Beam width (raised to max k)");
  s->add_option("--strategy", suite.strategy, "beam | sample");
  s->add_option("--temperature", suite.temperature, "Sampling temperature");
  s->add_flag("--exhaustive", suite.exhaustive, "Verify every candidate instead of stopping early");
  s->add_option("--out", suite.out, "Record file to write");
  s->add_option("--emit", suite.emit, "Problem file to write");

  SaggaArgs sg;
  auto* g = app.add_subcommand("sagga", "Search for failures with the genetic loop");
  g->add_option("--fitness", sg.fitness, "short | length:L | near | trig | trig:<inner>");
  g->add_option("--targets", sg.targets, "Problem file of targets for near fitness");
  g->add_option("--seeds", sg.seeds, "Seed set name or problem file");
  g->add_option("--mutations", sg.mutations, "all | constant | internal=..,leaf=..,range=lo:hi");
  g->add_option("--model", sg.model, "Backend under test")->required();
  g->add_option("--seed", sg.seed, "Run seed")->required();
  g->add_option("--seed-size", sg.cfg.seed_size, "Seed problems per generation (M)");
  g->add_option("--generation-size", sg.cfg.generation_size, "Children per generation (M')");
  g->add_option("--clusters", sg.cfg.cluster_count, "k-means clusters");
  g->add_option("--tau", sg.cfg.tau, "Fitness threshold");
  g->add_option("--archive-size", sg.archive_target, "Target archive size (N)");
  g->add_option("--eval-k", sg.cfg.eval_k, "k for the failure indicator");
  g->add_option("--beam", sg.cfg.beam, "Beam width");
  g->add_option("--generations", sg.cfg.generation_cap, "Generation cap");
  g->add_option("--quota", sg.quota, "Seeds per cluster: equal | proportional");
  g->add_option("--archive", sg.archive, "Archive file to write")->required();
  g->add_option("--progress", sg.progress, "CSV of per-generation statistics");
  g->add_option("--checkpoint", sg.checkpoint, "Checkpoint file (default <archive>.ckpt)");
  g->add_flag("--resume", sg.resume, "Continue from the checkpoint");

  VerifyArgs va;
  auto* v = app.add_subcommand("verify", "Re-check an archive, a record file or a problem file");
  auto* v_archive = v->add_option("--archive", va.archive, "Archive: every entry must still be a failure");
  auto* v_records = v->add_option("--records", va.records, "Record file: Fail@k must be reproduced");
  auto* v_problems = v->add_option("--problems", va.problems, "Problem file: every integral must verify");
  v_archive->excludes(v_records)->excludes(v_problems);
  v_records->excludes(v_problems);
  v->add_option("--model", va.model, "Re-query this backend instead of using stored candidates");
  auto* v_seed = v->add_option("--seed", va.seed, "Run seed (default: the one in the file header)");
  v->add_option("--beam", va.beam, "Beam width when re-querying (default: from the archive)");

  ReportArgs ra;
  auto* r = app.add_subcommand("report", "Summarize record and archive files");
  r->add_option("--records", ra.records, "Record files")->expected(1, -1);
  r->add_option("--archive", ra.archives, "Archive files")->expected(1, -1);
  r->add_option("--k", ra.ks, "Comma list of k values (default: from each file)");
  r->add_flag("--search", ra.search, "Add the search-vs-model report");
  r->add_option("--model", ra.model, "Scoring backend for --search");
  r->add_option("--seed", ra.seed, "Seed for a faulty scorer");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (workers == 0) workers = default_workers();
    if (*s) return run_suite(suite, strict, workers, out);
    if (*g) return run_sagga_command(sg, strict, workers, out);
    if (*v) {
      va.seed_given = v_seed->count() > 0;
      if (!va.archive.empty()) return verify_archive(va, strict, workers, out);
      if (!va.records.empty()) return verify_records(va, strict, workers, out);
      if (!va.problems.empty()) {
        if (!va.seed_given) throw UsageError("--seed: required with --problems");
        return verify_problems(va, strict, workers, out);
      }
      throw UsageError("verify: give --archive, --records or --problems");
    }
    if (*r) return run_report(ra, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ModelUnavailable& e) {
    err << "backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const MalformedResponse& e) {
    err << "backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace sigeval::cli
