#include "sigeval/sagga.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "sigeval/errors.h"
#include "sigeval/parallel.h"

namespace sigeval {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kClusterStream = hash_string("cluster");

struct SeedItem {
  Expr expr;
  std::string ancestor;
};

struct Child {
  std::optional<Expr> expr;
  std::string key;
};

json entry_to_json(const ArchiveEntry& e) {
  json verdicts = json::array();
  for (const auto& v : e.verdicts) verdicts.push_back(std::string(status_name(v.status)));
  json candidates = json::array();
  for (const auto& c : e.candidates) candidates.push_back(json(c));
  return json{{"infix", to_infix(e.problem)},
              {"prefix", join_tokens(to_prefix(e.problem))},
              {"fitness", e.fitness},
              {"generation", e.generation},
              {"cluster", e.cluster},
              {"ancestor", e.ancestor},
              {"candidates", candidates},
              {"verdicts", verdicts}};
}

ArchiveEntry entry_from_json(const json& j) {
  ArchiveEntry e;
  e.problem = parse_prefix(split_tokens(j.at("prefix").get<std::string>()));
  e.fitness = j.at("fitness").get<double>();
  e.generation = j.at("generation").get<int>();
  e.cluster = j.at("cluster").get<int>();
  e.ancestor = j.at("ancestor").get<std::string>();
  for (const auto& c : j.at("candidates")) e.candidates.push_back(c.get<TokenSeq>());
  int rank = 1;
  for (const auto& v : j.at("verdicts")) {
    Verdict verdict;
    verdict.status = status_from_name(v.get<std::string>());
    verdict.candidate_rank = rank++;
    e.verdicts.push_back(verdict);
  }
  return e;
}

json stats_to_json(const GenerationStats& s) {
  return json{{"generation", s.generation}, {"children", s.children},   {"discarded", s.discarded},
              {"collisions", s.collisions}, {"evaluated", s.evaluated}, {"failures", s.failures},
              {"archived", s.archived},     {"archive_size", s.archive_size}, {"mean_token_len", s.mean_token_len}};
}

GenerationStats stats_from_json(const json& j) {
  GenerationStats s;
  s.generation = j.at("generation").get<int>();
  s.children = j.at("children").get<std::size_t>();
  s.discarded = j.at("discarded").get<std::size_t>();
  s.collisions = j.at("collisions").get<std::size_t>();
  s.evaluated = j.at("evaluated").get<std::size_t>();
  s.failures = j.at("failures").get<std::size_t>();
  s.archived = j.at("archived").get<std::size_t>();
  s.archive_size = j.at("archive_size").get<std::size_t>();
  s.mean_token_len = j.at("mean_token_len").get<double>();
  return s;
}

std::string fingerprint(const SaggaConfig& cfg, const MutationConfig& mcfg, const FitnessSpec& fitness,
                        const std::vector<Expr>& seeds, const Integrator& integrator) {
  std::ostringstream out;
  out << "M=" << cfg.seed_size << ";M'=" << cfg.generation_size << ";clusters=" << cfg.cluster_count
      << ";quota=" << selection_quota_name(cfg.quota)      << ";tau=" << cfg.tau << ";N=" << cfg.archive_target << ";k=" << cfg.eval_k << ";beam=" << cfg.beam
      << ";seed=" << cfg.seed << ";mut=" << mcfg.to_string() << ";fit=" << fitness.to_string()
      << ";model=" << integrator.name() << ";seeds=";
  for (const auto& s : seeds) out << canonical_key(s) << "|";
  for (const auto& t : fitness.targets) out << "target:" << canonical_key(t) << "|";
  return out.str();
}

class Checkpoint {
 public:
  explicit Checkpoint(std::string path) : path_(std::move(path)) {}

  bool enabled() const { return !path_.empty(); }

  void save(const std::string& print, int generations, const std::vector<SeedItem>& seeds,
            const std::vector<ArchiveEntry>& archive, const std::vector<GenerationStats>& progress) const {
    if (!enabled()) return;
    json j = {{"format", "sigeval-sagga-checkpoint"}, {"version", 1}, {"fingerprint", print},
              {"generations", generations}};
    json s = json::array();
    for (const auto& item : seeds) s.push_back({{"prefix", join_tokens(to_prefix(item.expr))}, {"ancestor", item.ancestor}});
    j["seeds"] = s;
    json a = json::array();
    for (const auto& e : archive) a.push_back(entry_to_json(e));
    j["archive"] = a;
    json p = json::array();
    for (const auto& g : progress) p.push_back(stats_to_json(g));
    j["progress"] = p;
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
      out << j.dump() << "\n";
    }
    std::filesystem::rename(tmp, path_);
  }

  // Returns false when there is no checkpoint file.
  bool load(const std::string& print, int& generations, std::vector<SeedItem>& seeds,
            std::vector<ArchiveEntry>& archive, std::vector<GenerationStats>& progress) const {
    std::ifstream in(path_);
    if (!in) return false;
    const json j = json::parse(in);
    if (j.value("format", "") != "sigeval-sagga-checkpoint") {
      throw std::invalid_argument(path_ + " is not a search checkpoint");
    }
    if (j.at("fingerprint").get<std::string>() != print) {
      throw std::invalid_argument("checkpoint " + path_ + " was written with a different configuration");
    }
    generations = j.at("generations").get<int>();
    seeds.clear();
    for (const auto& s : j.at("seeds")) {
      seeds.push_back({parse_prefix(split_tokens(s.at("prefix").get<std::string>())), s.at("ancestor").get<std::string>()});
    }
    archive.clear();
    for (const auto& e : j.at("archive")) archive.push_back(entry_from_json(e));
    progress.clear();
    for (const auto& g : j.at("progress")) progress.push_back(stats_from_json(g));
    return true;
  }

 private:
  std::string path_;
};

// Next seed: the top members of every cluster up to its quota, cut to the
// best M of those, then padded from the global ranking. The equal quota is
// ceil(M/k); the proportional quota is M * cluster size / n, rounded, and at
// least 1.
std::vector<std::size_t> select_seeds(const std::vector<double>& fitness, const std::vector<int>& cluster, int k,
                                      std::size_t m, SelectionQuota mode) {
  const std::size_t n = fitness.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  const std::size_t quota = (m + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k);
  std::vector<std::size_t> taken(static_cast<std::size_t>(k), 0);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int c : cluster) ++sizes[static_cast<std::size_t>(c)];
  std::vector<std::size_t> chosen;
  std::vector<bool> used(n, false);
  for (std::size_t i : order) {
    const std::size_t c = static_cast<std::size_t>(cluster[i]);
    auto& t = taken[c];
    const std::size_t q =
        mode == SelectionQuota::kEqual ? quota : std::max<std::size_t>(1, (m * sizes[c] + n / 2) / n);
    if (t < q) {
      ++t;
      chosen.push_back(i);
      used[i] = true;
    }
  }
  // `chosen` is in global fitness order, so truncation keeps the best.
  while (chosen.size() > m) {
    used[chosen.back()] = false;
    chosen.pop_back();
  }
  for (std::size_t i : order) {
    if (chosen.size() >= m) break;
    if (!used[i]) chosen.push_back(i);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

void SaggaConfig::validate() const {
  if (cluster_count < 1) throw std::invalid_argument("cluster count must be at least 1");
  if (seed_size < cluster_count) throw std::invalid_argument("seed size must be at least the cluster count");
  if (generation_size < seed_size) throw std::invalid_argument("generation size must be at least the seed size");
  if (tau < 0) throw std::invalid_argument("fitness threshold must be non-negative");
  if (archive_target < 1) throw std::invalid_argument("archive target must be at least 1");
  if (eval_k < 1 || beam < 1) throw std::invalid_argument("eval k and beam must be positive");
  if (generation_cap < 1) throw std::invalid_argument("generation cap must be positive");
  if (!verify.valid()) throw std::invalid_argument("invalid verification config");
}

std::string_view selection_quota_name(SelectionQuota q) {
  return q == SelectionQuota::kEqual ? "equal" : "proportional";
}

SelectionQuota selection_quota_from_name(std::string_view name) {
  if (name == "equal") return SelectionQuota::kEqual;
  if (name == "proportional") return SelectionQuota::kProportional;
  throw std::invalid_argument("unknown selection quota: " + std::string(name));
}

std::string_view run_status_name(RunStatus s) {
  return s == RunStatus::kTargetReached ? "target_reached" : "generation_cap_reached";
}

SaggaResult run_sagga(const SaggaConfig& cfg, const MutationConfig& mcfg, const FitnessSpec& fitness,
                      const std::vector<Expr>& initial, Integrator& integrator, const RunOptions& options) {
  cfg.validate();
  mcfg.validate();
  fitness.validate();
  if (initial.empty()) throw std::invalid_argument("the search needs at least one seed problem");
  const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
  const std::string print = fingerprint(cfg, mcfg, fitness, initial, integrator);
  const Checkpoint checkpoint(options.checkpoint_path);

  SaggaResult result;
  std::vector<SeedItem> seeds;
  int done = 0;
  if (!(options.resume && checkpoint.enabled() &&
        checkpoint.load(print, done, seeds, result.archive, result.progress))) {
    for (const auto& s : initial) seeds.push_back({s, to_infix(s)});
  }
  std::unordered_set<std::string> archived_keys;
  for (const auto& e : result.archive) archived_keys.insert(canonical_key(e.problem));

  for (int gen = done; gen < cfg.generation_cap && result.archive.size() < cfg.archive_target; ++gen) {
    const std::size_t per_seed = (static_cast<std::size_t>(cfg.generation_size) + seeds.size() - 1) / seeds.size();
    const std::size_t total = std::min(per_seed * seeds.size(), static_cast<std::size_t>(cfg.generation_size));

    std::vector<Child> children(total);
    parallel_for(total, workers, [&](std::size_t i) {
      Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(gen), i}));
      try {
        Expr child = mutate(seeds[i / per_seed].expr, mcfg, rng);
        if (!has_sample_domain(child, cfg.verify)) return;
        children[i].key = join_tokens(to_prefix(child));
        children[i].expr = std::move(child);
      } catch (const NoApplicableSite&) {
      }
    });

    GenerationStats stats;
    stats.generation = gen;
    stats.children = total;
    std::vector<std::size_t> unique;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < total; ++i) {
      if (!children[i].expr) {
        ++stats.discarded;
      } else if (archived_keys.count(children[i].key) || !seen.insert(children[i].key).second) {
        ++stats.collisions;
      } else {
        unique.push_back(i);
      }
    }

    std::vector<Evaluation> evals(unique.size());
    try {
      parallel_for(unique.size(), workers, [&](std::size_t u) {
        evals[u] = evaluate_fitness(fitness, *children[unique[u]].expr, integrator, cfg.eval_k, cfg.beam, cfg.verify);
      });
    } catch (const ModelUnavailable&) {
      checkpoint.save(print, gen, seeds, result.archive, result.progress);
      throw;
    }
    stats.evaluated = unique.size();

    std::vector<std::pair<std::size_t, std::size_t>> fresh;  // (unique index, archive index)
    double len_sum = 0;
    for (std::size_t u = 0; u < unique.size(); ++u) {
      const Evaluation& ev = evals[u];
      if (ev.m == 1) ++stats.failures;
      if (ev.fitness <= cfg.tau || result.archive.size() >= cfg.archive_target) continue;
      const std::size_t i = unique[u];
      ArchiveEntry entry;
      entry.problem = *children[i].expr;
      entry.fitness = ev.fitness;
      entry.generation = gen;
      entry.ancestor = seeds[i / per_seed].ancestor;
      entry.candidates = ev.candidates.candidates;
      entry.verdicts = ev.verdicts;
      len_sum += static_cast<double>(metrics(entry.problem).token_len);
      archived_keys.insert(children[i].key);
      fresh.emplace_back(u, result.archive.size());
      result.archive.push_back(std::move(entry));
    }
    stats.archived = fresh.size();
    stats.archive_size = result.archive.size();
    stats.mean_token_len = fresh.empty() ? 0.0 : len_sum / static_cast<double>(fresh.size());

    if (!unique.empty()) {
      std::vector<std::vector<double>> vectors;
      std::vector<double> scores;
      vectors.reserve(unique.size());
      for (std::size_t u = 0; u < unique.size(); ++u) {
        vectors.push_back(embed(*children[unique[u]].expr));
        scores.push_back(evals[u].fitness);
      }
      const int k = std::min<int>(cfg.cluster_count, static_cast<int>(unique.size()));
      Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(gen), kClusterStream}));
      const std::vector<int> cluster = kmeans(vectors, k, rng);
      for (auto [u, a] : fresh) result.archive[a].cluster = cluster[u];
      std::vector<SeedItem> next;
      for (std::size_t u : select_seeds(scores, cluster, k, static_cast<std::size_t>(cfg.seed_size), cfg.quota)) {
        const std::size_t i = unique[u];
        next.push_back({*children[i].expr, seeds[i / per_seed].ancestor});
      }
      seeds = std::move(next);
    }

    result.progress.push_back(stats);
    if (options.on_generation) options.on_generation(stats);
    checkpoint.save(print, gen + 1, seeds, result.archive, result.progress);
  }

  result.generations = static_cast<int>(result.progress.size());
  result.status =
      result.archive.size() >= cfg.archive_target ? RunStatus::kTargetReached : RunStatus::kGenerationCapReached;
  return result;
}

void write_archive(std::ostream& out, const ArchiveHeader& h, const std::vector<ArchiveEntry>& entries) {
  const json header = {{"format", "sigeval-archive"},
                       {"version", 1},
                       {"model", h.model},
                       {"fitness", h.fitness},
                       {"mutations", h.mutations},
                       {"seed", h.seed},
                       {"eval_k", h.eval_k},
                       {"beam", h.beam},
                       {"tau", h.tau},
                       {"status", h.status},
                       {"generations", h.generations},
                       {"created", h.created}};
  out << header.dump() << "\n";
  for (const auto& e : entries) out << entry_to_json(e).dump() << "\n";
}

std::pair<ArchiveHeader, std::vector<ArchiveEntry>> read_archive(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("archive file is empty");
  const json j = json::parse(line);
  if (j.value("format", "") != "sigeval-archive") throw std::invalid_argument("not an archive file");
  ArchiveHeader h;
  h.model = j.value("model", "");
  h.fitness = j.value("fitness", "");
  h.mutations = j.value("mutations", "");
  h.seed = j.value("seed", std::uint64_t{0});
  h.eval_k = j.value("eval_k", 1);
  h.beam = j.value("beam", 10);
  h.tau = j.value("tau", 0.01);
  h.status = j.value("status", "");
  h.generations = j.value("generations", 0);
  h.created = j.value("created", "");
  std::vector<ArchiveEntry> entries;
  while (std::getline(in, line)) {
    if (!line.empty()) entries.push_back(entry_from_json(json::parse(line)));
  }
  return {h, entries};
}

ArchiveSummary summarize_archive(const std::vector<ArchiveEntry>& entries, int iterations) {
  ArchiveSummary s;
  s.iterations = iterations;
  if (entries.empty()) return s;
  std::size_t terms[4] = {0, 0, 0, 0};
  for (const auto& e : entries) {
    const ExprMetrics m = metrics(e.problem);
    s.mean_len += static_cast<double>(m.token_len);
    s.mean_nodes += static_cast<double>(m.node_count);
    s.mean_depth += static_cast<double>(m.depth);
    if (m.term_count <= 3) ++terms[m.term_count];
  }
  const double n = static_cast<double>(entries.size());
  s.mean_len /= n;
  s.mean_nodes /= n;
  s.mean_depth /= n;
  s.one_term = 100.0 * static_cast<double>(terms[1]) / n;
  s.two_term = 100.0 * static_cast<double>(terms[2]) / n;
  s.three_term = 100.0 * static_cast<double>(terms[3]) / n;
  return s;
}

std::string format_archive_summary(const std::vector<std::pair<std::string, ArchiveSummary>>& rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "" << std::right;
  for (const char* h : {"Iters", "Len", "Nodes", "Depth", "1-term", "2-term", "3-term"}) out << std::setw(8) << h;
  out << "\n" << std::fixed << std::setprecision(1);
  for (const auto& [name, s] : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << name << std::right << std::setw(8) << s.iterations
        << std::setw(8) << s.mean_len << std::setw(8) << s.mean_nodes << std::setw(8) << s.mean_depth << std::setw(8)
        << s.one_term << std::setw(8) << s.two_term << std::setw(8) << s.three_term << "\n";
  }
  return out.str();
}

}  // namespace sigeval
