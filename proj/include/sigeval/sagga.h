#ifndef SIGEVAL_SAGGA_H_
#define SIGEVAL_SAGGA_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sigeval/calculus.h"
#include "sigeval/model.h"
#include "sigeval/rng.h"

namespace sigeval {

// ---------------------------------------------------------------------------
// Mutations

enum class InternalMutation { kConstant, kSymbol, kOperation, kAddArg };
enum class LeafMutation { kConstant, kSymbol, kSimpleOp };

struct MutationConfig {
  std::set<InternalMutation> internal = {InternalMutation::kConstant, InternalMutation::kSymbol,
                                         InternalMutation::kOperation, InternalMutation::kAddArg};
  std::set<LeafMutation> leaf = {LeafMutation::kConstant, LeafMutation::kSymbol, LeafMutation::kSimpleOp};
  long v_min = -1000;
  long v_max = 1000;

  static MutationConfig all(long v_min = -1000, long v_max = 1000);
  // Leaf Constant only: the tree shape never changes.
  static MutationConfig constant_only(long v_min = -100, long v_max = 100);

  bool shape_preserving() const;
  void validate() const;

  // "all", "constant", or a comma list such as
  // "internal=constant+addarg,leaf=simpleop,range=-100:100". A bare preset
  // may be followed by ",range=lo:hi".
  static MutationConfig parse(std::string_view text);
  std::string to_string() const;
};

// One mutation at a node chosen uniformly among nodes that admit an enabled
// mutation; the mutation is chosen uniformly among those the node admits.
// The result is canonical. Shape-preserving configs only touch literal
// leaves and redraw until the canonical result keeps the input's shape.
// Throws NoApplicableSite when no site exists or 20 draws all fail.
Expr mutate(const Expr& e, const MutationConfig& cfg, Rng& rng);

// k1 o x^k2 with o drawn from {*, **, /} and k2 from {1, 2}.
Expr random_simple_op(long v_min, long v_max, Rng& rng);

// Tree shape with every literal replaced by a placeholder; Add and Mul
// children are compared as multisets.
std::string shape_signature(const Expr& e);
inline bool shape_isomorphic(const Expr& a, const Expr& b) { return shape_signature(a) == shape_signature(b); }

bool contains_trig(const Expr& e);

// ---------------------------------------------------------------------------
// Fitness

struct FitnessSpec {
  enum class Kind { kShort, kTargetLength, kNearTargets, kGated };

  Kind kind = Kind::kShort;
  int target_length = 0;
  std::vector<Expr> targets;
  // kGated: zero unless the problem contains a trigonometric function.
  std::shared_ptr<const FitnessSpec> inner;

  static FitnessSpec short_default();
  static FitnessSpec length(int target);
  static FitnessSpec near_targets(std::vector<Expr> targets);
  static FitnessSpec trig_gated(FitnessSpec inner);

  void validate() const;
  // "short", "length:L", "trig" (gated short) or "trig:length:L". Target
  // sets are supplied programmatically.
  static FitnessSpec parse(std::string_view text);
  std::string to_string() const;
};

// Fitness of a problem that the model fails on (m = 1). Gated specs return
// 0 when the gate is closed.
double shaping(const FitnessSpec& spec, const Expr& e);

struct Evaluation {
  double fitness = 0.0;
  int m = 0;
  // False when a closed gate skipped the model call.
  bool evaluated = false;
  CandidateList candidates;
  std::vector<Verdict> verdicts;
};

// m via failure_indicator at `k`, times the shaping term.
Evaluation evaluate_fitness(const FitnessSpec& spec, const Expr& e, Integrator& integrator, int k, int beam,
                            const EquivConfig& cfg);

// ---------------------------------------------------------------------------
// Embedding and clustering

inline constexpr std::size_t kEmbeddingDim = 54;

// Structural features: operator histogram, depth, token-length bucket,
// coefficient-magnitude buckets and 32 hashed prefix-token bigrams (digits
// collapsed).
std::vector<double> embed(const Expr& e);
// Cosine distance in [0, 2].
double cosine_distance(const std::vector<double>& u, const std::vector<double>& v);

// k-means on L2-normalised vectors with farthest-point initialisation and an
// iteration cap of 100. Throws TooFewPoints if there are fewer than k vectors.
std::vector<int> kmeans(const std::vector<std::vector<double>>& vectors, int k, Rng& rng);

// ---------------------------------------------------------------------------
// Search loop

// How many seeds each cluster may contribute before global padding.
enum class SelectionQuota { kEqual, kProportional };

std::string_view selection_quota_name(SelectionQuota q);
SelectionQuota selection_quota_from_name(std::string_view name);

struct SaggaConfig {
  int seed_size = 100;         // M
  int generation_size = 1000;  // M'
  int cluster_count = 10;
  SelectionQuota quota = SelectionQuota::kEqual;
  double tau = 0.01;
  std::size_t archive_target = 1000;  // N
  int eval_k = 1;
  int beam = 10;
  int generation_cap = 50;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: default_workers()
  EquivConfig verify;

  void validate() const;
};

struct ArchiveEntry {
  Expr problem;
  double fitness = 0.0;
  int generation = 0;
  int cluster = 0;
  // Infix of the initial seed this problem descends from.
  std::string ancestor;
  std::vector<TokenSeq> candidates;
  std::vector<Verdict> verdicts;
};

struct GenerationStats {
  int generation = 0;
  std::size_t children = 0;
  std::size_t discarded = 0;   // no mutation site or no sample domain
  std::size_t collisions = 0;  // duplicates of this generation or of the archive
  std::size_t evaluated = 0;
  std::size_t failures = 0;
  std::size_t archived = 0;
  std::size_t archive_size = 0;
  double mean_token_len = 0.0;  // over entries archived in this generation
};

enum class RunStatus { kTargetReached, kGenerationCapReached };

std::string_view run_status_name(RunStatus s);

struct SaggaResult {
  RunStatus status = RunStatus::kGenerationCapReached;
  std::vector<ArchiveEntry> archive;
  std::vector<GenerationStats> progress;
  int generations = 0;
};

struct RunOptions {
  // Written after every generation and before rethrowing ModelUnavailable.
  std::string checkpoint_path;
  bool resume = false;
  std::function<void(const GenerationStats&)> on_generation;
};

SaggaResult run_sagga(const SaggaConfig& cfg, const MutationConfig& mcfg, const FitnessSpec& fitness,
                      const std::vector<Expr>& seeds, Integrator& integrator, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Archive files and summaries

struct ArchiveHeader {
  std::string model;
  std::string fitness;
  std::string mutations;
  std::uint64_t seed = 0;
  int eval_k = 1;
  int beam = 10;
  double tau = 0.01;
  std::string status;
  int generations = 0;
  std::string created;
};

// JSON lines: a header object, then one object per entry.
void write_archive(std::ostream& out, const ArchiveHeader& header, const std::vector<ArchiveEntry>& entries);
std::pair<ArchiveHeader, std::vector<ArchiveEntry>> read_archive(std::istream& in);

struct ArchiveSummary {
  int iterations = 0;
  double mean_len = 0.0;
  double mean_nodes = 0.0;
  double mean_depth = 0.0;
  // Percentages of entries with exactly 1, 2 and 3 terms.
  double one_term = 0.0;
  double two_term = 0.0;
  double three_term = 0.0;
};

ArchiveSummary summarize_archive(const std::vector<ArchiveEntry>& entries, int iterations);
std::string format_archive_summary(const std::vector<std::pair<std::string, ArchiveSummary>>& rows);

}  // namespace sigeval

#endif  // SIGEVAL_SAGGA_H_
