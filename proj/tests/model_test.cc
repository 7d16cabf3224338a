#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include "sigeval/metrics.h"
#include "sigeval/model.h"
#include "sigeval/parallel.h"
#include "test_util.h"

#ifndef FAKE_MODEL_SERVER
#error "FAKE_MODEL_SERVER must name the fake server binary"
#endif

namespace sigeval {
namespace {

using testing::P;

DecodeParams params_k(int k) {
  DecodeParams p;
  p.k = k;
  p.beam = std::max(10, k);
  return p;
}

std::string server(const std::string& flags = "") { return std::string(FAKE_MODEL_SERVER) + " " + flags; }

ExternalEndpoint stdio_endpoint(const std::string& flags, double timeout = 10.0) {
  ExternalEndpoint ep;
  ep.command = server(flags);
  ep.timeout = timeout;
  return ep;
}

TEST(DecodeParamsTest, Validation) {
  EXPECT_NO_THROW(params_k(10).validate());
  DecodeParams p;
  p.k = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.k = 11;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.strategy = DecodeStrategy::kSample;
  EXPECT_NO_THROW(p.validate());
  p.temperature = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(DedupTest, RemovesCanonicalDuplicatesKeepingRank) {
  CandidateList list;
  list.candidates = {to_prefix(P("x + x")), to_prefix(P("2*x")), split_tokens("add x"),
                     split_tokens("add x"), to_prefix(P("x^2"))};
  list.scores = std::vector<double>{0.5, 0.4, 0.3, 0.2, 0.1};
  const auto out = dedup_candidates(list, 10);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out.candidates[0], to_prefix(P("x + x")));
  EXPECT_EQ(out.candidates[1], split_tokens("add x"));
  EXPECT_EQ(*out.scores, (std::vector<double>{0.5, 0.3, 0.1}));
  EXPECT_EQ(dedup_candidates(list, 2).size(), 2u);
}

TEST(ReferenceIntegratorTest, ProposesTheOracleAnswer) {
  ReferenceIntegrator ref;
  const auto list = ref.propose(P("x"), params_k(1));
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(parse_prefix(list.candidates[0]), canonicalize(P("x^2/2")));
  EXPECT_TRUE(ref.propose(P("sin(x)/x"), params_k(1)).empty());
  EXPECT_FALSE(ref.score(P("x"), list.candidates[0]));
}

TEST(FaultyIntegratorTest, AlwaysFailingModelHasNoCorrectCandidate) {
  FaultyIntegrator model(FaultSpec::parse("p=1"));
  const EquivConfig cfg;
  for (const char* text : {"x", "30*cos(39*x)", "x^209"}) {
    const auto list = model.propose(P(text), params_k(10));
    EXPECT_EQ(first_success_rank(verify_candidates(P(text), list, 10, cfg, true)), 0) << text;
  }
}

TEST(FaultyIntegratorTest, SyntheticScores) {
  FaultyIntegrator model(FaultSpec::parse("p=0,rank=2"));
  const Expr problem = P("3*x^2");
  const auto list = model.propose(problem, params_k(10));
  const auto s1 = model.score(problem, list.candidates[0]);
  EXPECT_EQ(s1, model.score(problem, list.candidates[0]));
  for (std::size_t i = 1; i < list.size(); ++i) EXPECT_LT(*model.score(problem, list.candidates[i]), *s1);
  EXPECT_DOUBLE_EQ(*s1, 0.9);
  // An equivalent integral outside the list scores one step below the last.
  FaultyIntegrator hidden(FaultSpec::parse("p=0,rank=none"));
  const double last = (*hidden.propose(problem, params_k(10)).scores).back();
  EXPECT_DOUBLE_EQ(*hidden.score(problem, to_prefix(P("x^3"))), last * 0.1);
  FaultyIntegrator pinned(FaultSpec::parse("p=0,rank=none,truth_score=0.5"));
  EXPECT_DOUBLE_EQ(*pinned.score(problem, to_prefix(P("x^3 + 7"))), 0.5);
}

TEST(CachingIntegratorTest, TransparentAndCounted) {
  auto inner = std::make_shared<FaultyIntegrator>(FaultSpec::parse("p=0.5,seed=4"));
  CachingIntegrator cached(inner);
  FaultyIntegrator plain(FaultSpec::parse("p=0.5,seed=4"));
  testing::TreeGen gen(23, 4);
  std::vector<Expr> problems;
  for (int i = 0; i < 40; ++i) problems.push_back(gen.next());
  std::vector<CandidateList> first(problems.size());
  parallel_for(problems.size(), 4, [&](std::size_t i) { first[i] = cached.propose(problems[i], params_k(3)); });
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto again = cached.propose(problems[i], params_k(3));
    const auto direct = plain.propose(problems[i], params_k(3));
    EXPECT_EQ(first[i].candidates, direct.candidates);
    EXPECT_EQ(first[i].scores, direct.scores);
    EXPECT_EQ(again.candidates, direct.candidates);
  }
  EXPECT_GE(cached.hits(), problems.size());
  const auto s = cached.score(problems[0], first[0].candidates[0]);
  EXPECT_EQ(s, cached.score(problems[0], first[0].candidates[0]));
  EXPECT_EQ(s, plain.score(problems[0], first[0].candidates[0]));
}

TEST(ExternalEndpointTest, Parse) {
  auto ep = ExternalEndpoint::parse("tcp=localhost:7000,cap=64,timeout=2");
  EXPECT_EQ(ep.tcp, "localhost:7000");
  EXPECT_EQ(ep.token_cap, 64u);
  EXPECT_DOUBLE_EQ(ep.timeout, 2.0);
  ep = ExternalEndpoint::parse("cap=32,cmd=python3 adapter.py --x=1,2");
  EXPECT_EQ(ep.command, "python3 adapter.py --x=1,2");
  EXPECT_EQ(ep.token_cap, 32u);
  EXPECT_THROW(ExternalEndpoint::parse("cap=3"), std::invalid_argument);
  EXPECT_THROW(ExternalEndpoint::parse("host=1"), std::invalid_argument);
}

TEST(ExternalIntegratorTest, StubEchoesFixedCandidateAndScore) {
  ExternalIntegrator model(stdio_endpoint("--candidate 'mul INT+ 3 x' --score 0.125"));
  const auto list = model.propose(P("x"), params_k(1));
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list.candidates[0], split_tokens("mul INT+ 3 x"));
  ASSERT_TRUE(list.scores);
  EXPECT_DOUBLE_EQ((*list.scores)[0], 0.125);
  EXPECT_DOUBLE_EQ(*model.score(P("x"), split_tokens("x")), 0.125);
  EXPECT_EQ(model.score(P("x"), split_tokens("x")), model.score(P("x"), split_tokens("x")));
}

// 100 randomized requests from several threads against a server that
// answers out of order; verdicts must equal those of the in-process oracle.
TEST(ExternalIntegratorTest, ConformanceAgainstInProcessReference) {
  ExternalIntegrator remote(stdio_endpoint("--backend reference --reorder 3"));
  ReferenceIntegrator local;
  Rng rng(31);
  std::vector<Expr> problems;
  const char* fns[] = {"sin", "cos", "exp", "tan", "ln"};
  for (int i = 0; i < 100; ++i) {
    const long k1 = rng.uniform_int(1, 100);
    const long k2 = rng.uniform_int(1, 100);
    problems.push_back(Expr::mul(Expr::integer(k1),
                                 Expr::fn(*fn_from_name(fns[rng.index(5)]), Expr::mul(Expr::integer(k2), Expr::var()))));
  }
  std::vector<int> remote_m(problems.size());
  std::vector<int> local_m(problems.size());
  const EquivConfig cfg;
  parallel_for(problems.size(), 6, [&](std::size_t i) {
    remote_m[i] = failure_indicator(problems[i], remote.propose(problems[i], params_k(1)), 1, cfg);
    local_m[i] = failure_indicator(problems[i], local.propose(problems[i], params_k(1)), 1, cfg);
  });
  EXPECT_EQ(remote_m, local_m);
  for (int m : remote_m) EXPECT_EQ(m, 0);
}

TEST(ExternalIntegratorTest, OversizedCandidateRaisesResponseTooLarge) {
  auto ep = stdio_endpoint("--oversize 600");
  ExternalIntegrator model(ep);
  EXPECT_THROW(model.propose(P("x"), params_k(1)), ResponseTooLarge);
  // A run keeps going and counts the problem as failed.
  FailAtKOptions opts;
  opts.workers = 1;
  const auto result = fail_at_k({Problem{P("x"), std::nullopt, ""}}, model, opts);
  EXPECT_DOUBLE_EQ(result.rate(1), 1.0);
  EXPECT_EQ(result.records[0].note, "response_too_large");
}

TEST(ExternalIntegratorTest, ErrorResponsesAndGarbageAreMalformed) {
  ExternalIntegrator failing(stdio_endpoint("--error"));
  EXPECT_THROW(failing.propose(P("x"), params_k(1)), MalformedResponse);
  ExternalIntegrator garbled(stdio_endpoint("--garbage-after 1"));
  EXPECT_NO_THROW(garbled.propose(P("x"), params_k(1)));
  EXPECT_THROW(garbled.propose(P("x"), params_k(1)), MalformedResponse);
}

TEST(ExternalIntegratorTest, DeadPeerIsUnavailable) {
  ExternalIntegrator model(stdio_endpoint("--die-after 1"));
  EXPECT_NO_THROW(model.propose(P("x"), params_k(1)));
  EXPECT_THROW(model.propose(P("x"), params_k(1)), ModelUnavailable);
  EXPECT_THROW(model.propose(P("x"), params_k(1)), ModelUnavailable);
  EXPECT_THROW(ExternalIntegrator(ExternalEndpoint::parse("tcp=127.0.0.1:1")), ModelUnavailable);
}

TEST(ExternalIntegratorTest, TcpEndpoint) {
  FILE* proc = ::popen(server("--listen 0 --once --candidate 'INT+ 7'").c_str(), "r");
  ASSERT_NE(proc, nullptr);
  int port = 0;
  ASSERT_EQ(std::fscanf(proc, "PORT %d", &port), 1);
  {
    ExternalIntegrator model(ExternalEndpoint::parse("tcp=127.0.0.1:" + std::to_string(port)));
    const auto list = model.propose(P("x"), params_k(1));
    ASSERT_EQ(list.size(), 1u);
    EXPECT_EQ(list.candidates[0], split_tokens("INT+ 7"));
  }
  EXPECT_EQ(::pclose(proc), 0);
}

TEST(MakeIntegratorTest, Selectors) {
  EXPECT_EQ(make_integrator("reference")->name(), "reference");
  EXPECT_NE(make_integrator("faulty:p=0.5")->name().find("p=0.5"), std::string::npos);
  EXPECT_THROW(make_integrator("faulty:p=2"), std::invalid_argument);
  EXPECT_THROW(make_integrator("oracle"), std::invalid_argument);
  ::unsetenv("SIGEVAL_MODEL");
  EXPECT_THROW(make_integrator("external"), std::invalid_argument);
  ::setenv("SIGEVAL_MODEL", ("cmd=" + server()).c_str(), 1);
  auto ext = make_integrator("external");
  EXPECT_EQ(ext->propose(P("x"), params_k(1)).size(), 1u);
  ::unsetenv("SIGEVAL_MODEL");
}

}  // namespace
}  // namespace sigeval
