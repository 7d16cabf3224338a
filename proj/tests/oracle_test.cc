#include <set>

#include <gtest/gtest.h>

#include "sigeval/metrics.h"
#include "sigeval/oracle.h"
#include "test_util.h"

namespace sigeval {
namespace {

using testing::P;

Expr C(const char* text) { return canonicalize(P(text)); }

TEST(IntegrateReferenceTest, TableOneRows) {
  EXPECT_EQ(integrate_reference(P("x^209")), C("x^210/210"));
  EXPECT_EQ(integrate_reference(P("123^x")), C("123^x/ln(123)"));
  EXPECT_EQ(integrate_reference(P("30*cos(39*x)")), C("(10/13)*sin(39*x)"));
}

TEST(IntegrateReferenceTest, ExploitClassesAreUnsupported) {
  EXPECT_FALSE(integrate_reference(P("169*sin(4*x)/x")));
  EXPECT_FALSE(integrate_reference(P("sin(1/x)")));
  EXPECT_FALSE(integrate_reference(P("x^x")));
  EXPECT_FALSE(integrate_reference(P("sin(x)*cos(x)")));
  EXPECT_FALSE(integrate_reference(P("tan(2*x + 1)")));
  EXPECT_FALSE(integrate_reference(P("ln(x + 1)")));
}

TEST(IntegrateReferenceTest, RulesInTheSupportedClass) {
  EXPECT_EQ(integrate_reference(P("7")), C("7*x"));
  EXPECT_EQ(integrate_reference(P("1/x")), C("ln(x)"));
  EXPECT_EQ(integrate_reference(P("x")), C("x^2/2"));
  EXPECT_EQ(integrate_reference(P("3*ln(5*x)")), C("3*x*(ln(5*x) - 1)"));
  EXPECT_EQ(integrate_reference(P("exp(2*x + 1)")), C("exp(2*x + 1)/2"));
  EXPECT_EQ(integrate_reference(P("x^(1/3)")), C("(3/4)*x^(4/3)"));
}

TEST(IntegrateReferenceTest, EverySupportedShapeVerifies) {
  const EquivConfig cfg;
  for (const char* text :
       {"5", "x", "2*x^42", "1/x", "x^(-3)", "x^(1/606)", "17*sin(83*x)", "34*cos(77*x) + 1",
        "9*tan(4*x)", "exp(-3*x)", "12*ln(7*x)", "sqrt(3*x + 2)", "4^x", "2^(3*x)", "sin(2*x + 5)",
        "x^209 + x^764", "14*cos(58*x) + 46*cos(84*x)", "x + ln(x)", "exp(x) + 2*x^2 + 1/x",
        "123^x/ln(123)"}) {
    const Expr problem = P(text);
    const auto truth = integrate_reference(problem);
    ASSERT_TRUE(truth) << text;
    EXPECT_EQ(verify_integral(problem, *truth, cfg).status, VerdictStatus::kCorrect) << text;
  }
}

TEST(IntegrateReferenceTest, LinearityOverRandomPairs) {
  const EquivConfig cfg;
  Rng rng(17);
  const char* atoms[] = {"cos", "sin", "exp", "tan", "ln"};
  for (int i = 0; i < 100; ++i) {
    auto term = [&] {
      const auto k1 = Expr::integer(rng.uniform_int(1, 100));
      const auto k2 = Expr::integer(rng.uniform_int(1, 100));
      const auto fn = fn_from_name(atoms[rng.index(5)]).value();
      return Expr::mul(k1, Expr::fn(fn, Expr::mul(k2, Expr::var())));
    };
    const Expr f = term();
    const Expr g = term();
    ASSERT_TRUE(integrate_reference(f));
    ASSERT_TRUE(integrate_reference(g));
    const Expr sum = Expr::add(f, g);
    const auto truth = integrate_reference(sum);
    ASSERT_TRUE(truth) << to_infix(sum);
    EXPECT_TRUE(verify_integral(sum, *truth, cfg).success()) << to_infix(sum);
  }
}

TEST(ClassifyTest, Families) {
  EXPECT_EQ(classify(P("30*cos(39*x)")), Family::kCos);
  EXPECT_EQ(classify(P("17*cos(83*x) + 1")), Family::kCos);
  EXPECT_EQ(classify(P("2*x^42")), Family::kPower);
  EXPECT_EQ(classify(P("x")), Family::kPower);
  EXPECT_EQ(classify(P("-241")), Family::kConstant);
  EXPECT_EQ(classify(P("123^x")), Family::kExponential);
  EXPECT_EQ(classify(P("x^209 + x^764")), Family::kSum);
  EXPECT_EQ(classify(P("sin(x)/x")), Family::kOther);
  for (Family f : kAllFamilies) EXPECT_EQ(family_from_name(family_name(f)), f);
}

TEST(FaultSpecTest, ParseAndValidate) {
  const FaultSpec s = FaultSpec::parse("p=0.5,cos=0.25,kinds=drop_division+garbage_tokens,rank=3,seed=9");
  EXPECT_DOUBLE_EQ(s.p, 0.5);
  EXPECT_DOUBLE_EQ(s.probability(Family::kCos), 0.25);
  EXPECT_DOUBLE_EQ(s.probability(Family::kSin), 0.5);
  ASSERT_EQ(s.kinds.size(), 2u);
  EXPECT_EQ(s.rank_of_correct, 3);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(FaultSpec::parse(s.to_string()).to_string(), s.to_string());
  EXPECT_FALSE(FaultSpec::parse("rank=none").rank_of_correct);
  EXPECT_THROW(FaultSpec::parse("p=1.5"), std::invalid_argument);
  EXPECT_THROW(FaultSpec::parse("bogus=1"), std::invalid_argument);
  EXPECT_THROW(FaultSpec::parse("kinds=teleport"), std::invalid_argument);
  EXPECT_THROW(FaultSpec::parse("rank=0"), std::invalid_argument);
}

CandidateList run_faulty(const Expr& problem, const FaultSpec& spec, int k) {
  Rng rng = problem_stream(spec, problem);
  return faulty_integrate(problem, spec, rng, k);
}

TEST(FaultyIntegrateTest, ZeroProbabilityIsAlwaysCorrectAtRankOne) {
  FaultSpec spec;
  const EquivConfig cfg;
  for (const char* text : {"x", "30*cos(39*x)", "2*x^42 + 21", "exp(3*x)"}) {
    const auto list = run_faulty(P(text), spec, 5);
    ASSERT_EQ(list.size(), 5u);
    EXPECT_EQ(first_success_rank(verify_candidates(P(text), list, 5, cfg, true)), 1) << text;
    // Every other slot is a checked corruption.
    const auto all = verify_candidates(P(text), list, 5, cfg, true);
    for (std::size_t i = 1; i < all.size(); ++i) EXPECT_FALSE(all[i].success()) << text << " rank " << i + 1;
  }
}

TEST(FaultyIntegrateTest, DropDivisionOnTableRow) {
  FaultSpec spec = FaultSpec::parse("p=1,kinds=drop_division");
  const Expr problem = P("17*cos(83*x)");
  const auto list = run_faulty(problem, spec, 1);
  ASSERT_EQ(list.size(), 1u);
  const Expr top = parse_prefix(list.candidates[0]);
  EXPECT_EQ(top, C("17*sin(83*x)"));
  EXPECT_EQ(verify_integral(problem, top, EquivConfig{}).status, VerdictStatus::kIncorrect);
}

TEST(FaultyIntegrateTest, FaultKindsProduceTheirShapes) {
  const Expr problem = P("2*x^42 + 21");
  auto garbage = run_faulty(problem, FaultSpec::parse("p=1,kinds=garbage_tokens"), 3);
  for (const auto& c : garbage.candidates) EXPECT_THROW(parse_prefix(c), ParseError);
  auto endless = run_faulty(problem, FaultSpec::parse("p=1,kinds=nonterminating,max_tokens=64"), 1);
  ASSERT_EQ(endless.size(), 1u);
  EXPECT_EQ(endless.candidates[0].size(), 64u);
  EXPECT_THROW(parse_prefix(endless.candidates[0]), ParseError);
  for (const char* kinds : {"corrupt_constant", "template_swap", "drop_division"}) {
    const auto list = run_faulty(problem, FaultSpec::parse(std::string("p=1,kinds=") + kinds), 4);
    for (const auto& c : list.candidates) {
      EXPECT_NO_THROW(parse_prefix(c)) << kinds;
      EXPECT_FALSE(verify_integral(problem, c, EquivConfig{}).success()) << kinds;
    }
  }
}

TEST(FaultyIntegrateTest, RankOfCorrectAndScores) {
  const Expr problem = P("x^3");
  const auto list = run_faulty(problem, FaultSpec::parse("p=0,rank=3"), 5);
  const auto v = verify_candidates(problem, list, 5, EquivConfig{}, true);
  EXPECT_EQ(first_success_rank(v), 3);
  ASSERT_TRUE(list.scores);
  EXPECT_DOUBLE_EQ((*list.scores)[0], 0.9);
  EXPECT_DOUBLE_EQ((*list.scores)[1], 0.9 * 0.1);
  const auto never = run_faulty(problem, FaultSpec::parse("p=0,rank=none"), 10);
  EXPECT_EQ(first_success_rank(verify_candidates(problem, never, 10, EquivConfig{}, true)), 0);
}

TEST(FaultyIntegrateTest, UnsupportedProblemsOnlyGetCorruptions) {
  const Expr problem = P("sin(x)/x");
  const auto list = run_faulty(problem, FaultSpec{}, 4);
  EXPECT_EQ(first_success_rank(verify_candidates(problem, list, 4, EquivConfig{}, true)), 0);
}

TEST(FaultyIntegrateTest, ShorterListsArePrefixesOfLongerOnes) {
  const FaultSpec spec = FaultSpec::parse("p=0.5,seed=3");
  for (const char* text : {"30*cos(39*x)", "x^2 + 1", "sin(x)*x"}) {
    const auto small = run_faulty(P(text), spec, 3);
    const auto large = run_faulty(P(text), spec, 10);
    for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small.candidates[i], large.candidates[i]);
  }
}

// Monte-Carlo calibration: 1000 distinct cos problems with p = 0.3. The
// binomial standard deviation is sqrt(0.3*0.7/1000) ~ 0.0145.
TEST(FaultyIntegrateTest, FailAtOneMatchesProbability) {
  const FaultSpec spec = FaultSpec::parse("p=0.3,seed=11");
  Rng rng(5);
  std::set<std::pair<long, long>> pairs;
  while (pairs.size() < 1000) pairs.emplace(rng.uniform_int(1, 100), rng.uniform_int(1, 100));
  int failures = 0;
  const EquivConfig cfg;
  for (auto [k1, k2] : pairs) {
    const Expr problem = Expr::mul(Expr::integer(k1), Expr::fn(FnKind::kCos, Expr::mul(Expr::integer(k2), Expr::var())));
    failures += failure_indicator(problem, run_faulty(problem, spec, 1), 1, cfg);
  }
  const double rate = failures / 1000.0;
  EXPECT_GE(rate, 0.257);
  EXPECT_LE(rate, 0.343);
}

}  // namespace
}  // namespace sigeval
