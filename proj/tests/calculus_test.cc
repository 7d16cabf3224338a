#include <cmath>

#include <gtest/gtest.h>

#include "sigeval/calculus.h"
#include "test_util.h"
#include "verdict_rows.h"

namespace sigeval {
namespace {

using testing::P;

TEST(DifferentiateTest, Examples) {
  EXPECT_EQ(differentiate(P("sin(x)")), P("cos(x)"));
  EXPECT_EQ(differentiate(P("(10/13)*sin(39*x)")), canonicalize(P("30*cos(39*x)")));
  EXPECT_EQ(differentiate(P("x^43 + 1")), canonicalize(P("43*x^42")));
}

TEST(DifferentiateTest, Rules) {
  EXPECT_EQ(differentiate(P("7")), P("0"));
  EXPECT_EQ(differentiate(P("x")), P("1"));
  EXPECT_EQ(differentiate(P("123^x/ln(123)")), canonicalize(P("123^x")));
  EXPECT_EQ(differentiate(P("x*(ln(3*x) - 1)")), canonicalize(P("ln(3*x)")));
  EXPECT_EQ(differentiate(P("exp(5*x)")), canonicalize(P("5*exp(5*x)")));
  EXPECT_EQ(differentiate(P("ln(x)")), canonicalize(P("1/x")));
}

// Central difference oracle; independent of the symbolic rules.
double central_diff(const Expr& f, double x0, double h) {
  return (eval_at(f, x0 + h) - eval_at(f, x0 - h)) / (2 * h);
}

bool defined_around(const Expr& f, double x0, double h) {
  for (double dx : {-2 * h, -h, 0.0, h, 2 * h}) {
    if (!try_eval_at(f, x0 + dx)) return false;
  }
  return true;
}

TEST(DifferentiatePropertyTest, MatchesFiniteDifferences) {
  constexpr double kH = 1e-5;
  testing::TreeGen gen(101, 6);
  Rng points(103);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const Expr f = gen.next();
    Expr df;
    try {
      df = differentiate(f);
    } catch (const DivisionByZero&) {
      continue;
    }
    int found = 0;
    for (int draw = 0; draw < 200 && found < 5; ++draw) {
      const double x0 = points.uniform(-3.0, 3.0);
      if (!defined_around(f, x0, kH) || !try_eval_at(df, x0)) continue;
      // Points where the difference quotient itself is unstable (steep
      // singular neighbourhoods) do not count as valid samples.
      const double coarse = central_diff(f, x0, kH);
      const double fine = central_diff(f, x0, kH / 2);
      if (std::abs(coarse - fine) > 1e-6 * (1 + std::abs(coarse))) continue;
      ++found;
      const double exact = eval_at(df, x0);
      ASSERT_LE(std::abs(exact - coarse), 1e-5 * (1 + std::abs(exact)))
          << to_infix(f) << " d/dx=" << to_infix(df) << " at " << x0;
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(DifferentiatePropertyTest, SumRule) {
  testing::TreeGen gen(107, 5);
  EquivConfig cfg;
  for (int i = 0; i < 200; ++i) {
    const Expr f = gen.next();
    const Expr g = gen.next();
    const Expr lhs = differentiate(Expr::add(f, g));
    const Expr rhs = Expr::add(differentiate(f), differentiate(g));
    ASSERT_NE(check_equivalence(lhs, rhs, cfg), EquivResult::kNotEquivalent)
        << to_infix(f) << " , " << to_infix(g);
  }
}

// Trees like tan((720x^2)^3) have no point where two evaluation orders agree
// to 1e-9, so they cannot serve as identity-test inputs.
bool conditioned_everywhere(const Expr& e) {
  Rng rng(127);
  for (int i = 0; i < 50; ++i) {
    const double x0 = rng.uniform(-3.0, 3.0);
    if (try_eval_at(e, x0) && !testing::well_conditioned(e, x0)) return false;
  }
  return true;
}

TEST(NumericEquivTest, Examples) {
  EquivConfig cfg;
  EXPECT_TRUE(numeric_equiv(P("(x^44+x)/x"), P("x^43+1"), cfg));
  EXPECT_FALSE(numeric_equiv(P("43*x^42"), P("53*x^42"), cfg));
  testing::TreeGen gen(109, 5);
  for (int i = 0; i < 200; ++i) {
    const Expr e = gen.next();
    if (!has_sample_domain(e, cfg) || !conditioned_everywhere(e)) continue;
    ASSERT_NE(check_equivalence(e, canonicalize(e), cfg), EquivResult::kNotEquivalent) << to_infix(e);
  }
}

TEST(NumericEquivTest, InsufficientDomain) {
  EquivConfig cfg;
  EXPECT_EQ(check_equivalence(P("ln(-x^2 - 1)"), P("x"), cfg), EquivResult::kInsufficientDomain);
  EXPECT_FALSE(numeric_equiv(P("ln(-x^2 - 1)"), P("ln(-x^2 - 1)"), cfg));
}

TEST(VerifyIntegralTest, TableRows) {
  EquivConfig cfg;
  EXPECT_EQ(verify_integral(P("30*cos(39*x)"), P("(10/13)*sin(39*x)"), cfg).status,
            VerdictStatus::kCorrect);
  EXPECT_EQ(verify_integral(P("17*cos(83*x)"), P("(1/17)*sin(83*x)"), cfg).status,
            VerdictStatus::kIncorrect);
}

TEST(VerifyIntegralTest, PublishedRows) {
  EquivConfig cfg;
  cfg.strict_timeout = true;
  for (const auto& row : testing::verdict_rows()) {
    const Verdict v = verify_integral(P(row.input), P(row.prediction), cfg);
    EXPECT_EQ(v.status, row.correct ? VerdictStatus::kCorrect : VerdictStatus::kIncorrect)
        << row.group << ": " << row.input << " -> " << row.prediction;
  }
}

TEST(VerifyIntegralTest, TokenCandidates) {
  EquivConfig cfg;
  const Expr problem = P("x");
  EXPECT_EQ(verify_integral(problem, to_prefix(P("x^2/2")), cfg).status, VerdictStatus::kCorrect);
  EXPECT_EQ(verify_integral(problem, split_tokens("add x"), cfg).status, VerdictStatus::kUnparseable);
  EXPECT_EQ(verify_integral(problem, split_tokens("mul x foo"), cfg).status,
            VerdictStatus::kUnparseable);
}

TEST(VerifyIntegralTest, BudgetExhaustionCountsAsCorrect) {
  EquivConfig cfg;
  cfg.per_candidate_budget = 1e-12;
  const Expr problem = P("17*cos(83*x)");
  const Verdict v = verify_integral(problem, P("(1/17)*sin(83*x)"), cfg);
  EXPECT_EQ(v.status, VerdictStatus::kTimeoutCountedCorrect);
  EXPECT_TRUE(v.success());
  cfg.strict_timeout = true;
  EXPECT_EQ(verify_integral(problem, P("(1/17)*sin(83*x)"), cfg).status, VerdictStatus::kIncorrect);
}

TEST(VerifyIntegralTest, DeterministicUnderSeed) {
  EquivConfig cfg;
  testing::TreeGen gen(113, 5);
  for (int i = 0; i < 100; ++i) {
    const Expr problem = gen.next();
    const Expr candidate = gen.next();
    EXPECT_EQ(verify_integral(problem, candidate, cfg).status,
              verify_integral(problem, candidate, cfg).status);
  }
}

TEST(VerdictTest, StatusNamesRoundTrip) {
  for (auto s : {VerdictStatus::kCorrect, VerdictStatus::kIncorrect,
                 VerdictStatus::kTimeoutCountedCorrect, VerdictStatus::kUnparseable}) {
    EXPECT_EQ(status_from_name(status_name(s)), s);
  }
  EXPECT_THROW(status_from_name("maybe"), std::invalid_argument);
}

}  // namespace
}  // namespace sigeval
