#include <cmath>

#include <gtest/gtest.h>

#include "hardylab/error.hpp"
#include "hardylab/hardy.hpp"
#include "helpers.hpp"

using namespace hardylab;
using namespace testing_util;

namespace {

HardyParams params(HardyCase c, int m, double p, double s) {
  HardyParams prm;
  prm.hcase = c;
  prm.m = m;
  prm.k = m - 1;
  prm.p = prm.p1 = prm.q = p;
  prm.s = s;
  return prm;
}

}  // namespace

TEST(Hardy, WeightExponentFormula) {
  HardyParams prm = params(HardyCase::A, 2, 2.0, -1.0);
  prm.k = 0;
  prm.p1 = 3.0;
  // s1 = -(m-k-1)p1 - N + (p1/p)(s+N)
  EXPECT_NEAR(weight_exponents(prm, 2).s1, -3.0 - 2.0 + 1.5 * 1.0, 1e-12);
}

TEST(Hardy, ParsersRejectUnknownNames) {
  EXPECT_EQ(parse_case("C"), HardyCase::C);
  EXPECT_THROW(parse_case("Z"), Error);
  EXPECT_EQ(corollary_case_name(parse_corollary_case("vii")), "vii");
  EXPECT_THROW(parse_corollary_case("xi"), Error);
}

TEST(Hardy, IntervalDirectConstantApproachesClassicalValue) {
  // sup int u^2 / x^2 over int u'^2 on the half line is 4.
  HardyParams prm = params(HardyCase::A, 1, 2.0, 0.0);
  DirectEstimate e = direct_best_constant(domain(interval(10)), prm);
  EXPECT_LT(e.ratio, 4.0);
  EXPECT_GT(e.ratio, 2.5);
  EXPECT_NEAR(e.constant, std::sqrt(e.ratio), 1e-12);
  RefinementStudy r = refine_direct(spec(interval(12)), prm, {8, 9, 10, 11, 12});
  for (std::size_t i = 1; i < r.ratios.size(); ++i) EXPECT_GE(r.ratios[i], r.ratios[i - 1]);
  EXPECT_NEAR(r.extrapolated, 4.0, 0.2);
}

class Soundness : public ::testing::TestWithParam<std::tuple<std::string, HardyCase, double>> {};

TEST_P(Soundness, ConstructiveConstantDominatesDirectEstimate) {
  const auto& [text, hcase, s] = GetParam();
  GridDomain g = domain(text);
  WhitneyDecomposition w = decompose(g);
  HardyParams prm = params(hcase, 1, 2.0, s);
  if (hcase == HardyCase::B || hcase == HardyCase::D) prm.p0 = prm.p1 = 1.5;
  HardyBoundReport b = constructive_bound(g, w, prm);
  DirectEstimate e = direct_best_constant(g, prm);
  b.attach_direct(e.constant);
  EXPECT_TRUE(b.sound) << "A = " << b.constant_A << " direct = " << e.constant;
  EXPECT_GT(b.constant_A, 0.0);
  EXPECT_FALSE(b.factors.empty());
  EXPECT_NE(b.provenance_csv().find('\n'), std::string::npos);
}

INSTANTIATE_TEST_SUITE_P(Cases, Soundness,
                         ::testing::Values(std::make_tuple(halfspace(6), HardyCase::A, -1.0),
                                           std::make_tuple(lshape(6), HardyCase::A, -0.5),
                                           std::make_tuple(halfspace(6), HardyCase::C, -1.0),
                                           std::make_tuple(halfspace(6), HardyCase::B, 0.0),
                                           std::make_tuple(lshape(6), HardyCase::D, -0.5)),
                         [](const auto& info) {
                           const double s = std::get<2>(info.param);
                           return domain_label(std::get<0>(info.param)) + "_case" +
                                  case_name(std::get<1>(info.param)) + "_s" + (s < 0 ? "m" : "") +
                                  std::to_string(static_cast<int>(std::abs(s) * 10));
                         });

TEST(Hardy, AttachDirectFlagsUnsoundBounds) {
  GridDomain g = domain(halfspace(6));
  WhitneyDecomposition w = decompose(g);
  HardyBoundReport b = constructive_bound(g, w, params(HardyCase::A, 1, 2.0, -1.0));
  b.attach_direct(b.constant_A * 2.0 + 1.0);
  EXPECT_FALSE(b.sound);
}

TEST(Hardy, CaseEShiftsPastZeroForP2AndDeclinesP1) {
  GridDomain g = domain(halfspace(7));
  WhitneyDecomposition w = decompose(g);
  CaseEReport e = case_e_shift(g, w, params(HardyCase::E, 1, 2.0, 0.0));
  ASSERT_FALSE(e.declined) << e.reason;
  EXPECT_GT(e.s0, 0.0);
  EXPECT_GT(e.constant_at_half_s0, 0.0);
  HardyParams at = params(HardyCase::E, 1, 2.0, 0.5 * e.s0);
  ProbeCheck pc = check_probes(g, at, e.constant_at_half_s0, 20, 5);
  EXPECT_EQ(pc.holding, pc.probes);
  CaseEReport e1 = case_e_shift(g, w, params(HardyCase::E, 1, 1.0, 0.0));
  EXPECT_TRUE(e1.declined);
  EXPECT_FALSE(e1.reason.empty());
}

TEST(Hardy, ProbeCheckSeparatesLargeAndTinyConstants) {
  GridDomain g = domain(lshape(6));
  HardyParams prm = params(HardyCase::A, 1, 2.0, -1.0);
  ProbeCheck big = check_probes(g, prm, 1e6, 10, 3);
  EXPECT_EQ(big.holding, 10);
  ProbeCheck tiny = check_probes(g, prm, 1e-6, 10, 3);
  EXPECT_EQ(tiny.holding, 0);
  EXPECT_GT(tiny.worst_ratio, 1.0);
}

TEST(Hardy, CorollaryReportsHypotheses) {
  GridDomain g = domain(halfspace(6));
  WhitneyDecomposition w = decompose(g);
  CorollaryReport r = corollary_check(g, w, CorollaryCase::i, params(HardyCase::A, 1, 2.0, -1.0));
  EXPECT_FALSE(r.hypotheses.empty());
  bool all = true;
  for (const auto& h : r.hypotheses) all = all && h.ok;
  EXPECT_EQ(all, r.hypotheses_ok);
  if (r.hypotheses_ok) {
    EXPECT_TRUE(r.bound.has_value());
  }
}

TEST(Hardy, InvalidExponentsAreRejected) {
  GridDomain g = domain(halfspace(6));
  WhitneyDecomposition w = decompose(g);
  HardyParams prm = params(HardyCase::A, 1, 2.0, -1.0);
  prm.p = 0.5;
  EXPECT_THROW(constructive_bound(g, w, prm), Error);
}
