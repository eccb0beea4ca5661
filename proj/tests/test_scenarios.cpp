#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "learnexp/scenarios.hpp"

using namespace learnexp;
using namespace learnexp::hardness;

namespace {

// Slot lengths for T divisible by 12: T/4, T/4, 5T/12, T/12.
double slot_total(const std::vector< double >& v, double T)
{
   return v[0] * T / 4.0 + v[1] * T / 4.0 + v[2] * 5.0 * T / 12.0 + v[3] * T / 12.0;
}

std::vector< std::size_t > range(std::size_t first, std::size_t last)
{
   std::vector< std::size_t > r(last - first + 1);
   std::iota(r.begin(), r.end(), first);
   return r;
}

}  // namespace

TEST(Piecewise, SlotEndsAndValues)
{
   const auto trio = build_hardness_trio(24000);
   EXPECT_EQ(trio.tables[0].slot_ends(24000), (std::vector< std::size_t >{6000, 12000, 22000, 24000}));
   const auto s = trio.scenario(0);
   EXPECT_EQ(s.loss(5999, {0, 0}), 1.0);
   EXPECT_EQ(s.loss(6000, {0, 0}), 0.0);
   EXPECT_EQ(s.loss(21999, {0, 0}), 0.5);
   EXPECT_EQ(s.loss(22000, {0, 0}), 0.0);
}

TEST(Piecewise, ConstantSingleSlot)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}};
   const auto s = build_piecewise(e, 50, {{1.0}, {{0.5}}});
   for(std::size_t t = 0; t < 50; ++t) {
      EXPECT_EQ(s.loss(t, {0, 0}), 0.5);
   }
}

TEST(Piecewise, Validation)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}};
   EXPECT_THROW(build_piecewise(e, 10, {{0.5}, {{0.5}}}), ConfigError);
   EXPECT_THROW(build_piecewise(e, 10, {{0.6, 0.4, 1.0}, {{0.5, 0.5, 0.5}}}), ConfigError);
   EXPECT_THROW(build_piecewise(e, 10, {{1.0}, {{1.5}}}), ConfigError);
   EXPECT_THROW(build_piecewise(e, 10, {{1.0}, {{0.5}, {0.5}}}), ConfigError);
   EXPECT_THROW(build_piecewise(e, 0, {{1.0}, {{0.5}}}), ConfigError);
}

TEST(Stochastic, ZeroMeanGivesZeroLosses)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}};
   const auto s = build_stochastic(e, 1000, {{0.0}, 0.0, 3});
   EXPECT_EQ(s.column_sum({0, 0}), 0.0);
}

TEST(Stochastic, BernoulliMean)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}};
   const auto s = build_stochastic(e, 100000, {{0.3}, 0.0, 4});
   EXPECT_NEAR(s.column_sum({0, 0}) / 100000.0, 0.3, 0.005);
}

TEST(Stochastic, DriftAndValidation)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}};
   const auto s = build_stochastic(e, 20000, {{0.2}, 0.6, 5});
   double first = 0.0, second = 0.0;
   for(std::size_t t = 0; t < 10000; ++t) {
      first += s.loss(t, {0, 0});
      second += s.loss(t + 10000, {0, 0});
   }
   // means 0.35 and 0.65 on the two halves
   EXPECT_NEAR(first / 10000.0, 0.35, 0.02);
   EXPECT_NEAR(second / 10000.0, 0.65, 0.02);
   EXPECT_THROW(build_stochastic(e, 10, {{0.2, 0.3}, 0.0, 1}), ConfigError);
   EXPECT_THROW(build_stochastic(e, 10, {{1.2}, 0.0, 1}), ConfigError);
}

TEST(Stochastic, SeedDeterminesTrace)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Hedge, 3, 0}};
   const auto a = build_stochastic(e, 500, {{0.2, 0.5, 0.7}, 0.0, 9});
   const auto b = build_stochastic(e, 500, {{0.2, 0.5, 0.7}, 0.0, 9});
   const auto c = build_stochastic(e, 500, {{0.2, 0.5, 0.7}, 0.0, 10});
   bool differs = false;
   for(std::size_t t = 0; t < 500; ++t) {
      for(std::size_t k = 0; k < 3; ++k) {
         ASSERT_EQ(a.loss(t, {0, k}), b.loss(t, {0, k}));
         differs = differs || a.loss(t, {0, k}) != c.loss(t, {0, k});
      }
   }
   EXPECT_TRUE(differs);
}

TEST(Hardness, DefaultTriosSatisfyConstraints)
{
   for(auto v : {Variant::BlindSpot, Variant::Reference}) {
      for(std::size_t T : {12u, 1200u, 24000u}) {
         const auto violations = check_hardness_constraints(build_hardness_trio(T, 0.01, v));
         EXPECT_TRUE(violations.empty()) << to_string(v) << " T=" << T << ": "
                                         << (violations.empty() ? "" : violations.front());
      }
   }
}

TEST(Hardness, InjectedFaultsAreReported)
{
   auto trio = build_hardness_trio(2400);
   trio.tables[0].values[kA1][0] = 0.9;
   trio.tables[2].values[kA1][0] = 0.9;
   const auto v = check_hardness_constraints(trio);
   EXPECT_TRUE(std::any_of(v.begin(), v.end(), [](const std::string& s) { return s.find("11T/24") != std::string::npos; }));

   auto prefix = build_hardness_trio(2400);
   prefix.tables[2].values[kB][0] = 0.9;
   const auto w = check_hardness_constraints(prefix);
   EXPECT_TRUE(std::any_of(w.begin(), w.end(), [](const std::string& s) { return s.find("L3 prefix") != std::string::npos; }));
}

TEST(Hardness, SlotSumsMatchArithmetic)
{
   const double T = 24000.0;
   const auto ref = build_hardness_trio(24000, 0.01, Variant::Reference);
   EXPECT_NEAR(slot_sum(ref, 0, kA1), 11.0 * T / 24.0, 1e-9);
   EXPECT_NEAR(slot_sum(ref, 0, kA2), slot_total({0.5, 0.485, 0.5, 0.5}, T), 1e-9);
   EXPECT_NEAR(slot_sum(ref, 0, kB), 0.55875 * T, 1e-9);
   const auto bs = build_hardness_trio(24000, 0.01, Variant::BlindSpot);
   EXPECT_NEAR(slot_sum(bs, 0, kA2), slot_total({0.5, 1.0, 0.5, 0.5}, T), 1e-9);
   EXPECT_NEAR(slot_sum(bs, 0, kB), slot_total({0.55, 0.485, 0.5, 0.5}, T), 1e-9);
}

TEST(Hardness, LaterTablesShareTheirPrefix)
{
   const auto trio = build_hardness_trio(1200);
   const auto l1 = trio.scenario(0), l2 = trio.scenario(1), l3 = trio.scenario(2);
   for(std::size_t t = 0; t < 600; ++t) {
      for(std::size_t a = 0; a < 3; ++a) {
         const ActionId id = a < 2 ? ActionId{0, a} : ActionId{1, 0};
         ASSERT_EQ(l1.loss(t, id), l2.loss(t, id));
         if(t < 300) {
            ASSERT_EQ(l1.loss(t, id), l3.loss(t, id));
         }
      }
   }
   // L2 favours b after T/2, L3 favours a1 after T/4
   EXPECT_EQ(l2.loss(700, {1, 0}), 0.0);
   EXPECT_EQ(l2.loss(700, {0, 0}), 1.0);
   EXPECT_EQ(l3.loss(400, {0, 0}), 0.0);
   EXPECT_EQ(l3.loss(400, {1, 0}), 1.0);
}

TEST(Hardness, RejectsBadParameters)
{
   EXPECT_THROW(build_hardness_trio(100), ConfigError);
   EXPECT_THROW(build_hardness_trio(120, 0.5), ConfigError);
   EXPECT_THROW(variant_from_string("other"), ConfigError);
}

TEST(PerceivedGap, ReferenceTables)
{
   const std::size_t T = 24000;
   const double Td = static_cast< double >(T);
   const auto trio = build_hardness_trio(T, 0.01, Variant::Reference);
   EXPECT_NEAR(perceived_gap_oracle(trio, {}), 0.00375 * Td, 1e-6);

   const auto s2 = range(T / 4 + 1, T / 2);
   EXPECT_NEAR(perceived_gap_oracle(trio, s2), Td / 8.0, 1e-6);

   // block the first T/12 of S2, observe the remaining T/6
   const auto part = range(T / 4 + 1, T / 4 + T / 12);
   const double gap = perceived_gap_oracle(trio, part);
   EXPECT_NEAR(gap, Td / 8.0 - 0.485 * Td / 6.0, 1e-6);
   EXPECT_GE(gap, 0.5 * Td / 12.0);
}

TEST(PerceivedGap, BlindSpotTables)
{
   const std::size_t T = 1200;
   const auto trio = build_hardness_trio(T);
   // a1 - a2 per slot: +0.5 on S1, -1 on S2, 0 on S3
   EXPECT_NEAR(perceived_gap_oracle(trio, {}), 0.5 * 300 - 300.0, 1e-9);
   EXPECT_NEAR(perceived_gap_oracle(trio, range(301, 600)), 150.0, 1e-9);
   const std::vector< std::size_t > out_of_range{0};
   EXPECT_THROW(perceived_gap_oracle(trio, out_of_range), std::invalid_argument);
}
