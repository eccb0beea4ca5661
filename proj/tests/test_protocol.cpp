#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "learnexp/protocol.hpp"
#include "learnexp/scenarios.hpp"

using namespace learnexp;

namespace {

const std::vector< ExpertSpec > kMixed{{0, ExpertKind::Hedge, 2, 0}, {1, ExpertKind::Constant, 1, 0},
                                       {2, ExpertKind::Exp3, 3, 0}};

ScenarioTrace mixed_scenario(std::size_t T)
{
   return build_stochastic(kMixed, T, {{0.3, 0.6, 0.5, 0.2, 0.7, 0.4}, 0.1, 5});
}

}  // namespace

TEST(RunProtocol, SingleConstantExpert)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}};
   const auto s = build_stochastic(e, 200, {{0.4}, 0.0, 1});
   const auto out = run_specs(s, {ForecasterKind::LearnExp, 0.3, 0}, e, 9, FeedMode::ForecasterGated);
   for(const auto& r : out.record.records) {
      EXPECT_EQ(r.selected, 0u);
      EXPECT_EQ(r.prob, 1.0);
   }
   EXPECT_DOUBLE_EQ(out.record.cumulative_loss, s.column_sum({0, 0}));
}

TEST(RunProtocol, AlwaysFeedGatesEveryStep)
{
   const auto s = mixed_scenario(300);
   const auto out = run_specs(s, {ForecasterKind::Exp3Ungated, 0.2, 0}, kMixed, 3, FeedMode::AlwaysFeed);
   for(const auto& r : out.record.records) {
      EXPECT_TRUE(r.gate);
   }
   EXPECT_EQ(out.gate_fires, 300u);
}

TEST(RunProtocol, HandTraceThreeSteps)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}, {1, ExpertKind::Constant, 1, 0}};
   const auto s = build_piecewise(e, 3, {{1.0}, {{0.0}, {1.0}}});
   const auto out = run_specs(s, {ForecasterKind::FixedExpert, 1.0, 0}, e, 1, FeedMode::AlwaysFeed);
   EXPECT_EQ(out.record.cumulative_loss, 0.0);
   ASSERT_EQ(out.record.records.size(), 3u);
   for(std::size_t t = 0; t < 3; ++t) {
      EXPECT_EQ(out.record.records[t].t, t + 1);
      EXPECT_EQ(out.record.records[t].action, (ActionId{0, 0}));
   }
}

TEST(RunProtocol, Deterministic)
{
   const auto s = mixed_scenario(500);
   const auto a = run_specs(s, {ForecasterKind::LearnExp, 0.3, 0}, kMixed, 42, FeedMode::ForecasterGated);
   const auto b = run_specs(s, {ForecasterKind::LearnExp, 0.3, 0}, kMixed, 42, FeedMode::ForecasterGated);
   ASSERT_EQ(a.record.records.size(), b.record.records.size());
   for(std::size_t i = 0; i < a.record.records.size(); ++i) {
      const auto& x = a.record.records[i];
      const auto& y = b.record.records[i];
      ASSERT_EQ(x.selected, y.selected);
      ASSERT_EQ(x.action, y.action);
      ASSERT_EQ(x.prob, y.prob);
      ASSERT_EQ(x.loss, y.loss);
      ASSERT_EQ(x.gate, y.gate);
   }
   EXPECT_EQ(a.record.cumulative_loss, b.record.cumulative_loss);
   const auto c = run_specs(s, {ForecasterKind::LearnExp, 0.3, 0}, kMixed, 43, FeedMode::ForecasterGated);
   EXPECT_NE(a.record.cumulative_loss, c.record.cumulative_loss);
}

TEST(RunProtocol, CumulativeLossIsSumOfSteps)
{
   const auto s = mixed_scenario(400);
   const auto out = run_specs(s, {ForecasterKind::LearnExp, 0.3, 0}, kMixed, 5, FeedMode::ForecasterGated);
   double sum = 0.0;
   for(const auto& r : out.record.records) {
      sum += r.loss;
   }
   EXPECT_EQ(sum, out.record.cumulative_loss);
   EXPECT_GE(out.record.cumulative_loss, 0.0);
   EXPECT_LE(out.record.cumulative_loss, 400.0);
}

TEST(RunProtocol, HistoriesOnlyGrowForFedSelectedExpert)
{
   const auto s = mixed_scenario(600);
   RunOptions opts;
   opts.record_histories = true;
   const auto out = run_specs(s, {ForecasterKind::LearnExp, 0.4, 0}, kMixed, 17, FeedMode::ForecasterGated, opts);
   std::vector< std::size_t > fed(3, 0);
   for(const auto& r : out.record.records) {
      if(r.gate) {
         fed[r.selected]++;
      }
   }
   for(std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(out.record.histories[j].size(), fed[j]);
      for(const auto& h : out.record.histories[j]) {
         EXPECT_EQ(h.action.expert, j);
      }
   }
}

TEST(RunProtocol, ExpertStateIsPureFunctionOfHistory)
{
   const auto s = mixed_scenario(800);
   RunOptions opts;
   opts.record_histories = true;
   const auto out = run_specs(s, {ForecasterKind::LearnExp, 0.5, 0}, kMixed, 23, FeedMode::ForecasterGated, opts);
   for(std::size_t j = 0; j < kMixed.size(); ++j) {
      auto fresh = make_expert(kMixed[j]);
      for(const auto& h : out.record.histories[j]) {
         fresh.observe(h);
      }
      EXPECT_EQ(fresh.distribution(), out.final_distributions[j]) << "expert " << j;
      EXPECT_EQ(fresh.observations(), out.record.histories[j].size());
   }
}

TEST(RunProtocol, MismatchRejectedBeforeFirstStep)
{
   const auto s = mixed_scenario(10);
   std::vector< ExpertSpec > wrong = kMixed;
   wrong[0].num_actions = 3;
   EXPECT_THROW(run_protocol(s, LearnExp(3, 0.3), make_experts(wrong), 1, FeedMode::AlwaysFeed), ConfigError);
   std::vector< ExpertSpec > kind = kMixed;
   kind[0].kind = ExpertKind::Exp3;
   EXPECT_THROW(run_protocol(s, LearnExp(3, 0.3), make_experts(kind), 1, FeedMode::AlwaysFeed), ConfigError);
   EXPECT_THROW(run_protocol(s, LearnExp(2, 0.3), make_experts(kMixed), 1, FeedMode::AlwaysFeed), ConfigError);
   const std::vector< ExpertSpec > two(kMixed.begin(), kMixed.begin() + 2);
   EXPECT_THROW(run_protocol(s, LearnExp(2, 0.3), make_experts(two), 1, FeedMode::AlwaysFeed), ConfigError);
}

TEST(RunProtocol, GateDoesNotPerturbSelection)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}, {1, ExpertKind::Constant, 1, 0},
                                     {2, ExpertKind::Constant, 1, 0}};
   const auto s = build_stochastic(e, 2000, {{0.3, 0.5, 0.6}, 0.0, 8});
   const auto a = run_protocol(s, LearnExp(3, 0.25), make_experts(e), 31, FeedMode::ForecasterGated);
   const auto b = run_protocol(s, Exp3Ungated(3, 0.25), make_experts(e), 31, FeedMode::AlwaysFeed);
   for(std::size_t i = 0; i < 2000; ++i) {
      ASSERT_EQ(a.record.records[i].selected, b.record.records[i].selected);
      ASSERT_EQ(a.record.records[i].prob, b.record.records[i].prob);
   }
}

TEST(Comparator, ConstantEqualsColumnSum)
{
   const auto s = mixed_scenario(300);
   const std::vector< std::uint64_t > seeds{1, 2, 3};
   EXPECT_DOUBLE_EQ(comparator_loss(kMixed[1], s, seeds), s.column_sum({1, 0}));
   const ExpertSpec c{2, ExpertKind::Constant, 3, 2};
   const std::vector< ExpertSpec > e{kMixed[0], kMixed[1], c};
   const auto s2 = build_stochastic(e, 300, {{0.3, 0.6, 0.5, 0.2, 0.7, 0.4}, 0.1, 5});
   EXPECT_DOUBLE_EQ(comparator_loss(c, s2, seeds), s2.column_sum({2, 2}));
}

TEST(Comparator, IdenticalActionsGiveColumnSum)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Hedge, 2, 0}};
   const auto s = build_piecewise(e, 120, {{0.5, 1.0}, {{0.2, 0.9}, {0.2, 0.9}}});
   const std::vector< std::uint64_t > seeds{4, 5};
   EXPECT_NEAR(comparator_loss(e[0], s, seeds), s.column_sum({0, 0}), 1e-9);
}

TEST(Comparator, HedgeOnHardnessFirstTable)
{
   const std::size_t T = 12000;
   const auto trio = build_hardness_trio(T);
   const auto s = trio.scenario(0);
   std::vector< std::uint64_t > seeds(50);
   std::iota(seeds.begin(), seeds.end(), 100);
   const double v = comparator_loss(HardnessTrio::experts()[0], s, seeds);
   const double base = 11.0 * T / 24.0;
   EXPECT_GE(v, base);
   EXPECT_LE(v, base + 5.0 * std::sqrt(static_cast< double >(T)));
}

TEST(Comparator, EmptySeedsThrow)
{
   const auto s = mixed_scenario(10);
   EXPECT_THROW(comparator_loss(kMixed[0], s, {}), std::invalid_argument);
}

TEST(ExternalRegret, ZeroLossesAndSingleExpert)
{
   const std::vector< ExpertSpec > e{{0, ExpertKind::Constant, 1, 0}, {1, ExpertKind::Hedge, 2, 0}};
   const auto zeros = build_stochastic(e, 500, {{0.0, 0.0, 0.0}, 0.0, 1});
   RunOptions opts;
   opts.track_expert_losses = true;
   const auto run = run_protocol(zeros, LearnExp(2, 0.3), make_experts(e), 1, FeedMode::ForecasterGated, opts);
   const auto c = external_regret_check(run, 0.3, 2, 500);
   EXPECT_EQ(c.external_regret, 0.0);
   EXPECT_TRUE(c.holds);

   const std::vector< ExpertSpec > one{{0, ExpertKind::Hedge, 2, 0}};
   const auto s = build_stochastic(one, 500, {{0.3, 0.6}, 0.0, 2});
   const auto r1 = run_protocol(s, LearnExp(1, 0.3), make_experts(one), 2, FeedMode::ForecasterGated, opts);
   const auto c1 = external_regret_check(r1, 0.3, 1, 500);
   EXPECT_EQ(c1.external_regret, 0.0);
   EXPECT_DOUBLE_EQ(c1.bound, (std::exp(1.0) - 1.0) * 0.3 * 500.0);
}
