#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include "learnexp/experiments.hpp"
#include "learnexp/io.hpp"

using namespace learnexp;

namespace {

ScenarioSpec piecewise_spec()
{
   ScenarioSpec s;
   s.horizon = 120;
   s.experts = {{0, ExpertKind::Hedge, 2, 0}, {1, ExpertKind::Constant, 3, 2}};
   s.source = PiecewiseTable{{0.5, 1.0}, {{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}, {0.7, 0.8}, {0.9, 1.0}}};
   return s;
}

}  // namespace

TEST(ScenarioFile, RoundTripPiecewise)
{
   const auto spec = piecewise_spec();
   const auto back = load_scenario(save_scenario(spec));
   EXPECT_EQ(back, spec);
   const auto a = build_scenario(spec);
   const auto b = build_scenario(back);
   for(std::size_t t = 0; t < a.horizon(); ++t) {
      for(std::size_t j = 0; j < 2; ++j) {
         const auto x = a.local_losses(t, j), y = b.local_losses(t, j);
         ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
      }
   }
}

TEST(ScenarioFile, RoundTripStochasticAndHardness)
{
   ScenarioSpec st;
   st.horizon = 64;
   st.experts = {{0, ExpertKind::Exp3, 2, 0}, {1, ExpertKind::Ogd, 3, 0}};
   st.source = StochasticSpec{{0.1, 0.2, 0.3, 0.4, 0.123456789012345}, -0.05, 1234567890123ULL};
   EXPECT_EQ(load_scenario(save_scenario(st)), st);

   ScenarioSpec h;
   h.horizon = 2400;
   h.experts = HardnessTrio::experts();
   h.source = HardnessRef{0.02, hardness::Variant::Reference, 3};
   const auto back = load_scenario(save_scenario(h));
   EXPECT_EQ(back, h);
   EXPECT_EQ(build_scenario(back).loss(700, {0, 0}), 0.0);
}

TEST(ScenarioFile, Errors)
{
   EXPECT_THROW(load_scenario(R"({"version": 2, "T": 10, "experts": []})"), ConfigError);
   EXPECT_THROW(load_scenario(R"({"T": 10, "experts": [{"index": 0, "kind": "constant"}]})"), ConfigError);
   EXPECT_THROW(load_scenario(R"({"T": 10, "experts": [{"index": 0, "kind": "wizard"}], "slots": [1], "losses": [[0]]})"),
                ConfigError);
   auto bad = piecewise_spec();
   std::get< PiecewiseTable >(bad.source).values.pop_back();
   EXPECT_THROW(build_scenario(bad), ConfigError);
   ScenarioSpec h;
   h.horizon = 2400;
   h.experts = {{0, ExpertKind::Constant, 1, 0}};
   h.source = HardnessRef{};
   EXPECT_THROW(build_scenario(h), ConfigError);
   EXPECT_THROW(read_json_file("/nonexistent/path.json"), ConfigError);
}

TEST(Csv, FullPrecision)
{
   EXPECT_EQ(std::stod(fmt_double(0.1 + 0.2)), 0.1 + 0.2);
   EXPECT_EQ(fmt_double(0.5), "0.5");
}

TEST(Csv, StepsRoundTripMatchesSummary)
{
   ExperimentConfig cfg;
   cfg.name = "csv";
   cfg.scenario = piecewise_spec();
   cfg.scenario.source = StochasticSpec{{0.3, 0.6, 0.5, 0.5, 0.5}, 0.0, 2};
   cfg.forecaster.kind = ForecasterKind::LearnExp;
   cfg.horizons = {300};
   cfg.seeds = 6;
   const auto h = evaluate_horizon(cfg, 300, cfg.seeds);
   ASSERT_EQ(h.recorded.size(), 6u);
   std::stringstream ss;
   ss << kStepsHeader;
   for(std::size_t i = 0; i < h.recorded.size(); ++i) {
      append_steps_csv(ss, "r" + std::to_string(i), h.recorded[i]);
   }
   const auto totals = cumulative_losses_from_steps_csv(ss);
   ASSERT_EQ(totals.size(), 6u);
   double mean = 0.0;
   for(const auto& [id, v] : totals) {
      mean += v;
   }
   mean /= 6.0;
   const auto row = summary_row("csv", "stochastic", "learnexp", h);
   EXPECT_NEAR(mean - row.best_comparator, row.mean_regret, 1e-9);
}

TEST(Csv, StepsColumns)
{
   RunRecord r;
   r.seed = 5;
   r.records.push_back({1, 1, 0.25, {1, 0}, 0.75, false});
   r.records.push_back({2, 0, 0.5, {0, 1}, 0.125, true});
   std::stringstream ss;
   append_steps_csv(ss, "x", r);
   EXPECT_EQ(ss.str(), "x,5,1,1,1,0,0.25,0.75,0,0.75\nx,5,2,0,0,1,0.5,0.125,1,0.875\n");
}

TEST(ExperimentConfig, ParsingAndValidation)
{
   json j = json::parse(R"({
      "name": "t",
      "scenario": {"T": 64, "experts": [{"index": 0, "kind": "hedge", "K": 2}],
                   "stochastic": {"means": [0.3, 0.5], "seed": 1}},
      "forecaster": {"kind": "exp3", "mode": "gated"},
      "horizons": [64, 128, 256],
      "seeds": 3,
      "eta_mult": 2.0,
      "checks": {"exponent": [0.5, 0.7], "r2_min": 0.9, "regret_cap_coef": 5}
   })");
   const auto c = experiment_from_json(j);
   EXPECT_EQ(c.forecaster.kind, ForecasterKind::Exp3Ungated);
   EXPECT_EQ(c.effective_mode(), FeedMode::ForecasterGated);
   EXPECT_DOUBLE_EQ(c.effective_beta(), 0.5);
   EXPECT_NEAR(c.eta_for(1000), std::min(1.0, 2.0 * std::pow(1.0 / 1000.0, 1.0 / 3.0)), 1e-15);
   ASSERT_TRUE(c.exponent_range.has_value());
   EXPECT_EQ(c.exponent_range->second, 0.7);

   json empty = j;
   empty["horizons"] = json::array();
   EXPECT_THROW(experiment_from_json(empty), ConfigError);
   json zero = j;
   zero["seeds"] = 0;
   EXPECT_THROW(experiment_from_json(zero), ConfigError);
   json mode = j;
   mode["forecaster"]["mode"] = "sometimes";
   EXPECT_THROW(experiment_from_json(mode), ConfigError);
   json none = j;
   none.erase("scenario");
   EXPECT_THROW(experiment_from_json(none), ConfigError);
}

TEST(FitsJson, Fields)
{
   const std::vector< FitPoint > pts{{1, 1}, {4, 2}, {16, 4}};
   const auto j = fits_to_json({loglog_fit(pts, "demo")});
   ASSERT_EQ(j.size(), 1u);
   for(const char* key : {"name", "exponent", "stderr", "r2", "points"}) {
      EXPECT_TRUE(j[0].contains(key)) << key;
   }
   EXPECT_NEAR(j[0]["exponent"].get< double >(), 0.5, 1e-12);
}
