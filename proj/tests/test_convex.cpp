#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "learnexp/convex.hpp"

using namespace learnexp;
using namespace learnexp::convex;

namespace {

// Grid minimizer of the distance to `p` over the simplex in 2 or 3 dims.
Vec brute_simplex_projection(const Vec& p)
{
   const int n = 400;
   Vec best;
   double bd = std::numeric_limits< double >::infinity();
   for(int i = 0; i <= n; ++i) {
      for(int j = 0; j <= (p.size() == 3 ? n - i : 0); ++j) {
         Vec w = p.size() == 2 ? Vec{i / double(n), 1.0 - i / double(n)}
                               : Vec{i / double(n), j / double(n), 1.0 - (i + j) / double(n)};
         const double d = distance(w, p);
         if(d < bd) {
            bd = d;
            best = w;
         }
      }
   }
   return best;
}

}  // namespace

TEST(Projection, Examples)
{
   const auto ball = ConvexSet::ball(2, 1.0);
   const Vec inside{0.3, -0.4};
   EXPECT_EQ(project(ball, inside), inside);
   const auto p = project(ball, Vec{3.0, 4.0});
   EXPECT_NEAR(p[0], 0.6, 1e-15);
   EXPECT_NEAR(p[1], 0.8, 1e-15);
   const auto s = project(ConvexSet::simplex(2), Vec{2.0, 0.0});
   EXPECT_NEAR(s[0], 1.0, 1e-15);
   EXPECT_NEAR(s[1], 0.0, 1e-15);
   const Vec on{0.2, 0.3, 0.5};
   const auto same = project(ConvexSet::simplex(3), on);
   for(std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(same[i], on[i], 1e-15);
   }
}

TEST(Projection, SimplexMatchesGridSearch)
{
   Rng rng(12);
   for(int trial = 0; trial < 40; ++trial) {
      const std::size_t d = trial % 2 == 0 ? 2 : 3;
      Vec p(d);
      for(double& x : p) {
         x = 3.0 * (rng.uniform() - 0.5);
      }
      const auto fast = project_simplex(p);
      const auto slow = brute_simplex_projection(p);
      EXPECT_TRUE(ConvexSet::simplex(d).contains(fast));
      EXPECT_LE(distance(fast, p), distance(slow, p) + 1e-12);
      for(std::size_t i = 0; i < d; ++i) {
         EXPECT_NEAR(fast[i], slow[i], 5e-3);
      }
   }
}

TEST(Ocp, UnfedStepIsIdentity)
{
   const auto set = ConvexSet::ball(2, 1.0);
   const OcpState s{{0.1, 0.2}, 3};
   const auto t = ocp_step(set, s, Vec{1.0, 1.0}, false);
   EXPECT_EQ(t.w, s.w);
   EXPECT_EQ(t.feed_count, 3u);
}

TEST(Ocp, FirstFedStep)
{
   const auto set = ConvexSet::ball(2, 1.0);
   const auto t = ocp_step(set, {{0.5, 0.0}, 0}, Vec{1.0, 0.0}, true);
   EXPECT_NEAR(t.w[0], -0.20710678118654746, 1e-12);
   EXPECT_EQ(t.w[1], 0.0);
   EXPECT_EQ(t.feed_count, 1u);
}

TEST(Ocp, AlwaysFedMatchesPlainOgd)
{
   const auto set = ConvexSet::ball(2, 1.0);
   const auto stream = drift_stream(set, 5);
   OcpState s{set.center(), 0};
   Vec w = set.center();
   for(std::size_t t = 0; t < 500; ++t) {
      const auto z = gradient(stream(t, w), w);
      s = ocp_step(set, s, z, true);
      Vec half(2);
      for(std::size_t i = 0; i < 2; ++i) {
         half[i] = w[i] - z[i] / std::sqrt(2.0 + static_cast< double >(t));
      }
      w = project(set, half);
      ASSERT_NEAR(s.w[0], w[0], 1e-12);
      ASSERT_NEAR(s.w[1], w[1], 1e-12);
   }
}

TEST(Omd, LinkExamples)
{
   const auto simplex = ConvexSet::simplex(3);
   const auto st = omd_init(simplex, Regularizer::Entropic, 0.7);
   for(double x : omd_primal(simplex, st)) {
      EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
   }
   const auto unfed = omd_step(st, Vec{1.0, 2.0, 3.0}, false);
   EXPECT_EQ(unfed.theta, st.theta);

   const auto two = ConvexSet::simplex(2);
   OmdState s{{1.0, 0.0}, Regularizer::Entropic, 1.0};
   const auto g = omd_primal(two, s);
   EXPECT_NEAR(g[0], 0.7310585786300049, 1e-12);
   EXPECT_NEAR(g[1], 0.2689414213699951, 1e-12);

   // argmax of <w, theta> - R(w) over a grid
   double best = -1e300, arg = 0.0;
   for(int i = 1; i < 100000; ++i) {
      const double a = i / 100000.0;
      const double v = a * 1.0 - (a * std::log(a) + (1 - a) * std::log(1 - a));
      if(v > best) {
         best = v;
         arg = a;
      }
   }
   EXPECT_NEAR(g[0], arg, 1e-4);
}

TEST(Omd, EuclideanLinkProjects)
{
   const auto ball = ConvexSet::ball(2, 1.0);
   OmdState s{{3.0, 4.0}, Regularizer::Euclidean, 1.0};
   const auto w = omd_primal(ball, s);
   EXPECT_NEAR(w[0], 0.6, 1e-15);
   EXPECT_NEAR(w[1], 0.8, 1e-15);
   EXPECT_THROW(omd_init(ball, Regularizer::Entropic, 1.0), std::invalid_argument);
   EXPECT_THROW(omd_init(ball, Regularizer::Euclidean, 0.0), std::invalid_argument);
}

TEST(Omd, RegularizerValues)
{
   const Vec uniform{0.25, 0.25, 0.25, 0.25};
   EXPECT_NEAR(regularizer_value(Regularizer::Entropic, 2.0, uniform), 0.0, 1e-15);
   const Vec vertex{1.0, 0.0, 0.0, 0.0};
   EXPECT_NEAR(regularizer_value(Regularizer::Entropic, 2.0, vertex), std::log(4.0) / 2.0, 1e-15);
   EXPECT_NEAR(regularizer_range(ConvexSet::simplex(4), Regularizer::Entropic), std::log(4.0), 1e-15);
   EXPECT_NEAR(regularizer_value(Regularizer::Euclidean, 0.5, Vec{0.6, 0.8}), 1.0, 1e-15);
   EXPECT_DOUBLE_EQ(dual_norm(Regularizer::Entropic, Vec{0.2, -0.7}), 0.7);
}

TEST(RandomHorizon, AlwaysFedStopsAtTarget)
{
   const auto set = ConvexSet::simplex(3);
   const OmdConfig cfg{set, Regularizer::Entropic, 0.1};
   const auto r = run_random_horizon(cfg, drift_stream(set, 1), 1.0, 37, 1);
   EXPECT_EQ(r.steps, 37u);
   EXPECT_EQ(r.fed, 37u);
   EXPECT_THROW(run_random_horizon(cfg, drift_stream(set, 1), 0.0, 5, 1), std::invalid_argument);
   EXPECT_THROW(run_random_horizon(cfg, drift_stream(set, 1), 0.5, 0, 1), std::invalid_argument);
}

TEST(RandomHorizon, StoppingTimeMoments)
{
   const auto set = ConvexSet::simplex(3);
   const OmdConfig cfg{set, Regularizer::Entropic, 0.1};
   const std::size_t M = 100;
   const double alpha = 0.5;
   const std::size_t trials = 10000;
   const auto stream = drift_stream(set, 2);
   double sum = 0.0, abs_dev = 0.0;
   for(std::size_t i = 0; i < trials; ++i) {
      Rng rng(seed_stream(3, "stop", i));
      const auto r = run_random_horizon(cfg, stream, alpha, M, rng);
      sum += static_cast< double >(r.steps);
      abs_dev += std::abs(static_cast< double >(r.steps) - M / alpha);
   }
   // negative binomial: mean M / alpha, variance M (1 - alpha) / alpha^2
   const double sigma = std::sqrt(M * (1.0 - alpha) / (alpha * alpha) / trials);
   EXPECT_NEAR(sum / trials, M / alpha, 3.0 * sigma);
   EXPECT_LE(abs_dev / trials, 14.0 * std::sqrt(double(M)) / alpha);
}

TEST(Doubling, BlockSizesWhenAlwaysFed)
{
   const auto set = ConvexSet::simplex(3);
   const auto r = doubling_omd_run(set, Regularizer::Entropic, 1.0, drift_stream(set, 4), 1.0, 7, 4);
   EXPECT_EQ(r.block_fed, (std::vector< std::size_t >{1, 2, 4}));
   EXPECT_EQ(r.block_steps, (std::vector< std::size_t >{1, 2, 4}));
   EXPECT_EQ(r.total_fed, 7u);
}

TEST(Doubling, TotalFedIsBinomial)
{
   const auto set = ConvexSet::simplex(3);
   const std::size_t T = 20000;
   const double alpha = 0.3;
   const auto r = doubling_omd_run(set, Regularizer::Entropic, 1.0, drift_stream(set, 6), alpha, T, 6);
   std::size_t steps = 0;
   for(auto s : r.block_steps) {
      steps += s;
   }
   EXPECT_EQ(steps, T);
   EXPECT_NEAR(static_cast< double >(r.total_fed), alpha * T, 3.0 * std::sqrt(T * alpha * (1 - alpha)));
}

TEST(Hindsight, ClosedForms)
{
   const auto ball = ConvexSet::ball(2, 1.0);
   const std::vector< LossFn > zeros(5, LinearLoss{{0.0, 0.0}});
   EXPECT_EQ(best_in_hindsight(ball, zeros).total, 0.0);

   const std::vector< LossFn > east(40, LinearLoss{{1.0, 0.0}});
   const auto h = best_in_hindsight(ball, east);
   EXPECT_NEAR(h.point[0], -1.0, 1e-15);
   EXPECT_NEAR(h.total, -40.0, 1e-12);

   const auto simplex = ConvexSet::simplex(3);
   Rng rng(7);
   std::vector< LossFn > fs;
   Vec col(3, 0.0);
   for(int t = 0; t < 30; ++t) {
      Vec z{rng.uniform(), rng.uniform(), rng.uniform()};
      for(int i = 0; i < 3; ++i) {
         col[i] += z[i];
      }
      fs.push_back(LinearLoss{z});
   }
   const auto best = best_in_hindsight(simplex, fs);
   EXPECT_NEAR(best.total, *std::min_element(col.begin(), col.end()), 1e-12);
}

TEST(Losses, QuadraticGradientMatchesFiniteDifferences)
{
   Rng rng(9);
   for(int trial = 0; trial < 50; ++trial) {
      QuadraticLoss q{{rng.normal(), rng.normal(), rng.normal()}, 0.5 + rng.uniform()};
      const LossFn f = q;
      Vec w{rng.normal(), rng.normal(), rng.normal()};
      const auto g = gradient(f, w);
      for(std::size_t i = 0; i < 3; ++i) {
         const double h = 1e-5;
         Vec a = w, b = w;
         a[i] += h;
         b[i] -= h;
         const double fd = (value(f, a) - value(f, b)) / (2 * h);
         EXPECT_NEAR(fd, g[i], 1e-6 * std::max(1.0, std::abs(g[i])));
      }
   }
}

TEST(Losses, ChaseStreamPunishesCurrentPoint)
{
   const auto ball = ConvexSet::ball(2, 1.0);
   const auto s = chase_stream(ball);
   const Vec w{0.3, 0.4};
   const auto f = s(0, w);
   EXPECT_NEAR(value(f, w), 0.5, 1e-15);
}

TEST(AlphaOcp, RegretIsFiniteAndFeedCountsBinomial)
{
   const auto set = ConvexSet::ball(2, 1.0);
   const auto r = run_alpha_ocp(set, drift_stream(set, 3), 0.25, 4000, 3);
   EXPECT_EQ(r.steps, 4000u);
   EXPECT_NEAR(static_cast< double >(r.fed), 1000.0, 3.0 * std::sqrt(4000 * 0.25 * 0.75));
   EXPECT_TRUE(std::isfinite(r.regret));
}
