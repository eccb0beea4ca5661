#pragma once

// Online convex learners whose gradient steps only fire on Bernoulli(alpha)
// feedback events: projected online gradient descent with a feed-count step
// size, online mirror descent with closed-form links, a random stopping-time
// runner and a doubling-trick composition. Brute-force hindsight comparators
// live here as well.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "learnexp/random.hpp"

namespace learnexp::convex {

using Vec = std::vector< double >;

inline double dot(std::span< const double > a, std::span< const double > b)
{
   double s = 0.0;
   for(std::size_t i = 0; i < a.size(); ++i) {
      s += a[i] * b[i];
   }
   return s;
}

inline double norm(std::span< const double > a) { return std::sqrt(dot(a, a)); }

inline double distance(std::span< const double > a, std::span< const double > b)
{
   double s = 0.0;
   for(std::size_t i = 0; i < a.size(); ++i) {
      s += (a[i] - b[i]) * (a[i] - b[i]);
   }
   return std::sqrt(s);
}

struct ConvexSet {
   enum class Shape { Ball, Simplex };

   Shape shape = Shape::Ball;
   std::size_t dim = 2;
   double radius = 1.0;  ///< Ball only; the ball is centred at the origin

   static ConvexSet ball(std::size_t dim, double radius) { return {Shape::Ball, dim, radius}; }
   static ConvexSet simplex(std::size_t dim) { return {Shape::Simplex, dim, 1.0}; }

   double diameter() const { return shape == Shape::Ball ? 2.0 * radius : std::sqrt(2.0); }

   bool contains(std::span< const double > w, double tol = 1e-12) const
   {
      if(w.size() != dim) {
         return false;
      }
      if(shape == Shape::Ball) {
         return norm(w) <= radius + tol;
      }
      double s = 0.0;
      for(double x : w) {
         if(x < -tol) {
            return false;
         }
         s += x;
      }
      return std::abs(s - 1.0) <= tol * static_cast< double >(dim) + tol;
   }

   /// Starting point used by the learners: the centre of the set.
   Vec center() const
   {
      return shape == Shape::Ball ? Vec(dim, 0.0) : Vec(dim, 1.0 / static_cast< double >(dim));
   }
};

/// Euclidean projection onto the probability simplex (sort and threshold).
inline Vec project_simplex(std::span< const double > v)
{
   Vec u(v.begin(), v.end());
   std::sort(u.begin(), u.end(), std::greater<>());
   double cumsum = 0.0;
   double theta = 0.0;
   for(std::size_t i = 0; i < u.size(); ++i) {
      cumsum += u[i];
      const double t = (cumsum - 1.0) / static_cast< double >(i + 1);
      if(u[i] - t > 0.0) {
         theta = t;
      }
   }
   Vec out(v.size());
   for(std::size_t i = 0; i < v.size(); ++i) {
      out[i] = std::max(v[i] - theta, 0.0);
   }
   return out;
}

inline Vec project(const ConvexSet& set, std::span< const double > point)
{
   if(point.size() != set.dim) {
      throw std::invalid_argument("project: dimension mismatch");
   }
   if(set.shape == ConvexSet::Shape::Simplex) {
      return project_simplex(point);
   }
   Vec out(point.begin(), point.end());
   const double n = norm(point);
   if(n > set.radius) {
      for(double& x : out) {
         x *= set.radius / n;
      }
   }
   return out;
}

/// f(w) = <z, w>
struct LinearLoss {
   Vec z;
};

/// f(w) = scale / 2 * ||w - center||^2
struct QuadraticLoss {
   Vec center;
   double scale = 1.0;
};

using LossFn = std::variant< LinearLoss, QuadraticLoss >;

inline double value(const LossFn& f, std::span< const double > w)
{
   return std::visit(
      [&](const auto& loss) -> double {
         using T = std::decay_t< decltype(loss) >;
         if constexpr(std::is_same_v< T, LinearLoss >) {
            return dot(loss.z, w);
         } else {
            const double d = distance(w, loss.center);
            return 0.5 * loss.scale * d * d;
         }
      },
      f);
}

inline Vec gradient(const LossFn& f, std::span< const double > w)
{
   return std::visit(
      [&](const auto& loss) -> Vec {
         using T = std::decay_t< decltype(loss) >;
         if constexpr(std::is_same_v< T, LinearLoss >) {
            return loss.z;
         } else {
            Vec g(w.size());
            for(std::size_t i = 0; i < w.size(); ++i) {
               g[i] = loss.scale * (w[i] - loss.center[i]);
            }
            return g;
         }
      },
      f);
}

/// Upper bound on ||gradient|| over the set.
inline double lipschitz(const LossFn& f, const ConvexSet& set)
{
   return std::visit(
      [&](const auto& loss) -> double {
         using T = std::decay_t< decltype(loss) >;
         if constexpr(std::is_same_v< T, LinearLoss >) {
            return norm(loss.z);
         } else {
            // farthest point of the set from the centre
            const Vec c = set.center();
            return loss.scale * (distance(loss.center, c) + set.diameter());
         }
      },
      f);
}

// ---------------------------------------------------------------------------
// alpha-OCP: projected gradient step on fed rounds only.

struct OcpState {
   Vec w;
   std::size_t feed_count = 0;
};

/// Step size after `feed_count` fed rounds (current round included).
inline double ocp_learning_rate(std::size_t feed_count) { return 1.0 / std::sqrt(1.0 + static_cast< double >(feed_count)); }

inline OcpState ocp_step(const ConvexSet& set, OcpState state, std::span< const double > z, bool fed)
{
   if(!fed) {
      return state;
   }
   state.feed_count += 1;
   const double eta = ocp_learning_rate(state.feed_count);
   Vec half(state.w.size());
   for(std::size_t i = 0; i < half.size(); ++i) {
      half[i] = state.w[i] - eta * z[i];
   }
   state.w = project(set, half);
   return state;
}

// ---------------------------------------------------------------------------
// alpha-OMD with closed-form links.

enum class Regularizer {
   Entropic,   ///< R(w) = (1/eta) sum w log w on the simplex
   Euclidean,  ///< R(w) = ||w||^2 / (2 eta) on a ball
};

struct OmdState {
   Vec theta;
   Regularizer regularizer = Regularizer::Euclidean;
   double eta = 1.0;  ///< R is (1/eta)-strongly convex
};

inline OmdState omd_init(const ConvexSet& set, Regularizer reg, double eta)
{
   if((reg == Regularizer::Entropic) != (set.shape == ConvexSet::Shape::Simplex)) {
      throw std::invalid_argument("entropic regularizer pairs with the simplex, euclidean with the ball");
   }
   if(!(eta > 0.0)) {
      throw std::invalid_argument("omd eta must be positive");
   }
   return {Vec(set.dim, 0.0), reg, eta};
}

/// Link g(theta) = argmax_w <w, theta> - R(w).
inline Vec omd_primal(const ConvexSet& set, const OmdState& state)
{
   if(state.regularizer == Regularizer::Entropic) {
      const double mx = *std::max_element(state.theta.begin(), state.theta.end());
      Vec w(state.theta.size());
      double s = 0.0;
      for(std::size_t i = 0; i < w.size(); ++i) {
         w[i] = std::exp(state.eta * (state.theta[i] - mx));
         s += w[i];
      }
      for(double& x : w) {
         x /= s;
      }
      return w;
   }
   Vec scaled(state.theta.size());
   for(std::size_t i = 0; i < scaled.size(); ++i) {
      scaled[i] = state.eta * state.theta[i];
   }
   return project(set, scaled);
}

inline OmdState omd_step(OmdState state, std::span< const double > z, bool fed)
{
   if(fed) {
      for(std::size_t i = 0; i < state.theta.size(); ++i) {
         state.theta[i] -= z[i];
      }
   }
   return state;
}

/// R(u) - min R, the quantity entering the OMD regret bounds.
inline double regularizer_value(Regularizer reg, double eta, std::span< const double > u)
{
   if(reg == Regularizer::Entropic) {
      double s = std::log(static_cast< double >(u.size()));
      for(double x : u) {
         if(x > 0.0) {
            s += x * std::log(x);
         }
      }
      return s / eta;
   }
   return dot(u, u) / (2.0 * eta);
}

/// Squared "radius" D^2 = eta * sup_u (R(u) - min R); independent of eta.
inline double regularizer_range(const ConvexSet& set, Regularizer reg)
{
   return reg == Regularizer::Entropic ? std::log(static_cast< double >(set.dim)) : 0.5 * set.radius * set.radius;
}

/// Lipschitz constant of a linear loss in the norm the regularizer is
/// strongly convex in (l-infinity dual for entropic, l2 for euclidean).
inline double dual_norm(Regularizer reg, std::span< const double > z)
{
   if(reg == Regularizer::Entropic) {
      double m = 0.0;
      for(double x : z) {
         m = std::max(m, std::abs(x));
      }
      return m;
   }
   return norm(z);
}

// ---------------------------------------------------------------------------
// Hindsight comparators.

struct Hindsight {
   Vec point;
   double total = 0.0;
};

/// Best fixed point of the set for the summed losses. Closed forms: linear
/// losses on a ball or a simplex, and quadratics (projected weighted mean).
inline Hindsight best_in_hindsight(const ConvexSet& set, std::span< const LossFn > losses)
{
   Vec zsum(set.dim, 0.0);
   Vec csum(set.dim, 0.0);
   double scale_sum = 0.0;
   bool any_quadratic = false;
   bool any_linear = false;
   for(const auto& f : losses) {
      if(const auto* lin = std::get_if< LinearLoss >(&f)) {
         any_linear = true;
         for(std::size_t i = 0; i < set.dim; ++i) {
            zsum[i] += lin->z[i];
         }
      } else {
         const auto& q = std::get< QuadraticLoss >(f);
         any_quadratic = true;
         scale_sum += q.scale;
         for(std::size_t i = 0; i < set.dim; ++i) {
            csum[i] += q.scale * q.center[i];
         }
      }
   }
   Hindsight out;
   if(any_quadratic && any_linear) {
      throw std::invalid_argument("best_in_hindsight: mixed linear and quadratic streams are not supported");
   }
   if(any_quadratic) {
      Vec mean(set.dim);
      for(std::size_t i = 0; i < set.dim; ++i) {
         mean[i] = scale_sum > 0.0 ? csum[i] / scale_sum : 0.0;
      }
      out.point = project(set, mean);
   } else if(set.shape == ConvexSet::Shape::Ball) {
      const double n = norm(zsum);
      out.point = Vec(set.dim, 0.0);
      if(n > 0.0) {
         for(std::size_t i = 0; i < set.dim; ++i) {
            out.point[i] = -set.radius * zsum[i] / n;
         }
      }
   } else {
      const auto best = static_cast< std::size_t >(std::min_element(zsum.begin(), zsum.end()) - zsum.begin());
      out.point = Vec(set.dim, 0.0);
      out.point[best] = 1.0;
   }
   for(const auto& f : losses) {
      out.total += value(f, out.point);
   }
   return out;
}

// ---------------------------------------------------------------------------
// Loss streams. A stream hands out the loss for round t and may look at the
// learner's current point (the "chase" stream does; the drift stream does
// not).

class LossStream {
  public:
   using Generator = std::function< LossFn(std::size_t t, std::span< const double > w) >;

   explicit LossStream(Generator gen) : gen_(std::move(gen)) {}

   LossFn operator()(std::size_t t, std::span< const double > w) const { return gen_(t, w); }

  private:
   Generator gen_;
};

/// Oblivious linear losses: a base direction whose sign is redrawn (+1 with
/// probability `bias`) at the end of geometrically distributed epochs of mean
/// length `epoch`, plus gaussian jitter. Norm capped at `lipschitz`. With
/// epoch = 1 the signs are i.i.d. and the hindsight point sits on the
/// boundary opposite the mean direction.
inline LossStream drift_stream(const ConvexSet& set, std::uint64_t seed, double lipschitz = 1.0,
                               double epoch = 1.0, double bias = 0.6, double jitter = 0.3)
{
   // Generated lazily but always in round order, so any access pattern sees
   // the same sequence. Not safe to share between threads.
   auto rng = std::make_shared< Rng >(seed_stream(seed, "drift-stream"));
   Vec direction(set.dim);
   for(double& x : direction) {
      x = rng->normal();
   }
   const double dn = norm(direction);
   for(double& x : direction) {
      x /= dn;
   }
   auto cache = std::make_shared< std::vector< Vec > >();
   auto sign = std::make_shared< double >(rng->bernoulli(bias) ? 1.0 : -1.0);
   return LossStream([=, dim = set.dim](std::size_t t, std::span< const double >) -> LossFn {
      while(cache->size() <= t) {
         if(rng->bernoulli(1.0 / epoch)) {
            *sign = rng->bernoulli(bias) ? 1.0 : -1.0;
         }
         Vec z(dim);
         for(std::size_t i = 0; i < dim; ++i) {
            z[i] = *sign * direction[i] + jitter * rng->normal();
         }
         const double n = norm(z);
         if(n > 0.0) {
            const double scale = std::min(1.0, 1.0 / n) * lipschitz;
            for(double& x : z) {
               x *= scale;
            }
         }
         cache->push_back(std::move(z));
      }
      return LinearLoss{(*cache)[t]};
   });
}

/// Learner-adapted linear losses that always point where the learner stands:
/// on a ball z = L w / ||w|| (a fixed axis at the origin), on a simplex the
/// heaviest vertex gets loss L. Every step the learner takes is punished, so
/// the realized regret tracks the learning-rate schedule.
inline LossStream chase_stream(const ConvexSet& set, double lipschitz = 1.0)
{
   return LossStream([set, lipschitz](std::size_t, std::span< const double > w) -> LossFn {
      Vec z(set.dim, 0.0);
      if(set.shape == ConvexSet::Shape::Ball) {
         const double n = norm(w);
         if(n > 1e-300) {
            for(std::size_t i = 0; i < set.dim; ++i) {
               z[i] = lipschitz * w[i] / n;
            }
         } else {
            z[0] = lipschitz;
         }
      } else {
         const auto k = static_cast< std::size_t >(std::max_element(w.begin(), w.end()) - w.begin());
         z[k] = lipschitz;
      }
      return LinearLoss{std::move(z)};
   });
}

// ---------------------------------------------------------------------------
// Runners.

struct RunResult {
   std::size_t steps = 0;
   std::size_t fed = 0;
   double learner_loss = 0.0;
   double comparator_loss = 0.0;
   double regret = 0.0;
};

/// alpha-OCP over T rounds; regret against the best fixed point of the
/// realized loss sequence.
inline RunResult run_alpha_ocp(const ConvexSet& set, const LossStream& stream, double alpha, std::size_t horizon,
                               std::uint64_t seed)
{
   Rng feed_rng(seed_stream(seed, "feed"));
   OcpState state{set.center(), 0};
   std::vector< LossFn > seen;
   seen.reserve(horizon);
   RunResult out;
   for(std::size_t t = 0; t < horizon; ++t) {
      LossFn f = stream(t, state.w);
      out.learner_loss += value(f, state.w);
      const bool fed = feed_rng.bernoulli(alpha);
      out.fed += fed ? 1 : 0;
      const Vec z = gradient(f, state.w);
      state = ocp_step(set, std::move(state), z, fed);
      seen.push_back(std::move(f));
   }
   out.steps = horizon;
   out.comparator_loss = best_in_hindsight(set, seen).total;
   out.regret = out.learner_loss - out.comparator_loss;
   return out;
}

struct OmdConfig {
   ConvexSet set;
   Regularizer regularizer = Regularizer::Euclidean;
   double eta = 1.0;
};

/// alpha-OMD for a fixed number of rounds.
inline RunResult run_alpha_omd(const OmdConfig& cfg, const LossStream& stream, double alpha, std::size_t horizon,
                               std::uint64_t seed)
{
   Rng feed_rng(seed_stream(seed, "feed"));
   OmdState state = omd_init(cfg.set, cfg.regularizer, cfg.eta);
   std::vector< LossFn > seen;
   seen.reserve(horizon);
   RunResult out;
   for(std::size_t t = 0; t < horizon; ++t) {
      const Vec w = omd_primal(cfg.set, state);
      LossFn f = stream(t, w);
      out.learner_loss += value(f, w);
      const bool fed = feed_rng.bernoulli(alpha);
      out.fed += fed ? 1 : 0;
      state = omd_step(std::move(state), gradient(f, w), fed);
      seen.push_back(std::move(f));
   }
   out.steps = horizon;
   out.comparator_loss = best_in_hindsight(cfg.set, seen).total;
   out.regret = out.learner_loss - out.comparator_loss;
   return out;
}

class NonTerminationError : public std::runtime_error {
  public:
   using std::runtime_error::runtime_error;
};

/// alpha-OMD run until exactly `fed_target` fed rounds have occurred. Rounds
/// are numbered from `start` in the stream. Aborts after 100 * M / alpha
/// rounds.
inline RunResult run_random_horizon(const OmdConfig& cfg, const LossStream& stream, double alpha,
                                    std::size_t fed_target, Rng& feed_rng, std::size_t start = 0,
                                    std::vector< LossFn >* realized = nullptr)
{
   if(fed_target < 1) {
      throw std::invalid_argument("run_random_horizon: M must be >= 1");
   }
   if(!(alpha > 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("run_random_horizon: alpha must lie in (0, 1]");
   }
   const auto guard = static_cast< std::size_t >(std::ceil(100.0 * static_cast< double >(fed_target) / alpha));
   OmdState state = omd_init(cfg.set, cfg.regularizer, cfg.eta);
   std::vector< LossFn > seen;
   RunResult out;
   while(out.fed < fed_target) {
      if(out.steps >= guard) {
         throw NonTerminationError("random-horizon run exceeded 100*M/alpha rounds");
      }
      const Vec w = omd_primal(cfg.set, state);
      LossFn f = stream(start + out.steps, w);
      out.learner_loss += value(f, w);
      const bool fed = feed_rng.bernoulli(alpha);
      out.fed += fed ? 1 : 0;
      state = omd_step(std::move(state), gradient(f, w), fed);
      if(realized) {
         realized->push_back(f);
      }
      seen.push_back(std::move(f));
      ++out.steps;
   }
   out.comparator_loss = best_in_hindsight(cfg.set, seen).total;
   out.regret = out.learner_loss - out.comparator_loss;
   return out;
}

inline RunResult run_random_horizon(const OmdConfig& cfg, const LossStream& stream, double alpha,
                                    std::size_t fed_target, std::uint64_t seed)
{
   Rng feed_rng(seed_stream(seed, "feed"));
   return run_random_horizon(cfg, stream, alpha, fed_target, feed_rng);
}

struct DoublingResult {
   std::vector< std::size_t > block_fed;     ///< fed rounds per block (1, 2, 4, ...)
   std::vector< std::size_t > block_steps;   ///< wall rounds per block
   std::vector< double > block_regret;       ///< regret of each block vs its own best point
   std::size_t total_fed = 0;
   double learner_loss = 0.0;
   double comparator_loss = 0.0;
   double regret = 0.0;                      ///< whole horizon vs one fixed point
};

/// Block learning rate for a block that ends after M fed rounds:
/// eta = D / (L sqrt(M)).
inline double doubling_block_eta(const ConvexSet& set, Regularizer reg, double lipschitz, std::size_t fed_target)
{
   return std::sqrt(regularizer_range(set, reg)) / (lipschitz * std::sqrt(static_cast< double >(fed_target)));
}

/// Doubling trick: consecutive blocks of M = 1, 2, 4, ... fed rounds, each a
/// fresh alpha-OMD run with its own learning rate, until T wall rounds have
/// elapsed. The last block is cut at the horizon.
inline DoublingResult doubling_omd_run(const ConvexSet& set, Regularizer reg, double lipschitz,
                                       const LossStream& stream, double alpha, std::size_t horizon,
                                       std::uint64_t seed)
{
   if(horizon < 1) {
      throw std::invalid_argument("doubling_omd_run: T must be >= 1");
   }
   Rng feed_rng(seed_stream(seed, "feed"));
   DoublingResult out;
   std::vector< LossFn > all;
   all.reserve(horizon);
   std::size_t t = 0;
   for(std::size_t m = 1; t < horizon; m *= 2) {
      OmdConfig cfg{set, reg, doubling_block_eta(set, reg, lipschitz, m)};
      OmdState state = omd_init(set, reg, cfg.eta);
      std::vector< LossFn > block;
      std::size_t fed = 0;
      std::size_t steps = 0;
      double loss = 0.0;
      while(fed < m && t < horizon) {
         const Vec w = omd_primal(set, state);
         LossFn f = stream(t, w);
         loss += value(f, w);
         const bool b = feed_rng.bernoulli(alpha);
         fed += b ? 1 : 0;
         state = omd_step(std::move(state), gradient(f, w), b);
         block.push_back(f);
         all.push_back(std::move(f));
         ++steps;
         ++t;
      }
      out.block_fed.push_back(fed);
      out.block_steps.push_back(steps);
      out.block_regret.push_back(loss - best_in_hindsight(set, block).total);
      out.total_fed += fed;
      out.learner_loss += loss;
   }
   out.comparator_loss = best_in_hindsight(set, all).total;
   out.regret = out.learner_loss - out.comparator_loss;
   return out;
}

}  // namespace learnexp::convex
