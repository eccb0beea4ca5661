#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "learnexp/convex.hpp"
#include "learnexp/core.hpp"
#include "learnexp/random.hpp"

namespace learnexp {

/// Softmax of `scores` with max-shift; used by every exponential-weights
/// learner in the project.
inline std::vector< double > softmax(std::span< const double > scores)
{
   std::vector< double > p(scores.size());
   const double mx = *std::max_element(scores.begin(), scores.end());
   double s = 0.0;
   for(std::size_t i = 0; i < p.size(); ++i) {
      p[i] = std::exp(scores[i] - mx);
      s += p[i];
   }
   for(double& x : p) {
      x /= s;
   }
   return p;
}

/// A recommendation distribution captured from an expert at some point. Later
/// observations of the expert do not affect it.
class FrozenPolicy {
  public:
   explicit FrozenPolicy(std::vector< double > probs) : probs_(std::move(probs)) {}

   static FrozenPolicy deterministic(std::size_t num_actions, std::size_t action)
   {
      std::vector< double > p(num_actions, 0.0);
      p.at(action) = 1.0;
      return FrozenPolicy(std::move(p));
   }

   std::span< const double > probs() const { return probs_; }

   std::optional< std::size_t > deterministic_action() const
   {
      for(std::size_t i = 0; i < probs_.size(); ++i) {
         if(probs_[i] == 1.0) {
            return i;
         }
      }
      return std::nullopt;
   }

   std::size_t sample(Rng& rng) const
   {
      if(auto a = deterministic_action()) {
         return *a;
      }
      return rng.categorical(probs_);
   }

  private:
   std::vector< double > probs_;
};

enum class ExpertKind { Constant, Hedge, Exp3, Ogd };

inline std::string to_string(ExpertKind kind)
{
   switch(kind) {
      case ExpertKind::Constant: return "constant";
      case ExpertKind::Hedge: return "hedge";
      case ExpertKind::Exp3: return "exp3";
      case ExpertKind::Ogd: return "ogd";
   }
   return "?";
}

inline ExpertKind expert_kind_from_string(const std::string& name)
{
   if(name == "constant") return ExpertKind::Constant;
   if(name == "hedge") return ExpertKind::Hedge;
   if(name == "exp3") return ExpertKind::Exp3;
   if(name == "ogd") return ExpertKind::Ogd;
   throw ConfigError("unknown expert kind '" + name + "'");
}

/// Feedback variant each learner kind consumes.
inline FeedbackKind required_feedback(ExpertKind kind)
{
   switch(kind) {
      case ExpertKind::Hedge: return FeedbackKind::FullLocalLosses;
      case ExpertKind::Ogd: return FeedbackKind::Gradient;
      case ExpertKind::Constant:
      case ExpertKind::Exp3: return FeedbackKind::BanditLoss;
   }
   return FeedbackKind::BanditLoss;
}

/// Regret-rate exponent of each learner kind under full feedback.
inline double beta_of(ExpertKind kind) { return kind == ExpertKind::Constant ? 0.0 : 0.5; }

struct ExpertSpec {
   std::size_t index = 0;
   ExpertKind kind = ExpertKind::Constant;
   std::size_t num_actions = 1;
   std::size_t constant_action = 0;  ///< Constant only

   double beta() const { return beta_of(kind); }
   FeedbackKind feedback() const { return required_feedback(kind); }
   ExpertLayout layout() const { return {index, num_actions, feedback()}; }

   bool operator==(const ExpertSpec&) const = default;
};

// ---------------------------------------------------------------------------

/// Always recommends the same local action.
class ConstantExpert {
  public:
   ConstantExpert(std::size_t num_actions, std::size_t action) : num_actions_(num_actions), action_(action)
   {
      if(action_ >= num_actions_) {
         throw ConfigError("constant expert action out of range");
      }
   }

   std::size_t recommend(Context, Rng&) const { return action_; }
   void observe(const FeedbackInstance&) { ++observations_; }
   std::vector< double > distribution() const
   {
      std::vector< double > p(num_actions_, 0.0);
      p[action_] = 1.0;
      return p;
   }
   FrozenPolicy freeze() const { return FrozenPolicy::deterministic(num_actions_, action_); }
   std::size_t observations() const { return observations_; }
   std::size_t num_actions() const { return num_actions_; }
   ExpertKind kind() const { return ExpertKind::Constant; }

  private:
   std::size_t num_actions_;
   std::size_t action_;
   std::size_t observations_ = 0;
};

/// Hedge over the expert's local actions, learning from the full local loss
/// vector. Anytime rate eta(tau) = sqrt(8 ln K / max(tau, 1)).
class HedgeExpert {
  public:
   explicit HedgeExpert(std::size_t num_actions) : cum_losses_(num_actions, 0.0)
   {
      if(num_actions < 1) {
         throw ConfigError("hedge expert needs at least one action");
      }
   }

   static double learning_rate(std::size_t num_actions, std::size_t tau)
   {
      return std::sqrt(8.0 * std::log(static_cast< double >(num_actions))
                       / static_cast< double >(std::max< std::size_t >(tau, 1)));
   }

   /// Recommendation distribution for given perceived cumulative losses.
   static std::vector< double > distribution(std::span< const double > cum_losses, std::size_t tau)
   {
      const double eta = learning_rate(cum_losses.size(), tau);
      std::vector< double > scores(cum_losses.size());
      for(std::size_t i = 0; i < scores.size(); ++i) {
         scores[i] = -eta * cum_losses[i];
      }
      return softmax(scores);
   }

   std::vector< double > distribution() const { return distribution(cum_losses_, tau_); }

   std::size_t recommend(Context, Rng& rng) const
   {
      const auto p = distribution();
      return rng.categorical(p);
   }

   void observe(const FeedbackInstance& h)
   {
      const auto* full = std::get_if< FullLocalLosses >(&h.payload);
      if(full == nullptr) {
         throw FeedbackTypeError("hedge expert needs full local losses, got " + to_string(kind_of(h.payload)));
      }
      if(full->values.size() != cum_losses_.size()) {
         throw FeedbackTypeError("hedge expert got a loss vector of the wrong length");
      }
      for(std::size_t i = 0; i < cum_losses_.size(); ++i) {
         cum_losses_[i] += full->values[i];
      }
      ++tau_;
   }

   FrozenPolicy freeze() const { return FrozenPolicy(distribution()); }
   std::size_t observations() const { return tau_; }
   std::size_t num_actions() const { return cum_losses_.size(); }
   std::span< const double > cumulative_losses() const { return cum_losses_; }
   ExpertKind kind() const { return ExpertKind::Hedge; }

  private:
   std::vector< double > cum_losses_;
   std::size_t tau_ = 0;
};

/// EXP3 over local actions from bandit feedback: importance-weighted estimate
/// loss / p for the played action, weights multiplied by exp(-gamma * est / K),
/// exploration mixing gamma(tau) = min(1, sqrt(K ln K / max(tau, 1))) unless a
/// fixed gamma is given.
class Exp3Expert {
  public:
   explicit Exp3Expert(std::size_t num_actions, std::optional< double > fixed_gamma = std::nullopt)
       : log_weights_(num_actions, 0.0), fixed_gamma_(fixed_gamma)
   {
      if(num_actions < 1) {
         throw ConfigError("exp3 expert needs at least one action");
      }
   }

   double gamma() const
   {
      if(fixed_gamma_) {
         return *fixed_gamma_;
      }
      const double k = static_cast< double >(log_weights_.size());
      return std::min(1.0, std::sqrt(k * std::log(k) / static_cast< double >(std::max< std::size_t >(tau_, 1))));
   }

   std::vector< double > distribution() const
   {
      const double g = gamma();
      const double k = static_cast< double >(log_weights_.size());
      auto p = softmax(log_weights_);
      for(double& x : p) {
         x = (1.0 - g) * x + g / k;
      }
      return p;
   }

   std::size_t recommend(Context, Rng& rng) const { return rng.categorical(distribution()); }

   void observe(const FeedbackInstance& h)
   {
      const auto* bandit = std::get_if< BanditLoss >(&h.payload);
      if(bandit == nullptr) {
         throw FeedbackTypeError("exp3 expert needs bandit loss feedback, got " + to_string(kind_of(h.payload)));
      }
      const std::size_t a = h.action.local;
      const double p = distribution().at(a);
      const double estimate = bandit->value / p;
      log_weights_[a] -= gamma() * estimate / static_cast< double >(log_weights_.size());
      last_estimate_ = estimate;
      ++tau_;
   }

   FrozenPolicy freeze() const { return FrozenPolicy(distribution()); }
   std::size_t observations() const { return tau_; }
   std::size_t num_actions() const { return log_weights_.size(); }
   std::span< const double > log_weights() const { return log_weights_; }
   double last_estimate() const { return last_estimate_; }
   ExpertKind kind() const { return ExpertKind::Exp3; }

  private:
   std::vector< double > log_weights_;
   std::optional< double > fixed_gamma_;
   std::size_t tau_ = 0;
   double last_estimate_ = 0.0;
};

/// Projected online gradient descent on the simplex over local actions; plays
/// an action drawn from its current point. Feedback is the gradient of the
/// linear loss <w, l>, i.e. the local loss vector.
class OgdExpert {
  public:
   explicit OgdExpert(std::size_t num_actions)
       : set_(convex::ConvexSet::simplex(num_actions)), state_{set_.center(), 0}
   {
   }

   std::vector< double > distribution() const
   {
      std::vector< double > p = state_.w;
      double s = 0.0;
      for(double& x : p) {
         x = std::max(x, 0.0);
         s += x;
      }
      for(double& x : p) {
         x /= s;
      }
      return p;
   }

   std::size_t recommend(Context, Rng& rng) const { return rng.categorical(distribution()); }

   void observe(const FeedbackInstance& h)
   {
      const auto* grad = std::get_if< Gradient >(&h.payload);
      if(grad == nullptr) {
         throw FeedbackTypeError("ogd expert needs gradient feedback, got " + to_string(kind_of(h.payload)));
      }
      if(grad->values.size() != set_.dim) {
         throw FeedbackTypeError("ogd expert got a gradient of the wrong dimension");
      }
      state_ = convex::ocp_step(set_, std::move(state_), grad->values, true);
   }

   FrozenPolicy freeze() const { return FrozenPolicy(distribution()); }
   std::size_t observations() const { return state_.feed_count; }
   std::size_t num_actions() const { return set_.dim; }
   ExpertKind kind() const { return ExpertKind::Ogd; }

  private:
   convex::ConvexSet set_;
   convex::OcpState state_;
};

// ---------------------------------------------------------------------------

template < typename E >
concept ExpertPolicy = requires(E e, const E ce, Context x, Rng& rng, const FeedbackInstance& h) {
   { ce.recommend(x, rng) } -> std::convertible_to< std::size_t >;
   e.observe(h);
   { ce.distribution() } -> std::convertible_to< std::vector< double > >;
   { ce.freeze() } -> std::same_as< FrozenPolicy >;
   { ce.observations() } -> std::convertible_to< std::size_t >;
   { ce.num_actions() } -> std::convertible_to< std::size_t >;
   { ce.kind() } -> std::same_as< ExpertKind >;
};

/// Type-erased expert holding any of the shipped learners by value.
class AnyExpert {
  public:
   using Impl = std::variant< ConstantExpert, HedgeExpert, Exp3Expert, OgdExpert >;

   template < ExpertPolicy E >
   AnyExpert(E expert) : impl_(std::move(expert))
   {
   }

   std::size_t recommend(Context x, Rng& rng) const
   {
      return std::visit([&](const auto& e) { return e.recommend(x, rng); }, impl_);
   }
   void observe(const FeedbackInstance& h)
   {
      std::visit([&](auto& e) { e.observe(h); }, impl_);
   }
   std::vector< double > distribution() const
   {
      return std::visit([](const auto& e) { return e.distribution(); }, impl_);
   }
   FrozenPolicy freeze() const
   {
      return std::visit([](const auto& e) { return e.freeze(); }, impl_);
   }
   std::size_t observations() const
   {
      return std::visit([](const auto& e) { return e.observations(); }, impl_);
   }
   std::size_t num_actions() const
   {
      return std::visit([](const auto& e) { return e.num_actions(); }, impl_);
   }
   ExpertKind kind() const
   {
      return std::visit([](const auto& e) { return e.kind(); }, impl_);
   }

   const Impl& impl() const { return impl_; }

  private:
   Impl impl_;
};

static_assert(ExpertPolicy< AnyExpert >);

inline AnyExpert make_expert(const ExpertSpec& spec)
{
   switch(spec.kind) {
      case ExpertKind::Constant: return ConstantExpert(spec.num_actions, spec.constant_action);
      case ExpertKind::Hedge: return HedgeExpert(spec.num_actions);
      case ExpertKind::Exp3: return Exp3Expert(spec.num_actions);
      case ExpertKind::Ogd: return OgdExpert(spec.num_actions);
   }
   throw ConfigError("unknown expert kind");
}

inline std::vector< AnyExpert > make_experts(std::span< const ExpertSpec > specs)
{
   std::vector< AnyExpert > out;
   out.reserve(specs.size());
   for(const auto& s : specs) {
      out.push_back(make_expert(s));
   }
   return out;
}

/// Scenario layout matching a list of expert specs.
inline std::vector< ExpertLayout > layouts_of(std::span< const ExpertSpec > specs)
{
   std::vector< ExpertLayout > out;
   out.reserve(specs.size());
   for(const auto& s : specs) {
      out.push_back(s.layout());
   }
   return out;
}

}  // namespace learnexp
