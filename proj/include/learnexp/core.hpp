#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace learnexp {

/// Largest admissible per-step loss.
inline constexpr double kMaxLoss = 1.0;

/// Raised when scenario, experts and forecaster do not fit together. Always
/// thrown before the first protocol step.
class ConfigError : public std::runtime_error {
  public:
   using std::runtime_error::runtime_error;
};

/// Raised when an expert is handed a feedback variant it cannot learn from.
class FeedbackTypeError : public std::runtime_error {
  public:
   using std::runtime_error::runtime_error;
};

/// Global action identity: action sets of distinct experts are disjoint, so
/// an action is the pair (owning expert, index inside that expert's set).
struct ActionId {
   std::size_t expert = 0;
   std::size_t local = 0;

   auto operator<=>(const ActionId&) const = default;
};

/// Opaque public context token. Constant unless a scenario supplies one.
using Context = std::uint64_t;

enum class FeedbackKind { FullLocalLosses, BanditLoss, Gradient };

inline std::string to_string(FeedbackKind kind)
{
   switch(kind) {
      case FeedbackKind::FullLocalLosses: return "full";
      case FeedbackKind::BanditLoss: return "bandit";
      case FeedbackKind::Gradient: return "gradient";
   }
   return "?";
}

/// Losses of every action of the owning expert (Hedge-style learners).
struct FullLocalLosses {
   std::vector< double > values;
   bool operator==(const FullLocalLosses&) const = default;
};

/// Loss of the played action only (EXP3-style learners).
struct BanditLoss {
   double value = 0.0;
   bool operator==(const BanditLoss&) const = default;
};

/// Gradient of the linear loss <w, l> over the owning expert's simplex.
struct Gradient {
   std::vector< double > values;
   bool operator==(const Gradient&) const = default;
};

using FeedbackPayload = std::variant< FullLocalLosses, BanditLoss, Gradient >;

inline FeedbackKind kind_of(const FeedbackPayload& payload)
{
   return static_cast< FeedbackKind >(payload.index());
}

/// One learning step an expert has been allowed to take.
struct FeedbackInstance {
   ActionId action;
   Context context = 0;
   FeedbackPayload payload;
};

/// Ordered feedback instances an expert has observed. Its length is the
/// number of learning steps the expert has had.
using History = std::vector< FeedbackInstance >;

struct ExpertLayout {
   std::size_t index = 0;
   std::size_t num_actions = 1;
   FeedbackKind feedback = FeedbackKind::FullLocalLosses;

   bool operator==(const ExpertLayout&) const = default;
};

/// Materialized view of a single step, mostly for inspection and tests; the
/// protocol reads the flat tables directly.
struct StepData {
   std::map< ActionId, double > losses;
   std::map< ActionId, FeedbackPayload > feedback;
   Context context = 0;
};

/// The oblivious adversary's full sequence of losses, feedback and contexts,
/// fixed before any run starts. Immutable after construction and safe to
/// share between concurrent runs.
///
/// Steps are indexed from 0 in this API; round numbers in exported logs are
/// step + 1.
class ScenarioTrace {
  public:
   /// `losses` is row-major: step t, then actions of expert 0, expert 1, ...
   /// `feedback_values` may be empty, in which case feedback is derived from
   /// the losses. `contexts` may be empty (constant context 0).
   ScenarioTrace(std::vector< ExpertLayout > experts,
                 std::size_t horizon,
                 std::vector< double > losses,
                 std::vector< Context > contexts = {},
                 std::vector< double > feedback_values = {})
       : experts_(std::move(experts)),
         horizon_(horizon),
         losses_(std::move(losses)),
         feedback_(std::move(feedback_values)),
         contexts_(std::move(contexts))
   {
      if(horizon_ < 1) {
         throw ConfigError("scenario horizon must be >= 1");
      }
      if(experts_.empty()) {
         throw ConfigError("scenario needs at least one expert");
      }
      offsets_.reserve(experts_.size());
      for(std::size_t j = 0; j < experts_.size(); ++j) {
         if(experts_[j].index != j) {
            throw ConfigError("expert layouts must be listed in index order 0..N-1");
         }
         if(experts_[j].num_actions < 1) {
            throw ConfigError("expert " + std::to_string(j) + " has an empty action set");
         }
         offsets_.push_back(width_);
         width_ += experts_[j].num_actions;
      }
      if(losses_.size() != horizon_ * width_) {
         throw ConfigError("loss table has " + std::to_string(losses_.size()) + " entries, expected "
                           + std::to_string(horizon_ * width_));
      }
      for(double l : losses_) {
         if(!(l >= 0.0 && l <= kMaxLoss)) {
            throw ConfigError("loss value " + std::to_string(l) + " outside [0, 1]");
         }
      }
      if(!feedback_.empty() && feedback_.size() != losses_.size()) {
         throw ConfigError("feedback table shape differs from loss table");
      }
      if(!contexts_.empty() && contexts_.size() != horizon_) {
         throw ConfigError("context sequence length differs from horizon");
      }
   }

   std::size_t horizon() const { return horizon_; }
   std::size_t num_experts() const { return experts_.size(); }
   std::span< const ExpertLayout > experts() const { return experts_; }
   const ExpertLayout& expert(std::size_t j) const { return experts_.at(j); }
   std::size_t total_actions() const { return width_; }

   double loss(std::size_t t, ActionId a) const { return losses_[t * width_ + offsets_[a.expert] + a.local]; }

   std::span< const double > local_losses(std::size_t t, std::size_t expert) const
   {
      return {losses_.data() + t * width_ + offsets_[expert], experts_[expert].num_actions};
   }

   std::span< const double > local_feedback(std::size_t t, std::size_t expert) const
   {
      const auto& table = feedback_.empty() ? losses_ : feedback_;
      return {table.data() + t * width_ + offsets_[expert], experts_[expert].num_actions};
   }

   Context context(std::size_t t) const { return contexts_.empty() ? Context{0} : contexts_[t]; }

   /// Feedback the owner of `a` would observe at step t after playing `a`,
   /// shaped by the owner's declared feedback kind.
   FeedbackPayload feedback(std::size_t t, ActionId a) const
   {
      const auto values = local_feedback(t, a.expert);
      switch(experts_[a.expert].feedback) {
         case FeedbackKind::FullLocalLosses: return FullLocalLosses{{values.begin(), values.end()}};
         case FeedbackKind::BanditLoss: return BanditLoss{values[a.local]};
         case FeedbackKind::Gradient: return Gradient{{values.begin(), values.end()}};
      }
      throw ConfigError("unknown feedback kind");
   }

   StepData step(std::size_t t) const
   {
      StepData out;
      out.context = context(t);
      for(const auto& e : experts_) {
         for(std::size_t k = 0; k < e.num_actions; ++k) {
            const ActionId a{e.index, k};
            out.losses.emplace(a, loss(t, a));
            out.feedback.emplace(a, feedback(t, a));
         }
      }
      return out;
   }

   /// Total loss of always playing `a`.
   double column_sum(ActionId a) const
   {
      double s = 0.0;
      for(std::size_t t = 0; t < horizon_; ++t) {
         s += loss(t, a);
      }
      return s;
   }

  private:
   std::vector< ExpertLayout > experts_;
   std::vector< std::size_t > offsets_;
   std::size_t width_ = 0;
   std::size_t horizon_ = 0;
   std::vector< double > losses_;
   std::vector< double > feedback_;
   std::vector< Context > contexts_;
};

enum class FeedMode { AlwaysFeed, ForecasterGated };

inline std::string to_string(FeedMode mode)
{
   return mode == FeedMode::AlwaysFeed ? "always" : "gated";
}

struct StepRecord {
   std::size_t t = 0;  ///< round number, 1-based
   std::size_t selected = 0;
   double prob = 0.0;  ///< probability with which `selected` was drawn
   ActionId action;
   double loss = 0.0;
   bool gate = true;   ///< whether the selected expert learned this round
};

struct RunRecord {
   std::uint64_t seed = 0;
   FeedMode mode = FeedMode::AlwaysFeed;
   std::vector< StepRecord > records;
   double cumulative_loss = 0.0;
   /// Filled only when histories were requested for the run.
   std::vector< History > histories;
};

struct RegretReport {
   double forecaster_loss_mean = 0.0;
   std::map< std::size_t, double > comparator_losses;
   double regret = 0.0;
   std::size_t n_seeds = 0;
   double stderr_loss = 0.0;  ///< sample standard error of the forecaster loss
};

/// Best-expert-in-hindsight regret: mean forecaster loss minus the smallest
/// per-expert comparator mean (min of means).
inline RegretReport regret_eq2(std::span< const double > cumulative_losses,
                               const std::map< std::size_t, double >& comparators)
{
   if(cumulative_losses.empty()) {
      throw std::invalid_argument("regret_eq2: no runs");
   }
   if(comparators.empty()) {
      throw std::invalid_argument("regret_eq2: no comparator losses");
   }
   RegretReport report;
   report.n_seeds = cumulative_losses.size();
   report.comparator_losses = comparators;
   const double n = static_cast< double >(cumulative_losses.size());
   report.forecaster_loss_mean = std::accumulate(cumulative_losses.begin(), cumulative_losses.end(), 0.0) / n;
   if(cumulative_losses.size() > 1) {
      double ss = 0.0;
      for(double l : cumulative_losses) {
         const double d = l - report.forecaster_loss_mean;
         ss += d * d;
      }
      report.stderr_loss = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
   }
   double best = comparators.begin()->second;
   for(const auto& [j, v] : comparators) {
      best = std::min(best, v);
   }
   report.regret = report.forecaster_loss_mean - best;
   return report;
}

inline RegretReport regret_eq2(std::span< const RunRecord > runs, const std::map< std::size_t, double >& comparators)
{
   std::vector< double > losses;
   losses.reserve(runs.size());
   for(const auto& r : runs) {
      losses.push_back(r.cumulative_loss);
   }
   return regret_eq2(std::span< const double >(losses), comparators);
}

}  // namespace learnexp
