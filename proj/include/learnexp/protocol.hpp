#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "learnexp/core.hpp"
#include "learnexp/experts.hpp"
#include "learnexp/forecasters.hpp"
#include "learnexp/random.hpp"

namespace learnexp {

/// Named randomness consumers of one run.
namespace streams {
inline constexpr const char* kSelect = "select";
inline constexpr const char* kGate = "gate";
inline constexpr const char* kExpert = "expert";
inline constexpr const char* kReplay = "replay";
inline constexpr const char* kTrace = "trace";
}  // namespace streams

struct RunOptions {
   bool record_steps = true;
   bool record_histories = false;
   /// Accumulate, for every expert, the loss of its recommendation trace: the
   /// played action when selected, otherwise an action drawn from its current
   /// distribution on a separate stream (external-regret comparator).
   bool track_expert_losses = false;
   /// Called after each step with the 0-based step index.
   std::function< void(std::size_t) > on_step;
};

struct RunOutput {
   RunRecord record;
   std::vector< double > expert_trace_losses;  ///< filled with track_expert_losses
   std::vector< std::vector< double > > final_distributions;  ///< filled with record_histories
   std::size_t gate_fires = 0;
};

/// Throws ConfigError unless the experts match the scenario layout.
template < ExpertPolicy E >
void validate_setup(const ScenarioTrace& scenario, std::span< const E > experts, std::size_t forecaster_n)
{
   if(experts.empty()) {
      throw ConfigError("need at least one expert");
   }
   if(experts.size() != scenario.num_experts()) {
      throw ConfigError("scenario defines " + std::to_string(scenario.num_experts()) + " experts, got "
                        + std::to_string(experts.size()));
   }
   if(forecaster_n != experts.size()) {
      throw ConfigError("forecaster built for " + std::to_string(forecaster_n) + " experts, got "
                        + std::to_string(experts.size()));
   }
   for(std::size_t j = 0; j < experts.size(); ++j) {
      const auto& lay = scenario.expert(j);
      if(lay.num_actions != experts[j].num_actions()) {
         throw ConfigError("expert " + std::to_string(j) + " action count differs from scenario");
      }
      if(lay.feedback != required_feedback(experts[j].kind())) {
         throw ConfigError("expert " + std::to_string(j) + " (" + to_string(experts[j].kind()) + ") needs "
                           + to_string(required_feedback(experts[j].kind())) + " feedback, scenario provides "
                           + to_string(lay.feedback));
      }
   }
}

/// One execution of the selection protocol. The experts are taken by value
/// and consumed. Selection, gate and per-expert draws use separate streams,
/// so switching the gate on or off leaves the selection draws untouched.
template < ForecasterPolicy F, ExpertPolicy E >
RunOutput run_protocol(const ScenarioTrace& scenario,
                       F forecaster,
                       std::vector< E > experts,
                       std::uint64_t seed,
                       FeedMode mode,
                       const RunOptions& opts = {})
{
   validate_setup(scenario, std::span< const E >(experts), forecaster.num_experts());

   const std::size_t n = experts.size();
   const std::size_t horizon = scenario.horizon();
   Rng select_rng(seed_stream(seed, streams::kSelect));
   Rng gate_rng(seed_stream(seed, streams::kGate));
   std::vector< Rng > expert_rngs;
   expert_rngs.reserve(n);
   for(std::size_t j = 0; j < n; ++j) {
      expert_rngs.emplace_back(seed_stream(seed, streams::kExpert, j));
   }

   std::vector< Rng > trace_rngs;
   if(opts.track_expert_losses) {
      for(std::size_t j = 0; j < n; ++j) {
         trace_rngs.emplace_back(seed_stream(seed, streams::kTrace, j));
      }
   }

   RunOutput out;
   out.record.seed = seed;
   out.record.mode = mode;
   if(opts.record_steps) {
      out.record.records.reserve(horizon);
   }
   if(opts.record_histories) {
      out.record.histories.resize(n);
   }
   if(opts.track_expert_losses) {
      out.expert_trace_losses.assign(n, 0.0);
   }

   double cumulative = 0.0;
   for(std::size_t t = 0; t < horizon; ++t) {
      const Context x = scenario.context(t);
      const Selection sel = forecaster.select(select_rng);
      auto& expert = experts[sel.expert];
      const ActionId action{sel.expert, expert.recommend(x, expert_rngs[sel.expert])};
      const double loss = scenario.loss(t, action);
      cumulative += loss;
      if(opts.track_expert_losses) {
         for(std::size_t j = 0; j < n; ++j) {
            if(j == sel.expert) {
               out.expert_trace_losses[j] += loss;
            } else {
               const auto dist = experts[j].distribution();
               out.expert_trace_losses[j] += scenario.loss(t, {j, trace_rngs[j].categorical(dist)});
            }
         }
      }

      bool gate = true;
      if(mode == FeedMode::ForecasterGated) {
         gate = gate_rng.bernoulli(forecaster.gate_probability(sel));
      }
      forecaster.update(sel, loss);
      if(gate) {
         FeedbackInstance h{action, x, scenario.feedback(t, action)};
         expert.observe(h);
         if(opts.record_histories) {
            out.record.histories[sel.expert].push_back(std::move(h));
         }
         ++out.gate_fires;
      }
      if(opts.record_steps) {
         out.record.records.push_back({t + 1, sel.expert, sel.prob, action, loss, gate});
      }
      if(opts.on_step) {
         opts.on_step(t);
      }
   }
   out.record.cumulative_loss = cumulative;
   if(opts.record_histories) {
      for(const auto& e : experts) {
         out.final_distributions.push_back(e.distribution());
      }
   }
   return out;
}

/// Runs `expert` fed at every step, returning the trained expert. Phase one
/// of the comparator.
template < ExpertPolicy E >
E train_full_feedback(const ScenarioTrace& scenario, std::size_t index, E expert, std::uint64_t seed)
{
   Rng rng(seed_stream(seed, streams::kExpert, index));
   for(std::size_t t = 0; t < scenario.horizon(); ++t) {
      const Context x = scenario.context(t);
      const ActionId a{index, expert.recommend(x, rng)};
      expert.observe({a, x, scenario.feedback(t, a)});
   }
   return expert;
}

/// Loss of replaying a frozen policy over the whole scenario, drawing a fresh
/// action every step when it is randomized.
inline double replay_frozen(const ScenarioTrace& scenario, std::size_t index, const FrozenPolicy& policy, Rng& rng)
{
   double total = 0.0;
   if(auto a = policy.deterministic_action()) {
      for(std::size_t t = 0; t < scenario.horizon(); ++t) {
         total += scenario.loss(t, {index, *a});
      }
      return total;
   }
   for(std::size_t t = 0; t < scenario.horizon(); ++t) {
      total += scenario.loss(t, {index, policy.sample(rng)});
   }
   return total;
}

/// One seed of the comparator: train with feedback at every step, then
/// replay the frozen policy.
inline double comparator_seed_loss(const ExpertSpec& spec, const ScenarioTrace& scenario, std::uint64_t seed)
{
   const auto trained = train_full_feedback(scenario, spec.index, make_expert(spec), seed);
   Rng rng(seed_stream(seed, streams::kReplay, spec.index));
   return replay_frozen(scenario, spec.index, trained.freeze(), rng);
}

/// Hindsight loss of expert `index`: train it with feedback at every step,
/// freeze it, replay the frozen policy; averaged over seeds.
inline double comparator_loss(const ExpertSpec& spec, const ScenarioTrace& scenario, std::span< const std::uint64_t > seeds)
{
   if(seeds.empty()) {
      throw std::invalid_argument("comparator_loss: empty seed list");
   }
   const auto& lay = scenario.expert(spec.index);
   if(lay.num_actions != spec.num_actions || lay.feedback != spec.feedback()) {
      throw ConfigError("comparator expert " + std::to_string(spec.index) + " does not match scenario");
   }
   double sum = 0.0;
   for(std::uint64_t s : seeds) {
      sum += comparator_seed_loss(spec, scenario, s);
   }
   return sum / static_cast< double >(seeds.size());
}

inline std::map< std::size_t, double > comparator_losses(std::span< const ExpertSpec > specs,
                                                         const ScenarioTrace& scenario,
                                                         std::span< const std::uint64_t > seeds)
{
   std::map< std::size_t, double > out;
   for(const auto& s : specs) {
      out[s.index] = comparator_loss(s, scenario, seeds);
   }
   return out;
}

/// Convenience wrapper building experts and forecaster from specs.
inline RunOutput run_specs(const ScenarioTrace& scenario,
                           const ForecasterSpec& forecaster,
                           std::span< const ExpertSpec > experts,
                           std::uint64_t seed,
                           FeedMode mode,
                           const RunOptions& opts = {})
{
   return run_protocol(scenario, make_forecaster(forecaster, experts.size()), make_experts(experts), seed, mode, opts);
}

struct ExternalRegretCheck {
   double forecaster_loss = 0.0;
   double best_trace_loss = 0.0;
   double external_regret = 0.0;
   double bound = 0.0;
   bool holds = true;
};

/// Realized regret against the experts' recommendation traces of the same
/// run, compared with (e - 1) eta T + N ln N / eta.
inline ExternalRegretCheck external_regret_check(const RunOutput& run, double eta, std::size_t num_experts, std::size_t horizon)
{
   if(run.expert_trace_losses.size() != num_experts) {
      throw std::invalid_argument("external_regret_check: run did not track expert losses");
   }
   ExternalRegretCheck c;
   c.forecaster_loss = run.record.cumulative_loss;
   c.best_trace_loss = *std::min_element(run.expert_trace_losses.begin(), run.expert_trace_losses.end());
   c.external_regret = c.forecaster_loss - c.best_trace_loss;
   const double n = static_cast< double >(num_experts);
   c.bound = (std::exp(1.0) - 1.0) * eta * static_cast< double >(horizon) + n * std::log(n) / eta;
   c.holds = c.external_regret <= c.bound;
   return c;
}

}  // namespace learnexp
