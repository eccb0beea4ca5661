#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "learnexp/convex.hpp"
#include "learnexp/core.hpp"
#include "learnexp/fit.hpp"
#include "learnexp/forecasters.hpp"
#include "learnexp/io.hpp"
#include "learnexp/protocol.hpp"
#include "learnexp/scenarios.hpp"

namespace learnexp {

/// Runs fn(0..n-1) on up to `threads` workers. Each index writes only its own
/// output slot, so results never depend on scheduling. The first exception is
/// rethrown after all workers stop.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function< void(std::size_t) >& fn)
{
   threads = std::max< std::size_t >(1, std::min(threads, n));
   if(threads == 1) {
      for(std::size_t i = 0; i < n; ++i) {
         fn(i);
      }
      return;
   }
   std::atomic< std::size_t > next{0};
   std::atomic< bool > failed{false};
   std::exception_ptr error;
   std::mutex error_mutex;
   std::vector< std::thread > pool;
   pool.reserve(threads);
   for(std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
         for(std::size_t i = next++; i < n && !failed; i = next++) {
            try {
               fn(i);
            } catch(...) {
               std::lock_guard lock(error_mutex);
               if(!error) {
                  error = std::current_exception();
               }
               failed = true;
            }
         }
      });
   }
   for(auto& t : pool) {
      t.join();
   }
   if(error) {
      std::rethrow_exception(error);
   }
}

inline std::vector< std::uint64_t > run_seeds(std::uint64_t master, std::size_t n)
{
   std::vector< std::uint64_t > out(n);
   for(std::size_t i = 0; i < n; ++i) {
      out[i] = seed_stream(master, "run", i);
   }
   return out;
}

/// A named pass/fail verdict.
struct Check {
   std::string name;
   bool passed = false;
   std::string detail;
};

inline bool all_passed(const std::vector< Check >& checks)
{
   return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

inline std::string fmt(const char* f, double v)
{
   char buf[64];
   std::snprintf(buf, sizeof buf, f, v);
   return buf;
}

// ---------------------------------------------------------------------------
// Protocol experiments.

struct ExperimentConfig {
   std::string name = "experiment";
   ScenarioSpec scenario;
   ForecasterSpec forecaster;
   std::optional< double > eta;  ///< fixed rate; otherwise from the regret analysis
   double eta_mult = 1.0;
   std::optional< double > beta;  ///< defaults to the largest expert beta
   std::vector< std::size_t > horizons;
   std::size_t seeds = 50;
   std::uint64_t master_seed = 1;
   std::size_t threads = 1;
   std::optional< FeedMode > mode;

   // Asserted by `sweep` when present.
   std::optional< std::pair< double, double > > exponent_range;
   std::optional< double > r2_min;
   std::optional< double > regret_cap_coef;   ///< regret <= coef * T^power at every T
   double regret_cap_power = 2.0 / 3.0;

   double effective_beta() const
   {
      if(beta) {
         return *beta;
      }
      double b = 0.0;
      for(const auto& e : scenario.experts) {
         b = std::max(b, e.beta());
      }
      return b;
   }

   double eta_for(std::size_t horizon) const
   {
      const double base = eta ? *eta : theorem2_eta(horizon, scenario.experts.size(), effective_beta());
      return std::min(1.0, eta_mult * base);
   }

   FeedMode effective_mode() const { return mode ? *mode : natural_mode(forecaster.kind); }
};

inline ExperimentConfig experiment_from_json(const json& j)
{
   ExperimentConfig c;
   c.name = j.value("name", c.name);
   if(!j.contains("scenario")) {
      throw ConfigError("config needs a 'scenario' section");
   }
   c.scenario = scenario_from_json(j.at("scenario"));
   if(j.contains("forecaster")) {
      const auto& f = j.at("forecaster");
      c.forecaster.kind = forecaster_kind_from_string(f.value("kind", std::string("learnexp")));
      c.forecaster.fixed = f.value("fixed", std::size_t{0});
      if(f.contains("eta")) {
         c.eta = f.at("eta").get< double >();
      }
      if(f.contains("mode")) {
         const auto m = f.at("mode").get< std::string >();
         if(m != "always" && m != "gated") {
            throw ConfigError("forecaster mode must be 'always' or 'gated'");
         }
         c.mode = m == "always" ? FeedMode::AlwaysFeed : FeedMode::ForecasterGated;
      }
   }
   c.eta_mult = j.value("eta_mult", 1.0);
   if(j.contains("beta")) {
      c.beta = j.at("beta").get< double >();
   }
   c.horizons = j.value("horizons", std::vector< std::size_t >{c.scenario.horizon});
   c.seeds = j.value("seeds", c.seeds);
   c.master_seed = j.value("master_seed", c.master_seed);
   c.threads = j.value("threads", c.threads);
   if(j.contains("checks")) {
      const auto& k = j.at("checks");
      if(k.contains("exponent")) {
         const auto r = k.at("exponent").get< std::vector< double > >();
         if(r.size() != 2) {
            throw ConfigError("checks.exponent must be [low, high]");
         }
         c.exponent_range = std::make_pair(r[0], r[1]);
      }
      if(k.contains("r2_min")) {
         c.r2_min = k.at("r2_min").get< double >();
      }
      if(k.contains("regret_cap_coef")) {
         c.regret_cap_coef = k.at("regret_cap_coef").get< double >();
      }
      c.regret_cap_power = k.value("regret_cap_power", c.regret_cap_power);
   }
   if(c.horizons.empty()) {
      throw ConfigError("horizon list is empty");
   }
   if(c.seeds < 1) {
      throw ConfigError("need at least one seed");
   }
   return c;
}

struct HorizonResult {
   std::size_t horizon = 0;
   double eta = 0.0;
   RegretReport report;
   double stderr_regret = 0.0;
   std::vector< RunRecord > recorded;  ///< runs whose steps were kept
};

/// Forecaster runs and hindsight comparators for one horizon, one job per
/// seed. Steps are kept for the first `keep_steps` seeds.
inline HorizonResult evaluate_horizon(const ExperimentConfig& cfg, std::size_t horizon, std::size_t keep_steps)
{
   ScenarioSpec spec = cfg.scenario;
   spec.horizon = horizon;
   const ScenarioTrace scenario = build_scenario(spec);
   const auto seeds = run_seeds(cfg.master_seed, cfg.seeds);
   const double eta = cfg.eta_for(horizon);
   ForecasterSpec fspec = cfg.forecaster;
   fspec.eta = eta;
   const FeedMode mode = cfg.effective_mode();
   const std::size_t n_experts = spec.experts.size();

   std::vector< double > losses(seeds.size());
   std::vector< std::vector< double > > comp(seeds.size(), std::vector< double >(n_experts));
   std::vector< RunRecord > kept(std::min(keep_steps, seeds.size()));
   parallel_for(seeds.size(), cfg.threads, [&](std::size_t i) {
      RunOptions opts;
      opts.record_steps = i < kept.size();
      auto out = run_specs(scenario, fspec, spec.experts, seeds[i], mode, opts);
      losses[i] = out.record.cumulative_loss;
      if(i < kept.size()) {
         kept[i] = std::move(out.record);
      }
      for(std::size_t j = 0; j < n_experts; ++j) {
         comp[i][j] = comparator_seed_loss(spec.experts[j], scenario, seeds[i]);
      }
   });

   std::map< std::size_t, double > comparators;
   for(std::size_t j = 0; j < n_experts; ++j) {
      double s = 0.0;
      for(std::size_t i = 0; i < seeds.size(); ++i) {
         s += comp[i][j];
      }
      comparators[spec.experts[j].index] = s / static_cast< double >(seeds.size());
   }
   HorizonResult r;
   r.horizon = horizon;
   r.eta = eta;
   r.report = regret_eq2(std::span< const double >(losses), comparators);
   r.stderr_regret = r.report.stderr_loss;
   r.recorded = std::move(kept);
   return r;
}

inline SummaryRow summary_row(const std::string& experiment, const std::string& scenario, const std::string& forecaster,
                              const HorizonResult& h)
{
   double best = h.report.comparator_losses.begin()->second;
   for(const auto& [j, v] : h.report.comparator_losses) {
      best = std::min(best, v);
   }
   return {experiment, scenario, h.horizon, forecaster, h.eta, h.report.regret, h.stderr_regret,
           h.report.n_seeds, h.report.forecaster_loss_mean, best};
}

inline std::string scenario_label(const ScenarioSpec& s)
{
   if(std::holds_alternative< StochasticSpec >(s.source)) {
      return "stochastic";
   }
   if(const auto* h = std::get_if< HardnessRef >(&s.source)) {
      return "hardness-L" + std::to_string(h->table);
   }
   return "piecewise";
}

struct SweepResult {
   std::vector< HorizonResult > horizons;
   std::vector< SummaryRow > rows;
   std::optional< FitResult > fit;
   std::vector< Check > checks;
};

/// Regret at every configured horizon and a log-log fit of regret against T.
/// `on_row` sees each summary row as soon as its horizon is done.
inline SweepResult sweep(const ExperimentConfig& cfg,
                         std::size_t keep_steps = 1,
                         const std::function< void(const SummaryRow&) >& on_row = {})
{
   SweepResult out;
   const std::string flabel = to_string(cfg.forecaster.kind);
   for(std::size_t horizon : cfg.horizons) {
      auto h = evaluate_horizon(cfg, horizon, keep_steps);
      out.rows.push_back(summary_row(cfg.name, scenario_label(cfg.scenario), flabel, h));
      if(on_row) {
         on_row(out.rows.back());
      }
      out.horizons.push_back(std::move(h));
   }

   std::vector< FitPoint > pts;
   bool positive = true;
   for(const auto& h : out.horizons) {
      pts.push_back({static_cast< double >(h.horizon), h.report.regret});
      positive = positive && h.report.regret > 0.0;
   }
   if(pts.size() >= 3 && positive) {
      out.fit = loglog_fit(pts, cfg.name + ":regret_vs_T");
   }

   if(cfg.exponent_range || cfg.r2_min) {
      if(!out.fit) {
         out.checks.push_back({cfg.name + " rate fit", false, "need >= 3 horizons with positive regret"});
      } else {
         if(cfg.exponent_range) {
            const auto [lo, hi] = *cfg.exponent_range;
            out.checks.push_back({cfg.name + " exponent", out.fit->exponent >= lo && out.fit->exponent <= hi,
                                  fmt("fitted %.4f", out.fit->exponent) + fmt(" in [%.2f,", lo) + fmt(" %.2f]", hi)});
         }
         if(cfg.r2_min) {
            out.checks.push_back({cfg.name + " r2", out.fit->r2 >= *cfg.r2_min,
                                  fmt("r2 %.4f", out.fit->r2) + fmt(" >= %.2f", *cfg.r2_min)});
         }
      }
   }
   if(cfg.regret_cap_coef) {
      bool ok = true;
      std::string worst;
      double worst_ratio = -1.0;
      for(const auto& h : out.horizons) {
         const double cap = *cfg.regret_cap_coef * std::pow(static_cast< double >(h.horizon), cfg.regret_cap_power);
         const double ratio = h.report.regret / cap;
         ok = ok && h.report.regret <= cap;
         if(ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = "T=" + std::to_string(h.horizon) + fmt(" regret %.2f", h.report.regret) + fmt(" cap %.2f", cap);
         }
      }
      out.checks.push_back({cfg.name + " regret cap", ok, "largest regret/cap at " + worst});
   }
   return out;
}

// ---------------------------------------------------------------------------
// Hardness demonstration.

struct HardnessConfig {
   std::size_t horizon = 24000;
   double delta = 0.01;
   hardness::Variant variant = hardness::Variant::BlindSpot;
   std::vector< ForecasterKind > ungated{ForecasterKind::Exp3Ungated, ForecasterKind::Uniform};
   std::size_t stability_factor = 2;   ///< ungated: compare T with this multiple
   std::size_t vanishing_factor = 4;   ///< LearnExp: compare T with this multiple
   double min_average_regret = 0.02;
   double stability_tolerance = 0.30;
   double vanishing_ratio = 0.80;
   double eta_mult = 1.0;
   std::size_t seeds = 50;
   std::uint64_t master_seed = 1;
   std::size_t threads = 1;
};

inline HardnessConfig hardness_from_json(const json& root)
{
   HardnessConfig c;
   const json j = root.contains("hardness") ? root.at("hardness") : json::object();
   c.horizon = j.value("T", c.horizon);
   c.delta = j.value("delta", c.delta);
   c.variant = hardness::variant_from_string(j.value("variant", std::string("blind_spot")));
   if(j.contains("forecasters")) {
      c.ungated.clear();
      for(const auto& f : j.at("forecasters")) {
         c.ungated.push_back(forecaster_kind_from_string(f.get< std::string >()));
      }
   }
   c.stability_factor = j.value("stability_factor", c.stability_factor);
   c.vanishing_factor = j.value("vanishing_factor", c.vanishing_factor);
   c.min_average_regret = j.value("min_average_regret", c.min_average_regret);
   c.stability_tolerance = j.value("stability_tolerance", c.stability_tolerance);
   c.vanishing_ratio = j.value("vanishing_ratio", c.vanishing_ratio);
   c.eta_mult = root.value("eta_mult", c.eta_mult);
   c.seeds = root.value("seeds", c.seeds);
   c.master_seed = root.value("master_seed", c.master_seed);
   c.threads = root.value("threads", c.threads);
   return c;
}

struct HardnessCell {
   ForecasterKind forecaster;
   std::size_t horizon = 0;
   std::array< HorizonResult, 3 > tables;  ///< L1, L2, L3

   /// Average regret (regret / T) on one table.
   double average(std::size_t table) const
   {
      return tables[table].report.regret / static_cast< double >(horizon);
   }
   double average_stderr(std::size_t table) const
   {
      return tables[table].stderr_regret / static_cast< double >(horizon);
   }
   /// The adversary picks each table with probability 1/3.
   double mixture() const { return (average(0) + average(1) + average(2)) / 3.0; }
   double mixture_stderr() const
   {
      double v = 0.0;
      for(std::size_t k = 0; k < 3; ++k) {
         v += average_stderr(k) * average_stderr(k);
      }
      return std::sqrt(v) / 3.0;
   }
};

struct HardnessResult {
   std::vector< HardnessCell > cells;
   std::vector< SummaryRow > rows;
   std::vector< std::string > violations;
   std::vector< Check > checks;

   const HardnessCell* find(ForecasterKind f, std::size_t horizon) const
   {
      for(const auto& c : cells) {
         if(c.forecaster == f && c.horizon == horizon) {
            return &c;
         }
      }
      return nullptr;
   }
};

/// Exponential-weights forecasters in the demonstration share LearnExp's rate.
inline double hardness_eta(std::size_t horizon, double eta_mult)
{
   return std::min(1.0, eta_mult * theorem2_eta(horizon, 2, 0.5));
}

inline HardnessCell hardness_cell(const HardnessConfig& cfg, ForecasterKind kind, std::size_t horizon)
{
   HardnessCell cell{kind, horizon, {}};
   for(std::size_t k = 0; k < 3; ++k) {
      ExperimentConfig e;
      e.name = "hardness";
      e.scenario = {kScenarioFormatVersion, horizon, HardnessTrio::experts(), HardnessRef{cfg.delta, cfg.variant, k + 1}};
      e.forecaster.kind = kind;
      e.eta = hardness_eta(horizon, 1.0);
      e.eta_mult = cfg.eta_mult;
      e.seeds = cfg.seeds;
      e.master_seed = cfg.master_seed;
      e.threads = cfg.threads;
      cell.tables[k] = evaluate_horizon(e, horizon, 0);
   }
   return cell;
}

inline HardnessResult hardness_demo(const HardnessConfig& cfg,
                                    const std::function< void(const SummaryRow&) >& on_row = {})
{
   HardnessResult out;
   out.violations = check_hardness_constraints(build_hardness_trio(cfg.horizon, cfg.delta, cfg.variant));
   out.checks.push_back({"hardness constraints", out.violations.empty(),
                         out.violations.empty() ? "all constraints hold" : out.violations.front()});

   auto add = [&](HardnessCell cell) {
      const std::string f = to_string(cell.forecaster);
      for(std::size_t k = 0; k < 3; ++k) {
         out.rows.push_back(summary_row("hardness", "L" + std::to_string(k + 1), f, cell.tables[k]));
         if(on_row) {
            on_row(out.rows.back());
         }
      }
      SummaryRow mix = summary_row("hardness", "mixture", f, cell.tables[0]);
      mix.mean_regret = cell.mixture() * static_cast< double >(cell.horizon);
      mix.stderr_regret = cell.mixture_stderr() * static_cast< double >(cell.horizon);
      mix.forecaster_loss = (cell.tables[0].report.forecaster_loss_mean + cell.tables[1].report.forecaster_loss_mean
                             + cell.tables[2].report.forecaster_loss_mean)
                            / 3.0;
      mix.best_comparator = mix.forecaster_loss - mix.mean_regret;
      out.rows.push_back(mix);
      if(on_row) {
         on_row(mix);
      }
      out.cells.push_back(std::move(cell));
   };

   const std::size_t t1 = cfg.horizon;
   const std::size_t t2 = cfg.horizon * cfg.stability_factor;
   const std::size_t t4 = cfg.horizon * cfg.vanishing_factor;
   for(ForecasterKind f : cfg.ungated) {
      add(hardness_cell(cfg, f, t1));
      add(hardness_cell(cfg, f, t2));
   }
   add(hardness_cell(cfg, ForecasterKind::LearnExp, t1));
   add(hardness_cell(cfg, ForecasterKind::LearnExp, t4));

   for(ForecasterKind f : cfg.ungated) {
      const auto* a = out.find(f, t1);
      const auto* b = out.find(f, t2);
      const std::string name = to_string(f);
      out.checks.push_back({name + " L1 average regret", a->average(0) >= cfg.min_average_regret,
                            fmt("%.5f", a->average(0)) + fmt(" (se %.5f)", a->average_stderr(0))
                                + fmt(" >= %.3f", cfg.min_average_regret) + " at T=" + std::to_string(t1)});
      const double rel = b->average(0) / a->average(0) - 1.0;
      out.checks.push_back({name + " L1 non-vanishing", std::abs(rel) <= cfg.stability_tolerance,
                            "T=" + std::to_string(t2) + fmt(" %.5f", b->average(0)) + fmt(" vs %.5f", a->average(0))
                                + fmt(", change %+.1f%%", 100.0 * rel)});
   }
   const auto* l1 = out.find(ForecasterKind::LearnExp, t1);
   const auto* l4 = out.find(ForecasterKind::LearnExp, t4);
   const double ratio = l4->mixture() / l1->mixture();
   out.checks.push_back({"learnexp vanishing", ratio <= cfg.vanishing_ratio,
                         "mixture average regret T=" + std::to_string(t4) + fmt(" %.5f", l4->mixture()) + " / T="
                             + std::to_string(t1) + fmt(" %.5f", l1->mixture()) + fmt(" = %.3f", ratio)
                             + fmt(" <= %.2f", cfg.vanishing_ratio)});
   return out;
}

// ---------------------------------------------------------------------------
// External regret against the experts' realized recommendation traces.

struct ExternalConfig {
   std::size_t scenarios = 100;
   std::size_t num_experts = 4;
   std::size_t horizon = 10000;
   double eta_mult = 1.0;
   std::uint64_t master_seed = 1;
   std::size_t threads = 1;
};

/// Experts alternate between constant single-action experts and two-action
/// Hedge learners.
inline std::vector< ExpertSpec > external_experts(std::size_t n)
{
   std::vector< ExpertSpec > out;
   for(std::size_t j = 0; j < n; ++j) {
      if(j % 2 == 0) {
         out.push_back({j, ExpertKind::Constant, 1, 0});
      } else {
         out.push_back({j, ExpertKind::Hedge, 2, 0});
      }
   }
   return out;
}

struct ExternalResult {
   std::vector< ExternalRegretCheck > runs;
   double eta = 0.0;
   std::size_t violations = 0;
   double worst_slack = 0.0;  ///< smallest bound - regret
};

inline ExternalResult external_regret_sweep(const ExternalConfig& cfg)
{
   const auto experts = external_experts(cfg.num_experts);
   double beta = 0.0;
   for(const auto& e : experts) {
      beta = std::max(beta, e.beta());
   }
   ExternalResult out;
   out.eta = std::min(1.0, cfg.eta_mult * theorem2_eta(cfg.horizon, cfg.num_experts, beta));
   out.runs.resize(cfg.scenarios);
   parallel_for(cfg.scenarios, cfg.threads, [&](std::size_t i) {
      Rng rng(seed_stream(cfg.master_seed, "external-means", i));
      StochasticSpec st;
      for(const auto& e : experts) {
         for(std::size_t k = 0; k < e.num_actions; ++k) {
            st.means.push_back(rng.uniform());
         }
      }
      st.seed = seed_stream(cfg.master_seed, "external-scenario", i);
      const auto scenario = build_stochastic(experts, cfg.horizon, st);
      RunOptions opts;
      opts.record_steps = false;
      opts.track_expert_losses = true;
      const auto run = run_protocol(scenario, LearnExp(experts.size(), out.eta), make_experts(experts),
                                    seed_stream(cfg.master_seed, "run", i), FeedMode::ForecasterGated, opts);
      out.runs[i] = external_regret_check(run, out.eta, experts.size(), cfg.horizon);
   });
   out.worst_slack = out.runs.front().bound - out.runs.front().external_regret;
   for(const auto& r : out.runs) {
      out.violations += r.holds ? 0 : 1;
      out.worst_slack = std::min(out.worst_slack, r.bound - r.external_regret);
   }
   return out;
}

// ---------------------------------------------------------------------------
// Sparse-feedback convex learners.

struct ConvexConfig {
   // alpha-OCP on a ball with oblivious linear losses.
   std::size_t ocp_dim = 2;
   double ocp_radius = 1.0;
   std::size_t ocp_horizon = 10000;
   std::vector< double > ocp_alphas{1.0, 0.5, 0.25, 0.1};
   std::size_t ocp_seeds = 100;
   std::pair< double, double > ocp_exponent{0.35, 0.65};

   // Stopping time of the random-horizon run.
   std::size_t rh_fed = 100;
   std::vector< double > rh_alphas{0.1, 0.5};
   std::size_t rh_trials = 10000;

   // Fixed-horizon alpha-OMD bound, both regularizers.
   std::size_t omd_dim = 3;
   std::size_t omd_horizon = 2000;
   std::vector< double > omd_alphas{1.0, 0.5, 0.25, 0.1};
   std::size_t omd_seeds = 100;

   // Doubling trick (reported, fit not asserted).
   std::vector< std::size_t > dbl_horizons{1024, 2048, 4096, 8192, 16384};
   std::vector< double > dbl_alphas{1.0, 0.25};
   std::size_t dbl_seeds = 50;

   // Learning-rate tail.
   std::vector< double > tail_products{24.0, 48.0};
   double tail_alpha = 0.5;
   std::size_t tail_trials = 100000;

   std::uint64_t master_seed = 1;
   std::size_t threads = 1;
};

inline ConvexConfig convex_from_json(const json& root)
{
   ConvexConfig c;
   const json j = root.contains("convex") ? root.at("convex") : json::object();
   if(j.contains("ocp")) {
      const auto& o = j.at("ocp");
      c.ocp_dim = o.value("dim", c.ocp_dim);
      c.ocp_radius = o.value("radius", c.ocp_radius);
      c.ocp_horizon = o.value("T", c.ocp_horizon);
      c.ocp_alphas = o.value("alphas", c.ocp_alphas);
      c.ocp_seeds = o.value("seeds", c.ocp_seeds);
      if(o.contains("exponent")) {
         const auto r = o.at("exponent").get< std::vector< double > >();
         if(r.size() != 2) {
            throw ConfigError("convex.ocp.exponent must be [low, high]");
         }
         c.ocp_exponent = {r[0], r[1]};
      }
   }
   if(j.contains("random_horizon")) {
      const auto& o = j.at("random_horizon");
      c.rh_fed = o.value("M", c.rh_fed);
      c.rh_alphas = o.value("alphas", c.rh_alphas);
      c.rh_trials = o.value("trials", c.rh_trials);
   }
   if(j.contains("omd")) {
      const auto& o = j.at("omd");
      c.omd_dim = o.value("dim", c.omd_dim);
      c.omd_horizon = o.value("T", c.omd_horizon);
      c.omd_alphas = o.value("alphas", c.omd_alphas);
      c.omd_seeds = o.value("seeds", c.omd_seeds);
   }
   if(j.contains("doubling")) {
      const auto& o = j.at("doubling");
      c.dbl_horizons = o.value("T", c.dbl_horizons);
      c.dbl_alphas = o.value("alphas", c.dbl_alphas);
      c.dbl_seeds = o.value("seeds", c.dbl_seeds);
   }
   if(j.contains("tail")) {
      const auto& o = j.at("tail");
      c.tail_products = o.value("t_alpha", c.tail_products);
      c.tail_alpha = o.value("alpha", c.tail_alpha);
      c.tail_trials = o.value("trials", c.tail_trials);
   }
   c.master_seed = root.value("master_seed", c.master_seed);
   c.threads = root.value("threads", c.threads);
   return c;
}

/// One aggregated line of convex-check output.
struct ConvexRow {
   std::string experiment;
   double alpha = 1.0;
   std::size_t horizon = 0;
   std::size_t seeds = 0;
   double value = 0.0;   ///< mean regret (or mean |T_stop - M/alpha|, or tail frequency)
   double stderr_value = 0.0;
   double bound = 0.0;
};

/// One seed of a convex experiment.
struct ConvexTrial {
   std::string experiment;
   double alpha = 1.0;
   std::size_t horizon = 0;
   std::uint64_t seed = 0;
   double regret = 0.0;
   double bound = 0.0;
};

struct ConvexResult {
   std::vector< ConvexRow > rows;
   std::vector< ConvexTrial > trials;
   std::vector< FitResult > fits;
   std::vector< Check > checks;
};

inline std::pair< double, double > mean_stderr(const std::vector< double >& v)
{
   const double n = static_cast< double >(v.size());
   double m = 0.0;
   for(double x : v) {
      m += x;
   }
   m /= n;
   double ss = 0.0;
   for(double x : v) {
      ss += (x - m) * (x - m);
   }
   return {m, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

/// Upper bound on the expected alpha-OCP regret, with the diameter squared as
/// the leading constant.
inline double ocp_regret_bound(const convex::ConvexSet& set, double lipschitz, std::size_t horizon, double alpha)
{
   const double d = set.diameter();
   const double r = std::sqrt(static_cast< double >(horizon) / alpha);
   return d * d * r + lipschitz * lipschitz * r + 24.0 / alpha;
}

inline ConvexResult convex_check(const ConvexConfig& cfg)
{
   using namespace convex;
   ConvexResult out;

   {
      const auto set = ConvexSet::ball(cfg.ocp_dim, cfg.ocp_radius);
      std::vector< FitPoint > pts;
      bool bound_ok = true;
      bool positive = true;
      for(double alpha : cfg.ocp_alphas) {
         std::vector< double > regrets(cfg.ocp_seeds);
         parallel_for(cfg.ocp_seeds, cfg.threads, [&](std::size_t i) {
            const auto seed = seed_stream(cfg.master_seed, "ocp", i);
            regrets[i] = run_alpha_ocp(set, drift_stream(set, seed), alpha, cfg.ocp_horizon, seed).regret;
         });
         const auto [m, se] = mean_stderr(regrets);
         const double bound = ocp_regret_bound(set, 1.0, cfg.ocp_horizon, alpha);
         out.rows.push_back({"alpha_ocp", alpha, cfg.ocp_horizon, cfg.ocp_seeds, m, se, bound});
         for(std::size_t i = 0; i < regrets.size(); ++i) {
            out.trials.push_back({"alpha_ocp", alpha, cfg.ocp_horizon, seed_stream(cfg.master_seed, "ocp", i), regrets[i], bound});
         }
         bound_ok = bound_ok && m <= bound;
         positive = positive && m > 0.0;
         pts.push_back({1.0 / alpha, m});
      }
      std::string detail;
      for(const auto& r : out.rows) {
         detail += fmt("a=%.2f:", r.alpha) + fmt("%.1f", r.value) + fmt("<=%.1f ", r.bound);
      }
      out.checks.push_back({"alpha-OCP regret bound", bound_ok, detail});
      if(positive && pts.size() >= 3) {
         auto fit = loglog_fit(pts, "alpha_ocp:regret_vs_inv_alpha");
         const auto [lo, hi] = cfg.ocp_exponent;
         out.checks.push_back({"alpha-OCP 1/alpha exponent", fit.exponent >= lo && fit.exponent <= hi,
                               fmt("fitted %.4f", fit.exponent) + fmt(" (r2 %.3f)", fit.r2) + fmt(" in [%.2f,", lo)
                                   + fmt(" %.2f]", hi)});
         out.fits.push_back(std::move(fit));
      } else {
         out.checks.push_back({"alpha-OCP 1/alpha exponent", false, "non-positive mean regret, no fit"});
      }
   }

   {
      const auto set = ConvexSet::simplex(3);
      bool ok = true;
      std::string detail;
      for(double alpha : cfg.rh_alphas) {
         std::vector< double > dev(cfg.rh_trials);
         std::vector< double > stop(cfg.rh_trials);
         const double target = static_cast< double >(cfg.rh_fed) / alpha;
         const OmdConfig omd{set, Regularizer::Entropic, doubling_block_eta(set, Regularizer::Entropic, 1.0, cfg.rh_fed)};
         parallel_for(cfg.rh_trials, cfg.threads, [&](std::size_t i) {
            const auto seed = seed_stream(cfg.master_seed, "random-horizon", i);
            const auto r = run_random_horizon(omd, drift_stream(set, seed), alpha, cfg.rh_fed, seed);
            stop[i] = static_cast< double >(r.steps);
            dev[i] = std::abs(stop[i] - target);
         });
         const auto [m, se] = mean_stderr(dev);
         const double bound = 14.0 * std::sqrt(static_cast< double >(cfg.rh_fed)) / alpha;
         out.rows.push_back({"random_horizon_abs_dev", alpha, cfg.rh_fed, cfg.rh_trials, m, se, bound});
         const auto [ms, ses] = mean_stderr(stop);
         out.rows.push_back({"random_horizon_stop_mean", alpha, cfg.rh_fed, cfg.rh_trials, ms, ses, target});
         ok = ok && m <= bound;
         detail += fmt("a=%.2f:", alpha) + fmt("%.2f", m) + fmt("<=%.1f ", bound);
      }
      out.checks.push_back({"random-horizon deviation", ok, detail});
   }

   {
      bool ok = true;
      std::string detail;
      for(auto reg : {Regularizer::Entropic, Regularizer::Euclidean}) {
         const auto set = reg == Regularizer::Entropic ? ConvexSet::simplex(cfg.omd_dim) : ConvexSet::ball(cfg.omd_dim, 1.0);
         const double lip = 1.0;
         const double range = regularizer_range(set, reg);
         const std::string name = reg == Regularizer::Entropic ? "omd_entropic" : "omd_euclidean";
         for(double alpha : cfg.omd_alphas) {
            // Rate tuned for the expected number of fed rounds.
            const double eta = std::sqrt(range / (alpha * static_cast< double >(cfg.omd_horizon))) / lip;
            std::vector< double > regrets(cfg.omd_seeds);
            std::vector< double > bounds(cfg.omd_seeds);
            parallel_for(cfg.omd_seeds, cfg.threads, [&](std::size_t i) {
               const auto seed = seed_stream(cfg.master_seed, name, i);
               const auto stream = drift_stream(set, seed);
               const auto r = run_alpha_omd({set, reg, eta}, stream, alpha, cfg.omd_horizon, seed);
               std::vector< LossFn > seen;
               for(std::size_t t = 0; t < cfg.omd_horizon; ++t) {
                  seen.push_back(stream(t, {}));
               }
               const auto u = best_in_hindsight(set, seen).point;
               regrets[i] = r.regret;
               bounds[i] = regularizer_value(reg, eta, u) / alpha + eta * static_cast< double >(cfg.omd_horizon) * lip * lip;
            });
            const auto [m, se] = mean_stderr(regrets);
            const double bm = mean_stderr(bounds).first;
            out.rows.push_back({name, alpha, cfg.omd_horizon, cfg.omd_seeds, m, se, bm});
            for(std::size_t i = 0; i < regrets.size(); ++i) {
               out.trials.push_back({name, alpha, cfg.omd_horizon, seed_stream(cfg.master_seed, name, i), regrets[i], bounds[i]});
            }
            ok = ok && m <= bm;
            detail += name.substr(4) + fmt(" a=%.2f:", alpha) + fmt("%.1f", m) + fmt("<=%.1f ", bm);
         }
      }
      out.checks.push_back({"alpha-OMD fixed-horizon bound", ok, detail});
   }

   {
      const auto set = ConvexSet::simplex(cfg.omd_dim);
      for(double alpha : cfg.dbl_alphas) {
         std::vector< FitPoint > pts;
         for(std::size_t horizon : cfg.dbl_horizons) {
            std::vector< double > regrets(cfg.dbl_seeds);
            parallel_for(cfg.dbl_seeds, cfg.threads, [&](std::size_t i) {
               const auto seed = seed_stream(cfg.master_seed, "doubling", i);
               const auto r = doubling_omd_run(set, Regularizer::Entropic, 1.0, drift_stream(set, seed), alpha, horizon, seed);
               regrets[i] = r.regret;
            });
            const auto [m, se] = mean_stderr(regrets);
            const double scale = std::sqrt(static_cast< double >(horizon) / alpha);
            out.rows.push_back({"doubling_omd", alpha, horizon, cfg.dbl_seeds, m, se, scale});
            for(std::size_t i = 0; i < regrets.size(); ++i) {
               out.trials.push_back({"doubling_omd", alpha, horizon, seed_stream(cfg.master_seed, "doubling", i), regrets[i], scale});
            }
            if(m > 0.0) {
               pts.push_back({static_cast< double >(horizon) / alpha, m});
            }
         }
         if(pts.size() >= 3) {
            out.fits.push_back(loglog_fit(pts, fmt("doubling_omd:alpha=%.2f:regret_vs_T_over_alpha", alpha)));
         }
      }
   }

   {
      bool ok = true;
      std::string detail;
      Rng rng(seed_stream(cfg.master_seed, "tail"));
      for(double product : cfg.tail_products) {
         const auto t = static_cast< std::size_t >(std::llround(product / cfg.tail_alpha));
         const double threshold = std::sqrt(2.0 / (static_cast< double >(t) * cfg.tail_alpha));
         std::size_t hits = 0;
         for(std::size_t trial = 0; trial < cfg.tail_trials; ++trial) {
            std::size_t fed = 0;
            for(std::size_t s = 0; s < t; ++s) {
               fed += rng.bernoulli(cfg.tail_alpha) ? 1 : 0;
            }
            hits += convex::ocp_learning_rate(fed) >= threshold ? 1 : 0;
         }
         const double freq = static_cast< double >(hits) / static_cast< double >(cfg.tail_trials);
         const double bound = std::exp(-product / 12.0);
         out.rows.push_back({"rate_tail", cfg.tail_alpha, t, cfg.tail_trials, freq, 0.0, bound});
         ok = ok && freq <= bound;
         detail += fmt("t*a=%.0f:", product) + fmt("%.5f", freq) + fmt("<=%.5f ", bound);
      }
      out.checks.push_back({"learning-rate tail", ok, detail});
   }
   return out;
}

inline constexpr const char* kConvexHeader = "experiment,alpha,T,seeds,value,stderr,bound\n";
inline constexpr const char* kConvexTrialHeader = "experiment,alpha,T,seed,regret,bound\n";

inline void append_convex_trial_csv(std::ostream& out, const ConvexTrial& r)
{
   out << r.experiment << ',' << fmt_double(r.alpha) << ',' << r.horizon << ',' << r.seed << ','
       << fmt_double(r.regret) << ',' << fmt_double(r.bound) << '\n';
}

inline void append_convex_csv(std::ostream& out, const ConvexRow& r)
{
   out << r.experiment << ',' << fmt_double(r.alpha) << ',' << r.horizon << ',' << r.seeds << ','
       << fmt_double(r.value) << ',' << fmt_double(r.stderr_value) << ',' << fmt_double(r.bound) << '\n';
}

}  // namespace learnexp
