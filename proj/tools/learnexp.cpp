// Command-line driver: run, sweep, hardness, convex-check, validate-scenario.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "learnexp/learnexp.hpp"

namespace fs = std::filesystem;
using namespace learnexp;

namespace {

struct CommonFlags {
   std::string config;
   std::optional< std::size_t > seeds;
   std::string out = "out";
   std::optional< double > eta_mult;
   std::optional< double > beta;
   std::optional< std::size_t > threads;
};

void add_common(CLI::App* app, CommonFlags& f, bool config_required)
{
   auto* c = app->add_option("--config", f.config, "JSON config file");
   if(config_required) {
      c->required();
   }
   app->add_option("--seeds", f.seeds, "number of seeds (overrides config)");
   app->add_option("--out", f.out, "output directory")->capture_default_str();
   app->add_option("--eta-mult", f.eta_mult, "multiplier on the forecaster rate");
   app->add_option("--beta", f.beta, "expert regret exponent used to set the rate");
   app->add_option("--threads", f.threads, "worker threads");
}

json load_config(const CommonFlags& f)
{
   json j = f.config.empty() ? json::object() : read_json_file(f.config);
   if(j.contains("scenario_file")) {
      fs::path p = j.at("scenario_file").get< std::string >();
      if(p.is_relative() && !f.config.empty()) {
         p = fs::path(f.config).parent_path() / p;
      }
      j["scenario"] = read_json_file(p);
   }
   if(f.seeds) j["seeds"] = *f.seeds;
   if(f.eta_mult) j["eta_mult"] = *f.eta_mult;
   if(f.beta) j["beta"] = *f.beta;
   if(f.threads) j["threads"] = *f.threads;
   return j;
}

struct Outputs {
   fs::path dir;
   std::ofstream steps;
   std::ofstream summary;
   std::ostringstream report;
   std::vector< FitResult > fits;
   std::vector< Check > checks;

   explicit Outputs(const std::string& out, const char* summary_header = kSummaryHeader) : dir(out)
   {
      fs::create_directories(dir);
      steps.open(dir / "steps.csv");
      summary.open(dir / "summary.csv");
      if(!steps || !summary) {
         throw std::runtime_error("cannot write into " + dir.string());
      }
      steps << kStepsHeader;
      summary << summary_header;
   }

   void row(const SummaryRow& r)
   {
      append_summary_csv(summary, r);
      summary.flush();
   }

   int finish()
   {
      steps.close();
      summary.close();
      write_text_file(dir / "fits.json", fits_to_json(fits).dump(2) + "\n");
      if(!fits.empty()) {
         report << "\nfits\n";
         for(const auto& f : fits) {
            report << "  " << f.name << ": exponent " << fmt("%.4f", f.exponent) << " (stderr "
                   << fmt("%.4f", f.stderr_exponent) << ", r2 " << fmt("%.4f", f.r2) << ")\n";
         }
      }
      report << "\nchecks\n";
      if(checks.empty()) {
         report << "  (none asserted)\n";
      }
      for(const auto& c : checks) {
         report << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << ": " << c.detail << "\n";
      }
      const bool ok = all_passed(checks);
      report << "\nresult: " << (ok ? "all asserted bounds hold" : "some asserted bound failed") << "\n";
      write_text_file(dir / "report.txt", report.str());
      std::cout << report.str();
      return ok ? 0 : 1;
   }
};

void external_section(const json& j, Outputs& out)
{
   if(!j.contains("external")) {
      return;
   }
   const auto& e = j.at("external");
   ExternalConfig cfg;
   cfg.scenarios = e.value("scenarios", cfg.scenarios);
   cfg.num_experts = e.value("N", cfg.num_experts);
   cfg.horizon = e.value("T", cfg.horizon);
   cfg.eta_mult = j.value("eta_mult", 1.0);
   cfg.master_seed = j.value("master_seed", cfg.master_seed);
   cfg.threads = j.value("threads", cfg.threads);
   const auto r = external_regret_sweep(cfg);
   out.report << "\nexternal regret vs recommendation traces: " << cfg.scenarios << " scenarios, N=" << cfg.num_experts
              << ", T=" << cfg.horizon << ", eta=" << fmt("%.5f", r.eta) << "\n";
   double worst = r.runs.front().external_regret;
   for(const auto& x : r.runs) {
      worst = std::max(worst, x.external_regret);
   }
   out.report << "  largest external regret " << fmt("%.2f", worst) << ", bound " << fmt("%.2f", r.runs.front().bound)
              << "\n";
   out.checks.push_back({"external regret bound", r.violations == 0,
                         std::to_string(r.violations) + " violations, smallest slack " + fmt("%.2f", r.worst_slack)});
}

int cmd_run(const CommonFlags& f)
{
   const json j = load_config(f);
   if(!j.contains("scenario") && j.contains("external")) {
      Outputs out(f.out);
      external_section(j, out);
      return out.finish();
   }
   const auto cfg = experiment_from_json(j);
   Outputs out(f.out);
   out.report << "run " << cfg.name << ": " << to_string(cfg.forecaster.kind) << ", " << cfg.scenario.experts.size()
              << " experts, " << cfg.seeds << " seeds, mode " << to_string(cfg.effective_mode()) << "\n";
   for(std::size_t horizon : cfg.horizons) {
      const auto h = evaluate_horizon(cfg, horizon, cfg.seeds);
      for(std::size_t i = 0; i < h.recorded.size(); ++i) {
         append_steps_csv(out.steps, "T" + std::to_string(horizon) + "-s" + std::to_string(i), h.recorded[i]);
      }
      const auto row = summary_row(cfg.name, scenario_label(cfg.scenario), to_string(cfg.forecaster.kind), h);
      out.row(row);
      out.report << "  T=" << horizon << " eta=" << fmt("%.5f", h.eta) << " regret " << fmt("%.3f", row.mean_regret)
                 << " (se " << fmt("%.3f", row.stderr_regret) << "), forecaster loss "
                 << fmt("%.3f", row.forecaster_loss) << ", best comparator " << fmt("%.3f", row.best_comparator) << "\n";
      if(cfg.regret_cap_coef) {
         const double cap = *cfg.regret_cap_coef * std::pow(static_cast< double >(horizon), cfg.regret_cap_power);
         out.checks.push_back({"T=" + std::to_string(horizon) + " regret cap", row.mean_regret <= cap,
                               fmt("%.3f", row.mean_regret) + fmt(" <= %.3f", cap)});
      }
   }
   external_section(j, out);
   return out.finish();
}

int cmd_sweep(const CommonFlags& f)
{
   const json j = load_config(f);
   const auto cfg = experiment_from_json(j);
   Outputs out(f.out);
   out.report << "sweep " << cfg.name << ": " << to_string(cfg.forecaster.kind) << ", "
              << cfg.scenario.experts.size() << " experts, beta " << fmt("%.3f", cfg.effective_beta()) << ", eta x"
              << fmt("%.3f", cfg.eta_mult) << ", " << cfg.seeds << " seeds\n";
   const auto r = sweep(cfg, 1, [&](const SummaryRow& row) { out.row(row); });
   for(const auto& h : r.horizons) {
      for(std::size_t i = 0; i < h.recorded.size(); ++i) {
         append_steps_csv(out.steps, "T" + std::to_string(h.horizon) + "-s" + std::to_string(i), h.recorded[i]);
      }
      out.report << "  T=" << h.horizon << " eta=" << fmt("%.5f", h.eta) << " regret "
                 << fmt("%.3f", h.report.regret) << " (se " << fmt("%.3f", h.stderr_regret) << ")\n";
   }
   if(r.fit) {
      out.fits.push_back(*r.fit);
   }
   out.checks = r.checks;
   external_section(j, out);
   return out.finish();
}

int cmd_hardness(const CommonFlags& f)
{
   const json j = load_config(f);
   const auto cfg = hardness_from_json(j);
   Outputs out(f.out);
   out.report << "hardness demo: T=" << cfg.horizon << ", delta " << fmt("%.3f", cfg.delta) << ", tables "
              << hardness::to_string(cfg.variant) << ", " << cfg.seeds << " seeds\n";
   const auto r = hardness_demo(cfg, [&](const SummaryRow& row) { out.row(row); });
   for(const auto& c : r.cells) {
      out.report << "  " << to_string(c.forecaster) << " T=" << c.horizon << ": average regret";
      for(std::size_t k = 0; k < 3; ++k) {
         out.report << " L" << (k + 1) << " " << fmt("%.5f", c.average(k));
      }
      out.report << ", mixture " << fmt("%.5f", c.mixture()) << " (se " << fmt("%.5f", c.mixture_stderr()) << ")\n";
   }
   // One recorded run per forecaster on L1 for inspection.
   const auto l1 = build_hardness_trio(cfg.horizon, cfg.delta, cfg.variant).scenario(0);
   const auto experts = HardnessTrio::experts();
   std::vector< ForecasterKind > kinds = cfg.ungated;
   kinds.push_back(ForecasterKind::LearnExp);
   for(auto k : kinds) {
      const ForecasterSpec fs{k, hardness_eta(cfg.horizon, cfg.eta_mult), 0};
      const auto run = run_specs(l1, fs, experts, run_seeds(cfg.master_seed, 1)[0], natural_mode(k));
      append_steps_csv(out.steps, to_string(k) + "-L1-T" + std::to_string(cfg.horizon), run.record);
   }
   out.checks = r.checks;
   return out.finish();
}

int cmd_convex(const CommonFlags& f)
{
   json j = load_config(f);
   if(f.seeds) {
      // --seeds sets the per-alpha seed counts of the regret experiments.
      auto& c = j["convex"];
      c["ocp"]["seeds"] = *f.seeds;
      c["omd"]["seeds"] = *f.seeds;
      c["doubling"]["seeds"] = *f.seeds;
   }
   const auto cfg = convex_from_json(j);
   Outputs out(f.out, kConvexHeader);
   const auto r = convex_check(cfg);
   std::ofstream trials(out.dir / "convex_trials.csv");
   trials << kConvexTrialHeader;
   for(const auto& t : r.trials) {
      append_convex_trial_csv(trials, t);
   }
   out.report << "convex checks\n";
   for(const auto& row : r.rows) {
      append_convex_csv(out.summary, row);
      out.report << "  " << row.experiment << " alpha=" << fmt("%.3f", row.alpha) << " T=" << row.horizon
                 << ": value " << fmt("%.4f", row.value) << " (se " << fmt("%.4f", row.stderr_value) << "), bound "
                 << fmt("%.4f", row.bound) << "\n";
   }
   out.fits = r.fits;
   out.checks = r.checks;
   return out.finish();
}

int cmd_validate(const CommonFlags& f, std::size_t horizon, double delta, const std::string& variant)
{
   std::vector< std::string > problems;
   std::string what;
   try {
      if(!f.config.empty()) {
         const auto spec = scenario_from_json(read_json_file(f.config));
         what = f.config;
         if(const auto* h = std::get_if< HardnessRef >(&spec.source)) {
            problems = check_hardness_constraints(build_hardness_trio(spec.horizon, h->delta, h->variant));
         }
         if(problems.empty()) {
            const auto trace = build_scenario(spec);
            what += " (T=" + std::to_string(trace.horizon()) + ", " + std::to_string(trace.num_experts())
                    + " experts, " + std::to_string(trace.total_actions()) + " actions)";
         }
      } else {
         what = "hardness trio T=" + std::to_string(horizon) + " delta=" + fmt("%.4f", delta) + " " + variant;
         problems = check_hardness_constraints(build_hardness_trio(horizon, delta, hardness::variant_from_string(variant)));
      }
   } catch(const ConfigError& e) {
      problems.push_back(e.what());
   }
   if(problems.empty()) {
      std::cout << "valid: " << what << "\n";
      return 0;
   }
   std::cout << "invalid: " << what << "\n";
   for(const auto& p : problems) {
      std::cout << "  " << p << "\n";
   }
   return 1;
}

}  // namespace

int main(int argc, char** argv)
{
   CLI::App app{"Expert-advice simulations where the experts are learners"};
   app.require_subcommand(1);

   CommonFlags run_f, sweep_f, hard_f, convex_f, valid_f;
   auto* run = app.add_subcommand("run", "run one configuration over all seeds");
   add_common(run, run_f, true);
   auto* sw = app.add_subcommand("sweep", "regret over a list of horizons with a log-log fit");
   add_common(sw, sweep_f, true);
   auto* hard = app.add_subcommand("hardness", "ungated vs gated forecasters on the three-scenario construction");
   add_common(hard, hard_f, false);
   auto* cvx = app.add_subcommand("convex-check", "sparse-feedback convex learner bounds");
   add_common(cvx, convex_f, false);
   auto* val = app.add_subcommand("validate-scenario", "check a scenario file or the hardness constraints");
   add_common(val, valid_f, false);
   std::size_t v_horizon = 24000;
   double v_delta = 0.01;
   std::string v_variant = "blind_spot";
   val->add_option("--T", v_horizon, "hardness horizon when no file is given")->capture_default_str();
   val->add_option("--delta", v_delta, "hardness gap")->capture_default_str();
   val->add_option("--variant", v_variant, "blind_spot or reference")->capture_default_str();

   CLI11_PARSE(app, argc, argv);

   try {
      if(*run) return cmd_run(run_f);
      if(*sw) return cmd_sweep(sweep_f);
      if(*hard) return cmd_hardness(hard_f);
      if(*cvx) return cmd_convex(convex_f);
      if(*val) return cmd_validate(valid_f, v_horizon, v_delta, v_variant);
   } catch(const ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return 2;
   } catch(const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
   }
   return 2;
}
