#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "learnexp/core.hpp"
#include "learnexp/experts.hpp"
#include "learnexp/fit.hpp"
#include "learnexp/forecasters.hpp"
#include "learnexp/scenarios.hpp"

namespace learnexp {

using json = nlohmann::json;

inline constexpr int kScenarioFormatVersion = 1;

/// Reference to one table of the hardness construction.
struct HardnessRef {
   double delta = 0.01;
   hardness::Variant variant = hardness::Variant::BlindSpot;
   std::size_t table = 1;  ///< 1, 2 or 3

   bool operator==(const HardnessRef&) const = default;
};

/// Everything needed to rebuild a ScenarioTrace.
struct ScenarioSpec {
   int version = kScenarioFormatVersion;
   std::size_t horizon = 1;
   std::vector< ExpertSpec > experts;
   std::variant< PiecewiseTable, StochasticSpec, HardnessRef > source;

   bool operator==(const ScenarioSpec&) const = default;
};

inline ScenarioTrace build_scenario(const ScenarioSpec& spec)
{
   if(spec.version != kScenarioFormatVersion) {
      throw ConfigError("unsupported scenario format version " + std::to_string(spec.version));
   }
   if(const auto* h = std::get_if< HardnessRef >(&spec.source)) {
      if(h->table < 1 || h->table > 3) {
         throw ConfigError("hardness table must be 1, 2 or 3");
      }
      if(spec.experts != HardnessTrio::experts()) {
         throw ConfigError("hardness scenarios use a Hedge expert over {a1, a2} and a constant expert b");
      }
      return build_hardness_trio(spec.horizon, h->delta, h->variant).scenario(h->table - 1);
   }
   if(const auto* p = std::get_if< PiecewiseTable >(&spec.source)) {
      return build_piecewise(spec.experts, spec.horizon, *p);
   }
   return build_stochastic(spec.experts, spec.horizon, std::get< StochasticSpec >(spec.source));
}

// ---------------------------------------------------------------------------
// JSON mapping.

inline json to_json(const ExpertSpec& e)
{
   json j{{"index", e.index}, {"kind", to_string(e.kind)}, {"K", e.num_actions}};
   if(e.kind == ExpertKind::Constant) {
      j["action"] = e.constant_action;
   }
   return j;
}

inline ExpertSpec expert_from_json(const json& j)
{
   ExpertSpec e;
   e.index = j.at("index").get< std::size_t >();
   e.kind = expert_kind_from_string(j.at("kind").get< std::string >());
   e.num_actions = j.value("K", std::size_t{1});
   e.constant_action = j.value("action", std::size_t{0});
   return e;
}

inline std::vector< ExpertSpec > experts_from_json(const json& arr)
{
   std::vector< ExpertSpec > out;
   for(const auto& e : arr) {
      out.push_back(expert_from_json(e));
   }
   return out;
}

inline json to_json(const ScenarioSpec& s)
{
   json j{{"version", s.version}, {"T", s.horizon}};
   j["experts"] = json::array();
   for(const auto& e : s.experts) {
      j["experts"].push_back(to_json(e));
   }
   if(const auto* p = std::get_if< PiecewiseTable >(&s.source)) {
      j["slots"] = p->boundaries;
      j["losses"] = p->values;
   } else if(const auto* st = std::get_if< StochasticSpec >(&s.source)) {
      j["stochastic"] = {{"means", st->means}, {"drift", st->drift}, {"seed", st->seed}};
   } else {
      const auto& h = std::get< HardnessRef >(s.source);
      j["hardness"] = {{"delta", h.delta}, {"variant", hardness::to_string(h.variant)}, {"table", h.table}};
   }
   return j;
}

inline ScenarioSpec scenario_from_json(const json& j)
{
   ScenarioSpec s;
   s.version = j.value("version", kScenarioFormatVersion);
   if(s.version != kScenarioFormatVersion) {
      throw ConfigError("unsupported scenario format version " + std::to_string(s.version));
   }
   s.horizon = j.at("T").get< std::size_t >();
   if(j.contains("hardness")) {
      const auto& h = j.at("hardness");
      HardnessRef ref;
      ref.delta = h.value("delta", 0.01);
      ref.variant = hardness::variant_from_string(h.value("variant", std::string("blind_spot")));
      ref.table = h.value("table", std::size_t{1});
      s.experts = j.contains("experts") ? experts_from_json(j.at("experts")) : HardnessTrio::experts();
      s.source = ref;
      return s;
   }
   s.experts = experts_from_json(j.at("experts"));
   if(j.contains("stochastic")) {
      const auto& st = j.at("stochastic");
      StochasticSpec spec;
      spec.means = st.at("means").get< std::vector< double > >();
      spec.drift = st.value("drift", 0.0);
      spec.seed = st.value("seed", std::uint64_t{0});
      s.source = spec;
   } else if(j.contains("slots")) {
      PiecewiseTable p;
      p.boundaries = j.at("slots").get< std::vector< double > >();
      p.values = j.at("losses").get< std::vector< std::vector< double > > >();
      s.source = p;
   } else {
      throw ConfigError("scenario needs one of 'slots'/'losses', 'stochastic' or 'hardness'");
   }
   return s;
}

inline json read_json_file(const std::filesystem::path& path)
{
   std::ifstream in(path);
   if(!in) {
      throw ConfigError("cannot open " + path.string());
   }
   try {
      return json::parse(in);
   } catch(const json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
   }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
   std::ofstream out(path);
   if(!out) {
      throw std::runtime_error("cannot write " + path.string());
   }
   out << text;
}

inline std::string save_scenario(const ScenarioSpec& s) { return to_json(s).dump(2) + "\n"; }
inline ScenarioSpec load_scenario(const std::string& text) { return scenario_from_json(json::parse(text)); }

// ---------------------------------------------------------------------------
// CSV and report output.

inline std::string fmt_double(double v)
{
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.17g", v);
   return buf;
}

inline constexpr const char* kStepsHeader
    = "run_id,seed,t,selected_expert,action_expert,action_local,prob,loss,gate,cumulative_loss\n";

inline void append_steps_csv(std::ostream& out, const std::string& run_id, const RunRecord& run)
{
   double cum = 0.0;
   for(const auto& r : run.records) {
      cum += r.loss;
      out << run_id << ',' << run.seed << ',' << r.t << ',' << r.selected << ',' << r.action.expert << ','
          << r.action.local << ',' << fmt_double(r.prob) << ',' << fmt_double(r.loss) << ',' << (r.gate ? 1 : 0)
          << ',' << fmt_double(cum) << '\n';
   }
}

struct SummaryRow {
   std::string experiment;
   std::string scenario;
   std::size_t horizon = 0;
   std::string forecaster;
   double eta = 0.0;
   double mean_regret = 0.0;
   double stderr_regret = 0.0;
   std::size_t n_seeds = 0;
   double forecaster_loss = 0.0;
   double best_comparator = 0.0;
};

inline constexpr const char* kSummaryHeader
    = "experiment,scenario,T,forecaster,eta,mean_regret,stderr,n_seeds,forecaster_loss,best_comparator\n";

inline void append_summary_csv(std::ostream& out, const SummaryRow& r)
{
   out << r.experiment << ',' << r.scenario << ',' << r.horizon << ',' << r.forecaster << ',' << fmt_double(r.eta)
       << ',' << fmt_double(r.mean_regret) << ',' << fmt_double(r.stderr_regret) << ',' << r.n_seeds << ','
       << fmt_double(r.forecaster_loss) << ',' << fmt_double(r.best_comparator) << '\n';
}

inline json fits_to_json(const std::vector< FitResult >& fits)
{
   json arr = json::array();
   for(const auto& f : fits) {
      json pts = json::array();
      for(const auto& p : f.points) {
         pts.push_back({p.x, p.y});
      }
      arr.push_back({{"name", f.name}, {"exponent", f.exponent}, {"stderr", f.stderr_exponent}, {"r2", f.r2},
                     {"points", pts}});
   }
   return arr;
}

/// Parses steps.csv text back into per-run cumulative losses, keyed by run_id.
inline std::map< std::string, double > cumulative_losses_from_steps_csv(std::istream& in)
{
   std::map< std::string, double > out;
   std::string line;
   std::getline(in, line);
   while(std::getline(in, line)) {
      if(line.empty()) {
         continue;
      }
      std::stringstream ss(line);
      std::vector< std::string > cols;
      std::string c;
      while(std::getline(ss, c, ',')) {
         cols.push_back(c);
      }
      if(cols.size() != 10) {
         throw std::runtime_error("malformed steps.csv row: " + line);
      }
      out[cols[0]] += std::stod(cols[7]);
   }
   return out;
}

}  // namespace learnexp
