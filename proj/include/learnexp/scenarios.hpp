#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "learnexp/core.hpp"
#include "learnexp/experts.hpp"
#include "learnexp/random.hpp"

namespace learnexp {

/// Piecewise-constant losses. `boundaries` are the right ends of the slots as
/// fractions of the horizon; `values[a][s]` is the loss of global action `a`
/// (experts in index order, then local index) on slot `s`.
struct PiecewiseTable {
   std::vector< double > boundaries;
   std::vector< std::vector< double > > values;

   bool operator==(const PiecewiseTable&) const = default;

   std::size_t num_slots() const { return boundaries.size(); }

   /// Last round (1-based) of each slot for horizon T.
   std::vector< std::size_t > slot_ends(std::size_t horizon) const
   {
      std::vector< std::size_t > ends;
      ends.reserve(boundaries.size());
      for(double b : boundaries) {
         ends.push_back(static_cast< std::size_t >(std::llround(b * static_cast< double >(horizon))));
      }
      return ends;
   }

   void validate(std::size_t num_actions) const
   {
      if(boundaries.empty()) {
         throw ConfigError("piecewise table has no slots");
      }
      for(std::size_t s = 0; s < boundaries.size(); ++s) {
         if(!(boundaries[s] > 0.0) || (s > 0 && !(boundaries[s] > boundaries[s - 1]))) {
            throw ConfigError("slot boundaries must be strictly increasing and positive");
         }
      }
      if(boundaries.back() != 1.0) {
         throw ConfigError("last slot boundary must be 1");
      }
      if(values.size() != num_actions) {
         throw ConfigError("piecewise table has " + std::to_string(values.size()) + " action rows, expected "
                           + std::to_string(num_actions));
      }
      for(const auto& row : values) {
         if(row.size() != boundaries.size()) {
            throw ConfigError("piecewise row length differs from slot count");
         }
         for(double v : row) {
            if(!(v >= 0.0 && v <= kMaxLoss)) {
               throw ConfigError("piecewise loss value " + std::to_string(v) + " outside [0, 1]");
            }
         }
      }
   }
};

inline ScenarioTrace build_piecewise(std::span< const ExpertSpec > experts, std::size_t horizon, const PiecewiseTable& table)
{
   const auto layouts = layouts_of(experts);
   std::size_t width = 0;
   for(const auto& l : layouts) {
      width += l.num_actions;
   }
   table.validate(width);
   if(horizon < 1) {
      throw ConfigError("scenario horizon must be >= 1");
   }
   const auto ends = table.slot_ends(horizon);
   std::vector< double > losses(horizon * width);
   std::size_t slot = 0;
   for(std::size_t t = 0; t < horizon; ++t) {
      while(slot + 1 < ends.size() && t + 1 > ends[slot]) {
         ++slot;
      }
      for(std::size_t a = 0; a < width; ++a) {
         losses[t * width + a] = table.values[a][slot];
      }
   }
   return ScenarioTrace(layouts, horizon, std::move(losses));
}

/// Bernoulli losses. Action `a` has mean means[a] + drift * t / T at step t,
/// clipped to [0, 1].
struct StochasticSpec {
   std::vector< double > means;
   double drift = 0.0;
   std::uint64_t seed = 0;

   bool operator==(const StochasticSpec&) const = default;
};

inline ScenarioTrace build_stochastic(std::span< const ExpertSpec > experts, std::size_t horizon, const StochasticSpec& spec)
{
   const auto layouts = layouts_of(experts);
   std::size_t width = 0;
   for(const auto& l : layouts) {
      width += l.num_actions;
   }
   if(spec.means.size() != width) {
      throw ConfigError("stochastic spec has " + std::to_string(spec.means.size()) + " means, expected "
                        + std::to_string(width));
   }
   for(double m : spec.means) {
      if(!(m >= 0.0 && m <= 1.0)) {
         throw ConfigError("stochastic mean " + std::to_string(m) + " outside [0, 1]");
      }
   }
   if(horizon < 1) {
      throw ConfigError("scenario horizon must be >= 1");
   }
   Rng rng(seed_stream(spec.seed, "scenario"));
   std::vector< double > losses(horizon * width);
   const double T = static_cast< double >(horizon);
   for(std::size_t t = 0; t < horizon; ++t) {
      for(std::size_t a = 0; a < width; ++a) {
         const double m = std::clamp(spec.means[a] + spec.drift * static_cast< double >(t) / T, 0.0, 1.0);
         losses[t * width + a] = rng.bernoulli(m) ? 1.0 : 0.0;
      }
   }
   return ScenarioTrace(layouts, horizon, std::move(losses));
}

// ---------------------------------------------------------------------------
// Three-scenario construction on which ungated forecasting keeps a constant
// average regret. Expert 0 runs Hedge over {a1, a2}; expert 1 always plays b.
// Slots: S1 = [0, T/4], S2 = (T/4, T/2], S3 = (T/2, 11T/12], S4 = (11T/12, T].

namespace hardness {
inline constexpr std::size_t kA1 = 0;
inline constexpr std::size_t kA2 = 1;
inline constexpr std::size_t kB = 2;
inline constexpr std::array< const char*, 3 > kActionNames{"a1", "a2", "b"};
inline constexpr std::array< const char*, 4 > kSlotNames{"S1", "S2", "S3", "S4"};
inline const std::vector< double > kBoundaries{0.25, 0.5, 11.0 / 12.0, 1.0};

/// Per-slot losses of the first scenario for the two actions that are not
/// fixed by construction (a1 is always 1, 0, 0.5, 0).
struct Profile {
   std::array< double, 4 > a2;
   std::array< double, 4 > b;
};

/// Tables where a2 and b both sit at 0.5 - 3d/2 in S2 and b costs 0.75 in S1.
inline Profile reference_profile(double delta)
{
   const double low = 0.5 - 1.5 * delta;
   return {{0.5, low, 0.5, 0.5}, {0.75, low, 0.5, 0.5}};
}

/// Tables where b is only slightly dearer than a2 in S1 and a2 is expensive
/// in S2, so an ungated forecaster that leans on expert 0 in S1 leaves it in
/// S2 before its Hedge has seen enough of a1 to switch.
inline Profile blind_spot_profile(double delta)
{
   return {{0.5, 1.0, 0.5, 0.5}, {0.55, 0.5 - 1.5 * delta, 0.5, 0.5}};
}

enum class Variant { BlindSpot, Reference };

inline std::string to_string(Variant v) { return v == Variant::BlindSpot ? "blind_spot" : "reference"; }

inline Variant variant_from_string(const std::string& s)
{
   if(s == "blind_spot") return Variant::BlindSpot;
   if(s == "reference") return Variant::Reference;
   throw ConfigError("unknown hardness variant '" + s + "'");
}
}  // namespace hardness

struct HardnessTrio {
   std::size_t horizon = 0;
   double delta = 0.01;
   std::array< PiecewiseTable, 3 > tables;  ///< L1, L2, L3

   static std::vector< ExpertSpec > experts()
   {
      return {{0, ExpertKind::Hedge, 2, 0}, {1, ExpertKind::Constant, 1, 0}};
   }

   ScenarioTrace scenario(std::size_t which) const
   {
      const auto e = experts();
      return build_piecewise(e, horizon, tables.at(which));
   }
};

inline HardnessTrio build_hardness_trio(std::size_t horizon,
                                        double delta = 0.01,
                                        hardness::Variant variant = hardness::Variant::BlindSpot)
{
   if(horizon == 0 || horizon % 12 != 0) {
      throw ConfigError("hardness horizon must be a positive multiple of 12");
   }
   if(!(delta > 0.0 && delta <= 0.1)) {
      throw ConfigError("hardness delta must lie in (0, 0.1]");
   }
   const auto prof = variant == hardness::Variant::BlindSpot ? hardness::blind_spot_profile(delta)
                                                             : hardness::reference_profile(delta);
   const std::vector< double > a1{1.0, 0.0, 0.5, 0.0};
   const std::vector< double > a2(prof.a2.begin(), prof.a2.end());
   const std::vector< double > b(prof.b.begin(), prof.b.end());

   HardnessTrio trio;
   trio.horizon = horizon;
   trio.delta = delta;
   trio.tables[0] = {hardness::kBoundaries, {a1, a2, b}};
   // Same as L1 up to T/2, then expert 1 wins.
   trio.tables[1] = {hardness::kBoundaries, {{a1[0], a1[1], 1.0, 1.0}, {a2[0], a2[1], 1.0, 1.0}, {b[0], b[1], 0.0, 0.0}}};
   // Same as L1 up to T/4, then a1 wins outright.
   trio.tables[2] = {hardness::kBoundaries, {{a1[0], 0.0, 0.0, 0.0}, {a2[0], 1.0, 1.0, 1.0}, {b[0], 1.0, 1.0, 1.0}}};
   return trio;
}

/// Total loss of action `a` on table `which` (exact slot sum).
inline double slot_sum(const HardnessTrio& trio, std::size_t which, std::size_t action)
{
   const auto& tab = trio.tables.at(which);
   const auto ends = tab.slot_ends(trio.horizon);
   double total = 0.0;
   std::size_t prev = 0;
   for(std::size_t s = 0; s < ends.size(); ++s) {
      total += tab.values.at(action).at(s) * static_cast< double >(ends[s] - prev);
      prev = ends[s];
   }
   return total;
}

inline std::vector< std::string > check_hardness_constraints(const HardnessTrio& trio)
{
   using namespace hardness;
   std::vector< std::string > out;
   const double T = static_cast< double >(trio.horizon);
   const double d = trio.delta;
   constexpr double tol = 1e-9;

   if(trio.horizon == 0 || trio.horizon % 12 != 0) {
      out.push_back("horizon not a positive multiple of 12");
      return out;
   }
   for(std::size_t k = 0; k < 3; ++k) {
      const auto& tab = trio.tables[k];
      const std::string name = "L" + std::to_string(k + 1);
      if(tab.boundaries != kBoundaries) {
         out.push_back(name + " slot boundaries differ from T/4, T/2, 11T/12, T");
         return out;
      }
      if(tab.values.size() != 3) {
         out.push_back(name + " must define losses for a1, a2, b");
         return out;
      }
      for(std::size_t a = 0; a < 3; ++a) {
         if(tab.values[a].size() != 4) {
            out.push_back(name + " " + kActionNames[a] + " must have 4 slot values");
            return out;
         }
         for(std::size_t s = 0; s < 4; ++s) {
            const double v = tab.values[a][s];
            if(!(v >= 0.0 && v <= 1.0)) {
               out.push_back(name + " " + kActionNames[a] + " loss outside [0, 1] on " + kSlotNames[s]);
            }
         }
      }
   }

   const auto& l1 = trio.tables[0];
   const auto& l3 = trio.tables[2];
   for(std::size_t a = 0; a < 3; ++a) {
      if(l3.values[a][0] != l1.values[a][0]) {
         out.push_back(std::string("L3 prefix: ") + kActionNames[a] + " differs from L1 on S1");
      }
   }
   const double a1_total = slot_sum(trio, 0, kA1);
   if(std::abs(a1_total - 11.0 * T / 24.0) > tol * T) {
      out.push_back("a1 cumulative != 11T/24 on L1");
   }
   for(std::size_t a = 0; a < 3; ++a) {
      for(std::size_t s : {std::size_t{0}, std::size_t{2}}) {
         if(l1.values[a][s] < 0.5 - tol) {
            out.push_back(std::string("L1 ") + kActionNames[a] + " below 0.5 on " + kSlotNames[s]);
         }
      }
   }
   for(std::size_t a : {kA2, kB}) {
      if(l1.values[a][1] < 0.5 - 1.5 * d - tol) {
         out.push_back(std::string("L1 ") + kActionNames[a] + " below 0.5 - 3d/2 on S2");
      }
   }
   if(std::abs(l1.values[kA2][3] - 0.5) > tol) {
      out.push_back("L1 a2 != 0.5 on S4");
   }
   if(!(a1_total < slot_sum(trio, 0, kA2) && a1_total < slot_sum(trio, 0, kB))) {
      out.push_back("a1 is not the strict cumulative minimizer on L1");
   }
   return out;
}

/// Expert 0's perceived lead of a2 over a1 at the start of S4 on L1: the sum
/// of l(a1) - l(a2) over rounds in S1..S3 that are not blocked. Rounds are
/// 1-based.
inline double perceived_gap_oracle(const HardnessTrio& trio, std::span< const std::size_t > blocked_rounds)
{
   const std::size_t end = trio.tables[0].slot_ends(trio.horizon)[2];
   std::vector< bool > blocked(end + 1, false);
   for(std::size_t r : blocked_rounds) {
      if(r == 0 || r > trio.horizon) {
         throw std::invalid_argument("perceived_gap_oracle: round out of range");
      }
      if(r <= end) {
         blocked[r] = true;
      }
   }
   const auto l1 = trio.scenario(0);
   double gap = 0.0;
   for(std::size_t r = 1; r <= end; ++r) {
      if(!blocked[r]) {
         gap += l1.loss(r - 1, {0, 0}) - l1.loss(r - 1, {0, 1});
      }
   }
   return gap;
}

}  // namespace learnexp
