#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "learnexp/core.hpp"
#include "learnexp/random.hpp"

namespace learnexp {

/// Mixed exponential-weights distribution
///   p_j = (1 - eta) w_j / sum_k w_k + eta / N
/// evaluated from log-weights with a max shift.
inline std::vector< double > compute_probs(std::span< const double > log_weights, double eta)
{
   const std::size_t n = log_weights.size();
   const double mx = *std::max_element(log_weights.begin(), log_weights.end());
   std::vector< double > p(n);
   double s = 0.0;
   for(std::size_t j = 0; j < n; ++j) {
      p[j] = std::exp(log_weights[j] - mx);
      s += p[j];
   }
   const double floor = eta / static_cast< double >(n);
   for(double& x : p) {
      x = (1.0 - eta) * x / s + floor;
   }
   return p;
}

/// Importance-weighted loss estimate: loss / p at the selected expert, zero
/// elsewhere.
inline std::vector< double > loss_estimate(double loss, std::size_t selected, std::span< const double > probs)
{
   std::vector< double > est(probs.size(), 0.0);
   est.at(selected) = loss / probs[selected];
   return est;
}

/// w_j <- w_j exp(-eta * est_j / N), in log space.
inline void weight_update(std::span< double > log_weights, std::span< const double > estimate, double eta)
{
   const double n = static_cast< double >(log_weights.size());
   for(std::size_t j = 0; j < log_weights.size(); ++j) {
      log_weights[j] -= eta * estimate[j] / n;
   }
}

/// Probability that the selected expert is allowed to learn: eta / (N p).
/// The product with p is eta / N for every expert.
inline double gate_probability(std::span< const double > probs, std::size_t selected, double eta)
{
   return std::min(1.0, eta / (static_cast< double >(probs.size()) * probs[selected]));
}

/// Mixing rate from the regret analysis with constant factor 1:
///   min(1, (N / T)^((1 - b) / (2 - b)) * sqrt(ln N) [b == 0 only]).
/// ln N is replaced by 1 when N = 1.
inline double theorem2_eta(std::size_t horizon, std::size_t num_experts, double beta)
{
   if(horizon < 1 || num_experts < 1 || beta < 0.0 || beta > 1.0) {
      throw ConfigError("theorem2_eta: need T >= 1, N >= 1, beta in [0, 1]");
   }
   const double e = (1.0 - beta) / (2.0 - beta);
   const double n = static_cast< double >(num_experts);
   double eta = std::pow(n / static_cast< double >(horizon), e);
   if(beta == 0.0) {
      eta *= std::sqrt(num_experts == 1 ? 1.0 : std::log(n));
   }
   return std::min(1.0, eta);
}

struct Selection {
   std::size_t expert = 0;
   double prob = 1.0;
};

enum class ForecasterKind { LearnExp, Exp3Ungated, Uniform, FixedExpert };

inline std::string to_string(ForecasterKind kind)
{
   switch(kind) {
      case ForecasterKind::LearnExp: return "learnexp";
      case ForecasterKind::Exp3Ungated: return "exp3_ungated";
      case ForecasterKind::Uniform: return "uniform";
      case ForecasterKind::FixedExpert: return "fixed";
   }
   return "?";
}

inline ForecasterKind forecaster_kind_from_string(const std::string& name)
{
   if(name == "learnexp") return ForecasterKind::LearnExp;
   if(name == "exp3_ungated" || name == "exp3") return ForecasterKind::Exp3Ungated;
   if(name == "uniform") return ForecasterKind::Uniform;
   if(name == "fixed") return ForecasterKind::FixedExpert;
   throw ConfigError("unknown forecaster kind '" + name + "'");
}

/// Exponential weights over experts with the mixed distribution and
/// importance-weighted updates. Shared by LearnExp and its ungated twin; the
/// two differ only in the gate they report.
class ExpWeights {
  public:
   ExpWeights(std::size_t num_experts, double eta) : log_weights_(num_experts, 0.0), eta_(eta)
   {
      if(num_experts < 1) {
         throw ConfigError("forecaster needs at least one expert");
      }
      if(!(eta > 0.0 && eta <= 1.0)) {
         throw ConfigError("eta must lie in (0, 1]");
      }
   }

   std::size_t num_experts() const { return log_weights_.size(); }
   double eta() const { return eta_; }
   std::vector< double > probs() const { return compute_probs(log_weights_, eta_); }
   std::span< const double > log_weights() const { return log_weights_; }

   Selection select(Rng& rng) const
   {
      const auto p = probs();
      const std::size_t j = rng.categorical(p);
      return {j, p[j]};
   }

   void update(const Selection& s, double loss)
   {
      const double est = loss / s.prob;
      log_weights_[s.expert] -= eta_ * est / static_cast< double >(log_weights_.size());
   }

  private:
   std::vector< double > log_weights_;
   double eta_;
};

/// Exponential weights whose selected expert learns only when an independent
/// coin with probability eta / (N p) comes up, so every expert is fed at the
/// constant rate eta / N.
class LearnExp : public ExpWeights {
  public:
   using ExpWeights::ExpWeights;

   double gate_probability(const Selection& s) const
   {
      return learnexp::gate_probability(probs(), s.expert, eta());
   }
   ForecasterKind kind() const { return ForecasterKind::LearnExp; }
};

/// The same exponential weights with the selected expert always fed.
class Exp3Ungated : public ExpWeights {
  public:
   using ExpWeights::ExpWeights;

   double gate_probability(const Selection&) const { return 1.0; }
   ForecasterKind kind() const { return ForecasterKind::Exp3Ungated; }
};

class UniformForecaster {
  public:
   explicit UniformForecaster(std::size_t num_experts) : n_(num_experts)
   {
      if(n_ < 1) {
         throw ConfigError("forecaster needs at least one expert");
      }
   }

   std::size_t num_experts() const { return n_; }
   std::vector< double > probs() const { return std::vector< double >(n_, 1.0 / static_cast< double >(n_)); }
   Selection select(Rng& rng) const { return {rng.uniform_index(n_), 1.0 / static_cast< double >(n_)}; }
   void update(const Selection&, double) {}
   double gate_probability(const Selection&) const { return 1.0; }
   ForecasterKind kind() const { return ForecasterKind::Uniform; }

  private:
   std::size_t n_;
};

class FixedExpertForecaster {
  public:
   FixedExpertForecaster(std::size_t num_experts, std::size_t expert) : n_(num_experts), j_(expert)
   {
      if(j_ >= n_) {
         throw ConfigError("fixed expert index " + std::to_string(j_) + " out of range");
      }
   }

   std::size_t num_experts() const { return n_; }
   std::vector< double > probs() const
   {
      std::vector< double > p(n_, 0.0);
      p[j_] = 1.0;
      return p;
   }
   Selection select(Rng&) const { return {j_, 1.0}; }
   void update(const Selection&, double) {}
   double gate_probability(const Selection&) const { return 1.0; }
   ForecasterKind kind() const { return ForecasterKind::FixedExpert; }

  private:
   std::size_t n_;
   std::size_t j_;
};

template < typename F >
concept ForecasterPolicy = requires(F f, const F cf, Rng& rng, const Selection& s, double loss) {
   { cf.num_experts() } -> std::convertible_to< std::size_t >;
   { cf.probs() } -> std::convertible_to< std::vector< double > >;
   { cf.select(rng) } -> std::same_as< Selection >;
   f.update(s, loss);
   { cf.gate_probability(s) } -> std::convertible_to< double >;
   { cf.kind() } -> std::same_as< ForecasterKind >;
};

class AnyForecaster {
  public:
   using Impl = std::variant< LearnExp, Exp3Ungated, UniformForecaster, FixedExpertForecaster >;

   template < ForecasterPolicy F >
   AnyForecaster(F f) : impl_(std::move(f))
   {
   }

   std::size_t num_experts() const
   {
      return std::visit([](const auto& f) { return f.num_experts(); }, impl_);
   }
   std::vector< double > probs() const
   {
      return std::visit([](const auto& f) { return f.probs(); }, impl_);
   }
   Selection select(Rng& rng) const
   {
      return std::visit([&](const auto& f) { return f.select(rng); }, impl_);
   }
   void update(const Selection& s, double loss)
   {
      std::visit([&](auto& f) { f.update(s, loss); }, impl_);
   }
   double gate_probability(const Selection& s) const
   {
      return std::visit([&](const auto& f) { return f.gate_probability(s); }, impl_);
   }
   ForecasterKind kind() const
   {
      return std::visit([](const auto& f) { return f.kind(); }, impl_);
   }

   const Impl& impl() const { return impl_; }

  private:
   Impl impl_;
};

static_assert(ForecasterPolicy< AnyForecaster >);

struct ForecasterSpec {
   ForecasterKind kind = ForecasterKind::LearnExp;
   double eta = 1.0;          ///< exponential-weights kinds only
   std::size_t fixed = 0;     ///< FixedExpert only
};

inline AnyForecaster make_forecaster(const ForecasterSpec& spec, std::size_t num_experts)
{
   switch(spec.kind) {
      case ForecasterKind::LearnExp: return LearnExp(num_experts, spec.eta);
      case ForecasterKind::Exp3Ungated: return Exp3Ungated(num_experts, spec.eta);
      case ForecasterKind::Uniform: return UniformForecaster(num_experts);
      case ForecasterKind::FixedExpert: return FixedExpertForecaster(num_experts, spec.fixed);
   }
   throw ConfigError("unknown forecaster kind");
}

/// Feed mode a forecaster kind runs under by default.
inline FeedMode natural_mode(ForecasterKind kind)
{
   return kind == ForecasterKind::LearnExp ? FeedMode::ForecasterGated : FeedMode::AlwaysFeed;
}

}  // namespace learnexp
