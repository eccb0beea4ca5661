#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>

namespace learnexp {

/// SplitMix64 finalizer. Used to turn (master seed, label) pairs into
/// well-separated engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x)
{
   x += 0x9e3779b97f4a7c15ULL;
   x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
   x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
   return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text)
{
   std::uint64_t h = 0xcbf29ce484222325ULL;
   for(unsigned char c : text) {
      h ^= c;
      h *= 0x100000001b3ULL;
   }
   return h;
}

/// Deterministic sub-stream seed for a named consumer of randomness.
/// Adding a new label never changes the seeds handed to existing labels.
inline std::uint64_t seed_stream(std::uint64_t master, std::string_view label)
{
   return splitmix64(splitmix64(master) ^ fnv1a(label));
}

inline std::uint64_t seed_stream(std::uint64_t master, std::string_view label, std::uint64_t index)
{
   return splitmix64(seed_stream(master, label) + splitmix64(index + 1));
}

/// Thin wrapper over mt19937_64. The sampling helpers only use raw engine
/// output, so streams are bit-reproducible across standard libraries.
class Rng {
  public:
   explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

   std::uint64_t next() { return engine_(); }

   /// Uniform in [0, 1) with 53 random bits.
   double uniform() { return static_cast< double >(engine_() >> 11) * 0x1.0p-53; }

   bool bernoulli(double p) { return uniform() < p; }

   std::size_t uniform_index(std::size_t n)
   {
      if(n == 0) {
         throw std::invalid_argument("uniform_index: empty range");
      }
      return static_cast< std::size_t >(uniform() * static_cast< double >(n));
   }

   /// Inverse-CDF draw from a probability vector. Roundoff past the last
   /// bucket falls back to the last index with positive mass.
   std::size_t categorical(std::span< const double > probs)
   {
      if(probs.empty()) {
         throw std::invalid_argument("categorical: empty distribution");
      }
      const double u = uniform();
      double acc = 0.0;
      std::size_t last_positive = 0;
      for(std::size_t i = 0; i < probs.size(); ++i) {
         if(probs[i] > 0.0) {
            last_positive = i;
            acc += probs[i];
            if(u < acc) {
               return i;
            }
         }
      }
      return last_positive;
   }

   double normal()
   {
      // Box-Muller on our own uniforms; std::normal_distribution is not
      // specified bit-exactly.
      double u1 = uniform();
      while(u1 <= 0.0) {
         u1 = uniform();
      }
      const double u2 = uniform();
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
   }

  private:
   std::mt19937_64 engine_;
};

}  // namespace learnexp
