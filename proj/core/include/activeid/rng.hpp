#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace activeid {

// Named, seed-derived random streams.
//
// A stream is keyed by (seed, name, index). The key is mixed with splitmix64
// into a 64-bit state that seeds a mt19937_64 engine, so two streams with the
// same key produce the same draws regardless of what else has been sampled.
// This is what lets baselines and the active loop share process-noise draws.
class RandomStream {
   public:
    RandomStream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

    double gaussian() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::mt19937_64& engine() { return engine_; }

    static std::uint64_t derive_key(std::uint64_t seed, std::string_view name, std::uint64_t index);

   private:
    std::mt19937_64                  engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Stream names used by the simulator and the experiment runner.
namespace streams {
inline constexpr std::string_view kProcessNoise = "process-noise";
inline constexpr std::string_view kInputNoise   = "input-noise";
inline constexpr std::string_view kTrial        = "trial";
inline constexpr std::string_view kDesign       = "design";
inline constexpr std::string_view kSystem       = "system";
}  // namespace streams

// Seed of trial `index` of an experiment seeded with `seed`.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace activeid
