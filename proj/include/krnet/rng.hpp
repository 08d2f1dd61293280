#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace krnet {

// Deterministic random number generator: xoshiro256++ over a splitmix64-seeded
// state, with Gaussian variates produced by the Box-Muller transform applied to
// the uniform stream. The algorithm is fixed so that a given seed yields the
// same stream on every platform (and is easy to reproduce in other languages).
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    double uniform(double lo, double hi);

    // Uniform integer in [0, n); n must be positive.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal sample. Box-Muller produces samples in pairs; the second
    // of each pair is cached and returned by the next call.
    double gaussian();

    // In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Complete serializable state, used by checkpoints.
    struct State {
        std::array<std::uint64_t, 4> s{};
        std::uint64_t counter = 0;
        bool has_cached = false;
        double cached = 0.0;
    };

    State state() const;
    void restore(const State& st);

  private:
    std::array<std::uint64_t, 4> s_{};
    std::uint64_t counter_ = 0;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

// Stable derivation of per-purpose seeds from one run seed, so that independent
// streams (weight init, patch cropping, training noise) never overlap.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace krnet
