#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bijepa {

// Seeded generator that can hand out independent named sub-streams, so that
// e.g. the "probe" stream can change without perturbing "init" or "data".
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Deterministic child stream; the parent's state is not consumed.
    Rng stream(std::string_view name) const;

    std::uint64_t seed() const noexcept { return seed_; }

    double uniform(double lo, double hi);
    double normal(double mean, double stddev);
    std::size_t index(std::size_t n);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace bijepa
