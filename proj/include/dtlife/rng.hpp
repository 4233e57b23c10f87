#pragma once

#include <cstdint>

namespace dtlife {

/// Counter-based generator: draw k of stream `seed` is mix(seed, k), so the
/// sequence does not depend on how draws are batched. Child streams are
/// derived with `split`.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller; consumes two draws.
    double normal() noexcept;

    Rng split(std::uint64_t tag) const noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
/// Deterministic seed derivation for named sub-streams (per stage, per phase).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

}  // namespace dtlife
