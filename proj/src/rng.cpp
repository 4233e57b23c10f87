#include "dtlife/rng.hpp"

#include <cmath>
#include <numbers>

namespace dtlife {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(base ^ mix64(a + kGolden)) + b * kGolden);
}

std::uint64_t Rng::next_u64() noexcept {
    const std::uint64_t k = counter_++;
    return mix64(seed_ + (k + 1) * kGolden);
}

double Rng::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split(std::uint64_t tag) const noexcept {
    return Rng(derive_seed(seed_, tag, counter_));
}

}  // namespace dtlife
