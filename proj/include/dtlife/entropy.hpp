#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dtlife/fnn.hpp"

namespace dtlife {

struct EntropyConfig {
    double beta = 1.0;  // Gibbs constant
    double a = 2.0;     // enlargement ratio

    void validate() const;
    friend bool operator==(const EntropyConfig&, const EntropyConfig&) = default;
};

struct EntropyReport {
    std::vector<double> probabilities;
    double entropy_bits = 0.0;
    std::size_t latent_dim = 0;
};

/// p_j = exp(-beta * theta_j) / sum_k exp(-beta * theta_k), max-shifted.
/// Raw signed values are used, so negative parameters get larger weight.
std::vector<double> gibbs_probabilities(std::span<const double> params, double beta);
std::vector<double> gibbs_probabilities(const ConfigSnapshot& snapshot, double beta);

/// Shannon entropy in bits; zero-probability terms contribute nothing.
double config_entropy(std::span<const double> probabilities);

/// a * nearest_integer(H) with ties to even, floored at 1.
std::size_t latent_dim(double entropy_bits, double a);

EntropyReport entropy_report(std::span<const double> params, const EntropyConfig& cfg);
EntropyReport entropy_report(const ConfigSnapshot& snapshot, const EntropyConfig& cfg);

}  // namespace dtlife
