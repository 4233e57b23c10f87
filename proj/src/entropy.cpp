#include "dtlife/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "dtlife/error.hpp"

namespace dtlife {

void EntropyConfig::validate() const {
    if (!std::isfinite(beta)) throw ValidationError("entropy: beta must be finite");
    if (!(a >= 1.0) || !std::isfinite(a)) throw ValidationError("entropy: a must be >= 1");
}

std::vector<double> gibbs_probabilities(std::span<const double> params, double beta) {
    if (params.empty()) throw ValidationError("entropy: empty parameter set");
    double shift = -INFINITY;
    for (double v : params) {
        if (!std::isfinite(v)) throw ValidationError("entropy: non-finite parameter");
        shift = std::max(shift, -beta * v);
    }
    std::vector<double> p(params.size());
    double z = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        p[i] = std::exp(-beta * params[i] - shift);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

std::vector<double> gibbs_probabilities(const ConfigSnapshot& snapshot, double beta) {
    return gibbs_probabilities(snapshot.flat(), beta);
}

double config_entropy(std::span<const double> probabilities) {
    double total = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0)) throw ValidationError("entropy: negative or NaN probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("entropy: probabilities sum to " + std::to_string(total));
    }
    double h = 0.0;
    for (double p : probabilities) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

std::size_t latent_dim(double entropy_bits, double a) {
    const double rounded = std::max(std::nearbyint(entropy_bits), 0.0);
    const double l = a * rounded;
    return l < 1.0 ? 1 : static_cast<std::size_t>(std::llround(l));
}

EntropyReport entropy_report(std::span<const double> params, const EntropyConfig& cfg) {
    cfg.validate();
    EntropyReport r;
    r.probabilities = gibbs_probabilities(params, cfg.beta);
    r.entropy_bits = config_entropy(r.probabilities);
    r.latent_dim = latent_dim(r.entropy_bits, cfg.a);
    return r;
}

EntropyReport entropy_report(const ConfigSnapshot& snapshot, const EntropyConfig& cfg) {
    return entropy_report(snapshot.flat(), cfg);
}

}  // namespace dtlife
