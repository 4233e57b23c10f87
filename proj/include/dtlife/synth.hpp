#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dtlife/dataset.hpp"
#include "dtlife/preprocess.hpp"

namespace dtlife {

/// Charging-curve family v(t) = v_min + (v_max - v_min)(1 - exp(-t / tau_i)),
/// tau_i = tau0 (1 + rho i), observed on t in [0, t0 (1 - delta)^i].
/// Time is in hours, voltage in volts, current in amperes.
struct BatterySynthParams {
    std::size_t stages = 80;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::size_t raw_points = 1000;
    std::size_t points = 200;
    double v_min = 2.7;
    double v_max = 4.2;
    double current = 0.74;
    double tau0 = 0.25;
    double t0 = 1.0;
    double rho = 0.02;
    double delta = 0.004;

    void validate() const;
};

/// Flight-cycle family: inputs (alt, Mach, TRA, T2, t) follow seeded smooth
/// random walks; the pressure is g(inputs) * (1 - gamma * i) + noise with
///   g = 1 + 0.5 tanh(1.2 a - 0.8 m + 0.3) + 0.8 tanh(1.5 r - 0.5)
///         + 0.3 tanh(x + 0.5 s)
/// over inputs normalized by their nominal ranges (a, m, r, x, s).
/// Raw traces are block-averaged and min-max scaled jointly over all stages.
struct EngineSynthParams {
    std::size_t stages = 87;
    double noise = 0.0;
    std::uint64_t seed = 0;
    double gamma = 0.004;
    std::size_t raw_length = 5000;
    std::size_t window = 50;
    /// Reuse stage 0's flight conditions at every stage.
    bool shared_conditions = false;

    void validate() const;
};

std::vector<StageDataset> synth_battery(const BatterySynthParams& params);
RunManifest battery_manifest(const BatterySynthParams& params);

/// Raw (unsmoothed, unscaled) engine traces.
std::vector<StageDataset> synth_engine_raw(const EngineSynthParams& params);
/// Smoothed, downsampled and jointly scaled engine stages.
std::vector<StageDataset> synth_engine(const EngineSynthParams& params, StageScalers* scalers = nullptr);
RunManifest engine_manifest(const EngineSynthParams& params);

/// Nominal pressure function before degradation; inputs in raw units.
double engine_pressure(double alt, double mach, double tra, double t2, double time_frac);

}  // namespace dtlife
