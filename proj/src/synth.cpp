#include "dtlife/synth.hpp"

#include <algorithm>
#include <cmath>

#include "dtlife/error.hpp"
#include "dtlife/rng.hpp"

namespace dtlife {

void BatterySynthParams::validate() const {
    if (stages < 1) throw ValidationError("battery synth: need at least one stage");
    if (!(noise >= 0.0)) throw ValidationError("battery synth: noise must be >= 0");
    if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("battery synth: rho must lie in [0, 1)");
    if (!(delta >= 0.0 && delta < 1.0)) throw ValidationError("battery synth: delta must lie in [0, 1)");
    if (!(tau0 > 0.0) || !(t0 > 0.0)) throw ValidationError("battery synth: tau0 and t0 must be positive");
    if (!(v_max > v_min)) throw ValidationError("battery synth: v_max must exceed v_min");
    if (points < 2 || raw_points < points) {
        throw ValidationError("battery synth: need 2 <= points <= raw_points");
    }
}

void EngineSynthParams::validate() const {
    if (stages < 1) throw ValidationError("engine synth: need at least one stage");
    if (!(noise >= 0.0)) throw ValidationError("engine synth: noise must be >= 0");
    if (!(gamma >= 0.0 && gamma < 1.0) || gamma * static_cast<double>(stages - 1) >= 1.0) {
        throw ValidationError("engine synth: gamma must lie in [0, 1) and keep 1 - gamma i positive");
    }
    if (window == 0 || raw_length < window) throw ValidationError("engine synth: raw_length < window");
}

std::vector<StageDataset> synth_battery(const BatterySynthParams& p) {
    p.validate();
    std::vector<StageDataset> out;
    for (std::size_t i = 0; i < p.stages; ++i) {
        const double di = static_cast<double>(i);
        const double tau = p.tau0 * (1.0 + p.rho * di);
        const double t_end = p.t0 * std::pow(1.0 - p.delta, di);
        Rng noise(derive_seed(p.seed, 0xBA77, i));
        Series raw;
        for (std::size_t k = 0; k < p.raw_points; ++k) {
            const double t = t_end * static_cast<double>(k) / static_cast<double>(p.raw_points - 1);
            double v = p.v_min + (p.v_max - p.v_min) * (1.0 - std::exp(-t / tau));
            if (p.noise > 0.0) v += p.noise * noise.normal();
            raw.t.push_back(t);
            raw.v.push_back(v);
        }
        const Series s = sample_evenly(raw, p.points);
        StageDataset d;
        d.stage_index = i;
        d.inputs = Tensor(s.t.size(), 2);
        d.outputs = Tensor(s.t.size(), 1);
        for (std::size_t r = 0; r < s.t.size(); ++r) {
            d.inputs(r, 0) = p.current;
            d.inputs(r, 1) = s.t[r];
            d.outputs(r, 0) = s.v[r];
        }
        d.input_names = {"c", "t"};
        d.input_units = {"A", "h"};
        d.output_names = {"v"};
        d.output_units = {"V"};
        out.push_back(std::move(d));
    }
    return out;
}

RunManifest battery_manifest(const BatterySynthParams& p) {
    RunManifest m;
    m.run_name = "synthetic-battery";
    m.input_names = {"c", "t"};
    m.input_units = {"A", "h"};
    m.output_names = {"v"};
    m.output_units = {"V"};
    m.preprocessing = {"sample_evenly:" + std::to_string(p.points)};
    m.seed = p.seed;
    m.attributes = {{"kind", "battery"},
                    {"stages", std::to_string(p.stages)},
                    {"noise", format_double(p.noise)},
                    {"tau0", format_double(p.tau0)},
                    {"t0", format_double(p.t0)},
                    {"rho", format_double(p.rho)},
                    {"delta", format_double(p.delta)},
                    {"v_min", format_double(p.v_min)},
                    {"v_max", format_double(p.v_max)},
                    {"current", format_double(p.current)}};
    return m;
}

namespace {

struct Range {
    double lo, hi;
};

constexpr Range kAlt{0.0, 35000.0};
constexpr Range kMach{0.0, 0.9};
constexpr Range kTra{20.0, 100.0};
constexpr Range kT2{440.0, 560.0};

double normalized(double v, Range r) { return (v - r.lo) / (r.hi - r.lo); }

/// Mean-reverting walk that stays inside the range.
std::vector<double> smooth_walk(Rng& rng, std::size_t n, Range r) {
    std::vector<double> out(n);
    const double span = r.hi - r.lo;
    double level = r.lo + span * rng.uniform(0.3, 0.7);
    double drift = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        drift = 0.995 * drift + 0.002 * span * rng.normal();
        level += 0.01 * drift;
        level += 0.001 * ((r.lo + 0.5 * span) - level);
        level = std::clamp(level, r.lo, r.hi);
        out[k] = level;
    }
    return out;
}

}  // namespace

double engine_pressure(double alt, double mach, double tra, double t2, double time_frac) {
    const double a = normalized(alt, kAlt), m = normalized(mach, kMach);
    const double r = normalized(tra, kTra), x = normalized(t2, kT2);
    return 1.0 + 0.5 * std::tanh(1.2 * a - 0.8 * m + 0.3) + 0.8 * std::tanh(1.5 * r - 0.5) +
           0.3 * std::tanh(x + 0.5 * time_frac);
}

std::vector<StageDataset> synth_engine_raw(const EngineSynthParams& p) {
    p.validate();
    std::vector<StageDataset> out;
    const std::size_t n = p.raw_length;
    for (std::size_t i = 0; i < p.stages; ++i) {
        Rng cond(derive_seed(p.seed, 0xE6, p.shared_conditions ? 0 : i));
        Rng noise(derive_seed(p.seed, 0xE7, i));
        const auto alt = smooth_walk(cond, n, kAlt);
        const auto mach = smooth_walk(cond, n, kMach);
        const auto tra = smooth_walk(cond, n, kTra);
        const auto t2 = smooth_walk(cond, n, kT2);
        const double factor = 1.0 - p.gamma * static_cast<double>(i);
        StageDataset d;
        d.stage_index = i;
        d.inputs = Tensor(n, 5);
        d.outputs = Tensor(n, 1);
        for (std::size_t k = 0; k < n; ++k) {
            const double tf = static_cast<double>(k) / static_cast<double>(n - 1);
            d.inputs(k, 0) = alt[k];
            d.inputs(k, 1) = mach[k];
            d.inputs(k, 2) = tra[k];
            d.inputs(k, 3) = t2[k];
            d.inputs(k, 4) = tf;
            double v = engine_pressure(alt[k], mach[k], tra[k], t2[k], tf) * factor;
            if (p.noise > 0.0) v += p.noise * noise.normal();
            d.outputs(k, 0) = v;
        }
        d.input_names = {"alt", "Mach", "TRA", "T2", "t"};
        d.input_units = {"ft", "-", "deg", "R", "cycle fraction"};
        d.output_names = {"p"};
        d.output_units = {"psia"};
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<StageDataset> synth_engine(const EngineSynthParams& p, StageScalers* scalers) {
    auto stages = synth_engine_raw(p);
    for (auto& s : stages) {
        s.inputs = smooth_downsample(s.inputs, p.window);
        s.outputs = smooth_downsample(s.outputs, p.window);
    }
    StageScalers sc = minmax_scale_stages(stages);
    if (scalers) *scalers = std::move(sc);
    return stages;
}

RunManifest engine_manifest(const EngineSynthParams& p) {
    RunManifest m;
    m.run_name = "synthetic-engine";
    m.input_names = {"alt", "Mach", "TRA", "T2", "t"};
    m.input_units = {"ft", "-", "deg", "R", "cycle fraction"};
    m.output_names = {"p"};
    m.output_units = {"psia"};
    m.preprocessing = {"smooth_downsample:" + std::to_string(p.window), "minmax:joint"};
    m.seed = p.seed;
    m.attributes = {{"kind", "engine"},
                    {"stages", std::to_string(p.stages)},
                    {"noise", format_double(p.noise)},
                    {"gamma", format_double(p.gamma)},
                    {"raw_length", std::to_string(p.raw_length)}};
    return m;
}

}  // namespace dtlife
