#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtlife/tensor.hpp"

namespace dtlife {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators shaped like the parameters they track.
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(std::span<const Tensor> params, AdamConfig cfg = {});

    std::uint64_t step() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return cfg_; }
    const std::vector<Tensor>& first_moment() const noexcept { return m_; }
    const std::vector<Tensor>& second_moment() const noexcept { return v_; }

    /// One bias-corrected Adam update. Throws TrainingError naming the step
    /// when a gradient is non-finite; parameters are left untouched then.
    void apply(std::span<Tensor> params, std::span<const Tensor> grads, double learning_rate);

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::uint64_t t_ = 0;
    double beta1_pow_ = 1.0;
    double beta2_pow_ = 1.0;
};

inline void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
                      double learning_rate) {
    state.apply(params, grads, learning_rate);
}

}  // namespace dtlife
