#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dtlife/autodiff.hpp"
#include "dtlife/tensor.hpp"

namespace dtlife {

/// Full-batch Adam training settings. alpha weights the squared l2 norm of
/// the trained parameters in the objective; 0 disables it.
struct TrainConfig {
    std::size_t epochs = 1000;
    double learning_rate = 1e-3;
    double alpha = 0.0;
    std::uint64_t seed = 0;

    void validate(const std::string& what) const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainResult {
    /// Objective before each update, one entry per epoch.
    std::vector<double> loss_history;
    /// Objective of the returned parameters: data_loss + alpha * l2.
    double final_loss = 0.0;
    double final_data_loss = 0.0;
    double final_l2 = 0.0;
};

/// Builds the data term of the objective from parameter handles on a fresh tape.
using DataLossFn = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

/// Minimizes data_loss + alpha * l2_norm_sq(params) with Adam. Operates on a
/// copy: on divergence the caller's parameters are untouched and a
/// TrainingError names the epoch.
TrainResult train_parameters(std::vector<Tensor>& params, const TrainConfig& cfg,
                             const DataLossFn& data_loss, const std::string& what);

/// Evaluates the data term and l2 norm without updating anything.
TrainResult evaluate_objective(std::span<const Tensor> params, double alpha,
                               const DataLossFn& data_loss);

double l2_norm_sq(std::span<const Tensor> params);

}  // namespace dtlife
