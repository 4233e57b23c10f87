#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dtlife/autodiff.hpp"
#include "dtlife/dataset.hpp"
#include "dtlife/rng.hpp"
#include "dtlife/tensor.hpp"
#include "dtlife/train.hpp"

namespace dtlife {

/// Feedforward digital-twin structure. Hidden layers use tanh, the output
/// layer is linear. Layer i maps layer_dims[i] -> layer_dims[i + 1].
struct FnnSpec {
    std::vector<std::size_t> layer_dims;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    /// Number of parameterized (affine) layers, including the output layer.
    std::size_t layer_count() const { return layer_dims.size() - 1; }
    std::size_t hidden_layers() const { return layer_dims.size() - 2; }
    /// (n_in + 1) * n_out
    std::size_t layer_param_count(std::size_t layer) const;
    std::vector<std::size_t> layer_param_counts() const;
    std::size_t param_count() const;
    /// Stable identifier derived from the dimensions.
    std::string hash() const;
    std::string dims_string() const;
    void validate() const;

    static FnnSpec battery();
    static FnnSpec engine();

    friend bool operator==(const FnnSpec&, const FnnSpec&) = default;
};

FnnSpec parse_fnn_dims(const std::string& text);

/// DT parameters at one stage, one flat vector per layer: weight rows in
/// order, bias appended last.
struct ConfigSnapshot {
    std::size_t stage_index = 0;
    std::vector<std::vector<double>> layers;
    std::string spec_hash;

    std::size_t param_count() const;
    std::vector<double> flat() const;
    bool matches(const FnnSpec& spec) const;
    friend bool operator==(const ConfigSnapshot&, const ConfigSnapshot&) = default;
};

bool bitwise_equal(const ConfigSnapshot& a, const ConfigSnapshot& b) noexcept;

std::vector<double> flatten_layer(const Tensor& weight, const Tensor& bias);
void unflatten_layer(std::span<const double> flat, std::size_t n_in, std::size_t n_out,
                     Tensor& weight, Tensor& bias);
std::vector<double> flatten_layer(const ConfigSnapshot& snapshot, std::size_t layer);

/// [W_1, b_1, W_2, b_2, ...]
std::vector<Tensor> snapshot_to_params(const FnnSpec& spec, const ConfigSnapshot& snapshot);
ConfigSnapshot params_to_snapshot(const FnnSpec& spec, std::span<const Tensor> params,
                                  std::size_t stage_index);
ConfigSnapshot snapshot_from_flat(const FnnSpec& spec, std::span<const double> flat,
                                  std::size_t stage_index);
ConfigSnapshot zero_snapshot(const FnnSpec& spec, std::size_t stage_index = 0);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weight and bias, drawn layer by layer.
void init_affine(Rng& rng, std::size_t n_in, std::size_t n_out, Tensor& weight, Tensor& bias);
ConfigSnapshot fnn_init(const FnnSpec& spec, Rng& rng);

ad::Var fnn_forward(const FnnSpec& spec, std::span<const ad::Var> params, ad::Var inputs);
Tensor fnn_forward(const FnnSpec& spec, const ConfigSnapshot& snapshot, const Tensor& inputs);

struct FnnTrainResult {
    ConfigSnapshot snapshot;
    TrainResult log;
};

/// Full-batch Adam on mse(fnn(X), Y) + alpha * ||theta||^2.
FnnTrainResult fnn_train(const FnnSpec& spec, const StageDataset& data, const TrainConfig& cfg,
                         const ConfigSnapshot& init);

/// Recomputes the fine-tune objective terms for a snapshot.
struct ObjectiveTerms {
    double mse = 0.0;
    double l2 = 0.0;
    double total = 0.0;
};
ObjectiveTerms fnn_objective(const FnnSpec& spec, const ConfigSnapshot& snapshot,
                             const StageDataset& data, double alpha);

}  // namespace dtlife
