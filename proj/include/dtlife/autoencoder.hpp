#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dtlife/autodiff.hpp"
#include "dtlife/fnn.hpp"
#include "dtlife/rng.hpp"
#include "dtlife/tensor.hpp"
#include "dtlife/train.hpp"

namespace dtlife {

using LatentFeature = std::vector<double>;

/// Shape of a configuration autoencoder.
///
/// With `head_width > 0` every parameter group is first compressed by its own
/// tanh layer to `head_width`, the results are concatenated, and the trunk
/// follows; the decoder mirrors the trunk, splits, and ends in one linear
/// head per group. With `head_width == 0` there is exactly one group and the
/// trunk consumes it directly. Trunk hidden layers use tanh; the latent
/// layer and the reconstruction outputs are linear.
struct AutoencoderSpec {
    std::vector<std::size_t> group_sizes;
    std::size_t head_width = 64;
    std::vector<std::size_t> trunk_widths;
    std::size_t latent = 0;

    /// Joint model over all layers: heads of 64, trunk 32G -> 16G -> 8G -> L.
    static AutoencoderSpec joint(std::vector<std::size_t> group_sizes, std::size_t latent);
    /// Single-layer model: a -> [a/2] -> [a/4] -> L and mirrored decoder.
    static AutoencoderSpec single_layer(std::size_t params, std::size_t latent);

    std::size_t groups() const noexcept { return group_sizes.size(); }
    std::size_t input_size() const;
    /// Width entering the trunk (64G with heads).
    std::size_t trunk_input() const;
    /// Encoder layer widths from trunk input to latent.
    std::vector<std::size_t> encoder_widths() const;
    /// Decoder layer widths from latent to trunk input.
    std::vector<std::size_t> decoder_widths() const;
    void validate() const;

    friend bool operator==(const AutoencoderSpec&, const AutoencoderSpec&) = default;
};

/// Parameter layout: encoder heads (W, b per group), encoder trunk, decoder
/// trunk, decoder heads. Without heads the two head blocks are empty.
struct Autoencoder {
    AutoencoderSpec spec;
    std::vector<Tensor> params;

    std::size_t param_count() const;
};

Autoencoder autoencoder_init(const AutoencoderSpec& spec, Rng& rng);
/// All-zero parameters (used by structural tests).
Autoencoder autoencoder_zero(const AutoencoderSpec& spec);

/// groups[g] is S x group_sizes[g]; returns S x latent.
ad::Var ae_encode(const AutoencoderSpec& spec, std::span<const ad::Var> params,
                  std::span<const ad::Var> groups);
/// latent is S x L; returns one S x group_sizes[g] reconstruction per group.
std::vector<ad::Var> ae_decode(const AutoencoderSpec& spec, std::span<const ad::Var> params,
                               ad::Var latent);

LatentFeature ae_encode(const Autoencoder& ae, std::span<const std::vector<double>> groups);
std::vector<std::vector<double>> ae_decode(const Autoencoder& ae, std::span<const double> latent);

/// Encodes the full snapshot (joint model over every layer).
LatentFeature ae_encode(const Autoencoder& ae, const ConfigSnapshot& snapshot);
ConfigSnapshot ae_decode(const Autoencoder& ae, const FnnSpec& fnn, std::span<const double> latent,
                         std::size_t stage_index);

struct AeTrainResult {
    Autoencoder model;
    TrainResult log;
};

/// Trains on samples[s][g] (snapshot s, group g) with the reconstruction MSE
/// over every parameter plus alpha * l2 of the autoencoder weights.
AeTrainResult ae_train(const AutoencoderSpec& spec,
                       const std::vector<std::vector<std::vector<double>>>& samples,
                       const TrainConfig& cfg);
/// Joint model over whole snapshots; needs at least two snapshots.
AeTrainResult ae_train(const std::vector<ConfigSnapshot>& snapshots, std::size_t latent,
                       const TrainConfig& cfg);

/// Mean reconstruction MSE over the given samples.
double ae_reconstruction_mse(const Autoencoder& ae,
                             const std::vector<std::vector<std::vector<double>>>& samples);

}  // namespace dtlife
