#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dtlife/autodiff.hpp"
#include "dtlife/autoencoder.hpp"
#include "dtlife/rng.hpp"
#include "dtlife/train.hpp"

namespace dtlife {

enum class ForecasterKind { lstm, transformer };

std::string to_string(ForecasterKind kind);
ForecasterKind parse_forecaster_kind(const std::string& text);

/// Latent-trajectory forecaster: a sequence block (stacked LSTM or
/// Transformer encoder) followed by the dense head
/// in -> 2L -> 4L -> 3L -> 2L (tanh) -> L (linear).
struct ForecasterSpec {
    ForecasterKind kind = ForecasterKind::lstm;
    std::size_t latent = 0;
    std::size_t window = 0;
    std::size_t lstm_layers = 2;
    std::size_t encoder_layers = 6;

    static ForecasterSpec lstm(std::size_t latent, std::size_t window);
    static ForecasterSpec transformer(std::size_t latent, std::size_t window);

    /// LSTM hidden width, 2L.
    std::size_t hidden() const noexcept { return 2 * latent; }
    /// Transformer feed-forward width, 2L.
    std::size_t ff_width() const noexcept { return 2 * latent; }
    /// Width of the vector handed to the head.
    std::size_t block_output() const noexcept {
        return kind == ForecasterKind::lstm ? hidden() : latent;
    }
    std::vector<std::size_t> head_widths() const;
    void validate() const;

    friend bool operator==(const ForecasterSpec&, const ForecasterSpec&) = default;
};

/// Parameter layout
///   LSTM, per layer:        W_ih (4H x in), W_hh (4H x H), b (1 x 4H); gates i, f, g, o
///   Transformer, per layer: Wq bq Wk bk Wv bv Wo bo, ln1 gain/shift, W1 b1 W2 b2, ln2 gain/shift
///   head:                   W, b per dense layer
struct Forecaster {
    ForecasterSpec spec;
    std::vector<Tensor> params;

    std::size_t param_count() const;
};

Forecaster forecaster_init(const ForecasterSpec& spec, Rng& rng);
Forecaster forecaster_zero(const ForecasterSpec& spec);

/// windows[b] is a w x L matrix (oldest row first); returns B x L.
ad::Var forecaster_forward(const ForecasterSpec& spec, std::span<const ad::Var> params,
                           std::span<const Tensor> windows, ad::Tape& tape);
/// Transformer block output before pooling, (B*w) x L; exposed for shape tests.
ad::Var transformer_encode(const ForecasterSpec& spec, std::span<const ad::Var> params,
                           ad::Var stacked);

LatentFeature forecaster_forward(const Forecaster& model, std::span<const LatentFeature> window);
inline LatentFeature lstm_forward(const Forecaster& model, std::span<const LatentFeature> window) {
    return forecaster_forward(model, window);
}
inline LatentFeature transformer_forward(const Forecaster& model, std::span<const LatentFeature> window) {
    return forecaster_forward(model, window);
}

struct WindowPairs {
    std::vector<Tensor> windows;  // each w x L
    Tensor targets;               // B x L
};

/// Every (s_{j-w} .. s_{j-1}) -> s_j pair in order of j.
WindowPairs make_window_pairs(std::span<const LatentFeature> features, std::size_t window);

struct ForecasterTrainResult {
    Forecaster model;
    TrainResult log;
};

/// Trains on all windows of `features`; needs at least w + 1 features.
ForecasterTrainResult forecaster_train(std::span<const LatentFeature> features,
                                       const ForecasterSpec& spec, const TrainConfig& cfg);

}  // namespace dtlife
