#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtlife/autoencoder.hpp"
#include "dtlife/database.hpp"
#include "dtlife/dataset.hpp"
#include "dtlife/entropy.hpp"
#include "dtlife/fnn.hpp"
#include "dtlife/forecaster.hpp"
#include "dtlife/train.hpp"

namespace dtlife {

enum class AeMode { joint, per_layer };

std::string to_string(AeMode mode);
AeMode parse_ae_mode(const std::string& text);

struct LifecycleConfig {
    std::size_t warmup_m = 20;
    std::size_t window_w = 5;
    std::size_t holdout_tail = 5;
    ForecasterKind forecaster = ForecasterKind::lstm;
    AeMode ae_mode = AeMode::joint;
    EntropyConfig entropy;
    TrainConfig init{1000, 5e-3, 0.0, 0};
    TrainConfig fine_tune{10, 1e-3, 1e-5, 0};
    TrainConfig dynamic{1000, 1e-4, 1e-4, 0};
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const LifecycleConfig&, const LifecycleConfig&) = default;
};

/// Autoencoder(s) plus forecaster(s). Joint mode has one block covering all
/// layers; per-layer mode has one block per FNN layer.
struct DynamicModel {
    AeMode mode = AeMode::joint;
    std::vector<Autoencoder> autoencoders;
    std::vector<Forecaster> forecasters;
    /// features[block][stage]: encodings of the stored (fine-tuned) snapshots.
    std::vector<std::vector<LatentFeature>> features;
    std::size_t trained_stage = 0;
    double ae_loss = 0.0;          // summed over blocks, final objective
    double forecaster_loss = 0.0;  // summed over blocks, final objective
    double ae_initial_loss = 0.0;
    double forecaster_initial_loss = 0.0;
};

struct StepLog {
    std::size_t stage = 0;
    std::string phase;
    double fine_tune_loss = 0.0;
    double fine_tune_mse = 0.0;
    double fine_tune_l2 = 0.0;
    double ae_loss = 0.0;
    double forecaster_loss = 0.0;
    double seconds = 0.0;
};

struct LifecycleState {
    FnnSpec spec;
    LifecycleConfig cfg;
    ConfigDatabase db;
    ConfigSnapshot current;
    std::optional<DynamicModel> dynamic;
    EntropyReport entropy;
    /// Frozen latent widths, one per block.
    std::vector<std::size_t> latent_dims;
    /// Stage indices whose data entered any training routine.
    std::vector<std::size_t> trained_stages;
    std::vector<StepLog> log;
};

/// Trains DT_0 from a seeded fresh init, stores theta_0 and freezes L.
LifecycleState init_phase(const StageDataset& d0, const FnnSpec& spec, const LifecycleConfig& cfg);
/// Fine-tunes the current DT on the next stage and stores the result.
void fine_tune_step(LifecycleState& state, const StageDataset& data);
/// m fine-tune steps followed by the first dynamic-model training.
void warmup_phase(LifecycleState& state, std::span<const StageDataset> datasets);
/// Fine-tune on the next stage, then retrain the dynamic model from scratch.
void lifelong_update_step(LifecycleState& state, const StageDataset& data);
/// (Re)trains the dynamic model on every stored snapshot.
void train_dynamic_model(LifecycleState& state);

/// Progressive rollout: the last w stored features seed the window, each
/// prediction is appended and the window slides by one.
std::vector<LatentFeature> progressive_rollout(
    std::span<const LatentFeature> history, std::size_t window, std::size_t horizon,
    const std::function<LatentFeature(std::span<const LatentFeature>)>& forecast);

/// Decoded configurations for stages i+1 .. i+h, where i is the last stored stage.
std::vector<ConfigSnapshot> predict_future_configs(const LifecycleState& state, std::size_t horizon);

/// Per-layer latent widths a * [H_i] from each layer's own entropy.
std::vector<std::size_t> per_layer_latent_dims(const ConfigSnapshot& snapshot, const EntropyConfig& cfg);

/// Plain stage-by-stage fine-tuning; returns theta_0 .. theta_K.
std::vector<ConfigSnapshot> baseline_fine_tune_run(std::span<const StageDataset> datasets,
                                                   const FnnSpec& spec, const LifecycleConfig& cfg);

}  // namespace dtlife
