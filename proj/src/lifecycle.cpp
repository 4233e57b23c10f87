#include "dtlife/lifecycle.hpp"

#include <chrono>

#include "dtlife/error.hpp"
#include "dtlife/rng.hpp"

namespace dtlife {

namespace {

enum SeedTag : std::uint64_t { kInitTag = 1, kAeTag = 2, kForecastTag = 3 };

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string to_string(AeMode mode) { return mode == AeMode::joint ? "joint" : "per-layer"; }

AeMode parse_ae_mode(const std::string& text) {
    if (text == "joint") return AeMode::joint;
    if (text == "per-layer" || text == "per_layer") return AeMode::per_layer;
    throw ValidationError("unknown autoencoder mode '" + text + "' (expected joint or per-layer)");
}

void LifecycleConfig::validate() const {
    if (window_w == 0) throw ValidationError("window w must be positive");
    if (warmup_m < window_w) {
        throw ValidationError("insufficient history: warm-up m = " + std::to_string(warmup_m) +
                              " is smaller than window w = " + std::to_string(window_w));
    }
    entropy.validate();
    init.validate("DT_0 training");
    fine_tune.validate("fine-tuning");
    dynamic.validate("dynamic model training");
}

std::vector<std::size_t> per_layer_latent_dims(const ConfigSnapshot& snapshot, const EntropyConfig& cfg) {
    std::vector<std::size_t> dims;
    for (const auto& layer : snapshot.layers) dims.push_back(entropy_report(layer, cfg).latent_dim);
    return dims;
}

namespace {

ConfigSnapshot train_initial(const StageDataset& d0, const FnnSpec& spec, const LifecycleConfig& cfg,
                             TrainResult* log) {
    spec.validate();
    cfg.validate();
    if (d0.stage_index != 0) {
        throw ValidationError("initialization expects stage 0, got stage " + std::to_string(d0.stage_index));
    }
    Rng rng(derive_seed(cfg.seed, kInitTag));
    auto r = fnn_train(spec, d0, cfg.init, fnn_init(spec, rng));
    if (log) *log = std::move(r.log);
    return std::move(r.snapshot);
}

ConfigSnapshot fine_tune(const FnnSpec& spec, const ConfigSnapshot& current, const StageDataset& data,
                         const TrainConfig& cfg, TrainResult* log) {
    auto r = fnn_train(spec, data, cfg, current);
    r.snapshot.stage_index = data.stage_index;
    if (log) *log = std::move(r.log);
    return std::move(r.snapshot);
}

}  // namespace

LifecycleState init_phase(const StageDataset& d0, const FnnSpec& spec, const LifecycleConfig& cfg) {
    const auto t0 = Clock::now();
    LifecycleState s;
    s.spec = spec;
    s.cfg = cfg;
    s.db = ConfigDatabase(spec);
    TrainResult log;
    s.current = train_initial(d0, spec, cfg, &log);
    s.db.append(s.current);
    s.trained_stages.push_back(0);
    s.entropy = entropy_report(s.current, cfg.entropy);
    s.latent_dims = cfg.ae_mode == AeMode::joint ? std::vector<std::size_t>{s.entropy.latent_dim}
                                                 : per_layer_latent_dims(s.current, cfg.entropy);
    s.log.push_back({0, "init", log.final_loss, log.final_data_loss, log.final_l2, 0.0, 0.0, seconds_since(t0)});
    return s;
}

void fine_tune_step(LifecycleState& state, const StageDataset& data) {
    const auto t0 = Clock::now();
    if (data.stage_index != state.db.next_index()) {
        throw ValidationError("stage ordering: expected stage " + std::to_string(state.db.next_index()) +
                              ", got stage " + std::to_string(data.stage_index));
    }
    TrainResult log;
    ConfigSnapshot next = fine_tune(state.spec, state.current, data, state.cfg.fine_tune, &log);
    state.db.append(next);
    state.current = std::move(next);
    state.trained_stages.push_back(data.stage_index);
    state.log.push_back({data.stage_index, "fine-tune", log.final_loss, log.final_data_loss, log.final_l2,
                         0.0, 0.0, seconds_since(t0)});
}

void train_dynamic_model(LifecycleState& state) {
    const LifecycleConfig& cfg = state.cfg;
    const std::size_t stage = state.db.back().stage_index;
    if (state.db.size() < cfg.window_w + 1) {
        throw ValidationError("needs more stages: dynamic model requires at least w+1 = " +
                              std::to_string(cfg.window_w + 1) + " stored configurations, have " +
                              std::to_string(state.db.size()));
    }
    const auto snapshots = state.db.snapshots();
    DynamicModel dm;
    dm.mode = cfg.ae_mode;
    dm.trained_stage = stage;
    const std::size_t blocks = cfg.ae_mode == AeMode::joint ? 1 : state.spec.layer_count();
    for (std::size_t b = 0; b < blocks; ++b) {
        std::vector<std::vector<std::vector<double>>> samples;
        for (const auto& snap : snapshots) {
            samples.push_back(cfg.ae_mode == AeMode::joint ? snap.layers
                                                           : std::vector<std::vector<double>>{snap.layers[b]});
        }
        const std::size_t latent = state.latent_dims[b];
        const AutoencoderSpec ae_spec = cfg.ae_mode == AeMode::joint
                                            ? AutoencoderSpec::joint(state.spec.layer_param_counts(), latent)
                                            : AutoencoderSpec::single_layer(snapshots.front().layers[b].size(), latent);
        TrainConfig ae_cfg = cfg.dynamic;
        ae_cfg.seed = derive_seed(cfg.seed, kAeTag, stage * 1024 + b);
        auto ae = ae_train(ae_spec, samples, ae_cfg);

        std::vector<LatentFeature> features;
        for (const auto& s : samples) features.push_back(ae_encode(ae.model, std::span<const std::vector<double>>(s)));

        const ForecasterSpec f_spec = cfg.forecaster == ForecasterKind::lstm
                                          ? ForecasterSpec::lstm(latent, cfg.window_w)
                                          : ForecasterSpec::transformer(latent, cfg.window_w);
        TrainConfig f_cfg = cfg.dynamic;
        f_cfg.seed = derive_seed(cfg.seed, kForecastTag, stage * 1024 + b);
        auto fc = forecaster_train(features, f_spec, f_cfg);

        dm.ae_loss += ae.log.final_loss;
        dm.forecaster_loss += fc.log.final_loss;
        dm.ae_initial_loss += ae.log.loss_history.empty() ? ae.log.final_loss : ae.log.loss_history.front();
        dm.forecaster_initial_loss += fc.log.loss_history.empty() ? fc.log.final_loss : fc.log.loss_history.front();
        dm.autoencoders.push_back(std::move(ae.model));
        dm.forecasters.push_back(std::move(fc.model));
        dm.features.push_back(std::move(features));
    }
    state.dynamic = std::move(dm);
}

void warmup_phase(LifecycleState& state, std::span<const StageDataset> datasets) {
    if (state.db.size() != 1) throw ValidationError("warm-up must follow initialization directly");
    if (datasets.size() != state.cfg.warmup_m) {
        throw ValidationError("warm-up expects exactly m = " + std::to_string(state.cfg.warmup_m) +
                              " datasets, got " + std::to_string(datasets.size()));
    }
    if (state.cfg.warmup_m < state.cfg.window_w) {
        throw ValidationError("insufficient history: m < w");
    }
    for (const auto& d : datasets) fine_tune_step(state, d);
    const auto t0 = Clock::now();
    train_dynamic_model(state);
    state.log.back().ae_loss = state.dynamic->ae_loss;
    state.log.back().forecaster_loss = state.dynamic->forecaster_loss;
    state.log.back().seconds += seconds_since(t0);
    state.log.back().phase = "warm-up";
}

void lifelong_update_step(LifecycleState& state, const StageDataset& data) {
    if (!state.dynamic) throw ValidationError("lifelong update requested before warm-up completed");
    fine_tune_step(state, data);
    const auto t0 = Clock::now();
    train_dynamic_model(state);
    state.log.back().ae_loss = state.dynamic->ae_loss;
    state.log.back().forecaster_loss = state.dynamic->forecaster_loss;
    state.log.back().seconds += seconds_since(t0);
    state.log.back().phase = "lifelong-update";
}

std::vector<LatentFeature> progressive_rollout(
    std::span<const LatentFeature> history, std::size_t window, std::size_t horizon,
    const std::function<LatentFeature(std::span<const LatentFeature>)>& forecast) {
    if (horizon < 1) throw ValidationError("prediction horizon must be at least 1");
    if (history.size() < window) {
        throw ValidationError("rollout needs at least w = " + std::to_string(window) + " stored features");
    }
    std::vector<LatentFeature> seq(history.end() - static_cast<std::ptrdiff_t>(window), history.end());
    std::vector<LatentFeature> predicted;
    for (std::size_t k = 0; k < horizon; ++k) {
        LatentFeature next = forecast(std::span<const LatentFeature>(seq).last(window));
        predicted.push_back(next);
        seq.push_back(std::move(next));
    }
    return predicted;
}

std::vector<ConfigSnapshot> predict_future_configs(const LifecycleState& state, std::size_t horizon) {
    if (!state.dynamic) throw ValidationError("dynamic model not trained");
    if (horizon < 1) throw ValidationError("prediction horizon must be at least 1");
    const DynamicModel& dm = *state.dynamic;
    const std::size_t last = state.db.back().stage_index;
    std::vector<ConfigSnapshot> out(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        out[k].stage_index = last + 1 + k;
        out[k].spec_hash = state.spec.hash();
    }
    for (std::size_t b = 0; b < dm.autoencoders.size(); ++b) {
        const Forecaster& fc = dm.forecasters[b];
        const auto feats = progressive_rollout(dm.features[b], state.cfg.window_w, horizon,
                                               [&fc](std::span<const LatentFeature> w) { return forecaster_forward(fc, w); });
        for (std::size_t k = 0; k < horizon; ++k) {
            auto layers = ae_decode(dm.autoencoders[b], feats[k]);
            for (auto& l : layers) out[k].layers.push_back(std::move(l));
        }
    }
    return out;
}

std::vector<ConfigSnapshot> baseline_fine_tune_run(std::span<const StageDataset> datasets,
                                                   const FnnSpec& spec, const LifecycleConfig& cfg) {
    if (datasets.empty()) throw ValidationError("baseline run needs at least one dataset");
    std::vector<ConfigSnapshot> out;
    out.push_back(train_initial(datasets.front(), spec, cfg, nullptr));
    for (std::size_t i = 1; i < datasets.size(); ++i) {
        if (datasets[i].stage_index != i) {
            throw ValidationError("stage ordering: expected stage " + std::to_string(i) + ", got stage " +
                                  std::to_string(datasets[i].stage_index));
        }
        out.push_back(fine_tune(spec, out.back(), datasets[i], cfg.fine_tune, nullptr));
    }
    return out;
}

}  // namespace dtlife
