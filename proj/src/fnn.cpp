#include "dtlife/fnn.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dtlife/error.hpp"

namespace dtlife {

std::size_t FnnSpec::layer_param_count(std::size_t layer) const {
    if (layer >= layer_count()) {
        throw DimensionError("layer index " + std::to_string(layer) + " out of range (" +
                             std::to_string(layer_count()) + " layers)");
    }
    return (layer_dims[layer] + 1) * layer_dims[layer + 1];
}

std::vector<std::size_t> FnnSpec::layer_param_counts() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layer_count(); ++i) out.push_back(layer_param_count(i));
    return out;
}

std::size_t FnnSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < layer_count(); ++i) n += layer_param_count(i);
    return n;
}

std::string FnnSpec::dims_string() const {
    std::string s;
    for (std::size_t i = 0; i < layer_dims.size(); ++i) {
        if (i) s += '-';
        s += std::to_string(layer_dims[i]);
    }
    return s;
}

std::string FnnSpec::hash() const {
    // FNV-1a over the dimension string
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : "fnn-tanh:" + dims_string()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void FnnSpec::validate() const {
    if (layer_dims.size() < 3) {
        throw ValidationError("FNN needs input, output and at least one hidden layer: " + dims_string());
    }
    for (auto d : layer_dims) {
        if (d == 0) throw ValidationError("FNN dims must be positive: " + dims_string());
    }
}

FnnSpec FnnSpec::battery() { return {{2, 6, 6, 6, 6, 1}}; }

FnnSpec FnnSpec::engine() { return {{5, 32, 32, 32, 32, 32, 32, 32, 1}}; }

FnnSpec parse_fnn_dims(const std::string& text) {
    FnnSpec spec;
    std::string tok;
    std::istringstream in(text);
    while (std::getline(in, tok, text.find(',') != std::string::npos ? ',' : '-')) {
        if (tok.empty()) continue;
        try {
            std::size_t pos = 0;
            const long v = std::stol(tok, &pos);
            if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
            spec.layer_dims.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ValidationError("bad FNN dimension '" + tok + "' in '" + text + "'");
        }
    }
    spec.validate();
    return spec;
}

std::size_t ConfigSnapshot::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.size();
    return n;
}

std::vector<double> ConfigSnapshot::flat() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (const auto& l : layers) out.insert(out.end(), l.begin(), l.end());
    return out;
}

bool ConfigSnapshot::matches(const FnnSpec& spec) const {
    if (layers.size() != spec.layer_count()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].size() != spec.layer_param_count(i)) return false;
    }
    return spec_hash.empty() || spec_hash == spec.hash();
}

bool bitwise_equal(const ConfigSnapshot& a, const ConfigSnapshot& b) noexcept {
    if (a.stage_index != b.stage_index || a.spec_hash != b.spec_hash ||
        a.layers.size() != b.layers.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (!bitwise_equal(std::span<const double>(a.layers[i]), std::span<const double>(b.layers[i]))) {
            return false;
        }
    }
    return true;
}

std::vector<double> flatten_layer(const Tensor& weight, const Tensor& bias) {
    if (bias.size() != weight.rows()) {
        throw DimensionError("bias " + bias.shape_str() + " does not match weight " + weight.shape_str());
    }
    std::vector<double> out(weight.values().begin(), weight.values().end());
    out.insert(out.end(), bias.values().begin(), bias.values().end());
    return out;
}

void unflatten_layer(std::span<const double> flat, std::size_t n_in, std::size_t n_out,
                     Tensor& weight, Tensor& bias) {
    if (flat.size() != (n_in + 1) * n_out) {
        throw DimensionError("layer vector of length " + std::to_string(flat.size()) +
                             " cannot hold a " + std::to_string(n_in) + "->" + std::to_string(n_out) +
                             " layer");
    }
    weight = Tensor(n_out, n_in, std::vector<double>(flat.begin(), flat.begin() + n_in * n_out));
    bias = Tensor(1, n_out, std::vector<double>(flat.begin() + n_in * n_out, flat.end()));
}

std::vector<double> flatten_layer(const ConfigSnapshot& snapshot, std::size_t layer) {
    if (layer >= snapshot.layers.size()) {
        throw DimensionError("layer index " + std::to_string(layer) + " out of range (" +
                             std::to_string(snapshot.layers.size()) + " layers)");
    }
    return snapshot.layers[layer];
}

namespace {

void require_match(const FnnSpec& spec, const ConfigSnapshot& s) {
    if (!s.matches(spec)) {
        throw DimensionError("snapshot for stage " + std::to_string(s.stage_index) +
                             " does not match FNN " + spec.dims_string());
    }
}

}  // namespace

std::vector<Tensor> snapshot_to_params(const FnnSpec& spec, const ConfigSnapshot& snapshot) {
    require_match(spec, snapshot);
    std::vector<Tensor> params;
    for (std::size_t i = 0; i < spec.layer_count(); ++i) {
        Tensor w, b;
        unflatten_layer(snapshot.layers[i], spec.layer_dims[i], spec.layer_dims[i + 1], w, b);
        params.push_back(std::move(w));
        params.push_back(std::move(b));
    }
    return params;
}

ConfigSnapshot params_to_snapshot(const FnnSpec& spec, std::span<const Tensor> params,
                                  std::size_t stage_index) {
    if (params.size() != 2 * spec.layer_count()) {
        throw DimensionError("expected " + std::to_string(2 * spec.layer_count()) +
                             " parameter tensors for FNN " + spec.dims_string());
    }
    ConfigSnapshot s{stage_index, {}, spec.hash()};
    for (std::size_t i = 0; i < spec.layer_count(); ++i) {
        s.layers.push_back(flatten_layer(params[2 * i], params[2 * i + 1]));
    }
    require_match(spec, s);
    return s;
}

ConfigSnapshot snapshot_from_flat(const FnnSpec& spec, std::span<const double> flat,
                                  std::size_t stage_index) {
    if (flat.size() != spec.param_count()) {
        throw DimensionError("flat vector of length " + std::to_string(flat.size()) + " for FNN with " +
                             std::to_string(spec.param_count()) + " parameters");
    }
    ConfigSnapshot s{stage_index, {}, spec.hash()};
    std::size_t off = 0;
    for (std::size_t i = 0; i < spec.layer_count(); ++i) {
        const std::size_t n = spec.layer_param_count(i);
        s.layers.emplace_back(flat.begin() + off, flat.begin() + off + n);
        off += n;
    }
    return s;
}

ConfigSnapshot zero_snapshot(const FnnSpec& spec, std::size_t stage_index) {
    return snapshot_from_flat(spec, std::vector<double>(spec.param_count(), 0.0), stage_index);
}

void init_affine(Rng& rng, std::size_t n_in, std::size_t n_out, Tensor& weight, Tensor& bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
    weight = Tensor(n_out, n_in);
    bias = Tensor(1, n_out);
    for (double& v : weight.values()) v = rng.uniform(-bound, bound);
    for (double& v : bias.values()) v = rng.uniform(-bound, bound);
}

ConfigSnapshot fnn_init(const FnnSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<Tensor> params;
    for (std::size_t i = 0; i < spec.layer_count(); ++i) {
        Tensor w, b;
        init_affine(rng, spec.layer_dims[i], spec.layer_dims[i + 1], w, b);
        params.push_back(std::move(w));
        params.push_back(std::move(b));
    }
    return params_to_snapshot(spec, params, 0);
}

ad::Var fnn_forward(const FnnSpec& spec, std::span<const ad::Var> params, ad::Var inputs) {
    if (inputs.value().cols() != spec.input_dim()) {
        throw DimensionError("FNN " + spec.dims_string() + " given inputs of shape " +
                             inputs.value().shape_str());
    }
    ad::Var h = inputs;
    for (std::size_t i = 0; i < spec.layer_count(); ++i) {
        h = ad::affine(h, params[2 * i], params[2 * i + 1]);
        if (i + 1 < spec.layer_count()) h = ad::tanh(h);
    }
    return h;
}

Tensor fnn_forward(const FnnSpec& spec, const ConfigSnapshot& snapshot, const Tensor& inputs) {
    const auto params = snapshot_to_params(spec, snapshot);
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.constant(p));
    return fnn_forward(spec, vars, tape.constant(inputs)).value();
}

namespace {

DataLossFn fnn_data_loss(const FnnSpec& spec, const StageDataset& data) {
    return [&spec, &data](ad::Tape& tape, std::span<const ad::Var> vars) {
        ad::Var pred = fnn_forward(spec, vars, tape.constant(data.inputs));
        return ad::mse(pred, tape.constant(data.outputs));
    };
}

void check_dataset(const FnnSpec& spec, const StageDataset& data) {
    data.validate();
    if (data.inputs.cols() != spec.input_dim() || data.outputs.cols() != spec.output_dim()) {
        throw DimensionError("stage " + std::to_string(data.stage_index) + " has " +
                             std::to_string(data.inputs.cols()) + " inputs / " +
                             std::to_string(data.outputs.cols()) + " outputs; FNN " +
                             spec.dims_string() + " expects " + std::to_string(spec.input_dim()) +
                             " / " + std::to_string(spec.output_dim()));
    }
}

}  // namespace

FnnTrainResult fnn_train(const FnnSpec& spec, const StageDataset& data, const TrainConfig& cfg,
                         const ConfigSnapshot& init) {
    check_dataset(spec, data);
    auto params = snapshot_to_params(spec, init);
    TrainResult log = train_parameters(params, cfg, fnn_data_loss(spec, data),
                                       "DT training on stage " + std::to_string(data.stage_index));
    return {params_to_snapshot(spec, params, init.stage_index), std::move(log)};
}

ObjectiveTerms fnn_objective(const FnnSpec& spec, const ConfigSnapshot& snapshot,
                             const StageDataset& data, double alpha) {
    check_dataset(spec, data);
    const Tensor pred = fnn_forward(spec, snapshot, data.inputs);
    ObjectiveTerms t;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - data.outputs[i];
        t.mse += d * d;
    }
    t.mse /= static_cast<double>(pred.size());
    for (const auto& layer : snapshot.layers)
        for (double v : layer) t.l2 += v * v;
    t.total = t.mse + alpha * t.l2;
    return t;
}

}  // namespace dtlife
