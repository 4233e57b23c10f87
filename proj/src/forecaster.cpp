#include "dtlife/forecaster.hpp"

#include <cmath>

#include "dtlife/error.hpp"
#include "dtlife/fnn.hpp"

namespace dtlife {

std::string to_string(ForecasterKind kind) {
    return kind == ForecasterKind::lstm ? "lstm" : "transformer";
}

ForecasterKind parse_forecaster_kind(const std::string& text) {
    if (text == "lstm") return ForecasterKind::lstm;
    if (text == "transformer") return ForecasterKind::transformer;
    throw ValidationError("unknown forecaster '" + text + "' (expected lstm or transformer)");
}

ForecasterSpec ForecasterSpec::lstm(std::size_t latent, std::size_t window) {
    return {ForecasterKind::lstm, latent, window, 2, 6};
}

ForecasterSpec ForecasterSpec::transformer(std::size_t latent, std::size_t window) {
    return {ForecasterKind::transformer, latent, window, 2, 6};
}

std::vector<std::size_t> ForecasterSpec::head_widths() const {
    const std::size_t l = latent;
    return {block_output(), 2 * l, 4 * l, 3 * l, 2 * l, l};
}

void ForecasterSpec::validate() const {
    if (latent == 0) throw ValidationError("forecaster latent width must be positive");
    if (window == 0) throw ValidationError("forecaster window must be positive");
    if (kind == ForecasterKind::lstm && lstm_layers == 0) {
        throw ValidationError("LSTM forecaster needs at least one layer");
    }
}

std::size_t Forecaster::param_count() const {
    std::size_t n = 0;
    for (const Tensor& p : params) n += p.size();
    return n;
}

namespace {

constexpr std::size_t kTransformerTensors = 16;

std::size_t block_tensor_count(const ForecasterSpec& s) {
    return s.kind == ForecasterKind::lstm ? 3 * s.lstm_layers : kTransformerTensors * s.encoder_layers;
}

Forecaster make(const ForecasterSpec& spec, Rng* rng) {
    spec.validate();
    Forecaster f{spec, {}};
    auto weight = [&](std::size_t n_in, std::size_t n_out) {
        Tensor w(n_out, n_in, 0.0);
        if (rng) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
            for (double& v : w.values()) v = rng->uniform(-bound, bound);
        }
        f.params.push_back(std::move(w));
    };
    auto affine = [&](std::size_t n_in, std::size_t n_out) {
        if (rng) {
            Tensor w, b;
            init_affine(*rng, n_in, n_out, w, b);
            f.params.push_back(std::move(w));
            f.params.push_back(std::move(b));
        } else {
            f.params.emplace_back(n_out, n_in, 0.0);
            f.params.emplace_back(1, n_out, 0.0);
        }
    };
    auto constant = [&](std::size_t cols, double v) { f.params.emplace_back(1, cols, rng ? v : 0.0); };

    const std::size_t l = spec.latent;
    if (spec.kind == ForecasterKind::lstm) {
        const std::size_t h = spec.hidden();
        for (std::size_t layer = 0; layer < spec.lstm_layers; ++layer) {
            weight(layer == 0 ? l : h, 4 * h);
            weight(h, 4 * h);
            f.params.emplace_back(1, 4 * h, 0.0);  // gate biases start at zero
        }
    } else {
        for (std::size_t layer = 0; layer < spec.encoder_layers; ++layer) {
            affine(l, l);  // query
            affine(l, l);  // key
            affine(l, l);  // value
            affine(l, l);  // output projection
            constant(l, 1.0);
            constant(l, 0.0);
            affine(l, spec.ff_width());
            affine(spec.ff_width(), l);
            constant(l, 1.0);
            constant(l, 0.0);
        }
    }
    const auto head = spec.head_widths();
    for (std::size_t i = 0; i + 1 < head.size(); ++i) affine(head[i], head[i + 1]);
    return f;
}

ad::Var lstm_block(const ForecasterSpec& s, std::span<const ad::Var> p,
                   std::span<const Tensor> windows, ad::Tape& tape) {
    const std::size_t batch = windows.size(), h = s.hidden(), l = s.latent;
    std::vector<ad::Var> seq;
    for (std::size_t t = 0; t < s.window; ++t) {
        Tensor x(batch, l);
        for (std::size_t b = 0; b < batch; ++b) {
            std::copy_n(windows[b].ptr() + t * l, l, x.ptr() + b * l);
        }
        seq.push_back(tape.constant(std::move(x)));
    }
    for (std::size_t layer = 0; layer < s.lstm_layers; ++layer) {
        const ad::Var w_ih = p[3 * layer], w_hh = p[3 * layer + 1], bias = p[3 * layer + 2];
        ad::Var hs = tape.constant(Tensor(batch, h, 0.0));
        ad::Var cs = tape.constant(Tensor(batch, h, 0.0));
        std::vector<ad::Var> out;
        for (std::size_t t = 0; t < s.window; ++t) {
            ad::Var gates = ad::add(ad::affine(seq[t], w_ih, bias), ad::linear(hs, w_hh));
            ad::Var in = ad::sigmoid(ad::slice_cols(gates, 0, h));
            ad::Var forget = ad::sigmoid(ad::slice_cols(gates, h, h));
            ad::Var cand = ad::tanh(ad::slice_cols(gates, 2 * h, h));
            ad::Var outg = ad::sigmoid(ad::slice_cols(gates, 3 * h, h));
            cs = ad::add(ad::mul(forget, cs), ad::mul(in, cand));
            hs = ad::mul(outg, ad::tanh(cs));
            out.push_back(hs);
        }
        seq = std::move(out);
    }
    return seq.back();
}

}  // namespace

Forecaster forecaster_init(const ForecasterSpec& spec, Rng& rng) { return make(spec, &rng); }

Forecaster forecaster_zero(const ForecasterSpec& spec) { return make(spec, nullptr); }

ad::Var transformer_encode(const ForecasterSpec& s, std::span<const ad::Var> p, ad::Var x) {
    for (std::size_t layer = 0; layer < s.encoder_layers; ++layer) {
        const ad::Var* q = p.data() + kTransformerTensors * layer;
        ad::Var att = ad::segment_attention(ad::affine(x, q[0], q[1]), ad::affine(x, q[2], q[3]),
                                            ad::affine(x, q[4], q[5]), s.window);
        x = ad::layer_norm(ad::add(x, ad::affine(att, q[6], q[7])), q[8], q[9]);
        ad::Var ff = ad::affine(ad::relu(ad::affine(x, q[10], q[11])), q[12], q[13]);
        x = ad::layer_norm(ad::add(x, ff), q[14], q[15]);
    }
    return x;
}

ad::Var forecaster_forward(const ForecasterSpec& spec, std::span<const ad::Var> params,
                           std::span<const Tensor> windows, ad::Tape& tape) {
    const std::size_t blocks = block_tensor_count(spec);
    if (params.size() != blocks + 2 * (spec.head_widths().size() - 1)) {
        throw DimensionError("forecaster parameter list has wrong length");
    }
    if (windows.empty()) throw DimensionError("forecaster needs at least one window");
    for (const Tensor& w : windows) {
        if (w.rows() != spec.window || w.cols() != spec.latent) {
            throw DimensionError("forecaster expects windows of " + std::to_string(spec.window) + "x" +
                                 std::to_string(spec.latent) + ", got " + w.shape_str());
        }
    }
    ad::Var h;
    if (spec.kind == ForecasterKind::lstm) {
        h = lstm_block(spec, params, windows, tape);
    } else {
        Tensor stacked(windows.size() * spec.window, spec.latent);
        for (std::size_t b = 0; b < windows.size(); ++b) {
            std::copy(windows[b].values().begin(), windows[b].values().end(),
                      stacked.ptr() + b * windows[b].size());
        }
        h = ad::segment_sum(transformer_encode(spec, params, tape.constant(std::move(stacked))),
                            spec.window);
    }
    const std::size_t head_layers = spec.head_widths().size() - 1;
    for (std::size_t i = 0; i < head_layers; ++i) {
        h = ad::affine(h, params[blocks + 2 * i], params[blocks + 2 * i + 1]);
        if (i + 1 < head_layers) h = ad::tanh(h);
    }
    return h;
}

namespace {

Tensor window_matrix(std::span<const LatentFeature> window, std::size_t latent) {
    Tensor m(window.size(), latent);
    for (std::size_t r = 0; r < window.size(); ++r) {
        if (window[r].size() != latent) {
            throw DimensionError("latent feature of width " + std::to_string(window[r].size()) +
                                 " where " + std::to_string(latent) + " was expected");
        }
        std::copy(window[r].begin(), window[r].end(), m.row_span(r).begin());
    }
    return m;
}

}  // namespace

LatentFeature forecaster_forward(const Forecaster& model, std::span<const LatentFeature> window) {
    if (window.size() != model.spec.window) {
        throw DimensionError("window of length " + std::to_string(window.size()) +
                             " for a forecaster with w=" + std::to_string(model.spec.window));
    }
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const Tensor& p : model.params) vars.push_back(tape.constant(p));
    const Tensor w = window_matrix(window, model.spec.latent);
    const Tensor& out = forecaster_forward(model.spec, vars, std::span<const Tensor>(&w, 1), tape).value();
    return {out.values().begin(), out.values().end()};
}

WindowPairs make_window_pairs(std::span<const LatentFeature> features, std::size_t window) {
    if (window == 0) throw ValidationError("window must be positive");
    if (features.size() < window + 1) {
        throw ValidationError("forecaster needs at least w+1 = " + std::to_string(window + 1) +
                              " stages of latent features, have " + std::to_string(features.size()));
    }
    const std::size_t latent = features.front().size();
    const std::size_t pairs = features.size() - window;
    WindowPairs out{{}, Tensor(pairs, latent)};
    for (std::size_t j = window; j < features.size(); ++j) {
        out.windows.push_back(window_matrix(features.subspan(j - window, window), latent));
        if (features[j].size() != latent) throw DimensionError("inconsistent latent widths");
        std::copy(features[j].begin(), features[j].end(), out.targets.row_span(j - window).begin());
    }
    return out;
}

ForecasterTrainResult forecaster_train(std::span<const LatentFeature> features,
                                       const ForecasterSpec& spec, const TrainConfig& cfg) {
    spec.validate();
    WindowPairs pairs = make_window_pairs(features, spec.window);
    if (pairs.targets.cols() != spec.latent) {
        throw DimensionError("latent features have width " + std::to_string(pairs.targets.cols()) +
                             ", forecaster expects " + std::to_string(spec.latent));
    }
    Rng rng(cfg.seed);
    Forecaster model = forecaster_init(spec, rng);
    DataLossFn loss = [&](ad::Tape& tape, std::span<const ad::Var> vars) {
        ad::Var pred = forecaster_forward(spec, vars, pairs.windows, tape);
        return ad::mse(pred, tape.constant(pairs.targets));
    };
    TrainResult log = train_parameters(model.params, cfg, loss, to_string(spec.kind) + " training");
    return {std::move(model), std::move(log)};
}

}  // namespace dtlife
