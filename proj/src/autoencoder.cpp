#include "dtlife/autoencoder.hpp"

#include <cmath>

#include "dtlife/error.hpp"

namespace dtlife {

namespace {

std::size_t nearest(double v) {
    const double r = std::nearbyint(v);  // ties to even under the default rounding mode
    return r < 1.0 ? 1 : static_cast<std::size_t>(r);
}

}  // namespace

AutoencoderSpec AutoencoderSpec::joint(std::vector<std::size_t> group_sizes, std::size_t latent) {
    const std::size_t n = group_sizes.size();
    return {std::move(group_sizes), 64, {32 * n, 16 * n, 8 * n}, latent};
}

AutoencoderSpec AutoencoderSpec::single_layer(std::size_t params, std::size_t latent) {
    const double a = static_cast<double>(params);
    return {{params}, 0, {nearest(a / 2.0), nearest(a / 4.0)}, latent};
}

std::size_t AutoencoderSpec::input_size() const {
    std::size_t n = 0;
    for (auto g : group_sizes) n += g;
    return n;
}

std::size_t AutoencoderSpec::trunk_input() const {
    return head_width > 0 ? head_width * groups() : group_sizes.front();
}

std::vector<std::size_t> AutoencoderSpec::encoder_widths() const {
    std::vector<std::size_t> w{trunk_input()};
    w.insert(w.end(), trunk_widths.begin(), trunk_widths.end());
    w.push_back(latent);
    return w;
}

std::vector<std::size_t> AutoencoderSpec::decoder_widths() const {
    std::vector<std::size_t> w{latent};
    w.insert(w.end(), trunk_widths.rbegin(), trunk_widths.rend());
    w.push_back(head_width > 0 ? trunk_input() : group_sizes.front());
    return w;
}

void AutoencoderSpec::validate() const {
    if (group_sizes.empty()) throw ValidationError("autoencoder needs at least one parameter group");
    if (head_width == 0 && groups() != 1) {
        throw ValidationError("autoencoder without per-group heads takes exactly one group");
    }
    if (latent == 0) throw ValidationError("autoencoder latent width must be positive");
    for (auto g : group_sizes)
        if (g == 0) throw ValidationError("autoencoder group sizes must be positive");
    for (auto w : trunk_widths)
        if (w == 0) throw ValidationError("autoencoder trunk widths must be positive");
}

std::size_t Autoencoder::param_count() const {
    std::size_t n = 0;
    for (const Tensor& p : params) n += p.size();
    return n;
}

namespace {

struct Layout {
    std::size_t enc_heads = 0;   // first index of encoder heads
    std::size_t enc_trunk = 0;
    std::size_t dec_trunk = 0;
    std::size_t dec_heads = 0;
    std::size_t end = 0;
};

Layout layout_of(const AutoencoderSpec& s) {
    Layout l;
    const std::size_t heads = s.head_width > 0 ? s.groups() : 0;
    l.enc_heads = 0;
    l.enc_trunk = 2 * heads;
    l.dec_trunk = l.enc_trunk + 2 * (s.encoder_widths().size() - 1);
    l.dec_heads = l.dec_trunk + 2 * (s.decoder_widths().size() - 1);
    l.end = l.dec_heads + 2 * heads;
    return l;
}

template <class Fn>
void for_each_layer(const AutoencoderSpec& s, Fn&& fn) {
    // fn(n_in, n_out) in parameter-layout order
    if (s.head_width > 0)
        for (auto g : s.group_sizes) fn(g, s.head_width);
    const auto enc = s.encoder_widths();
    for (std::size_t i = 0; i + 1 < enc.size(); ++i) fn(enc[i], enc[i + 1]);
    const auto dec = s.decoder_widths();
    for (std::size_t i = 0; i + 1 < dec.size(); ++i) fn(dec[i], dec[i + 1]);
    if (s.head_width > 0)
        for (auto g : s.group_sizes) fn(s.head_width, g);
}

}  // namespace

Autoencoder autoencoder_init(const AutoencoderSpec& spec, Rng& rng) {
    spec.validate();
    Autoencoder ae{spec, {}};
    for_each_layer(spec, [&](std::size_t n_in, std::size_t n_out) {
        Tensor w, b;
        init_affine(rng, n_in, n_out, w, b);
        ae.params.push_back(std::move(w));
        ae.params.push_back(std::move(b));
    });
    return ae;
}

Autoencoder autoencoder_zero(const AutoencoderSpec& spec) {
    spec.validate();
    Autoencoder ae{spec, {}};
    for_each_layer(spec, [&](std::size_t n_in, std::size_t n_out) {
        ae.params.emplace_back(n_out, n_in, 0.0);
        ae.params.emplace_back(1, n_out, 0.0);
    });
    return ae;
}

ad::Var ae_encode(const AutoencoderSpec& spec, std::span<const ad::Var> params,
                  std::span<const ad::Var> groups) {
    const Layout l = layout_of(spec);
    if (params.size() != l.end) throw DimensionError("autoencoder parameter list has wrong length");
    if (groups.size() != spec.groups()) {
        throw DimensionError("autoencoder expects " + std::to_string(spec.groups()) +
                             " parameter groups, got " + std::to_string(groups.size()));
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].value().cols() != spec.group_sizes[g]) {
            throw DimensionError("autoencoder group " + std::to_string(g) + " expects width " +
                                 std::to_string(spec.group_sizes[g]) + ", got " +
                                 groups[g].value().shape_str());
        }
    }
    ad::Var h;
    if (spec.head_width > 0) {
        std::vector<ad::Var> compressed;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            compressed.push_back(ad::tanh(
                ad::affine(groups[g], params[l.enc_heads + 2 * g], params[l.enc_heads + 2 * g + 1])));
        }
        h = ad::concat_cols(compressed);
    } else {
        h = groups.front();
    }
    const std::size_t layers = (l.dec_trunk - l.enc_trunk) / 2;
    for (std::size_t i = 0; i < layers; ++i) {
        h = ad::affine(h, params[l.enc_trunk + 2 * i], params[l.enc_trunk + 2 * i + 1]);
        if (i + 1 < layers) h = ad::tanh(h);
    }
    return h;
}

std::vector<ad::Var> ae_decode(const AutoencoderSpec& spec, std::span<const ad::Var> params,
                               ad::Var latent) {
    const Layout l = layout_of(spec);
    if (params.size() != l.end) throw DimensionError("autoencoder parameter list has wrong length");
    if (latent.value().cols() != spec.latent) {
        throw DimensionError("latent feature of shape " + latent.value().shape_str() +
                             " for autoencoder with L=" + std::to_string(spec.latent));
    }
    ad::Var h = latent;
    const std::size_t layers = (l.dec_heads - l.dec_trunk) / 2;
    for (std::size_t i = 0; i < layers; ++i) {
        h = ad::affine(h, params[l.dec_trunk + 2 * i], params[l.dec_trunk + 2 * i + 1]);
        // without heads the last trunk layer is the linear reconstruction
        if (spec.head_width > 0 || i + 1 < layers) h = ad::tanh(h);
    }
    if (spec.head_width == 0) return {h};
    const std::vector<std::size_t> widths(spec.groups(), spec.head_width);
    const auto parts = ad::split_cols(h, widths);
    std::vector<ad::Var> out;
    for (std::size_t g = 0; g < parts.size(); ++g) {
        out.push_back(ad::affine(parts[g], params[l.dec_heads + 2 * g], params[l.dec_heads + 2 * g + 1]));
    }
    return out;
}

namespace {

std::vector<ad::Var> bind_constants(ad::Tape& tape, std::span<const Tensor> params) {
    std::vector<ad::Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.constant(p));
    return vars;
}

/// Stacks samples[s][g] into one S x size_g matrix per group.
std::vector<Tensor> stack_groups(const AutoencoderSpec& spec,
                                 const std::vector<std::vector<std::vector<double>>>& samples) {
    std::vector<Tensor> out;
    for (std::size_t g = 0; g < spec.groups(); ++g) {
        Tensor m(samples.size(), spec.group_sizes[g]);
        for (std::size_t s = 0; s < samples.size(); ++s) {
            if (samples[s].size() != spec.groups() || samples[s][g].size() != spec.group_sizes[g]) {
                throw DimensionError("sample " + std::to_string(s) +
                                     " does not match the autoencoder's parameter groups");
            }
            std::copy(samples[s][g].begin(), samples[s][g].end(), m.row_span(s).begin());
        }
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace

LatentFeature ae_encode(const Autoencoder& ae, std::span<const std::vector<double>> groups) {
    ad::Tape tape;
    const auto vars = bind_constants(tape, ae.params);
    std::vector<ad::Var> inputs;
    for (const auto& g : groups) inputs.push_back(tape.constant(Tensor::row(g)));
    const Tensor& z = ae_encode(ae.spec, vars, inputs).value();
    return {z.values().begin(), z.values().end()};
}

std::vector<std::vector<double>> ae_decode(const Autoencoder& ae, std::span<const double> latent) {
    ad::Tape tape;
    const auto vars = bind_constants(tape, ae.params);
    const auto parts = ae_decode(ae.spec, vars, tape.constant(Tensor::row(latent)));
    std::vector<std::vector<double>> out;
    for (const auto& p : parts) out.emplace_back(p.value().values().begin(), p.value().values().end());
    return out;
}

LatentFeature ae_encode(const Autoencoder& ae, const ConfigSnapshot& snapshot) {
    return ae_encode(ae, std::span<const std::vector<double>>(snapshot.layers));
}

ConfigSnapshot ae_decode(const Autoencoder& ae, const FnnSpec& fnn, std::span<const double> latent,
                         std::size_t stage_index) {
    if (ae.spec.group_sizes != fnn.layer_param_counts()) {
        throw DimensionError("autoencoder was not built for FNN " + fnn.dims_string());
    }
    return ConfigSnapshot{stage_index, ae_decode(ae, latent), fnn.hash()};
}

AeTrainResult ae_train(const AutoencoderSpec& spec,
                       const std::vector<std::vector<std::vector<double>>>& samples,
                       const TrainConfig& cfg) {
    spec.validate();
    if (samples.size() < 2) {
        throw ValidationError("autoencoder training needs at least 2 snapshots, got " +
                              std::to_string(samples.size()));
    }
    const std::vector<Tensor> groups = stack_groups(spec, samples);
    Tensor target(samples.size(), spec.input_size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        std::size_t off = 0;
        for (const auto& g : samples[s]) {
            std::copy(g.begin(), g.end(), target.row_span(s).begin() + static_cast<std::ptrdiff_t>(off));
            off += g.size();
        }
    }
    Rng rng(cfg.seed);
    Autoencoder ae = autoencoder_init(spec, rng);
    DataLossFn loss = [&](ad::Tape& tape, std::span<const ad::Var> vars) {
        std::vector<ad::Var> inputs;
        for (const Tensor& g : groups) inputs.push_back(tape.constant(g));
        const auto recon = ae_decode(spec, vars, ae_encode(spec, vars, inputs));
        ad::Var all = recon.size() == 1 ? recon.front() : ad::concat_cols(recon);
        return ad::mse(all, tape.constant(target));
    };
    TrainResult log = train_parameters(ae.params, cfg, loss, "autoencoder training");
    return {std::move(ae), std::move(log)};
}

AeTrainResult ae_train(const std::vector<ConfigSnapshot>& snapshots, std::size_t latent,
                       const TrainConfig& cfg) {
    if (snapshots.size() < 2) {
        throw ValidationError("autoencoder training needs at least 2 snapshots, got " +
                              std::to_string(snapshots.size()));
    }
    std::vector<std::size_t> sizes;
    for (const auto& l : snapshots.front().layers) sizes.push_back(l.size());
    std::vector<std::vector<std::vector<double>>> samples;
    for (const auto& s : snapshots) samples.push_back(s.layers);
    return ae_train(AutoencoderSpec::joint(sizes, latent), samples, cfg);
}

double ae_reconstruction_mse(const Autoencoder& ae,
                             const std::vector<std::vector<std::vector<double>>>& samples) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
        const auto recon = ae_decode(ae, ae_encode(ae, std::span<const std::vector<double>>(s)));
        for (std::size_t g = 0; g < s.size(); ++g) {
            for (std::size_t j = 0; j < s[g].size(); ++j) {
                const double d = recon[g][j] - s[g][j];
                total += d * d;
                ++count;
            }
        }
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace dtlife
