#include "dtlife/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "dtlife/error.hpp"

namespace dtlife {

std::vector<std::size_t> even_sample_indices(std::size_t length, std::size_t n) {
    if (n < 2) throw ValidationError("even sampling needs n >= 2");
    if (length < n) {
        throw ValidationError("series of length " + std::to_string(length) + " is shorter than n = " +
                              std::to_string(n));
    }
    std::vector<std::size_t> idx(n);
    const std::size_t span = length - 1, steps = n - 1;
    for (std::size_t k = 0; k < n; ++k) idx[k] = (2 * k * span + steps) / (2 * steps);
    return idx;
}

Series sample_evenly(const Series& series, std::size_t n) {
    if (series.t.size() != series.v.size()) throw DimensionError("series time/value lengths differ");
    Series out;
    for (std::size_t i : even_sample_indices(series.t.size(), n)) {
        out.t.push_back(series.t[i]);
        out.v.push_back(series.v[i]);
    }
    return out;
}

std::vector<double> smooth_downsample(std::span<const double> series, std::size_t window) {
    if (window == 0) throw ValidationError("smoothing window must be positive");
    if (series.size() < window) {
        throw ValidationError("series of length " + std::to_string(series.size()) +
                              " is shorter than the smoothing window " + std::to_string(window));
    }
    std::vector<double> out(series.size() / window);
    for (std::size_t b = 0; b < out.size(); ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < window; ++i) s += series[b * window + i];
        out[b] = s / static_cast<double>(window);
    }
    return out;
}

Tensor smooth_downsample(const Tensor& columns, std::size_t window) {
    if (columns.rows() < window || window == 0) {
        throw ValidationError("series of length " + std::to_string(columns.rows()) +
                              " is shorter than the smoothing window " + std::to_string(window));
    }
    Tensor out(columns.rows() / window, columns.cols());
    std::vector<double> col(columns.rows());
    for (std::size_t c = 0; c < columns.cols(); ++c) {
        for (std::size_t r = 0; r < columns.rows(); ++r) col[r] = columns(r, c);
        const auto reduced = smooth_downsample(col, window);
        for (std::size_t r = 0; r < reduced.size(); ++r) out(r, c) = reduced[r];
    }
    return out;
}

ScalerParams minmax_fit(std::span<const Tensor> matrices) {
    if (matrices.empty()) throw ValidationError("min-max fit needs at least one matrix");
    const std::size_t d = matrices.front().cols();
    ScalerParams s{std::vector<double>(d, INFINITY), std::vector<double>(d, -INFINITY), {}};
    for (const Tensor& m : matrices) {
        if (m.cols() != d) throw DimensionError("min-max fit over matrices with different column counts");
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                const double v = m(r, c);
                if (!std::isfinite(v)) continue;
                s.min[c] = std::min(s.min[c], v);
                s.max[c] = std::max(s.max[c], v);
            }
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        if (!std::isfinite(s.min[c])) {
            throw ValidationError("min-max fit: column " + std::to_string(c) + " has no finite values");
        }
        if (s.max[c] == s.min[c]) s.constant_columns.push_back(c);
    }
    return s;
}

Tensor minmax_apply(const ScalerParams& scaler, const Tensor& m) {
    if (m.cols() != scaler.min.size()) throw DimensionError("min-max apply: column count mismatch");
    Tensor out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double range = scaler.max[c] - scaler.min[c];
            out(r, c) = range > 0.0 ? (m(r, c) - scaler.min[c]) / range : 0.0;
        }
    }
    return out;
}

Tensor minmax_invert(const ScalerParams& scaler, const Tensor& m) {
    if (m.cols() != scaler.min.size()) throw DimensionError("min-max invert: column count mismatch");
    Tensor out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out(r, c) = scaler.min[c] + m(r, c) * (scaler.max[c] - scaler.min[c]);
        }
    }
    return out;
}

StageScalers minmax_scale_stages(std::vector<StageDataset>& stages) {
    std::vector<Tensor> xs, ys;
    for (const auto& s : stages) {
        xs.push_back(s.inputs);
        ys.push_back(s.outputs);
    }
    StageScalers sc{minmax_fit(xs), minmax_fit(ys)};
    for (auto& s : stages) {
        s.inputs = minmax_apply(sc.inputs, s.inputs);
        s.outputs = minmax_apply(sc.outputs, s.outputs);
    }
    return sc;
}

}  // namespace dtlife
