#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dtlife/dataset.hpp"
#include "dtlife/tensor.hpp"

namespace dtlife {

/// round(k * (len - 1) / (n - 1)) for k = 0 .. n-1; ties round up.
std::vector<std::size_t> even_sample_indices(std::size_t length, std::size_t n);

struct Series {
    std::vector<double> t;
    std::vector<double> v;
};

/// Keeps n points spread evenly over the series, endpoints included.
Series sample_evenly(const Series& series, std::size_t n = 200);

/// Moving average followed by decimation with the same window, realized as
/// means of aligned non-overlapping blocks. A trailing partial block is dropped.
std::vector<double> smooth_downsample(std::span<const double> series, std::size_t window = 50);
/// Column-wise smooth_downsample of an n x d matrix.
Tensor smooth_downsample(const Tensor& columns, std::size_t window = 50);

/// Per-column min/max pooled over every stage.
struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;
    /// Columns with max == min; these map to 0.
    std::vector<std::size_t> constant_columns;
};

ScalerParams minmax_fit(std::span<const Tensor> matrices);
Tensor minmax_apply(const ScalerParams& scaler, const Tensor& m);
Tensor minmax_invert(const ScalerParams& scaler, const Tensor& m);

/// Fits one scaler on all stage inputs and one on all outputs, then scales in place.
struct StageScalers {
    ScalerParams inputs;
    ScalerParams outputs;
};
StageScalers minmax_scale_stages(std::vector<StageDataset>& stages);

}  // namespace dtlife
