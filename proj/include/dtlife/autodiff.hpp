#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dtlife/tensor.hpp"

namespace dtlife::ad {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    bool valid() const noexcept { return tape != nullptr; }
    const Tensor& value() const;
};

/// Records differentiable operations in execution order. `backward` replays
/// them in exact reverse order; accumulation into each gradient therefore
/// happens in a fixed sequence.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Trainable leaf: receives a gradient.
    Var parameter(const Tensor& value);
    /// Non-trainable leaf (data, targets, fixed states).
    Var constant(Tensor value);

    /// Reverse pass from a 1x1 loss. May be called once per tape.
    void backward(Var loss);

    const Tensor& value(Var v) const;
    /// Gradient of the loss w.r.t. `v`; zeros if `v` did not influence it.
    Tensor grad(Var v) const;

    std::size_t size() const noexcept { return nodes_.size(); }

    // Used by op implementations.
    using Backward = std::function<void(Tape&, std::size_t)>;
    Var record(Tensor value, bool needs_grad, Backward back);
    bool needs_grad(Var v) const { return nodes_[check(v)].needs_grad; }
    const Tensor& out_grad(std::size_t id) const { return nodes_[id].grad; }
    /// Gradient buffer of `v`, allocated on first use; null when `v` needs no gradient.
    Tensor* grad_buffer(Var v);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        bool has_grad = false;
        Backward back;
    };

    std::size_t check(Var v) const;

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

Var affine(Var x, Var weight, Var bias);   // x W^T + b
Var linear(Var x, Var weight);             // x W^T
Var tanh(Var x);
Var sigmoid(Var x);
Var relu(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var sum(Var x);
Var mse(Var pred, Var target);
Var l2_norm_sq(std::span<const Var> params);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t start, std::size_t width);
std::vector<Var> split_cols(Var x, std::span<const std::size_t> widths);
/// Row-wise layer normalization with learnable 1 x d gain and shift.
Var layer_norm(Var x, Var gain, Var shift, double eps = 1e-5);
/// Single-head scaled dot-product attention applied independently to each
/// consecutive block of `segment` rows.
Var segment_attention(Var q, Var k, Var v, std::size_t segment);
/// Sums each consecutive block of `segment` rows into one output row.
Var segment_sum(Var x, std::size_t segment);

/// Row-softmax of q k^T / sqrt(d) for one block.
Tensor attention_weights(const Tensor& q, const Tensor& k);

}  // namespace dtlife::ad
