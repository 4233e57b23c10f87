#include "dtlife/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dtlife/error.hpp"
#include "dtlife/kernels.hpp"

namespace dtlife::ad {

const Tensor& Var::value() const {
    if (!tape) throw DimensionError("use of an unbound autodiff variable");
    return tape->value(*this);
}

std::size_t Tape::check(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) {
        throw DimensionError("variable is not recorded on this tape");
    }
    return v.id;
}

Var Tape::record(Tensor value, bool needs_grad, Backward back) {
    nodes_.push_back(Node{std::move(value), Tensor{}, needs_grad, false,
                          needs_grad ? std::move(back) : Backward{}});
    return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(const Tensor& value) { return record(value, true, {}); }

Var Tape::constant(Tensor value) { return record(std::move(value), false, {}); }

const Tensor& Tape::value(Var v) const { return nodes_[check(v)].value; }

Tensor* Tape::grad_buffer(Var v) {
    Node& n = nodes_[check(v)];
    if (!n.needs_grad) return nullptr;
    if (!n.has_grad) {
        n.grad = Tensor(n.value.rows(), n.value.cols(), 0.0);
        n.has_grad = true;
    }
    return &n.grad;
}

Tensor Tape::grad(Var v) const {
    const Node& n = nodes_[check(v)];
    if (n.has_grad) return n.grad;
    return Tensor(n.value.rows(), n.value.cols(), 0.0);
}

void Tape::backward(Var loss) {
    const std::size_t root = check(loss);
    if (nodes_[root].value.size() != 1) {
        throw DimensionError("backward requires a scalar loss, got " +
                             nodes_[root].value.shape_str());
    }
    if (backward_done_) throw DimensionError("backward already executed on this tape");
    backward_done_ = true;
    if (!nodes_[root].needs_grad) return;
    grad_buffer(loss)->fill(1.0);
    for (std::size_t i = root + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.back && n.has_grad) n.back(*this, i);
    }
}

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
    if (!a.tape || a.tape != b.tape) {
        throw DimensionError(std::string(op) + ": operands recorded on different tapes");
    }
    return *a.tape;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
    }
}

template <class F>
Var unary(Var x, F&& f, Tape::Backward back) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    Tensor out(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    return t.record(std::move(out), t.needs_grad(x), std::move(back));
}

}  // namespace

Var affine(Var x, Var weight, Var bias) {
    Tape& t = same_tape(x, weight, "affine");
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(weight);
    const bool has_bias = bias.valid();
    if (has_bias) same_tape(x, bias, "affine");
    if (xv.cols() != wv.cols()) {
        throw DimensionError("affine: input " + xv.shape_str() + " incompatible with weight " +
                             wv.shape_str());
    }
    if (has_bias) {
        const Tensor& bv = t.value(bias);
        if (bv.rows() != 1 || bv.cols() != wv.rows()) {
            throw DimensionError("affine: bias " + bv.shape_str() + " incompatible with weight " +
                                 wv.shape_str());
        }
    }
    const std::size_t n = xv.rows(), k = xv.cols(), m = wv.rows();
    Tensor out(n, m);
    kernels::gemm_nt(xv.ptr(), wv.ptr(), has_bias ? t.value(bias).ptr() : nullptr, out.ptr(), n,
                     k, m);
    const bool ng = t.needs_grad(x) || t.needs_grad(weight) || (has_bias && t.needs_grad(bias));
    return t.record(std::move(out), ng, [x, weight, bias, has_bias, n, k, m](Tape& tp, std::size_t self) {
        const Tensor& dy = tp.out_grad(self);
        if (Tensor* dx = tp.grad_buffer(x)) {
            kernels::gemm_nn_acc(dy.ptr(), tp.value(weight).ptr(), dx->ptr(), n, m, k);
        }
        if (Tensor* dw = tp.grad_buffer(weight)) {
            kernels::gemm_tn_acc(dy.ptr(), tp.value(x).ptr(), dw->ptr(), n, m, k);
        }
        if (has_bias) {
            if (Tensor* db = tp.grad_buffer(bias)) kernels::colsum_acc(dy.ptr(), db->ptr(), n, m);
        }
    });
}

Var linear(Var x, Var weight) { return affine(x, weight, Var{}); }

Var tanh(Var x) {
    return unary(x, [](double v) { return std::tanh(v); }, [x](Tape& tp, std::size_t self) {
        Tensor* dx = tp.grad_buffer(x);
        const Tensor& dy = tp.out_grad(self);
        const Tensor& y = tp.value(Var{&tp, self});
        for (std::size_t i = 0; i < y.size(); ++i) (*dx)[i] += dy[i] * (1.0 - y[i] * y[i]);
    });
}

Var sigmoid(Var x) {
    return unary(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                 [x](Tape& tp, std::size_t self) {
                     Tensor* dx = tp.grad_buffer(x);
                     const Tensor& dy = tp.out_grad(self);
                     const Tensor& y = tp.value(Var{&tp, self});
                     for (std::size_t i = 0; i < y.size(); ++i) (*dx)[i] += dy[i] * y[i] * (1.0 - y[i]);
                 });
}

Var relu(Var x) {
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [x](Tape& tp, std::size_t self) {
        Tensor* dx = tp.grad_buffer(x);
        const Tensor& dy = tp.out_grad(self);
        const Tensor& xv = tp.value(x);
        for (std::size_t i = 0; i < xv.size(); ++i) {
            if (xv[i] > 0.0) (*dx)[i] += dy[i];
        }
    });
}

namespace {

template <class F>
Var binary(Var a, Var b, const char* name, F&& f, double db_sign, bool product) {
    Tape& t = same_tape(a, b, name);
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require_same_shape(av, bv, name);
    Tensor out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
    const bool ng = t.needs_grad(a) || t.needs_grad(b);
    return t.record(std::move(out), ng, [a, b, db_sign, product](Tape& tp, std::size_t self) {
        const Tensor& dy = tp.out_grad(self);
        if (Tensor* da = tp.grad_buffer(a)) {
            if (product) {
                const Tensor& bv2 = tp.value(b);
                for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] * bv2[i];
            } else {
                for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i];
            }
        }
        if (Tensor* dbuf = tp.grad_buffer(b)) {
            if (product) {
                const Tensor& av2 = tp.value(a);
                for (std::size_t i = 0; i < dy.size(); ++i) (*dbuf)[i] += dy[i] * av2[i];
            } else {
                for (std::size_t i = 0; i < dy.size(); ++i) (*dbuf)[i] += db_sign * dy[i];
            }
        }
    });
}

}  // namespace

Var add(Var a, Var b) {
    return binary(a, b, "add", [](double x, double y) { return x + y; }, 1.0, false);
}

Var sub(Var a, Var b) {
    return binary(a, b, "sub", [](double x, double y) { return x - y; }, -1.0, false);
}

Var mul(Var a, Var b) {
    return binary(a, b, "mul", [](double x, double y) { return x * y; }, 0.0, true);
}

Var scale(Var x, double factor) {
    return unary(x, [factor](double v) { return factor * v; },
                 [x, factor](Tape& tp, std::size_t self) {
                     Tensor* dx = tp.grad_buffer(x);
                     const Tensor& dy = tp.out_grad(self);
                     for (std::size_t i = 0; i < dy.size(); ++i) (*dx)[i] += factor * dy[i];
                 });
}

Var sum(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    double s = 0.0;
    for (double v : xv.values()) s += v;
    return t.record(Tensor(1, 1, s), t.needs_grad(x), [x](Tape& tp, std::size_t self) {
        Tensor* dx = tp.grad_buffer(x);
        const double g = tp.out_grad(self)[0];
        for (std::size_t i = 0; i < dx->size(); ++i) (*dx)[i] += g;
    });
}

Var mse(Var pred, Var target) {
    Tape& t = same_tape(pred, target, "mse");
    const Tensor& p = t.value(pred);
    const Tensor& y = t.value(target);
    require_same_shape(p, y, "mse");
    if (p.size() == 0) throw DimensionError("mse: empty operands");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - y[i];
        s += d * d;
    }
    const double n = static_cast<double>(p.size());
    const bool ng = t.needs_grad(pred) || t.needs_grad(target);
    return t.record(Tensor(1, 1, s / n), ng, [pred, target, n](Tape& tp, std::size_t self) {
        const double g = tp.out_grad(self)[0] * 2.0 / n;
        const Tensor& pv = tp.value(pred);
        const Tensor& yv = tp.value(target);
        if (Tensor* dp = tp.grad_buffer(pred)) {
            for (std::size_t i = 0; i < pv.size(); ++i) (*dp)[i] += g * (pv[i] - yv[i]);
        }
        if (Tensor* dt = tp.grad_buffer(target)) {
            for (std::size_t i = 0; i < pv.size(); ++i) (*dt)[i] -= g * (pv[i] - yv[i]);
        }
    });
}

Var l2_norm_sq(std::span<const Var> params) {
    if (params.empty()) {
        throw DimensionError("l2_norm_sq on a tape needs at least one operand");
    }
    Tape& t = *params.front().tape;
    double s = 0.0;
    bool ng = false;
    for (Var p : params) {
        same_tape(params.front(), p, "l2_norm_sq");
        for (double v : t.value(p).values()) s += v * v;
        ng = ng || t.needs_grad(p);
    }
    std::vector<Var> ops(params.begin(), params.end());
    return t.record(Tensor(1, 1, s), ng, [ops](Tape& tp, std::size_t self) {
        const double g = 2.0 * tp.out_grad(self)[0];
        for (Var p : ops) {
            if (Tensor* dp = tp.grad_buffer(p)) {
                const Tensor& pv = tp.value(p);
                for (std::size_t i = 0; i < pv.size(); ++i) (*dp)[i] += g * pv[i];
            }
        }
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat: no operands");
    Tape& t = *parts.front().tape;
    const std::size_t rows = t.value(parts.front()).rows();
    std::size_t cols = 0;
    bool ng = false;
    for (Var p : parts) {
        same_tape(parts.front(), p, "concat");
        const Tensor& v = t.value(p);
        if (v.rows() != rows) {
            throw DimensionError("concat: row count mismatch " + v.shape_str());
        }
        cols += v.cols();
        ng = ng || t.needs_grad(p);
    }
    Tensor out(rows, cols);
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor& v = t.value(p);
        offsets.push_back(off);
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(v.ptr() + r * v.cols(), v.cols(), out.ptr() + r * cols + off);
        }
        off += v.cols();
    }
    std::vector<Var> ops(parts.begin(), parts.end());
    return t.record(std::move(out), ng, [ops, offsets, rows, cols](Tape& tp, std::size_t self) {
        const Tensor& dy = tp.out_grad(self);
        for (std::size_t i = 0; i < ops.size(); ++i) {
            Tensor* dp = tp.grad_buffer(ops[i]);
            if (!dp) continue;
            const std::size_t w = dp->cols();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < w; ++c) (*dp)(r, c) += dy[r * cols + offsets[i] + c];
            }
        }
    });
}

Var slice_cols(Var x, std::size_t start, std::size_t width) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    if (start + width > xv.cols()) {
        throw DimensionError("slice: columns [" + std::to_string(start) + ", " +
                             std::to_string(start + width) + ") out of range for " + xv.shape_str());
    }
    const std::size_t rows = xv.rows(), cols = xv.cols();
    Tensor out(rows, width);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(xv.ptr() + r * cols + start, width, out.ptr() + r * width);
    }
    return t.record(std::move(out), t.needs_grad(x), [x, start, width, rows, cols](Tape& tp, std::size_t self) {
        Tensor* dx = tp.grad_buffer(x);
        const Tensor& dy = tp.out_grad(self);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < width; ++c) (*dx)[r * cols + start + c] += dy[r * width + c];
        }
    });
}

std::vector<Var> split_cols(Var x, std::span<const std::size_t> widths) {
    std::size_t total = 0;
    for (auto w : widths) total += w;
    if (total != x.value().cols()) {
        throw DimensionError("split: widths sum to " + std::to_string(total) + " but input is " +
                             x.value().shape_str());
    }
    std::vector<Var> out;
    std::size_t start = 0;
    for (auto w : widths) {
        out.push_back(slice_cols(x, start, w));
        start += w;
    }
    return out;
}

Var layer_norm(Var x, Var gain, Var shift, double eps) {
    Tape& t = same_tape(x, gain, "layer_norm");
    same_tape(x, shift, "layer_norm");
    const Tensor& xv = t.value(x);
    const std::size_t n = xv.rows(), d = xv.cols();
    if (t.value(gain).rows() != 1 || t.value(gain).cols() != d || !t.value(shift).same_shape(t.value(gain))) {
        throw DimensionError("layer_norm: gain/shift must be 1x" + std::to_string(d));
    }
    const Tensor& g = t.value(gain);
    const Tensor& b = t.value(shift);
    Tensor out(n, d), xhat(n, d);
    std::vector<double> inv_std(n);
    for (std::size_t r = 0; r < n; ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) mean += xv(r, c);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double e = xv(r, c) - mean;
            var += e * e;
        }
        var /= static_cast<double>(d);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < d; ++c) {
            xhat(r, c) = (xv(r, c) - mean) * inv_std[r];
            out(r, c) = g[c] * xhat(r, c) + b[c];
        }
    }
    const bool ng = t.needs_grad(x) || t.needs_grad(gain) || t.needs_grad(shift);
    return t.record(std::move(out), ng,
                    [x, gain, shift, xhat = std::move(xhat), inv_std = std::move(inv_std), n, d](Tape& tp, std::size_t self) {
        const Tensor& dy = tp.out_grad(self);
        const Tensor& gv = tp.value(gain);
        if (Tensor* dg = tp.grad_buffer(gain)) {
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < d; ++c) (*dg)[c] += dy(r, c) * xhat(r, c);
        }
        if (Tensor* db = tp.grad_buffer(shift)) {
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < d; ++c) (*db)[c] += dy(r, c);
        }
        if (Tensor* dx = tp.grad_buffer(x)) {
            const double dd = static_cast<double>(d);
            for (std::size_t r = 0; r < n; ++r) {
                double m1 = 0.0, m2 = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double dxh = dy(r, c) * gv[c];
                    m1 += dxh;
                    m2 += dxh * xhat(r, c);
                }
                m1 /= dd;
                m2 /= dd;
                for (std::size_t c = 0; c < d; ++c) {
                    const double dxh = dy(r, c) * gv[c];
                    (*dx)(r, c) += inv_std[r] * (dxh - m1 - xhat(r, c) * m2);
                }
            }
        }
    });
}

Tensor attention_weights(const Tensor& q, const Tensor& k) {
    if (q.cols() != k.cols() || q.rows() != k.rows()) {
        throw DimensionError("attention: q " + q.shape_str() + " vs k " + k.shape_str());
    }
    const std::size_t w = q.rows(), d = q.cols();
    const double inv = 1.0 / std::sqrt(static_cast<double>(d));
    Tensor p(w, w);
    kernels::gemm_nt(q.ptr(), k.ptr(), nullptr, p.ptr(), w, d, w);
    for (std::size_t r = 0; r < w; ++r) {
        double mx = -INFINITY;
        for (std::size_t c = 0; c < w; ++c) {
            p(r, c) *= inv;
            mx = std::max(mx, p(r, c));
        }
        double z = 0.0;
        for (std::size_t c = 0; c < w; ++c) {
            p(r, c) = std::exp(p(r, c) - mx);
            z += p(r, c);
        }
        for (std::size_t c = 0; c < w; ++c) p(r, c) /= z;
    }
    return p;
}

namespace {

Tensor block(const Tensor& x, std::size_t first_row, std::size_t rows) {
    std::vector<double> data(x.ptr() + first_row * x.cols(), x.ptr() + (first_row + rows) * x.cols());
    return Tensor(rows, x.cols(), std::move(data));
}

}  // namespace

Var segment_attention(Var q, Var k, Var v, std::size_t segment) {
    Tape& t = same_tape(q, k, "attention");
    same_tape(q, v, "attention");
    const Tensor& qv = t.value(q);
    const Tensor& kv = t.value(k);
    const Tensor& vv = t.value(v);
    if (!qv.same_shape(kv) || !qv.same_shape(vv)) {
        throw DimensionError("attention: q/k/v shapes differ");
    }
    if (segment == 0 || qv.rows() % segment != 0) {
        throw DimensionError("attention: " + std::to_string(qv.rows()) +
                             " rows not divisible into segments of " + std::to_string(segment));
    }
    const std::size_t d = qv.cols(), blocks = qv.rows() / segment;
    Tensor out(qv.rows(), d);
    std::vector<Tensor> probs;
    probs.reserve(blocks);
    for (std::size_t s = 0; s < blocks; ++s) {
        const std::size_t r0 = s * segment;
        Tensor p = attention_weights(block(qv, r0, segment), block(kv, r0, segment));
        kernels::gemm_nn_acc(p.ptr(), vv.ptr() + r0 * d, out.ptr() + r0 * d, segment, segment, d);
        probs.push_back(std::move(p));
    }
    const bool ng = t.needs_grad(q) || t.needs_grad(k) || t.needs_grad(v);
    return t.record(std::move(out), ng, [q, k, v, segment, d, probs = std::move(probs)](Tape& tp, std::size_t self) {
        const Tensor& dy = tp.out_grad(self);
        const Tensor& qv2 = tp.value(q);
        const Tensor& kv2 = tp.value(k);
        const Tensor& vv2 = tp.value(v);
        Tensor* dq = tp.grad_buffer(q);
        Tensor* dk = tp.grad_buffer(k);
        Tensor* dv = tp.grad_buffer(v);
        const double inv = 1.0 / std::sqrt(static_cast<double>(d));
        for (std::size_t s = 0; s < probs.size(); ++s) {
            const std::size_t r0 = s * segment;
            const Tensor& p = probs[s];
            const double* dyb = dy.ptr() + r0 * d;
            if (dv) kernels::gemm_tn_acc(p.ptr(), dyb, dv->ptr() + r0 * d, segment, segment, d);
            // dP = dY V^T, dS = P * (dP - rowsum(dP * P))
            Tensor ds(segment, segment);
            kernels::gemm_nt(dyb, vv2.ptr() + r0 * d, nullptr, ds.ptr(), segment, d, segment);
            for (std::size_t r = 0; r < segment; ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < segment; ++c) dot += ds(r, c) * p(r, c);
                for (std::size_t c = 0; c < segment; ++c) ds(r, c) = p(r, c) * (ds(r, c) - dot) * inv;
            }
            if (dq) kernels::gemm_nn_acc(ds.ptr(), kv2.ptr() + r0 * d, dq->ptr() + r0 * d, segment, segment, d);
            if (dk) kernels::gemm_tn_acc(ds.ptr(), qv2.ptr() + r0 * d, dk->ptr() + r0 * d, segment, segment, d);
        }
    });
}

Var segment_sum(Var x, std::size_t segment) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    if (segment == 0 || xv.rows() % segment != 0) {
        throw DimensionError("segment_sum: " + std::to_string(xv.rows()) +
                             " rows not divisible into segments of " + std::to_string(segment));
    }
    const std::size_t d = xv.cols(), blocks = xv.rows() / segment;
    Tensor out(blocks, d);
    for (std::size_t r = 0; r < xv.rows(); ++r)
        for (std::size_t c = 0; c < d; ++c) out(r / segment, c) += xv(r, c);
    return t.record(std::move(out), t.needs_grad(x), [x, segment, d](Tape& tp, std::size_t self) {
        Tensor* dx = tp.grad_buffer(x);
        const Tensor& dy = tp.out_grad(self);
        for (std::size_t r = 0; r < dx->rows(); ++r)
            for (std::size_t c = 0; c < d; ++c) (*dx)(r, c) += dy(r / segment, c);
    });
}

}  // namespace dtlife::ad
