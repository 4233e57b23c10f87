#include "dtlife/adam.hpp"

#include <cmath>
#include <string>

#include "dtlife/error.hpp"

namespace dtlife {

AdamState::AdamState(std::span<const Tensor> params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor& p : params) {
        m_.emplace_back(p.rows(), p.cols(), 0.0);
        v_.emplace_back(p.rows(), p.cols(), 0.0);
    }
}

void AdamState::apply(std::span<Tensor> params, std::span<const Tensor> grads, double learning_rate) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw DimensionError("adam: expected " + std::to_string(m_.size()) + " parameter tensors, got " +
                             std::to_string(params.size()) + " params / " +
                             std::to_string(grads.size()) + " grads");
    }
    if (!(learning_rate > 0.0)) throw ValidationError("adam: learning rate must be positive");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].same_shape(m_[i]) || !grads[i].same_shape(m_[i])) {
            throw DimensionError("adam: tensor " + std::to_string(i) + " shape changed");
        }
        if (!grads[i].all_finite()) {
            throw TrainingError("adam: non-finite gradient at step " + std::to_string(t_ + 1));
        }
    }
    ++t_;
    beta1_pow_ *= cfg_.beta1;
    beta2_pow_ *= cfg_.beta2;
    const double c1 = 1.0 - beta1_pow_;
    const double c2 = 1.0 - beta2_pow_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i].ptr();
        const double* g = grads[i].ptr();
        double* m = m_[i].ptr();
        double* v = v_[i].ptr();
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] -= learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

}  // namespace dtlife
