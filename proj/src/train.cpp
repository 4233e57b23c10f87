#include "dtlife/train.hpp"

#include <cmath>

#include "dtlife/adam.hpp"
#include "dtlife/error.hpp"

namespace dtlife {

void TrainConfig::validate(const std::string& what) const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError(what + ": learning rate must be positive");
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw ValidationError(what + ": alpha must be non-negative");
    }
}

double l2_norm_sq(std::span<const Tensor> params) {
    double s = 0.0;
    for (const Tensor& p : params)
        for (double v : p.values()) s += v * v;
    return s;
}

namespace {

std::vector<ad::Var> bind_parameters(ad::Tape& tape, std::span<const Tensor> params) {
    std::vector<ad::Var> vars;
    vars.reserve(params.size());
    for (const Tensor& p : params) vars.push_back(tape.parameter(p));
    return vars;
}

}  // namespace

TrainResult evaluate_objective(std::span<const Tensor> params, double alpha,
                               const DataLossFn& data_loss) {
    ad::Tape tape;
    const auto vars = bind_parameters(tape, params);
    TrainResult r;
    r.final_data_loss = data_loss(tape, vars).value()[0];
    r.final_l2 = l2_norm_sq(params);
    r.final_loss = r.final_data_loss + alpha * r.final_l2;
    return r;
}

TrainResult train_parameters(std::vector<Tensor>& params, const TrainConfig& cfg,
                             const DataLossFn& data_loss, const std::string& what) {
    cfg.validate(what);
    std::vector<Tensor> work = params;
    AdamState adam(work);
    TrainResult result;
    result.loss_history.reserve(cfg.epochs);
    std::vector<Tensor> grads(work.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        ad::Tape tape;
        const auto vars = bind_parameters(tape, work);
        ad::Var loss = data_loss(tape, vars);
        if (cfg.alpha > 0.0) loss = ad::add(loss, ad::scale(ad::l2_norm_sq(vars), cfg.alpha));
        const double value = loss.value()[0];
        if (!std::isfinite(value)) {
            throw TrainingError(what + ": non-finite loss at epoch " + std::to_string(epoch));
        }
        result.loss_history.push_back(value);
        tape.backward(loss);
        for (std::size_t i = 0; i < vars.size(); ++i) grads[i] = tape.grad(vars[i]);
        try {
            adam.apply(work, grads, cfg.learning_rate);
        } catch (const TrainingError& e) {
            throw TrainingError(what + ": epoch " + std::to_string(epoch) + ": " + e.what());
        }
    }
    TrainResult fin = evaluate_objective(work, cfg.alpha, data_loss);
    if (!std::isfinite(fin.final_loss)) {
        throw TrainingError(what + ": non-finite loss after epoch " + std::to_string(cfg.epochs));
    }
    result.final_loss = fin.final_loss;
    result.final_data_loss = fin.final_data_loss;
    result.final_l2 = fin.final_l2;
    params = std::move(work);
    return result;
}

}  // namespace dtlife
