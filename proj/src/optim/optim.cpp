#include "gyronet/optim.hpp"

#include <cmath>
#include <numbers>

namespace gyronet::optim {

namespace {

void require_finite(std::span<const double> g) {
    for (double v : g) {
        if (!std::isfinite(v)) {
            throw OptimError("non-finite gradient");
        }
    }
}

}  // namespace

void rmsprop_step(std::span<double> param, std::span<const double> grad, RmsPropState& state, double lr, double rho,
                  double eps) {
    if (param.size() != grad.size()) {
        throw OptimError("rmsprop_step: parameter and gradient sizes differ");
    }
    require_finite(grad);
    if (state.acc.size() != param.size()) {
        state.acc.assign(param.size(), 0.0);
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
        state.acc[i] = rho * state.acc[i] + (1.0 - rho) * grad[i] * grad[i];
        param[i] -= lr * grad[i] / std::sqrt(state.acc[i] + eps);
    }
}

geometry::PoincarePoint rsgd_step_poincare(const geometry::PoincarePoint& param, geometry::ConstSpan euclidean_grad,
                                           double lr) {
    if (euclidean_grad.size() != param.dim()) {
        throw OptimError("rsgd_step_poincare: gradient dimension mismatch");
    }
    require_finite(euclidean_grad);
    const double lam = geometry::conformal_factor(param);
    geometry::Vec step(euclidean_grad.size());
    for (std::size_t i = 0; i < step.size(); ++i) {
        step[i] = -lr * euclidean_grad[i] / (lam * lam);
    }
    return geometry::exp_map_poincare(param, {param, std::move(step)});
}

void rsgd_step_poincare_rows(std::span<double> rows, std::size_t dim, std::span<const double> grad, double lr) {
    if (dim == 0 || rows.size() % dim != 0 || rows.size() != grad.size()) {
        throw OptimError("rsgd_step_poincare_rows: shape mismatch");
    }
    for (std::size_t r = 0; r < rows.size() / dim; ++r) {
        auto row = rows.subspan(r * dim, dim);
        const auto g = grad.subspan(r * dim, dim);
        bool zero = true;
        for (double v : g) zero = zero && v == 0.0;
        if (zero) continue;
        const auto moved =
            rsgd_step_poincare(geometry::PoincarePoint::clamped({row.begin(), row.end()}), g, lr);
        std::copy(moved.coords().begin(), moved.coords().end(), row.begin());
    }
}

const char* to_string(Schedule s) {
    switch (s) {
        case Schedule::Constant: return "constant";
        case Schedule::Exponential: return "exponential";
        case Schedule::Cosine: return "cosine";
    }
    return "constant";
}

Schedule parse_schedule(const std::string& s) {
    if (s == "constant") return Schedule::Constant;
    if (s == "exponential") return Schedule::Exponential;
    if (s == "cosine") return Schedule::Cosine;
    throw OptimError("unknown schedule '" + s + "' (expected constant|exponential|cosine)");
}

double schedule_factor(const OptimConfig& config, int cycle_start, int epoch) {
    const int t = epoch - cycle_start;
    switch (config.schedule) {
        case Schedule::Constant: return 1.0;
        case Schedule::Exponential: return std::pow(config.decay, t);
        case Schedule::Cosine: {
            int length = config.total_epochs - cycle_start;
            if (config.restart_epoch > cycle_start) length = config.restart_epoch - cycle_start;
            if (length <= 0) return 1.0;
            return 0.5 * (1.0 + std::cos(std::numbers::pi * t / length));
        }
    }
    return 1.0;
}

bool apply_restart(const OptimConfig& config, int epoch, OptimizerState& state) {
    if (config.restart_epoch < 0 || epoch != config.restart_epoch) {
        return false;
    }
    for (auto& [name, s] : state.rms) {
        std::fill(s.acc.begin(), s.acc.end(), 0.0);
    }
    state.cycle_start = epoch;
    return true;
}

Optimizer::Optimizer(OptimConfig config)
    : config_(config), lr_euclidean_(config.lr_euclidean), lr_riemannian_(config.lr_riemannian) {
    if (!(config_.lr_euclidean >= 0.0) || !(config_.lr_riemannian >= 0.0)) {
        throw OptimError("learning rates must be non-negative");
    }
    if (!(config_.rho >= 0.0 && config_.rho < 1.0)) {
        throw OptimError("rmsprop decay must lie in [0, 1)");
    }
}

bool Optimizer::begin_epoch(int epoch) {
    const bool restarted = apply_restart(config_, epoch, state_);
    const double f = schedule_factor(config_, state_.cycle_start, epoch);
    lr_euclidean_ = config_.lr_euclidean * f;
    lr_riemannian_ = config_.lr_riemannian * f;
    return restarted;
}

void Optimizer::step(Parameter& param, std::span<const double> grad) {
    if (!param.trainable) return;
    if (param.kind == ParamKind::Euclidean) {
        rmsprop_step(param.data, grad, state_.rms[param.name], lr_euclidean_, config_.rho, config_.eps);
    } else {
        rsgd_step_poincare_rows(param.data, param.shape.cols, grad, lr_riemannian_);
    }
}

void Optimizer::step(std::vector<Parameter>& params, const diff::Gradients& grads) {
    for (Parameter& p : params) {
        if (!p.trainable || !grads.contains(p.name)) continue;
        step(p, grads[p.name].data());
    }
    ++state_.steps;
}

}  // namespace gyronet::optim
