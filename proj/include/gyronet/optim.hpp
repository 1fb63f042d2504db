#pragma once

// Parameter groups, RMSProp, Riemannian SGD on the Poincaré ball, and the
// learning-rate schedule with a single restart.

#include "gyronet/diff/tape.hpp"
#include "gyronet/geometry.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gyronet::optim {

enum class ParamKind : std::uint8_t {
    Euclidean,  ///< updated by RMSProp
    Poincare,   ///< one ball point per row, updated by Riemannian SGD
};

struct Parameter {
    std::string name;
    diff::Shape shape;
    std::vector<double> data;
    ParamKind kind = ParamKind::Euclidean;
    bool trainable = true;

    diff::Tensor tensor() const { return diff::Tensor(shape, data, trainable); }
};

class OptimError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RmsPropState {
    std::vector<double> acc;
};

/// acc ← ρ·acc + (1−ρ)·g²;  p ← p − lr·g/√(acc+ε).
void rmsprop_step(std::span<double> param, std::span<const double> grad, RmsPropState& state, double lr,
                  double rho = 0.9, double eps = 1e-8);

/// p ← exp_p(−lr·g/λ_p²).
geometry::PoincarePoint rsgd_step_poincare(const geometry::PoincarePoint& param, geometry::ConstSpan euclidean_grad,
                                           double lr);

/// Row-wise rsgd_step_poincare over a matrix of ball points (unit ball).
void rsgd_step_poincare_rows(std::span<double> rows, std::size_t dim, std::span<const double> grad, double lr);

enum class Schedule : std::uint8_t { Constant, Exponential, Cosine };

const char* to_string(Schedule s);
Schedule parse_schedule(const std::string& s);

struct OptimConfig {
    double lr_euclidean = 1e-3;
    double lr_riemannian = 0.05;
    double rho = 0.9;
    double eps = 1e-8;
    Schedule schedule = Schedule::Exponential;
    double decay = 0.97;           ///< per-epoch factor for Schedule::Exponential
    int total_epochs = 1;          ///< horizon for Schedule::Cosine
    int restart_epoch = -1;        ///< < 0 disables the restart
};

struct OptimizerState {
    std::map<std::string, RmsPropState> rms;
    std::uint64_t steps = 0;
    int cycle_start = 0;
};

/// Learning-rate multiplier for `epoch` given the current cycle start.
double schedule_factor(const OptimConfig& config, int cycle_start, int epoch);

/// At config.restart_epoch: clears accumulators and starts a new schedule
/// cycle so the learning rate returns to its initial value. Returns whether
/// a restart happened; parameters are never touched.
bool apply_restart(const OptimConfig& config, int epoch, OptimizerState& state);

class Optimizer {
public:
    explicit Optimizer(OptimConfig config);

    /// Applies restart logic and fixes the learning rates for this epoch.
    /// Returns true when the epoch begins with a restart.
    bool begin_epoch(int epoch);

    /// One update of every trainable parameter that has a gradient entry.
    void step(std::vector<Parameter>& params, const diff::Gradients& grads);
    void step(Parameter& param, std::span<const double> grad);

    double lr_euclidean() const noexcept { return lr_euclidean_; }
    double lr_riemannian() const noexcept { return lr_riemannian_; }
    const OptimConfig& config() const noexcept { return config_; }
    OptimizerState& state() noexcept { return state_; }
    const OptimizerState& state() const noexcept { return state_; }

private:
    OptimConfig config_;
    OptimizerState state_;
    double lr_euclidean_;
    double lr_riemannian_;
};

}  // namespace gyronet::optim
