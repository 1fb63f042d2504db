#pragma once

#include "gyronet/diff/tape.hpp"

#include <functional>
#include <span>
#include <vector>

namespace gyronet::diff {

struct GradCheckReport {
    std::vector<double> analytic;
    std::vector<double> numeric;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    bool passed = false;
};

/// Builds a scalar loss on `tape` from the leaf `x`.
using GraphFn = std::function<Var(Tape& tape, Var x)>;
using ScalarFn = std::function<double(std::span<const double>)>;

/// |a - n| / max(|a|, |n|, floor) per coordinate.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Central differences; throws std::runtime_error if fn is non-finite anywhere it is sampled.
std::vector<double> numeric_gradient(const ScalarFn& fn, std::span<const double> point, double h = 1e-5);

GradCheckReport compare_gradients(std::vector<double> analytic, std::vector<double> numeric, double tol);

/// Backward of fn at `point` against central differences of the same graph.
GradCheckReport check_gradient(const GraphFn& fn, const Tensor& point, double h = 1e-5, double tol = 1e-4);

}  // namespace gyronet::diff
