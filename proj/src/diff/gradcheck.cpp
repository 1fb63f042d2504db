#include "gyronet/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gyronet::diff {

double relative_error(double analytic, double numeric, double floor) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

std::vector<double> numeric_gradient(const ScalarFn& fn, std::span<const double> point, double h) {
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> grad(x.size());
    auto eval = [&]() {
        const double v = fn(x);
        if (!std::isfinite(v)) {
            throw std::runtime_error("function returned a non-finite value during finite differencing");
        }
        return v;
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = eval();
        x[i] = saved - h;
        const double down = eval();
        x[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

GradCheckReport compare_gradients(std::vector<double> analytic, std::vector<double> numeric, double tol) {
    if (analytic.size() != numeric.size()) {
        throw std::invalid_argument("gradient lengths differ");
    }
    GradCheckReport report;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double e = relative_error(analytic[i], numeric[i]);
        if (e > report.max_rel_error) {
            report.max_rel_error = e;
            report.worst_index = i;
        }
    }
    report.passed = report.max_rel_error <= tol;
    report.analytic = std::move(analytic);
    report.numeric = std::move(numeric);
    return report;
}

GradCheckReport check_gradient(const GraphFn& fn, const Tensor& point, double h, double tol) {
    const Shape shape = point.shape();
    auto value_at = [&](std::span<const double> coords) {
        Tape tape;
        Var x = tape.input("x", Tensor(shape, std::vector<double>(coords.begin(), coords.end())));
        Var out = fn(tape, x);
        return out.value().item();
    };

    Tape tape;
    Var x = tape.input("x", point.with_requires_grad(true));
    Var out = fn(tape, x);
    if (!std::isfinite(out.value().item())) {
        throw std::runtime_error("function returned a non-finite value");
    }
    const Tensor& g = tape.backward(out)["x"];
    std::vector<double> analytic(g.data().begin(), g.data().end());
    return compare_gradients(std::move(analytic), numeric_gradient(value_at, point.data(), h), tol);
}

}  // namespace gyronet::diff
