#include "gyronet/diff/gradcheck.hpp"
#include "gyronet/diff/hyperbolic.hpp"
#include "gyronet/geometry.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gyronet::diff;
namespace geo = gyronet::geometry;

namespace {

Tensor rows_of(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double max_norm) {
    std::vector<double> data;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto p = testgen::ball_point(rng, cols, max_norm);
        data.insert(data.end(), p.begin(), p.end());
    }
    return Tensor({rows, cols}, data);
}

Tensor gaussian_tensor(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double sigma) {
    return Tensor({rows, cols}, testgen::gaussian(rng, rows * cols, sigma));
}

std::vector<double> values(Var v) { return {v.value().data().begin(), v.value().data().end()}; }

}  // namespace

TEST_CASE("forward examples") {
    Tape t;
    Var x = t.input("x", Tensor::row({1, 2}));
    Var y = t.input("y", Tensor::row({3, 4}));
    CHECK(values(x + y) == std::vector<double>{4, 6});
    CHECK(t.sigmoid(t.scalar(0)).value().item() == 0.5);
    Var s = t.softmax(t.constant(Tensor::row({0, 0, 0})));
    for (double p : values(s)) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("backward examples") {
    Tape t;
    Var x = t.input("x", Tensor::scalar(2, true));
    Var y = t.input("y", Tensor::scalar(3));
    CHECK(t.backward(x * y)["x"].item() == 3.0);
    CHECK_FALSE(t.backward(x * y).contains("y"));

    Tape u;
    Var v = u.input("v", Tensor::row({1, 2}, true));
    const Tensor& g = u.backward(u.dot(v, v))["v"];
    CHECK(g[0] == 2.0);
    CHECK(g[1] == 4.0);
}

TEST_CASE("backward needs a scalar output") {
    Tape t;
    Var x = t.input("x", Tensor::row({1, 2}, true));
    CHECK_THROWS_AS(t.backward(x), ShapeError);
}

TEST_CASE("shape errors are reported") {
    Tape t;
    Var a = t.input("a", Tensor::zeros({2, 3}));
    Var b = t.input("b", Tensor::zeros({3, 2}));
    CHECK_THROWS_AS(a + b, ShapeError);
    CHECK_THROWS_AS(t.matmul(a, a), ShapeError);
    CHECK_NOTHROW(t.matmul(a, a, false, true));
    CHECK_THROWS_AS(t.slice(a, Axis::Cols, 2, 4), ShapeError);
    CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor({1, 1}, {std::nan("")}), ShapeError);
}

TEST_CASE("non-finite intermediates report the node") {
    Tape t;
    Var x = t.input("x", Tensor::scalar(0.0));
    try {
        t.log(x);
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(e.node() == 1);
    }
    Tape u;
    Var y = u.input("y", Tensor::scalar(1.0));
    Var z = u.log(y);
    u.mark_output("z", z);
    CHECK_THROWS_AS(u.forward({{"y", Tensor::scalar(-1.0)}}), NonFiniteError);
}

TEST_CASE("check_gradient basics") {
    std::mt19937_64 rng(1);
    const Tensor p = gaussian_tensor(rng, 2, 3, 1.0);
    auto sq = [](Tape& t, Var x) { return t.sum(x * x); };
    CHECK(check_gradient(sq, p, 1e-5, 1e-6).passed);
    auto constant = [](Tape& t, Var x) { return t.sum(x * 0.0) + 4.0; };
    const auto r = check_gradient(constant, p, 1e-5, 1e-6);
    CHECK(r.passed);
    for (double a : r.analytic) CHECK(a == 0.0);
    for (double n : r.numeric) CHECK(n == 0.0);
    CHECK_THROWS(numeric_gradient([](std::span<const double>) { return std::nan(""); }, p.data()));
}

// Contracts an arbitrary-shaped result with fixed weights so every output
// coordinate contributes a distinct amount to the scalar loss.
Var weighted(Var v) {
    Tape& t = v.tape();
    TensorBuilder w(v.shape());
    for (std::size_t i = 0; i < v.shape().size(); ++i) w[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
    return t.sum(v * t.constant(std::move(w).build()));
}

TEST_CASE("every primitive passes the gradient check") {
    std::mt19937_64 rng(2);
    const Tensor p = rows_of(rng, 3, 4, 0.8);
    std::vector<std::pair<std::string, GraphFn>> cases = {
        {"add", [](Tape&, Var x) { return weighted(x + x * x); }},
        {"sub", [](Tape&, Var x) { return weighted(x - x * x); }},
        {"mul broadcast", [](Tape& t, Var x) { return weighted(x * t.slice(x, Axis::Rows, 0, 1)); }},
        {"div broadcast", [](Tape& t, Var x) { return weighted(x / (2.0 + t.slice(x, Axis::Cols, 1, 2))); }},
        {"matmul", [](Tape& t, Var x) { return weighted(t.matmul(x, x, false, true)); }},
        {"matmul ta", [](Tape& t, Var x) { return weighted(t.matmul(x, x, true, false)); }},
        {"matmul tt", [](Tape& t, Var x) { return weighted(t.matmul(x, t.slice(x, Axis::Cols, 0, 3), true, true)); }},
        {"neg", [](Tape& t, Var x) { return weighted(t.neg(x) * x); }},
        {"sum rows", [](Tape& t, Var x) { return weighted(t.sum(x * x, Axis::Rows)); }},
        {"sum cols", [](Tape& t, Var x) { return weighted(t.sum(x * x, Axis::Cols)); }},
        {"max rows", [](Tape& t, Var x) { return weighted(t.max_reduce(x, Axis::Rows)); }},
        {"max cols", [](Tape& t, Var x) { return weighted(t.max_reduce(x, Axis::Cols)); }},
        {"max all", [](Tape& t, Var x) { return t.max_reduce(x * x, Axis::All); }},
        {"exp", [](Tape& t, Var x) { return weighted(t.exp(x)); }},
        {"log", [](Tape& t, Var x) { return weighted(t.log(x + 1.5)); }},
        {"tanh", [](Tape& t, Var x) { return weighted(t.tanh(2.0 * x)); }},
        {"atanh", [](Tape& t, Var x) { return weighted(t.atanh(x)); }},
        {"sinh", [](Tape& t, Var x) { return weighted(t.sinh(x)); }},
        {"asinh", [](Tape& t, Var x) { return weighted(t.asinh(3.0 * x)); }},
        {"cosh", [](Tape& t, Var x) { return weighted(t.cosh(x)); }},
        {"sqrt", [](Tape& t, Var x) { return weighted(t.sqrt(x + 1.5)); }},
        {"sigmoid", [](Tape& t, Var x) { return weighted(t.sigmoid(3.0 * x)); }},
        {"softmax", [](Tape& t, Var x) { return weighted(t.softmax(3.0 * x)); }},
        {"dot", [](Tape& t, Var x) { return weighted(t.dot(x, t.exp(x))); }},
        {"dot broadcast", [](Tape& t, Var x) { return weighted(t.dot(x, t.slice(x, Axis::Rows, 1, 2))); }},
        {"norm", [](Tape& t, Var x) { return weighted(t.norm(x)); }},
        {"concat rows", [](Tape& t, Var x) { return weighted(t.concat({x, t.exp(x)}, Axis::Rows)); }},
        {"concat cols", [](Tape& t, Var x) { return weighted(t.concat({t.exp(x), x}, Axis::Cols)); }},
        {"slice", [](Tape& t, Var x) { return weighted(t.exp(t.slice(x, Axis::Cols, 1, 3))); }},
        {"broadcast", [](Tape& t, Var x) { return weighted(t.broadcast(t.slice(x, Axis::Rows, 2, 3), {3, 4}) * x); }},
        {"clamp inside", [](Tape& t, Var x) { return weighted(t.clamp_norm(x, 10.0) * x); }},
    };
    for (const auto& [name, fn] : cases) {
        CAPTURE(name);
        const auto report = check_gradient(fn, p);
        CHECK(report.max_rel_error < 1e-6);
    }
}

TEST_CASE("clamp_norm gradient is zero on rescaled rows") {
    Tape t;
    Var x = t.input("x", Tensor::matrix(2, 2, {3, 4, 0.1, 0.2}, true));
    Var y = t.clamp_norm(x, 1.0);
    CHECK(y.value()(0, 0) == doctest::Approx(0.6));
    const Tensor& g = t.backward(t.sum(y))["x"];
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
    CHECK(g[2] == 1.0);
    CHECK(g[3] == 1.0);
}

TEST_CASE("norm floor suppresses the gradient") {
    Tape t;
    Var x = t.input("x", Tensor::row({0, 0}, true));
    Var n = t.norm(x, 1e-15);
    CHECK(n.value().item() == 1e-15);
    const Tensor& g = t.backward(t.sum(n))["x"];
    CHECK(g[0] == 0.0);
}

TEST_CASE("backward is linear in the loss") {
    std::mt19937_64 rng(3);
    Tape t;
    Var x = t.input("x", rows_of(rng, 2, 3, 0.5).with_requires_grad(true));
    Var l1 = weighted(t.tanh(x));
    Var l2 = t.sum(t.exp(x) * x);
    const Tensor g1 = t.backward(l1)["x"];
    const Tensor g2 = t.backward(l2)["x"];
    const Tensor g12 = t.backward(l1 + l2)["x"];
    for (std::size_t i = 0; i < g12.size(); ++i) CHECK(std::abs(g12[i] - (g1[i] + g2[i])) < 1e-12);
}

TEST_CASE("replay with the same inputs is bit-identical") {
    std::mt19937_64 rng(4);
    const Tensor p = rows_of(rng, 3, 3, 0.5).with_requires_grad(true);
    Tape t;
    Var x = t.input("x", p);
    Var loss = t.sum(hyp::log0(hyp::mobius_add(x, hyp::exp0(x))));
    t.mark_output("loss", loss);
    const Tensor g0 = t.backward(loss)["x"];
    const double v0 = loss.value().item();
    const auto out = t.forward({{"x", p}});
    CHECK(out.at("loss").item() == v0);
    CHECK(t.backward(loss)["x"] == g0);

    const Tensor q = rows_of(rng, 3, 3, 0.5);
    const auto moved = t.forward({{"x", q}});
    Tape fresh;
    Var fx = fresh.input("x", q);
    CHECK(moved.at("loss").item() == fresh.sum(hyp::log0(hyp::mobius_add(fx, hyp::exp0(fx)))).value().item());
    CHECK_THROWS_AS(t.forward({{"x", Tensor::zeros({2, 3})}}), ShapeError);
    CHECK_THROWS(t.forward({{"nope", p}}));
}

TEST_CASE("differentiable ball ops match the pure geometry") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = testgen::poincare(rng, 4);
        const auto b = testgen::poincare(rng, 4);
        const auto v = testgen::ball_point(rng, 4, 1.5);
        const std::vector<double> m = testgen::gaussian(rng, 12, 0.7);
        Tape t;
        Var x = t.constant(Tensor::row(a.coords()));
        Var y = t.constant(Tensor::row(b.coords()));
        Var tv = t.constant(Tensor::row(v));
        Var mat = t.constant(Tensor({3, 4}, m));
        CHECK(testgen::max_abs_diff(values(hyp::mobius_add(x, y)), geo::mobius_add(a, b).coords()) < 1e-13);
        CHECK(testgen::max_abs_diff(values(hyp::exp0(tv)), geo::exp0(v)) < 1e-13);
        CHECK(testgen::max_abs_diff(values(hyp::log0(x)), geo::log0(a.coords())) < 1e-12);
        CHECK(testgen::max_abs_diff(values(hyp::exp_map(x, tv)), geo::exp_map_poincare(a, {a, v}).coords()) < 1e-12);
        CHECK(testgen::max_abs_diff(values(hyp::log_map(x, y)), geo::log_map_poincare(a, b).vec) < 1e-11);
        CHECK(hyp::distance(x, y).value().item() == doctest::Approx(geo::poincare_distance(a, b)).epsilon(1e-12));
        CHECK(testgen::max_abs_diff(values(hyp::mobius_matvec(mat, x)), geo::mobius_matvec(m, 3, a).coords()) <
              1e-13);
    }
}

TEST_CASE("matvec and maps through the origin") {
    Tape t;
    Var zero = t.input("z", Tensor::row({0, 0}, true));
    Var mat = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    Var out = hyp::mobius_matvec(mat, zero);
    CHECK(values(out) == std::vector<double>{0, 0});
    // The first-order behaviour at the origin is the plain matrix.
    const Tensor& g = t.backward(t.sum(out))["z"];
    CHECK(g[0] == doctest::Approx(4.0));
    CHECK(g[1] == doctest::Approx(6.0));
    CHECK(values(hyp::exp0(zero)) == std::vector<double>{0, 0});
}

TEST_CASE("composite ball ops pass the gradient check at interior points") {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor p = rows_of(rng, 2, 3, 0.9);
        const Tensor other = rows_of(rng, 2, 3, 0.9);
        const Tensor mat = gaussian_tensor(rng, 4, 3, 0.6);
        const Tensor normals = gaussian_tensor(rng, 3, 3, 1.0);
        const Tensor offsets = rows_of(rng, 3, 3, 0.5);
        std::vector<GraphFn> fns = {
            [&](Tape& t, Var x) { return weighted(hyp::mobius_add(x, t.constant(other))); },
            [&](Tape& t, Var x) { return weighted(hyp::mobius_add(t.constant(other), x)); },
            [&](Tape&, Var x) { return weighted(hyp::log0(x)); },
            [&](Tape&, Var x) { return weighted(hyp::exp0(x)); },
            [&](Tape& t, Var x) { return weighted(hyp::exp_map(t.constant(other), 0.5 * x)); },
            [&](Tape& t, Var x) { return weighted(hyp::exp_map(x, t.constant(other))); },
            [&](Tape& t, Var x) { return weighted(hyp::log_map(x, t.constant(other))); },
            [&](Tape& t, Var x) { return weighted(hyp::mobius_matvec(t.constant(mat), x)); },
            [&](Tape& t, Var x) {
                return weighted(hyp::mlr_scores(x, t.constant(offsets), t.constant(normals)));
            },
            [&](Tape& t, Var x) {
                return weighted(hyp::mlr_scores(t.constant(other), x, t.slice(t.constant(normals), Axis::Rows, 0, 2)));
            },
            [&](Tape& t, Var x) {
                return weighted(hyp::mlr_scores(t.constant(other), t.constant(offsets), t.slice(t.concat({x, x}, Axis::Rows), Axis::Rows, 0, 3)));
            },
        };
        for (std::size_t i = 0; i < fns.size(); ++i) {
            CAPTURE(i);
            const auto report = check_gradient(fns[i], p);
            worst = std::max(worst, report.max_rel_error);
            CHECK(report.max_rel_error < 1e-4);
        }
    }
    MESSAGE("worst composite relative error " << worst);
}

TEST_CASE("mlr scores follow the closed form") {
    std::mt19937_64 rng(7);
    const Tensor x = rows_of(rng, 2, 2, 0.8);
    const Tensor p = rows_of(rng, 2, 2, 0.5);
    const Tensor a = gaussian_tensor(rng, 2, 2, 1.0);
    Tape t;
    Var s = hyp::mlr_scores(t.constant(x), t.constant(p), t.constant(a));
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t k = 0; k < 2; ++k) {
            const double px = p(k, 0), py = p(k, 1);
            const double xx = x(r, 0), xy = x(r, 1);
            // ⊖p ⊕ x written out coordinate by coordinate.
            const double pn2 = px * px + py * py, xn2 = xx * xx + xy * xy;
            const double inner = -px * xx - py * xy;
            const double den = 1 + 2 * inner + pn2 * xn2;
            const double zx = ((1 + 2 * inner + xn2) * -px + (1 - pn2) * xx) / den;
            const double zy = ((1 + 2 * inner + xn2) * -py + (1 - pn2) * xy) / den;
            const double an = std::hypot(a(k, 0), a(k, 1));
            const double lam = 2 / (1 - pn2);
            const double arg = 2 * (zx * a(k, 0) + zy * a(k, 1)) / ((1 - (zx * zx + zy * zy)) * an);
            CHECK(s.value()(r, k) == doctest::Approx(lam * an * std::asinh(arg)).epsilon(1e-12));
        }
    }
    Tape u;
    Var zero_scores = hyp::mlr_scores(u.constant(Tensor::zeros({1, 2})), u.constant(Tensor::zeros({3, 2})),
                                      u.constant(gaussian_tensor(rng, 3, 2, 1.0)));
    for (double v : values(zero_scores)) CHECK(v == 0.0);
}

TEST_CASE("cross entropy and log softmax") {
    Tape t;
    Var logits = t.input("l", Tensor::matrix(2, 3, {0, 0, 0, 1, 2, 3}, true));
    Var ls = hyp::log_softmax(logits);
    CHECK(ls.value()(0, 1) == doctest::Approx(std::log(1.0 / 3.0)));
    Var ce = hyp::cross_entropy(logits, {0, 2});
    const double z = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
    CHECK(ce.value().item() == doctest::Approx((std::log(3.0) + (z - 3.0)) / 2.0));
    CHECK_THROWS(hyp::cross_entropy(logits, {0, 3}));
    std::mt19937_64 rng(8);
    const auto r = check_gradient([](Tape&, Var x) { return hyp::cross_entropy(3.0 * x, {1, 0, 2}); },
                                  gaussian_tensor(rng, 3, 4, 1.0));
    CHECK(r.passed);
}

TEST_CASE("relu and its lifted form") {
    Tape t;
    Var x = t.constant(Tensor::row({-0.5, 0.25, 0.0}));
    CHECK(values(hyp::relu(x)) == std::vector<double>{0.0, 0.25, 0.0});
    Var p = t.constant(Tensor::row({-0.3, 0.4}));
    const auto lifted = values(hyp::lifted_relu(p));
    CHECK(lifted[0] == 0.0);
    CHECK(lifted[1] == doctest::Approx(std::tanh(0.4 * std::atanh(0.5) / 0.5)).epsilon(1e-12));
}
