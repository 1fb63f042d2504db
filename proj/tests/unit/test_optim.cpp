#include "gyronet/optim.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <cmath>

using namespace gyronet::optim;
namespace geo = gyronet::geometry;

TEST_CASE("rmsprop with zero gradient leaves the parameter and decays the accumulator") {
    std::vector<double> p{1.0, -2.0};
    RmsPropState s{{4.0, 1.0}};
    rmsprop_step(p, std::vector<double>{0.0, 0.0}, s, 0.1);
    CHECK(p == std::vector<double>{1.0, -2.0});
    CHECK(s.acc[0] == doctest::Approx(3.6));
    CHECK(s.acc[1] == doctest::Approx(0.9));
}

TEST_CASE("rmsprop first step from a fresh state") {
    const double lr = 0.01, g = 0.3, rho = 0.9, eps = 1e-8;
    std::vector<double> p{0.5};
    RmsPropState s;
    rmsprop_step(p, std::vector<double>{g}, s, lr, rho, eps);
    CHECK(p[0] == doctest::Approx(0.5 - lr * g / std::sqrt((1 - rho) * g * g + eps)).epsilon(1e-14));
}

TEST_CASE("rmsprop damps larger gradients") {
    std::vector<double> p1{0.0}, p2{0.0};
    RmsPropState s1, s2;
    rmsprop_step(p1, std::vector<double>{1e-3}, s1, 0.1);
    rmsprop_step(p2, std::vector<double>{2e-3}, s2, 0.1);
    CHECK(std::abs(p2[0]) < 2.0 * std::abs(p1[0]));
    CHECK(std::abs(p2[0]) >= std::abs(p1[0]));
}

TEST_CASE("rmsprop rejects bad input") {
    std::vector<double> p{0.0};
    RmsPropState s;
    CHECK_THROWS_AS(rmsprop_step(p, std::vector<double>{std::nan("")}, s, 0.1), OptimError);
    CHECK_THROWS_AS(rmsprop_step(p, std::vector<double>{1.0, 2.0}, s, 0.1), OptimError);
}

TEST_CASE("rsgd on the ball") {
    const auto x = geo::PoincarePoint({0.2, -0.3});
    CHECK(rsgd_step_poincare(x, std::vector<double>{0, 0}, 0.1) == x);

    const auto o = geo::PoincarePoint::origin(2);
    const std::vector<double> g{0.8, -0.4};
    const double lr = 0.5;
    const auto moved = rsgd_step_poincare(o, g, lr);
    const auto expected = geo::exp0(std::vector<double>{-lr * g[0] / 4, -lr * g[1] / 4});
    CHECK(testgen::max_abs_diff(moved.coords(), expected) < 1e-15);
    CHECK_THROWS_AS(rsgd_step_poincare(o, std::vector<double>{std::nan(""), 0}, 0.1), OptimError);
}

TEST_CASE("rsgd descends the squared distance to a target") {
    const auto target = geo::PoincarePoint({0.6});
    auto x = geo::PoincarePoint({-0.4});
    double prev = std::pow(geo::poincare_distance(x, target), 2);
    for (int i = 0; i < 50; ++i) {
        // d/dx of d(x,t)^2 in one dimension by central differences.
        const double h = 1e-7;
        const double up = std::pow(geo::poincare_distance(geo::PoincarePoint({x[0] + h}), target), 2);
        const double dn = std::pow(geo::poincare_distance(geo::PoincarePoint({x[0] - h}), target), 2);
        x = rsgd_step_poincare(x, std::vector<double>{(up - dn) / (2 * h)}, 0.1);
        const double now = std::pow(geo::poincare_distance(x, target), 2);
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("rsgd never leaves the clamped ball") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto x = testgen::poincare(rng, 3, 0.99);
        const auto g = testgen::gaussian(rng, 3, 1e3);
        const auto y = rsgd_step_poincare(x, g, 1.0);
        CHECK(geo::norm(y.coords()) <= 1.0 - geo::kBoundaryEps + 1e-15);
    }
}

TEST_CASE("row-wise rsgd matches the single-point step") {
    std::vector<double> rows{0.1, 0.2, -0.3, 0.0};
    const std::vector<double> grad{0.5, -0.5, 0.0, 0.0};
    const auto expected = rsgd_step_poincare(geo::PoincarePoint({0.1, 0.2}), std::vector<double>{0.5, -0.5}, 0.2);
    rsgd_step_poincare_rows(rows, 2, grad, 0.2);
    CHECK(rows[0] == expected[0]);
    CHECK(rows[1] == expected[1]);
    CHECK(rows[2] == -0.3);
}

TEST_CASE("restart resets accumulators and the learning rate") {
    OptimConfig cfg;
    cfg.lr_euclidean = 0.1;
    cfg.decay = 0.5;
    cfg.restart_epoch = 3;
    Optimizer opt(cfg);
    Parameter p{"w", {1, 2}, {0.0, 0.0}, ParamKind::Euclidean, true};
    std::vector<double> lrs;
    for (int epoch = 0; epoch < 5; ++epoch) {
        const bool restarted = opt.begin_epoch(epoch);
        CHECK(restarted == (epoch == 3));
        if (restarted) {
            for (double a : opt.state().rms.at("w").acc) CHECK(a == 0.0);
        }
        lrs.push_back(opt.lr_euclidean());
        opt.step(p, std::vector<double>{1.0, -1.0});
    }
    CHECK(lrs[0] == 0.1);
    CHECK(lrs[2] == doctest::Approx(0.025));
    CHECK(lrs[3] == 0.1);
    CHECK(lrs[4] == doctest::Approx(0.05));

    OptimizerState st;
    st.rms["x"].acc = {1.0};
    CHECK_FALSE(apply_restart(cfg, 2, st));
    CHECK(st.rms["x"].acc[0] == 1.0);
    CHECK(apply_restart(cfg, 3, st));
    CHECK(st.rms["x"].acc[0] == 0.0);
}

TEST_CASE("cosine schedule restarts from the top") {
    OptimConfig cfg;
    cfg.schedule = Schedule::Cosine;
    cfg.total_epochs = 8;
    cfg.restart_epoch = 4;
    CHECK(schedule_factor(cfg, 0, 0) == 1.0);
    CHECK(schedule_factor(cfg, 0, 2) == doctest::Approx(0.5));
    CHECK(schedule_factor(cfg, 4, 4) == 1.0);
    CHECK(schedule_factor(cfg, 4, 6) == doctest::Approx(0.5));
    CHECK(parse_schedule("cosine") == Schedule::Cosine);
    CHECK_THROWS_AS(parse_schedule("linear"), OptimError);
}

TEST_CASE("optimizer dispatches on parameter kind and is deterministic") {
    auto run = [] {
        Optimizer opt(OptimConfig{});
        std::vector<Parameter> params{{"m", {1, 2}, {0.5, 0.5}, ParamKind::Euclidean, true},
                                      {"b", {1, 2}, {0.1, 0.1}, ParamKind::Poincare, true},
                                      {"frozen", {1, 1}, {3.0}, ParamKind::Euclidean, false}};
        for (int i = 0; i < 10; ++i) {
            opt.begin_epoch(i);
            opt.step(params[0], std::vector<double>{0.2, -0.1});
            opt.step(params[1], std::vector<double>{0.2, -0.1});
            opt.step(params[2], std::vector<double>{1.0});
        }
        return params;
    };
    const auto a = run();
    const auto b = run();
    CHECK(a[0].data == b[0].data);
    CHECK(a[1].data == b[1].data);
    CHECK(a[2].data[0] == 3.0);
    CHECK(a[1].data[0] < 0.1);
}
