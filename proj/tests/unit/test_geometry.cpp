#include "gyronet/geometry.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gyronet::geometry;
using testgen::max_abs_diff;

namespace {

PoincarePoint P(Vec v) { return PoincarePoint(std::move(v)); }
HyperboloidPoint H(Vec v) { return HyperboloidPoint(std::move(v)); }

}  // namespace

TEST_CASE("mobius_add closed form") {
    CHECK(max_abs_diff(mobius_add(P({0, 0}), P({0.3, 0.4})).coords(), {0.3, 0.4}) < 1e-15);
    CHECK(norm(mobius_add(P({0.3, 0.4}), mobius_neg(P({0.3, 0.4}))).coords()) < 1e-15);
    // Collinear points add like rapidities: tanh(2 atanh 0.5) = 0.8.
    const auto s = mobius_add(P({0.5, 0}), P({0.5, 0}));
    CHECK(s[0] == doctest::Approx(std::tanh(2 * std::atanh(0.5))).epsilon(1e-14));
    CHECK(s[1] == 0.0);
}

TEST_CASE("mobius_add rejects mismatched operands") {
    CHECK_THROWS_AS(mobius_add(P({0.1, 0.1}), P({0.1, 0.1, 0.1})), GeometryError);
    CHECK_THROWS_AS(mobius_add(PoincarePoint({0.1, 0.1}, 1.0), PoincarePoint({0.1, 0.1}, 2.0)), GeometryError);
}

TEST_CASE("points outside the ball are rejected, points in the shell are clamped") {
    CHECK_THROWS_AS(P({1.0, 0.0}), GeometryError);
    CHECK_THROWS_AS(P({0.8, 0.8}), GeometryError);
    const PoincarePoint shell({1.0 - 1e-7, 0.0});
    CHECK(shell[0] == doctest::Approx(1.0 - kBoundaryEps).epsilon(1e-15));
    CHECK(PoincarePoint::clamped({3.0, 4.0}).coords()[0] == doctest::Approx(0.6 * (1.0 - kBoundaryEps)));
}

TEST_CASE("mobius_neg") {
    CHECK(mobius_neg(P({0, 0})).coords() == Vec{0, 0});
    CHECK(mobius_neg(P({0.3, -0.4})).coords() == Vec{-0.3, 0.4});
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const auto x = testgen::poincare(rng, 4);
        CHECK(norm(mobius_add(mobius_neg(x), x).coords()) < 1e-12);
    }
}

TEST_CASE("gyration") {
    const auto a = P({0.1, 0.2});
    const auto b = P({-0.3, 0.1});
    const auto v = P({0.2, 0.2});
    CHECK(max_abs_diff(gyration(P({0, 0}), b, v).coords(), v.coords()) < 1e-15);
    const auto lhs = mobius_add(a, mobius_add(b, v));
    const auto rhs = mobius_add(mobius_add(a, b), gyration(a, b, v));
    CHECK(max_abs_diff(lhs.coords(), rhs.coords()) < 1e-14);

    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        const auto ra = testgen::poincare(rng, 3);
        const auto rb = testgen::poincare(rng, 3);
        const auto rv = testgen::poincare(rng, 3);
        CHECK(norm(gyration(ra, rb, rv).coords()) == doctest::Approx(norm(rv.coords())).epsilon(1e-9));
    }
}

TEST_CASE("gyrogroup axioms on random triples") {
    std::mt19937_64 rng(13);
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const auto a = testgen::poincare(rng, 5);
        const auto b = testgen::poincare(rng, 5);
        const auto v = testgen::poincare(rng, 5);
        const auto zero = PoincarePoint::origin(5);
        worst = std::max(worst, max_abs_diff(mobius_add(zero, a).coords(), a.coords()));
        worst = std::max(worst, norm(mobius_add(mobius_neg(a), a).coords()));
        worst = std::max(worst, max_abs_diff(mobius_add(a, mobius_add(b, v)).coords(),
                                             mobius_add(mobius_add(a, b), gyration(a, b, v)).coords()));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("mobius_add is not commutative") {
    const auto a = P({0.5, 0.1});
    const auto b = P({-0.2, 0.6});
    CHECK(max_abs_diff(mobius_add(a, b).coords(), mobius_add(b, a).coords()) > 1e-3);
}

TEST_CASE("mobius_scalar_mul") {
    CHECK(max_abs_diff(mobius_scalar_mul(1.0, P({0.3, 0.4})).coords(), {0.3, 0.4}) < 1e-15);
    CHECK(mobius_scalar_mul(3.0, P({0, 0})).coords() == Vec{0, 0});
    const auto twice = mobius_scalar_mul(2.0, P({0.5, 0}));
    CHECK(max_abs_diff(twice.coords(), mobius_add(P({0.5, 0}), P({0.5, 0})).coords()) < 1e-14);
    CHECK(twice[0] == doctest::Approx(0.8).epsilon(1e-14));

    std::mt19937_64 rng(14);
    for (int i = 0; i < 100; ++i) {
        const auto x = testgen::poincare(rng, 3, 0.5);
        PoincarePoint acc = x;
        for (int n = 2; n <= 5; ++n) {
            acc = mobius_add(acc, x);
            CHECK(max_abs_diff(mobius_scalar_mul(n, x).coords(), acc.coords()) < 1e-7);
        }
    }
}

TEST_CASE("conformal_factor") {
    CHECK(conformal_factor(P({0, 0})) == 2.0);
    CHECK(conformal_factor(P({0.6, 0})) == doctest::Approx(3.125).epsilon(1e-14));
    CHECK(conformal_factor(PoincarePoint({0.6, 0}, 1e8)) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("exp and log maps on the ball") {
    const auto o = PoincarePoint::origin(2);
    const auto x = P({0.2, -0.1});
    CHECK(exp_map_poincare(x, {x, {0, 0}}) == x);
    CHECK(exp_map_poincare(o, {o, {std::atanh(0.5), 0}})[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(log_map_poincare(o, P({0.5, 0})).vec[0] == doctest::Approx(0.5493061443).epsilon(1e-9));
    CHECK(norm(log_map_poincare(x, x).vec) == 0.0);
    CHECK_THROWS_AS(exp_map_poincare(x, {o, {0.1, 0.1}}), GeometryError);

    std::mt19937_64 rng(15);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto base = testgen::poincare(rng, 3, 0.7);
        const Vec v = testgen::ball_point(rng, 3, 2.0);
        const auto y = exp_map_poincare(base, {base, v});
        if (norm(y.coords()) > 1.0 - 1e-3) continue;  // clamp shell is not invertible
        worst = std::max(worst, max_abs_diff(log_map_poincare(base, y).vec, v));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("exp_0 travels the metric length of the tangent vector") {
    // Integrate λ(γ(t))·|γ'(t)| along the straight ray to exp_0(v): the
    // hyperbolic length must be λ_0·|v| = 2|v|.
    for (double len : {0.1, 0.7, 1.5}) {
        const auto o = PoincarePoint::origin(2);
        const auto y = exp_map_poincare(o, {o, {len, 0}});
        const double r = y[0];
        const int steps = 2000;
        const double h = r / steps;
        double integral = 0.0;
        for (int k = 0; k <= steps; ++k) {
            const double t = k * h;
            const double w = (k == 0 || k == steps) ? 1 : (k % 2 ? 4 : 2);
            integral += w * 2.0 / (1.0 - t * t);
        }
        integral *= h / 3.0;
        CHECK(integral == doctest::Approx(2.0 * len).epsilon(1e-8));
        CHECK(poincare_distance(o, y) == doctest::Approx(2.0 * len).epsilon(1e-12));
    }
}

TEST_CASE("poincare_distance") {
    const auto x = P({0.1, 0.3});
    CHECK(poincare_distance(x, x) == 0.0);
    CHECK(poincare_distance(P({0, 0}), P({0.6, 0})) == doctest::Approx(2 * std::atanh(0.6)).epsilon(1e-14));
    CHECK(poincare_distance(P({0, 0}), P({0.6, 0})) == doctest::Approx(1.3863).epsilon(1e-4));
    std::mt19937_64 rng(16);
    for (int i = 0; i < 100; ++i) {
        const auto a = testgen::poincare(rng, 4);
        const auto b = testgen::poincare(rng, 4);
        CHECK(std::abs(poincare_distance(a, b) - poincare_distance(b, a)) < 1e-12);
    }
}

TEST_CASE("transport_from_origin_poincare") {
    const auto o = PoincarePoint::origin(2);
    CHECK(transport_from_origin_poincare(o, {o, {1, 2}}).vec == Vec{1, 2});
    const auto x = P({0.6, 0});
    const auto t = transport_from_origin_poincare(x, {o, {1, 0}});
    CHECK(t.vec[0] == doctest::Approx(0.64).epsilon(1e-14));
    CHECK(conformal_factor(x) * norm(t.vec) == doctest::Approx(2.0 * 1.0).epsilon(1e-12));
}

TEST_CASE("mobius_matvec") {
    const Vec eye{1, 0, 0, 1};
    const auto x = P({0.3, -0.2});
    CHECK(max_abs_diff(mobius_matvec(eye, 2, x).coords(), x.coords()) < 1e-15);
    CHECK(mobius_matvec(Vec{1, 2, 3, 4}, 2, P({0, 0})).coords() == Vec{0, 0});
    CHECK(mobius_matvec(Vec{0, 0, 0, 0}, 2, x).coords() == Vec{0, 0});
    CHECK(mobius_matvec(Vec{2, 0, 0, 2}, 2, P({0.5, 0}))[0] == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(mobius_matvec(Vec{1, 1, 0, 2, 1, 1}, 3, x).dim() == 3);
    CHECK_THROWS_AS(mobius_matvec(Vec{1, 2, 3}, 2, x), GeometryError);
}

TEST_CASE("bias_translate agrees with mobius_add") {
    const auto x = P({0.5, 0});
    CHECK(max_abs_diff(bias_translate(x, P({0, 0})).coords(), x.coords()) < 1e-15);
    CHECK(max_abs_diff(bias_translate(P({0, 0}), x).coords(), x.coords()) < 1e-15);
    CHECK(bias_translate(x, x)[0] == doctest::Approx(0.8).epsilon(1e-12));
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
        const auto a = testgen::poincare(rng, 4);
        const auto b = testgen::poincare(rng, 4);
        CHECK(max_abs_diff(bias_translate(a, b).coords(), mobius_add(a, b).coords()) < 1e-8);
    }
}

TEST_CASE("lift_map") {
    const auto x = P({0.3, 0.4});
    CHECK(max_abs_diff(lift_map([](ConstSpan v) { return Vec(v.begin(), v.end()); }, x).coords(), x.coords()) <
          1e-14);
    CHECK(lift_map([](ConstSpan v) { return Vec(v.size(), 0.0); }, x).coords() == Vec{0, 0});
    for (double r : {-1.5, 0.5, 3.0}) {
        const auto scaled = lift_map(
            [r](ConstSpan v) {
                Vec out(v.begin(), v.end());
                for (double& e : out) e *= r;
                return out;
            },
            x);
        CHECK(max_abs_diff(scaled.coords(), mobius_scalar_mul(r, x).coords()) < 1e-9);
    }
}

TEST_CASE("lorentz_inner") {
    CHECK(lorentz_inner(Vec{0, 0, 1}, Vec{0, 0, 1}) == -1.0);
    CHECK(lorentz_inner(Vec{1, 2, 3}, Vec{4, 5, 6}) == -4.0);
    CHECK_THROWS_AS(lorentz_inner(Vec{1, 2}, Vec{1, 2, 3}), GeometryError);
    std::mt19937_64 rng(18);
    for (int i = 0; i < 100; ++i) {
        const Vec u = testgen::gaussian(rng, 4), w = testgen::gaussian(rng, 4), v = testgen::gaussian(rng, 4);
        Vec uw(4);
        for (int k = 0; k < 4; ++k) uw[k] = u[k] + w[k];
        CHECK(lorentz_inner(uw, v) == doctest::Approx(lorentz_inner(u, v) + lorentz_inner(w, v)).epsilon(1e-12));
    }
}

TEST_CASE("hyperboloid points validate the constraint") {
    CHECK_THROWS_AS(H({0, 0, 2}), GeometryError);
    CHECK_THROWS_AS(H({0, 0, -1}), GeometryError);
    CHECK_NOTHROW(H({std::sinh(1.0), 0, std::cosh(1.0)}));
}

TEST_CASE("hyperboloid_distance") {
    const auto o = HyperboloidPoint::origin(2);
    CHECK(hyperboloid_distance(o, o) == 0.0);
    CHECK(hyperboloid_distance(o, H({std::sinh(1.0), 0, std::cosh(1.0)})) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tangent_project") {
    const auto o = HyperboloidPoint::origin(2);
    CHECK(tangent_project(o, Vec{1, 2, 3}).vec == Vec{1, 2, 0});
    std::mt19937_64 rng(19);
    for (int i = 0; i < 100; ++i) {
        const auto x = testgen::hyperboloid(rng, 3);
        const Vec v = testgen::gaussian(rng, 4);
        const auto t = tangent_project(x, v);
        CHECK(std::abs(lorentz_inner(x.coords(), t.vec)) < 1e-12 * (1 + x[3] * x[3]) * 10);
        CHECK(max_abs_diff(tangent_project(x, t.vec).vec, t.vec) < 1e-9);
    }
}

TEST_CASE("exp and log maps on the hyperboloid") {
    const auto o = HyperboloidPoint::origin(2);
    CHECK(exp_map_hyperboloid(o, {o, {0, 0, 0}}) == o);
    const auto y = exp_map_hyperboloid(o, {o, {1, 0, 0}});
    CHECK(y[0] == doctest::Approx(std::sinh(1.0)).epsilon(1e-14));
    CHECK(y[2] == doctest::Approx(std::cosh(1.0)).epsilon(1e-14));

    std::mt19937_64 rng(20);
    for (int i = 0; i < 200; ++i) {
        const auto x = testgen::hyperboloid(rng, 3, 2.0);
        auto v = tangent_project(x, testgen::gaussian(rng, 4, 0.5));
        const double vn = std::sqrt(lorentz_inner(v.vec, v.vec));
        const auto z = exp_map_hyperboloid(x, v);
        CHECK(std::abs(lorentz_inner(z.coords(), z.coords()) + 1.0) < 1e-9 * (1 + z[3] * z[3]));
        CHECK(hyperboloid_distance(x, z) == doctest::Approx(vn).epsilon(1e-8));
        const auto back = log_map_hyperboloid(x, z);
        CHECK(max_abs_diff(back.vec, v.vec) < 1e-7);
    }
}

TEST_CASE("hyperboloid parallel transport") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 200; ++i) {
        const auto x = testgen::hyperboloid(rng, 3, 2.0);
        const auto y = testgen::hyperboloid(rng, 3, 2.0);
        const auto w = tangent_project(x, testgen::gaussian(rng, 4));
        const auto same = hyperboloid_parallel_transport(x, x, w);
        CHECK(same.vec == w.vec);
        const auto t = hyperboloid_parallel_transport(x, y, w);
        const double scale = 1 + std::abs(y[3]) * std::abs(y[3]);
        CHECK(std::abs(lorentz_inner(y.coords(), t.vec)) < 1e-8 * scale);
        CHECK(lorentz_inner(t.vec, t.vec) == doctest::Approx(lorentz_inner(w.vec, w.vec)).epsilon(1e-8));
    }
}

TEST_CASE("conversions between models") {
    const auto o = HyperboloidPoint::origin(2);
    CHECK(to_poincare(o).coords() == Vec{0, 0});
    const auto p = to_poincare(H({std::sinh(1.0), 0, std::cosh(1.0)}));
    CHECK(p[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
    const auto h = to_hyperboloid(P({std::tanh(0.5), 0}));
    CHECK(h[0] == doctest::Approx(std::sinh(1.0)).epsilon(1e-12));
    CHECK(h[2] == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));
    CHECK(to_hyperboloid(P({0, 0})).coords() == Vec{0, 0, 1});

    std::mt19937_64 rng(22);
    for (int i = 0; i < 1000; ++i) {
        const auto y = testgen::poincare(rng, 4, 0.95);
        const auto lifted = to_hyperboloid(y);
        CHECK(std::abs(lorentz_inner(lifted.coords(), lifted.coords()) + 1.0) <
              1e-9 * (1 + lifted[4] * lifted[4]));
        CHECK(max_abs_diff(to_poincare(lifted).coords(), y.coords()) < 1e-10);
    }
}

TEST_CASE("distances agree across models") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; ++i) {
        const auto u = testgen::hyperboloid(rng, 3);
        const auto v = testgen::hyperboloid(rng, 3);
        CHECK(std::abs(poincare_distance(to_poincare(u), to_poincare(v)) - hyperboloid_distance(u, v)) < 1e-6);
    }
}

TEST_CASE("geometry is deterministic") {
    std::mt19937_64 rng(24);
    const auto a = testgen::poincare(rng, 6);
    const auto b = testgen::poincare(rng, 6);
    CHECK(mobius_add(a, b) == mobius_add(a, b));
    CHECK(log_map_poincare(a, b).vec == log_map_poincare(a, b).vec);
}
