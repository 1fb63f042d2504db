#include "gyronet/diff/gradcheck.hpp"
#include "gyronet/runner.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gyronet::runner {

namespace geo = gyronet::geometry;

namespace {

geo::Vec gaussian(std::mt19937_64& rng, std::size_t n, double sigma = 1.0) {
    std::normal_distribution<double> g(0.0, sigma);
    geo::Vec v(n);
    for (double& x : v) x = g(rng);
    return v;
}

// Uniform direction, radius uniform in [0, max_norm).
geo::PoincarePoint ball_point(std::mt19937_64& rng, std::size_t n, double max_norm) {
    geo::Vec v = gaussian(rng, n);
    const double len = geo::norm(v);
    std::uniform_real_distribution<double> r(0.0, max_norm);
    const double radius = r(rng);
    for (double& x : v) x *= radius / len;
    return geo::PoincarePoint(v);
}

geo::HyperboloidPoint sheet_point(std::mt19937_64& rng, std::size_t n, double max_dist) {
    const auto o = geo::HyperboloidPoint::origin(n);
    geo::Vec v = gaussian(rng, n + 1);
    v.back() = 0.0;
    const double len = geo::norm(v);
    std::uniform_real_distribution<double> r(0.0, max_dist);
    const double d = r(rng);
    for (double& x : v) x *= d / len;
    return geo::exp_map_hyperboloid(o, {o, v});
}

double max_abs_diff(geo::ConstSpan a, geo::ConstSpan b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double lorentz_distance_raw(geo::ConstSpan u, geo::ConstSpan v) {
    return std::acosh(std::max(1.0, -geo::lorentz_inner(u, v)));
}

SuiteResult finish(std::string name, double max_error, double tolerance, std::string detail = {}) {
    return {std::move(name), max_error, tolerance, std::isfinite(max_error) && max_error < tolerance,
            std::move(detail)};
}

SuiteResult gyro_axioms(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed);
    double identity = 0.0, inverse = 0.0, assoc = 0.0, isometry = 0.0;
    for (std::size_t i = 0; i < o.triples; ++i) {
        const auto a = ball_point(rng, 5, 0.9);
        const auto b = ball_point(rng, 5, 0.9);
        const auto v = ball_point(rng, 5, 0.9);
        const auto w = ball_point(rng, 5, 0.9);
        identity = std::max(identity, max_abs_diff(geo::mobius_add(geo::PoincarePoint::origin(5), a).coords(), a.coords()));
        inverse = std::max(inverse, geo::norm(geo::mobius_add(geo::mobius_neg(a), a).coords()));
        assoc = std::max(assoc, max_abs_diff(geo::mobius_add(a, geo::mobius_add(b, v)).coords(),
                                             geo::mobius_add(geo::mobius_add(a, b), geo::gyration(a, b, v)).coords()));
        const auto gv = geo::gyration(a, b, v);
        const auto gw = geo::gyration(a, b, w);
        isometry = std::max(isometry, std::abs(geo::dot(gv.coords(), gw.coords()) - geo::dot(v.coords(), w.coords())));
        isometry = std::max(isometry, std::abs(geo::poincare_distance(gv, gw) - geo::poincare_distance(v, w)));
    }
    std::ostringstream d;
    d << "identity " << identity << ", inverse " << inverse << ", gyroassociativity " << assoc << ", gyration isometry "
      << isometry;
    return finish("gyrovector-axioms", std::max({identity, inverse, assoc, isometry}), 1e-8, d.str());
}

SuiteResult exp_log_round_trips(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed + 1);
    double ball = 0.0, sheet = 0.0;
    for (std::size_t i = 0; i < o.pairs; ++i) {
        const auto x = ball_point(rng, 4, 0.9);
        const auto y = ball_point(rng, 4, 0.9);
        const auto v = geo::log_map_poincare(x, y);
        ball = std::max(ball, max_abs_diff(geo::exp_map_poincare(x, v).coords(), y.coords()));

        const auto p = sheet_point(rng, 4, 2.0);
        const auto q = sheet_point(rng, 4, 2.0);
        const auto u = geo::log_map_hyperboloid(p, q);
        sheet = std::max(sheet, max_abs_diff(geo::exp_map_hyperboloid(p, u).coords(), q.coords()));
        const auto t = geo::tangent_project(p, gaussian(rng, 5, 0.5));
        sheet = std::max(sheet, max_abs_diff(geo::log_map_hyperboloid(p, geo::exp_map_hyperboloid(p, t)).vec, t.vec));
    }
    std::ostringstream d;
    d << "ball " << ball << ", hyperboloid " << sheet;
    return finish("exp-log-round-trips", std::max(ball, sheet), 1e-8, d.str());
}

SuiteResult bias_translation(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed + 2);
    double worst = 0.0;
    for (std::size_t i = 0; i < o.pairs; ++i) {
        const auto x = ball_point(rng, 4, 0.9);
        const auto b = ball_point(rng, 4, 0.9);
        worst = std::max(worst, max_abs_diff(geo::bias_translate(x, b).coords(), geo::mobius_add(x, b).coords()));
    }
    return finish("bias-translate", worst, 1e-8);
}

SuiteResult isometry(const SuiteOptions& o) {
    const ToHyperboloidFn lift =
        o.to_hyperboloid ? o.to_hyperboloid : [](const geo::PoincarePoint& y) { return geo::to_hyperboloid(y).coords(); };
    std::mt19937_64 rng(o.seed + 3);
    double dist = 0.0, drift = 0.0, carrier = 0.0;
    for (std::size_t i = 0; i < o.pairs; ++i) {
        const auto x = ball_point(rng, 4, 0.9);
        const auto y = ball_point(rng, 4, 0.9);
        const auto hx = lift(x);
        const auto hy = lift(y);
        dist = std::max(dist, std::abs(lorentz_distance_raw(hx, hy) - geo::poincare_distance(x, y)));
        carrier = std::max(carrier, std::abs(geo::lorentz_inner(hx, hx) + 1.0) / (1.0 + hx.back() * hx.back()));
        geo::Vec back(hx.begin(), hx.end() - 1);
        for (double& c : back) c /= hx.back() + 1.0;
        drift = std::max(drift, max_abs_diff(back, x.coords()));
    }
    std::ostringstream d;
    d << "distance " << dist << " (tol 1e-6), round-trip drift " << drift << " (tol 1e-9), carrier " << carrier
      << " (tol 1e-9)";
    SuiteResult r = finish("isometry", dist, 1e-6, d.str());
    r.passed = r.passed && drift < 1e-9 && carrier < 1e-9;
    return r;
}

SuiteResult skipgram_gradients(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed + 4);
    double worst = 0.0;
    const std::size_t dim = 3, rows = 6;
    for (std::size_t trial = 0; trial < o.configurations; ++trial) {
        embed::EmbeddingMatrices e;
        e.geometry = embed::Geometry::Hyperboloid;
        e.dim = dim;
        e.rows = rows;
        for (auto* m : {&e.a, &e.b}) {
            for (std::size_t r = 0; r < rows; ++r) {
                const auto p = sheet_point(rng, dim, 1.5);
                m->insert(m->end(), p.coords().begin(), p.coords().end());
            }
        }
        std::uniform_int_distribution<std::size_t> id(0, rows - 1);
        embed::TrainingPair pair{id(rng), id(rng), {id(rng), id(rng), id(rng)}};
        const double theta = 1.0;
        const auto g = embed::minkowski_gradients(pair, e, theta);
        // Central differences of the log-likelihood, mapped to the Minkowski
        // gradient by flipping the sign of the time coordinate.
        auto oracle = [&](std::vector<double>& m, std::size_t row) {
            std::span<double> slot(m.data() + row * (dim + 1), dim + 1);
            const std::vector<double> start(slot.begin(), slot.end());
            auto numeric = diff::numeric_gradient(
                [&](std::span<const double> x) {
                    std::copy(x.begin(), x.end(), slot.begin());
                    return embed::pair_log_likelihood(pair, e, theta);
                },
                start);
            std::copy(start.begin(), start.end(), slot.begin());
            numeric.back() = -numeric.back();
            return numeric;
        };
        worst = std::max(worst, diff::compare_gradients(g.center, oracle(e.a, pair.center), 1e-4).max_rel_error);
        for (const auto& [w, grad] : g.context) {
            worst = std::max(worst, diff::compare_gradients(grad, oracle(e.b, w), 1e-4).max_rel_error);
        }
    }
    return finish("skipgram-gradients", worst, 1e-4);
}

SuiteResult rsgd_invariant(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed + 5);
    double worst = 0.0;
    for (std::size_t i = 0; i < o.pairs; ++i) {
        const auto x = sheet_point(rng, 4, 2.0);
        const auto y = embed::rsgd_step_hyperboloid(x, gaussian(rng, 5), 0.1);
        worst = std::max(worst, std::abs(geo::lorentz_inner(y.coords(), y.coords()) + 1.0));
    }
    return finish("rsgd-invariant", worst, 1e-9);
}

}  // namespace

geo::Vec to_hyperboloid_unsquared(const geo::PoincarePoint& y) {
    const double s = geo::squared_norm(y.coords());
    const double den = 1.0 - std::sqrt(s);
    geo::Vec out;
    for (double c : y.coords()) out.push_back(2.0 * c / den);
    out.push_back((1.0 + s) / den);
    return out;
}

std::vector<SuiteResult> run_geometry_suites(const SuiteOptions& options) {
    using Suite = SuiteResult (*)(const SuiteOptions&);
    const Suite suites[] = {gyro_axioms, exp_log_round_trips, bias_translation, isometry, skipgram_gradients,
                            rsgd_invariant};
    std::vector<SuiteResult> out;
    for (Suite s : suites) {
        try {
            out.push_back(s(options));
        } catch (const std::exception& e) {
            out.push_back({"(suite aborted)", INFINITY, 0.0, false, e.what()});
        }
    }
    return out;
}

}  // namespace gyronet::runner
