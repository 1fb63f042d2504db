#include "gyronet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gyronet::geometry {

namespace {

void require_same_space(const PoincarePoint& x, const PoincarePoint& y) {
    if (x.dim() != y.dim()) {
        throw GeometryError("dimension mismatch: " + std::to_string(x.dim()) + " vs " + std::to_string(y.dim()));
    }
    if (x.c() != y.c()) {
        throw GeometryError("ball radius mismatch");
    }
}

void require_finite(ConstSpan v, const char* what) {
    for (double e : v) {
        if (!std::isfinite(e)) {
            throw GeometryError(std::string(what) + ": non-finite coordinate");
        }
    }
}

Vec scaled(ConstSpan v, double s) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = s * v[i];
    }
    return out;
}

// Möbius addition on raw coordinates; the caller clamps.
Vec mobius_add_raw(ConstSpan x, ConstSpan y, double c) {
    const double c2 = c * c;
    const double xy = dot(x, y);
    const double x2 = squared_norm(x);
    const double y2 = squared_norm(y);
    const double coef_x = 1.0 + 2.0 * xy / c2 + y2 / c2;
    const double coef_y = 1.0 - x2 / c2;
    const double den = 1.0 + 2.0 * xy / c2 + x2 * y2 / (c2 * c2);
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (coef_x * x[i] + coef_y * y[i]) / den;
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

double dot(ConstSpan a, ConstSpan b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double squared_norm(ConstSpan a) { return dot(a, a); }

double norm(ConstSpan a) { return std::sqrt(squared_norm(a)); }

Vec clamp_to_ball(Vec x, double c) {
    const double max_norm = c * (1.0 - kBoundaryEps);
    const double n = norm(x);
    if (n >= max_norm) {
        const double s = max_norm / n;
        for (double& e : x) {
            e *= s;
        }
    }
    return x;
}

// ---------------------------------------------------------------------------

PoincarePoint::PoincarePoint(Vec coords, double c) : coords_(std::move(coords)), c_(c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw GeometryError("ball radius must be positive and finite");
    }
    require_finite(coords_, "PoincarePoint");
    if (norm(coords_) >= c) {
        throw GeometryError("point lies outside the Poincaré ball");
    }
    coords_ = clamp_to_ball(std::move(coords_), c);
}

PoincarePoint PoincarePoint::clamped(Vec coords, double c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw GeometryError("ball radius must be positive and finite");
    }
    require_finite(coords, "PoincarePoint");
    PoincarePoint p;
    p.coords_ = clamp_to_ball(std::move(coords), c);
    p.c_ = c;
    return p;
}

PoincarePoint PoincarePoint::origin(std::size_t dim, double c) { return PoincarePoint(Vec(dim, 0.0), c); }

HyperboloidPoint::HyperboloidPoint(Vec coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) {
        throw GeometryError("hyperboloid point needs at least two coordinates");
    }
    require_finite(coords_, "HyperboloidPoint");
    const double t = coords_.back();
    if (!(t > 0.0)) {
        throw GeometryError("hyperboloid point must lie on the upper sheet");
    }
    if (std::abs(lorentz_inner(coords_, coords_) + 1.0) > kHyperboloidTol * (1.0 + t * t)) {
        throw GeometryError("point does not satisfy <x,x>_L = -1");
    }
}

HyperboloidPoint HyperboloidPoint::from_spatial(ConstSpan spatial) {
    if (spatial.empty()) {
        throw GeometryError("hyperboloid point needs at least one spatial coordinate");
    }
    require_finite(spatial, "HyperboloidPoint");
    HyperboloidPoint p;
    p.coords_.assign(spatial.begin(), spatial.end());
    p.coords_.push_back(std::sqrt(1.0 + squared_norm(spatial)));
    return p;
}

HyperboloidPoint HyperboloidPoint::renormalized(ConstSpan coords) {
    if (coords.size() < 2) {
        throw GeometryError("hyperboloid point needs at least two coordinates");
    }
    return from_spatial(coords.first(coords.size() - 1));
}

HyperboloidPoint HyperboloidPoint::origin(std::size_t dim) {
    Vec spatial(dim, 0.0);
    return from_spatial(spatial);
}

// ---------------------------------------------------------------------------

PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y) {
    require_same_space(x, y);
    return PoincarePoint::clamped(mobius_add_raw(x.coords(), y.coords(), x.c()), x.c());
}

PoincarePoint mobius_neg(const PoincarePoint& x) { return PoincarePoint::clamped(scaled(x.coords(), -1.0), x.c()); }

PoincarePoint gyration(const PoincarePoint& a, const PoincarePoint& b, const PoincarePoint& v) {
    require_same_space(a, b);
    require_same_space(a, v);
    return mobius_add(mobius_neg(mobius_add(a, b)), mobius_add(a, mobius_add(b, v)));
}

PoincarePoint mobius_scalar_mul(double r, const PoincarePoint& x) {
    const double n = norm(x.coords());
    if (n == 0.0) {
        return PoincarePoint::origin(x.dim(), x.c());
    }
    const double c = x.c();
    const double s = c * std::tanh(r * std::atanh(n / c)) / n;
    return PoincarePoint::clamped(scaled(x.coords(), s), c);
}

double conformal_factor(const PoincarePoint& x) {
    const double c = x.c();
    return 2.0 / (1.0 - squared_norm(x.coords()) / (c * c));
}

PoincarePoint exp_map_poincare(const PoincarePoint& x, const PoincareTangent& v) {
    if (v.base.coords() != x.coords() || v.base.c() != x.c()) {
        throw GeometryError("tangent vector is not based at the expansion point");
    }
    if (v.vec.size() != x.dim()) {
        throw GeometryError("tangent dimension mismatch");
    }
    const double n = norm(v.vec);
    if (n == 0.0) {
        return x;
    }
    const double c = x.c();
    const double s = std::tanh(conformal_factor(x) * n / (2.0 * c)) * c / n;
    return mobius_add(x, PoincarePoint::clamped(scaled(v.vec, s), c));
}

PoincareTangent log_map_poincare(const PoincarePoint& x, const PoincarePoint& y) {
    require_same_space(x, y);
    const Vec u = mobius_add_raw(scaled(x.coords(), -1.0), y.coords(), x.c());
    const double n = norm(u);
    if (n == 0.0 || x == y) {
        return {x, Vec(x.dim(), 0.0)};
    }
    const double c = x.c();
    const double s = 2.0 * c / conformal_factor(x) * std::atanh(std::min(n / c, 1.0 - kBoundaryEps)) / n;
    return {x, scaled(u, s)};
}

double poincare_distance(const PoincarePoint& x, const PoincarePoint& y) {
    require_same_space(x, y);
    const Vec u = mobius_add_raw(scaled(x.coords(), -1.0), y.coords(), x.c());
    const double c = x.c();
    return 2.0 * c * std::atanh(std::min(norm(u) / c, 1.0 - kBoundaryEps * kBoundaryEps));
}

PoincareTangent transport_from_origin_poincare(const PoincarePoint& x, const PoincareTangent& v) {
    if (norm(v.base.coords()) != 0.0) {
        throw GeometryError("transport source must be the origin");
    }
    if (v.vec.size() != x.dim()) {
        throw GeometryError("tangent dimension mismatch");
    }
    return {x, scaled(v.vec, 2.0 / conformal_factor(x))};
}

PoincarePoint mobius_matvec(ConstSpan matrix, std::size_t rows, const PoincarePoint& x) {
    const std::size_t cols = x.dim();
    if (matrix.size() != rows * cols) {
        throw GeometryError("matrix shape does not match point dimension");
    }
    Vec mx(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        mx[r] = dot(matrix.subspan(r * cols, cols), x.coords());
    }
    const double mx_norm = norm(mx);
    const double x_norm = norm(x.coords());
    if (mx_norm == 0.0 || x_norm == 0.0) {
        return PoincarePoint::origin(rows, x.c());
    }
    const double c = x.c();
    const double s = c * std::tanh(mx_norm / x_norm * std::atanh(x_norm / c)) / mx_norm;
    return PoincarePoint::clamped(scaled(mx, s), c);
}

PoincarePoint bias_translate(const PoincarePoint& x, const PoincarePoint& b) {
    require_same_space(x, b);
    const PoincarePoint origin = PoincarePoint::origin(x.dim(), x.c());
    const PoincareTangent at_origin = log_map_poincare(origin, b);
    return exp_map_poincare(x, transport_from_origin_poincare(x, at_origin));
}

Vec exp0(ConstSpan v, double c) {
    const double n = norm(v);
    if (n == 0.0) {
        return Vec(v.size(), 0.0);
    }
    return clamp_to_ball(scaled(v, c * std::tanh(n / c) / n), c);
}

Vec log0(ConstSpan x, double c) {
    const double n = norm(x);
    if (n == 0.0) {
        return Vec(x.size(), 0.0);
    }
    return scaled(x, c * std::atanh(std::min(n / c, 1.0 - kBoundaryEps)) / n);
}

PoincarePoint lift_map(const EuclideanMap& f, const PoincarePoint& x) {
    const Vec image = f(log0(x.coords(), x.c()));
    return PoincarePoint::clamped(exp0(image, x.c()), x.c());
}

// ---------------------------------------------------------------------------

double lorentz_inner(ConstSpan u, ConstSpan v) {
    if (u.size() != v.size() || u.empty()) {
        throw GeometryError("Lorentzian inner product needs equal, non-empty lengths");
    }
    const std::size_t n = u.size() - 1;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += u[i] * v[i];
    }
    return s - u[n] * v[n];
}

double hyperboloid_distance(const HyperboloidPoint& u, const HyperboloidPoint& v) {
    return std::acosh(std::max(1.0, -lorentz_inner(u.coords(), v.coords())));
}

HyperboloidTangent tangent_project(const HyperboloidPoint& x, ConstSpan v) {
    if (v.size() != x.coords().size()) {
        throw GeometryError("ambient vector length mismatch");
    }
    Vec out(v.begin(), v.end());
    kernels::tangent_project(x.coords(), out);
    return {x, std::move(out)};
}

HyperboloidPoint exp_map_hyperboloid(const HyperboloidPoint& x, const HyperboloidTangent& v) {
    if (v.base.coords() != x.coords()) {
        throw GeometryError("tangent vector is not based at the expansion point");
    }
    if (v.vec.size() != x.coords().size()) {
        throw GeometryError("tangent dimension mismatch");
    }
    Vec out = x.coords();
    kernels::exp_map_hyperboloid(out, v.vec);
    return HyperboloidPoint(std::move(out));
}

HyperboloidTangent log_map_hyperboloid(const HyperboloidPoint& x, const HyperboloidPoint& y) {
    if (x.coords().size() != y.coords().size()) {
        throw GeometryError("dimension mismatch");
    }
    const double alpha = std::max(1.0, -lorentz_inner(x.coords(), y.coords()));
    const double d = std::acosh(alpha);
    Vec u(y.coords());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] -= alpha * x[i];
    }
    const double u_norm = std::sqrt(std::max(0.0, lorentz_inner(u, u)));
    if (d == 0.0 || u_norm == 0.0) {
        return {x, Vec(u.size(), 0.0)};
    }
    return {x, scaled(u, d / u_norm)};
}

HyperboloidTangent hyperboloid_parallel_transport(const HyperboloidPoint& x, const HyperboloidPoint& y,
                                                  const HyperboloidTangent& w) {
    if (w.vec.size() != x.coords().size()) {
        throw GeometryError("tangent dimension mismatch");
    }
    if (x == y) {
        return {y, w.vec};
    }
    const Vec v = log_map_hyperboloid(x, y).vec;
    const double len = std::sqrt(std::max(0.0, lorentz_inner(v, v)));
    if (len == 0.0) {
        return {y, w.vec};
    }
    const Vec v_hat = scaled(v, 1.0 / len);
    const double along = lorentz_inner(w.vec, v_hat);
    const double sh = std::sinh(len);
    const double ch = std::cosh(len);
    Vec out(w.vec.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = along * (sh * x[i] + ch * v_hat[i]) + (w.vec[i] - along * v_hat[i]);
    }
    return {y, std::move(out)};
}

namespace kernels {

void tangent_project(ConstSpan x, std::span<double> v) {
    const double s = lorentz_inner(x, v);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] += s * x[i];
    }
}

void exp_map_hyperboloid(std::span<double> x, ConstSpan v) {
    const double n = std::sqrt(std::max(0.0, lorentz_inner(v, v)));
    if (n == 0.0) {
        return;
    }
    const double ch = std::cosh(n);
    const double sh_over_n = std::sinh(n) / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = ch * x[i] + sh_over_n * v[i];
    }
    renormalize(x);
}

void renormalize(std::span<double> x) {
    const std::size_t n = x.size() - 1;
    x[n] = std::sqrt(1.0 + squared_norm(x.first(n)));
}

}  // namespace kernels

// ---------------------------------------------------------------------------

PoincarePoint to_poincare(const HyperboloidPoint& x) {
    const std::size_t n = x.dim();
    const double denom = x[n] + 1.0;
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] / denom;
    }
    return PoincarePoint::clamped(std::move(out), 1.0);
}

HyperboloidPoint to_hyperboloid(const PoincarePoint& y) {
    if (y.c() != 1.0) {
        throw GeometryError("hyperboloid conversion is defined for the unit ball");
    }
    const double r2 = squared_norm(y.coords());
    const double s = 1.0 / (1.0 - r2);
    Vec out(y.dim() + 1);
    for (std::size_t i = 0; i < y.dim(); ++i) {
        out[i] = 2.0 * y[i] * s;
    }
    out.back() = (1.0 + r2) * s;
    return HyperboloidPoint(std::move(out));
}

}  // namespace gyronet::geometry
