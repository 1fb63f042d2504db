#pragma once

// Poincaré ball and hyperboloid models of hyperbolic space.
//
// All functions here are pure: no state, no allocation beyond their results,
// and identical inputs always produce bit-identical outputs.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace gyronet::geometry {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;

/// Relative shell below the ball boundary that results are pulled back into.
inline constexpr double kBoundaryEps = 1e-5;
/// Tolerance of the hyperboloid constraint <x,x>_L = -1.
inline constexpr double kHyperboloidTol = 1e-9;

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A point strictly inside the Poincaré ball of radius `c`.
class PoincarePoint {
public:
    /// Rejects ‖x‖ ≥ c; points inside the boundary shell are clamped.
    explicit PoincarePoint(Vec coords, double c = 1.0);
    /// Rescales any point with ‖x‖ ≥ c·(1 − kBoundaryEps) radially onto that radius.
    static PoincarePoint clamped(Vec coords, double c = 1.0);
    static PoincarePoint origin(std::size_t dim, double c = 1.0);

    const Vec& coords() const noexcept { return coords_; }
    double c() const noexcept { return c_; }
    std::size_t dim() const noexcept { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }

    friend bool operator==(const PoincarePoint&, const PoincarePoint&) = default;

private:
    PoincarePoint() = default;
    Vec coords_;
    double c_ = 1.0;
};

/// A point on the upper sheet of the hyperboloid, time-like coordinate last.
class HyperboloidPoint {
public:
    /// Validates <x,x>_L = -1 (to kHyperboloidTol·(1 + x_{n+1}²)) and x_{n+1} > 0.
    explicit HyperboloidPoint(Vec coords);
    /// Lifts spatial coordinates (x_1..x_n) onto the sheet.
    static HyperboloidPoint from_spatial(ConstSpan spatial);
    /// Recomputes the time-like coordinate from the spatial ones.
    static HyperboloidPoint renormalized(ConstSpan coords);
    static HyperboloidPoint origin(std::size_t dim);

    const Vec& coords() const noexcept { return coords_; }
    /// Intrinsic dimension n (coords has n + 1 entries).
    std::size_t dim() const noexcept { return coords_.size() - 1; }
    double operator[](std::size_t i) const { return coords_[i]; }

    friend bool operator==(const HyperboloidPoint&, const HyperboloidPoint&) = default;

private:
    HyperboloidPoint() = default;
    Vec coords_;
};

template <class Point>
struct TangentVector {
    Point base;
    Vec vec;
};

using PoincareTangent = TangentVector<PoincarePoint>;
using HyperboloidTangent = TangentVector<HyperboloidPoint>;

// ---------------------------------------------------------------------------
// Euclidean helpers

double dot(ConstSpan a, ConstSpan b);
double norm(ConstSpan a);
double squared_norm(ConstSpan a);

/// Radial rescale onto c·(1 − kBoundaryEps) when outside that radius.
Vec clamp_to_ball(Vec x, double c);

// ---------------------------------------------------------------------------
// Poincaré ball gyrovector space

PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y);
PoincarePoint mobius_neg(const PoincarePoint& x);
/// gyr[a,b]v = ⊖(a⊕b) ⊕ (a⊕(b⊕v))
PoincarePoint gyration(const PoincarePoint& a, const PoincarePoint& b, const PoincarePoint& v);
PoincarePoint mobius_scalar_mul(double r, const PoincarePoint& x);
double conformal_factor(const PoincarePoint& x);

PoincarePoint exp_map_poincare(const PoincarePoint& x, const PoincareTangent& v);
PoincareTangent log_map_poincare(const PoincarePoint& x, const PoincarePoint& y);
double poincare_distance(const PoincarePoint& x, const PoincarePoint& y);

/// Moves a tangent vector at the origin to T_x by the conformal ratio λ_0/λ_x.
PoincareTangent transport_from_origin_poincare(const PoincarePoint& x, const PoincareTangent& v);

/// Möbius matrix-vector product; `matrix` is rows×cols row-major with cols = x.dim().
PoincarePoint mobius_matvec(ConstSpan matrix, std::size_t rows, const PoincarePoint& x);

/// x ⊕ b through exp_x(P_{0→x}(log_0(b))).
PoincarePoint bias_translate(const PoincarePoint& x, const PoincarePoint& b);

using EuclideanMap = std::function<Vec(ConstSpan)>;
/// f⊗(x) = exp_0(f(log_0(x)))
PoincarePoint lift_map(const EuclideanMap& f, const PoincarePoint& x);

/// Shorthands for maps at the origin on raw coordinates.
Vec exp0(ConstSpan v, double c = 1.0);
Vec log0(ConstSpan x, double c = 1.0);

// ---------------------------------------------------------------------------
// Hyperboloid model

double lorentz_inner(ConstSpan u, ConstSpan v);
double hyperboloid_distance(const HyperboloidPoint& u, const HyperboloidPoint& v);
HyperboloidTangent tangent_project(const HyperboloidPoint& x, ConstSpan v);
HyperboloidPoint exp_map_hyperboloid(const HyperboloidPoint& x, const HyperboloidTangent& v);
HyperboloidTangent log_map_hyperboloid(const HyperboloidPoint& x, const HyperboloidPoint& y);
HyperboloidTangent hyperboloid_parallel_transport(const HyperboloidPoint& x, const HyperboloidPoint& y,
                                                  const HyperboloidTangent& w);

// In-place kernels on raw Minkowski coordinates for hot loops. They skip the
// invariant validation the typed API performs.
namespace kernels {
void tangent_project(ConstSpan x, std::span<double> v);
/// x ← exp_x(v), then the time-like coordinate is recomputed.
void exp_map_hyperboloid(std::span<double> x, ConstSpan v);
void renormalize(std::span<double> x);
}  // namespace kernels

// ---------------------------------------------------------------------------
// Conversions (unit ball only)

/// ρ(x) = (x_1..x_n)/(x_{n+1} + 1)
PoincarePoint to_poincare(const HyperboloidPoint& x);
/// ρ⁻¹(y) = (2y, 1 + ‖y‖²)/(1 − ‖y‖²)
HyperboloidPoint to_hyperboloid(const PoincarePoint& y);

}  // namespace gyronet::geometry
