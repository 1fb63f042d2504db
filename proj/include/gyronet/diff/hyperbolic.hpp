#pragma once

// Poincaré-ball operations composed from tape primitives so gradients flow
// through them. Every function works row-wise: a [rows x n] Var holds one
// point (or tangent vector) per row, and a 1-row operand broadcasts.

#include "gyronet/diff/tape.hpp"

namespace gyronet::diff::hyp {

inline constexpr double kNormFloor = 1e-15;

/// Radial rescale of rows onto c(1 - 1e-5) when they reach it.
Var clamp(Var x, double c = 1.0);

Var mobius_add(Var x, Var y, double c = 1.0);
Var mobius_neg(Var x);
/// 2 / (1 - |x|^2/c^2), rows x 1.
Var conformal_factor(Var x, double c = 1.0);

Var exp0(Var v, double c = 1.0);
Var log0(Var x, double c = 1.0);
Var exp_map(Var x, Var v, double c = 1.0);
Var log_map(Var x, Var y, double c = 1.0);
Var distance(Var x, Var y, double c = 1.0);

/// M ⊗ x for every row of x; `matrix` is stored [out x in].
Var mobius_matvec(Var matrix, Var x, double c = 1.0);

Var relu(Var x);
/// exp0(relu(log0(x))).
Var lifted_relu(Var x, double c = 1.0);

/// Multinomial logistic regression scores, [rows x K], from hyperplane
/// offsets `p` [K x n] (points) and normals `a` [K x n].
Var mlr_scores(Var x, Var p, Var a, double c = 1.0);

/// Mean cross-entropy of row-wise logits against integer labels.
Var cross_entropy(Var logits, const std::vector<std::size_t>& labels);

/// Row-wise log-softmax.
Var log_softmax(Var logits);

}  // namespace gyronet::diff::hyp
