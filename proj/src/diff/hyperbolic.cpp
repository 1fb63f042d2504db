#include "gyronet/diff/hyperbolic.hpp"

#include "gyronet/geometry.hpp"

#include <stdexcept>

namespace gyronet::diff::hyp {

namespace {

// tanh(t)/t and atanh(s)/s on floored, positive columns.
Var tanh_ratio(Var t) { return t.tape().tanh(t) / t; }
Var atanh_ratio(Var s) { return s.tape().atanh(s) / s; }

Var sq_norm(Var x) { return x.tape().dot(x, x); }

}  // namespace

Var clamp(Var x, double c) { return x.tape().clamp_norm(x, c * (1.0 - geometry::kBoundaryEps)); }

Var mobius_add(Var x, Var y, double c) {
    Tape& t = x.tape();
    const double k = 1.0 / (c * c);
    Var xy = t.dot(x, y);
    Var x2 = sq_norm(x);
    Var y2 = sq_norm(y);
    Var cx = 1.0 + 2.0 * k * xy + k * y2;
    Var cy = 1.0 - k * x2;
    Var den = 1.0 + 2.0 * k * xy + (k * k) * (x2 * y2);
    return clamp((cx * x + cy * y) / den, c);
}

Var mobius_neg(Var x) { return -x; }

Var conformal_factor(Var x, double c) { return 2.0 / (1.0 - sq_norm(x) / (c * c)); }

Var exp0(Var v, double c) {
    Var n = v.tape().norm(v, kNormFloor) / c;
    return clamp(tanh_ratio(n) * v, c);
}

Var log0(Var x, double c) {
    Var s = x.tape().norm(x, kNormFloor) / c;
    return atanh_ratio(s) * x;
}

Var exp_map(Var x, Var v, double c) {
    Var lam = conformal_factor(x, c);
    Var u = lam * v.tape().norm(v, kNormFloor) / (2.0 * c);
    Var step = tanh_ratio(u) * (lam / 2.0) * v;
    return mobius_add(x, step, c);
}

Var log_map(Var x, Var y, double c) {
    Var w = mobius_add(mobius_neg(x), y, c);
    Var s = w.tape().norm(w, kNormFloor) / c;
    return (2.0 / conformal_factor(x, c)) * atanh_ratio(s) * w;
}

Var distance(Var x, Var y, double c) {
    Var w = mobius_add(mobius_neg(x), y, c);
    Tape& t = w.tape();
    return 2.0 * c * t.atanh(t.norm(w, kNormFloor) / c);
}

Var mobius_matvec(Var matrix, Var x, double c) {
    Tape& t = x.tape();
    Var mx = t.matmul(x, matrix, false, true);
    Var s = t.norm(x, kNormFloor) / c;
    Var g = atanh_ratio(s);
    Var arg = (t.norm(mx, kNormFloor) / c) * g;
    return clamp(tanh_ratio(arg) * g * mx, c);
}

Var relu(Var x) { return 0.5 * (x + x.tape().sqrt(x * x)); }

Var lifted_relu(Var x, double c) { return exp0(relu(log0(x, c)), c); }

Var mlr_scores(Var x, Var p, Var a, double c) {
    Tape& t = x.tape();
    const std::size_t rows = x.shape().rows;
    const std::size_t classes = p.shape().rows;
    if (a.shape() != p.shape() || p.shape().cols != x.shape().cols) {
        throw ShapeError("mlr_scores: x " + to_string(x.shape()) + ", p " + to_string(p.shape()) + ", a " +
                         to_string(a.shape()));
    }
    // Pair every input row with every class via one-hot selection matrices.
    TensorBuilder sel_rows({rows * classes, rows});
    TensorBuilder sel_classes({rows * classes, classes});
    for (std::size_t b = 0; b < rows; ++b) {
        for (std::size_t k = 0; k < classes; ++k) {
            sel_rows(b * classes + k, b) = 1.0;
            sel_classes(b * classes + k, k) = 1.0;
        }
    }
    Var s_rows = t.constant(std::move(sel_rows).build());
    Var s_classes = t.constant(std::move(sel_classes).build());
    Var xr = t.matmul(s_rows, x);
    Var pr = t.matmul(s_classes, p);
    Var ar = t.matmul(s_classes, a);

    Var z = mobius_add(mobius_neg(pr), xr, c);
    Var a_norm = t.norm(ar, kNormFloor);
    Var arg = 2.0 * t.dot(z, ar) / (c * (1.0 - sq_norm(z) / (c * c)) * a_norm);
    Var score = c * conformal_factor(pr, c) * a_norm * t.asinh(arg);
    return t.matmul(s_rows, score * s_classes, true, false);
}

Var log_softmax(Var logits) {
    Tape& t = logits.tape();
    Var m = t.max_reduce(logits, Axis::Cols);
    Var shifted = logits - m;
    return shifted - t.log(t.sum(t.exp(shifted), Axis::Cols));
}

Var cross_entropy(Var logits, const std::vector<std::size_t>& labels) {
    Tape& t = logits.tape();
    const Shape s = logits.shape();
    if (labels.size() != s.rows) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + to_string(s));
    }
    TensorBuilder onehot(s);
    for (std::size_t r = 0; r < s.rows; ++r) {
        if (labels[r] >= s.cols) {
            throw std::out_of_range("label " + std::to_string(labels[r]) + " out of range");
        }
        onehot(r, labels[r]) = 1.0;
    }
    Var picked = t.sum(log_softmax(logits) * t.constant(std::move(onehot).build()));
    return -picked / static_cast<double>(s.rows);
}

}  // namespace gyronet::diff::hyp
