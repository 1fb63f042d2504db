#include "gyronet/diff/hyperbolic.hpp"
#include "gyronet/hypformer.hpp"

#include <cmath>

namespace gyronet::hypformer {

namespace hyp = diff::hyp;
using diff::Axis;

const char* to_string(ModelGeometry g) { return g == ModelGeometry::Euclidean ? "euclidean" : "hyperbolic"; }

ModelGeometry parse_model_geometry(const std::string& s) {
    if (s == "euclidean") return ModelGeometry::Euclidean;
    if (s == "hyperbolic" || s == "poincare") return ModelGeometry::Hyperbolic;
    throw ModelError("unknown model geometry '" + s + "' (expected euclidean or hyperbolic)");
}

std::vector<double> positional_encoding(std::size_t pos, std::size_t d) {
    std::vector<double> pe(d);
    for (std::size_t j = 0; j < d; ++j) {
        const std::size_t two_i = j - j % 2;
        const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(two_i) / d);
        pe[j] = j % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
    return pe;
}

Tensor attention_mask(const std::vector<std::size_t>& lengths, std::size_t seq_len) {
    const std::size_t rows = lengths.size() * seq_len;
    diff::TensorBuilder m({rows, rows});
    for (double& v : m.data()) v = -1e9;
    for (std::size_t b = 0; b < lengths.size(); ++b) {
        for (std::size_t i = 0; i < seq_len; ++i) {
            for (std::size_t j = 0; j < lengths[b]; ++j) m(b * seq_len + i, b * seq_len + j) = 0.0;
        }
    }
    return std::move(m).build();
}

Var attach_positions(Var x, Var pe, ModelGeometry g) {
    if (g == ModelGeometry::Euclidean) return x + pe;
    return hyp::mobius_add(x, hyp::exp0(pe));
}

Var scaled_dot_attention(Var q, Var k, Var v, Var mask) {
    Tape& t = q.tape();
    const std::size_t dk = q.shape().cols;
    if (dk == 0) throw ModelError("attention with d_k = 0");
    if (k.shape().cols != dk) throw diff::ShapeError("attention: query and key widths differ");
    Var logits = t.matmul(q, k, false, true) / std::sqrt(static_cast<double>(dk)) + mask;
    return t.matmul(t.softmax(logits), v);
}

Var hyperbolic_attention(Var q, Var k, Var v, Var mask) {
    return hyp::exp0(scaled_dot_attention(hyp::log0(q), hyp::log0(k), hyp::log0(v), mask));
}

std::vector<Var> split_heads(Var w, Var x, std::size_t heads, ModelGeometry g) {
    Tape& t = x.tape();
    const diff::Shape ws = w.shape();
    if (heads == 0 || ws.rows % heads != 0 || ws.cols != x.shape().cols) {
        throw diff::ShapeError("split_heads: projection " + to_string(ws) + " for " + std::to_string(heads) +
                               " heads over " + to_string(x.shape()));
    }
    const bool ball = g == ModelGeometry::Hyperbolic;
    Var y = ball ? hyp::mobius_matvec(w, x) : t.matmul(x, w, false, true);
    const std::size_t h = ws.rows / heads;
    std::vector<Var> out;
    out.reserve(heads);
    for (std::size_t i = 0; i < heads; ++i) {
        Var slice = t.slice(y, Axis::Cols, i * h, (i + 1) * h);
        out.push_back(ball ? hyp::clamp(slice) : slice);
    }
    return out;
}

Var merge_heads(const std::vector<Var>& heads, const std::vector<Var>& m, ModelGeometry g) {
    if (heads.empty() || heads.size() != m.size()) {
        throw ModelError("merge_heads: " + std::to_string(heads.size()) + " heads, " + std::to_string(m.size()) +
                         " matrices");
    }
    Tape& t = heads.front().tape();
    auto project = [&](std::size_t i) {
        return g == ModelGeometry::Hyperbolic ? hyp::mobius_matvec(m[i], heads[i])
                                              : t.matmul(heads[i], m[i], false, true);
    };
    Var acc = project(0);
    for (std::size_t i = 1; i < heads.size(); ++i) {
        acc = g == ModelGeometry::Hyperbolic ? hyp::mobius_add(acc, project(i)) : acc + project(i);
    }
    return acc;
}

Var feed_forward(Var x, Var m1, Var b1, Var m2, Var b2, ModelGeometry g) {
    Tape& t = x.tape();
    if (g == ModelGeometry::Euclidean) {
        Var hidden = hyp::relu(t.matmul(x, m1, false, true) + b1);
        return t.matmul(hidden, m2, false, true) + b2;
    }
    Var hidden = hyp::lifted_relu(hyp::mobius_add(hyp::mobius_matvec(m1, x), b1));
    return hyp::mobius_add(hyp::mobius_matvec(m2, hidden), b2);
}

Var pool(Var x, const std::vector<std::size_t>& lengths, std::size_t seq_len, ModelGeometry g) {
    Tape& t = x.tape();
    if (x.shape().rows != lengths.size() * seq_len) {
        throw diff::ShapeError("pool: " + to_string(x.shape()) + " for " + std::to_string(lengths.size()) +
                               " sequences of length " + std::to_string(seq_len));
    }
    const bool ball = g == ModelGeometry::Hyperbolic;
    Var base = ball ? hyp::log0(x) : x;
    std::vector<Var> rows;
    rows.reserve(lengths.size());
    for (std::size_t b = 0; b < lengths.size(); ++b) {
        if (lengths[b] == 0) throw ModelError("pool: sequence " + std::to_string(b) + " is fully masked");
        if (lengths[b] > seq_len) throw ModelError("pool: length exceeds the padded sequence length");
        Var seq = t.slice(base, Axis::Rows, b * seq_len, b * seq_len + lengths[b]);
        rows.push_back(t.max_reduce(seq, Axis::Rows));
    }
    Var pooled = rows.size() == 1 ? rows.front() : t.concat(rows, Axis::Rows);
    return ball ? hyp::exp0(pooled) : pooled;
}

Var hyperbolic_mlr(Var x, Var p, Var a) {
    const Tensor& av = a.value();
    for (std::size_t k = 0; k < av.rows(); ++k) {
        bool zero = true;
        for (double v : av.row_span(k)) zero = zero && v == 0.0;
        if (zero) throw ModelError("hyperbolic_mlr: normal of class " + std::to_string(k) + " is zero");
    }
    return hyp::mlr_scores(x, p, a);
}

Var tangent_dropout(Var x, double rate, std::mt19937_64& rng, bool training, ModelGeometry g) {
    if (rate < 0.0 || rate >= 1.0) throw ModelError("dropout rate must lie in [0, 1)");
    if (!training || rate == 0.0) return x;
    Tape& t = x.tape();
    diff::TensorBuilder mask(x.shape());
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    for (double& v : mask.data()) v = keep(rng) ? scale : 0.0;
    Var m = t.constant(std::move(mask).build());
    if (g == ModelGeometry::Euclidean) return x * m;
    return hyp::exp0(hyp::log0(x) * m);
}

}  // namespace gyronet::hypformer
