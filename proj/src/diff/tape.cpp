#include "gyronet/diff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gyronet::diff {

const char* op_name(Op op) {
    switch (op) {
        case Op::Input: return "input";
        case Op::Constant: return "constant";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::MatMul: return "matmul";
        case Op::Neg: return "neg";
        case Op::Sum: return "sum";
        case Op::MaxReduce: return "max_reduce";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Tanh: return "tanh";
        case Op::Atanh: return "atanh";
        case Op::Sinh: return "sinh";
        case Op::Asinh: return "asinh";
        case Op::Cosh: return "cosh";
        case Op::Sqrt: return "sqrt";
        case Op::Sigmoid: return "sigmoid";
        case Op::Softmax: return "softmax";
        case Op::Dot: return "dot";
        case Op::Norm: return "norm";
        case Op::Concat: return "concat";
        case Op::Slice: return "slice";
        case Op::Broadcast: return "broadcast";
        case Op::ClampNorm: return "clamp_norm";
    }
    return "unknown";
}

NonFiniteError::NonFiniteError(NodeId node, Op op)
    : std::runtime_error("non-finite value produced by node " + std::to_string(node) + " (" + op_name(op) + ")"),
      node_(node) {}

const Tensor& Var::value() const { return tape_->value(id_); }

Shape Var::shape() const { return value().shape(); }

const Tensor& Gradients::operator[](Var v) const& {
    auto it = by_id_.find(v.id());
    if (it == by_id_.end()) {
        throw std::out_of_range("no gradient recorded for node " + std::to_string(v.id()));
    }
    return it->second;
}

const Tensor& Gradients::operator[](const std::string& input_name) const& {
    auto it = by_name_.find(input_name);
    if (it == by_name_.end()) {
        throw std::out_of_range("no gradient recorded for input '" + input_name + "'");
    }
    return it->second;
}

bool Gradients::contains(const std::string& input_name) const { return by_name_.count(input_name) != 0; }

namespace {

bool is_elementwise_binary(Op op) { return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div; }

bool is_unary(Op op) {
    switch (op) {
        case Op::Neg:
        case Op::Exp:
        case Op::Log:
        case Op::Tanh:
        case Op::Atanh:
        case Op::Sinh:
        case Op::Asinh:
        case Op::Cosh:
        case Op::Sqrt:
        case Op::Sigmoid: return true;
        default: return false;
    }
}

std::size_t broadcast_extent(std::size_t a, std::size_t b, Op op) {
    if (a == b) return a;
    if (a == 1) return b;
    if (b == 1) return a;
    throw ShapeError(std::string("incompatible extents for ") + op_name(op) + ": " + std::to_string(a) + " vs " +
                     std::to_string(b));
}

double apply_unary(Op op, double x) {
    switch (op) {
        case Op::Neg: return -x;
        case Op::Exp: return std::exp(x);
        case Op::Log: return std::log(x);
        case Op::Tanh: return std::tanh(x);
        case Op::Atanh: return std::atanh(x);
        case Op::Sinh: return std::sinh(x);
        case Op::Asinh: return std::asinh(x);
        case Op::Cosh: return std::cosh(x);
        case Op::Sqrt: return std::sqrt(x);
        case Op::Sigmoid: return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        default: return x;
    }
}

// d(out)/d(in) given input x and output y.
double unary_derivative(Op op, double x, double y) {
    switch (op) {
        case Op::Neg: return -1.0;
        case Op::Exp: return y;
        case Op::Log: return 1.0 / x;
        case Op::Tanh: return 1.0 - y * y;
        case Op::Atanh: return 1.0 / (1.0 - x * x);
        case Op::Sinh: return std::cosh(x);
        case Op::Asinh: return 1.0 / std::sqrt(x * x + 1.0);
        case Op::Cosh: return std::sinh(x);
        case Op::Sqrt: return y > 0.0 ? 0.5 / y : 0.0;
        case Op::Sigmoid: return y * (1.0 - y);
        default: return 0.0;
    }
}

// Indexing helpers for row-major storage with broadcasting.
inline std::size_t bidx(Shape s, std::size_t r, std::size_t c) {
    return (s.rows == 1 ? 0 : r) * s.cols + (s.cols == 1 ? 0 : c);
}

inline std::size_t reduced_index(Axis axis, Shape in, std::size_t r, std::size_t c) {
    switch (axis) {
        case Axis::All: return 0;
        case Axis::Rows: return c;
        case Axis::Cols: return r;
    }
    return 0;
    (void)in;
}

Shape reduced_shape(Axis axis, Shape in) {
    switch (axis) {
        case Axis::All: return {1, 1};
        case Axis::Rows: return {1, in.cols};
        case Axis::Cols: return {in.rows, 1};
    }
    return {1, 1};
}

}  // namespace

void Tape::check_same_tape(Var v) const {
    if (!v.valid() || &v.tape() != this || v.id() >= nodes_.size()) {
        throw std::invalid_argument("variable does not belong to this tape");
    }
}

Var Tape::input(const std::string& name, Tensor value) {
    if (named_inputs_.count(name) != 0) {
        throw std::invalid_argument("duplicate input name '" + name + "'");
    }
    Node node;
    node.op = Op::Input;
    node.value = std::move(value);
    node.name = name;
    nodes_.push_back(std::move(node));
    named_inputs_[name] = nodes_.size() - 1;
    return {this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
    Node node;
    node.op = Op::Constant;
    node.value = value.with_requires_grad(false);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
}

Var Tape::record(Op op, std::vector<NodeId> inputs, Attr attr) {
    Node node;
    node.op = op;
    node.inputs = std::move(inputs);
    node.attr = attr;
    nodes_.push_back(std::move(node));
    const NodeId id = nodes_.size() - 1;
    try {
        evaluate(id);
    } catch (...) {
        nodes_.pop_back();
        throw;
    }
    return {this, id};
}

#define GYRONET_BINARY(fn, OP)                \
    Var Tape::fn(Var a, Var b) {              \
        check_same_tape(a);                   \
        check_same_tape(b);                   \
        return record(OP, {a.id(), b.id()});  \
    }
GYRONET_BINARY(add, Op::Add)
GYRONET_BINARY(sub, Op::Sub)
GYRONET_BINARY(mul, Op::Mul)
GYRONET_BINARY(div, Op::Div)
GYRONET_BINARY(dot, Op::Dot)
#undef GYRONET_BINARY

#define GYRONET_UNARY(fn, OP)        \
    Var Tape::fn(Var a) {            \
        check_same_tape(a);          \
        return record(OP, {a.id()}); \
    }
GYRONET_UNARY(neg, Op::Neg)
GYRONET_UNARY(exp, Op::Exp)
GYRONET_UNARY(log, Op::Log)
GYRONET_UNARY(tanh, Op::Tanh)
GYRONET_UNARY(atanh, Op::Atanh)
GYRONET_UNARY(sinh, Op::Sinh)
GYRONET_UNARY(asinh, Op::Asinh)
GYRONET_UNARY(cosh, Op::Cosh)
GYRONET_UNARY(sqrt, Op::Sqrt)
GYRONET_UNARY(sigmoid, Op::Sigmoid)
GYRONET_UNARY(softmax, Op::Softmax)
#undef GYRONET_UNARY

Var Tape::matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
    check_same_tape(a);
    check_same_tape(b);
    Attr attr;
    attr.transpose_a = transpose_a;
    attr.transpose_b = transpose_b;
    return record(Op::MatMul, {a.id(), b.id()}, attr);
}

Var Tape::sum(Var a, Axis axis) {
    check_same_tape(a);
    Attr attr;
    attr.axis = axis;
    return record(Op::Sum, {a.id()}, attr);
}

Var Tape::max_reduce(Var a, Axis axis) {
    check_same_tape(a);
    Attr attr;
    attr.axis = axis;
    return record(Op::MaxReduce, {a.id()}, attr);
}

Var Tape::norm(Var a, double floor) {
    check_same_tape(a);
    Attr attr;
    attr.scalar = floor;
    return record(Op::Norm, {a.id()}, attr);
}

Var Tape::concat(const std::vector<Var>& parts, Axis axis) {
    if (parts.empty() || axis == Axis::All) {
        throw ShapeError("concat needs at least one part and a row or column axis");
    }
    std::vector<NodeId> ids;
    ids.reserve(parts.size());
    for (Var p : parts) {
        check_same_tape(p);
        ids.push_back(p.id());
    }
    Attr attr;
    attr.axis = axis;
    return record(Op::Concat, std::move(ids), attr);
}

Var Tape::slice(Var a, Axis axis, std::size_t begin, std::size_t end) {
    check_same_tape(a);
    if (axis == Axis::All) {
        throw ShapeError("slice needs a row or column axis");
    }
    Attr attr;
    attr.axis = axis;
    attr.begin = begin;
    attr.end = end;
    return record(Op::Slice, {a.id()}, attr);
}

Var Tape::broadcast(Var a, Shape to) {
    check_same_tape(a);
    Attr attr;
    attr.shape = to;
    return record(Op::Broadcast, {a.id()}, attr);
}

Var Tape::clamp_norm(Var a, double max_norm) {
    check_same_tape(a);
    Attr attr;
    attr.scalar = max_norm;
    return record(Op::ClampNorm, {a.id()}, attr);
}

void Tape::mark_output(const std::string& name, Var v) {
    check_same_tape(v);
    named_outputs_[name] = v.id();
}

// ---------------------------------------------------------------------------
// Forward evaluation

void Tape::evaluate(NodeId id) {
    Node& node = nodes_[id];
    const Op op = node.op;
    if (op == Op::Input || op == Op::Constant) {
        return;
    }
    auto in = [&](std::size_t k) -> const Tensor& { return nodes_[node.inputs[k]].value; };

    Shape out_shape{};
    std::vector<double> out;
    node.saved_index.clear();

    if (is_elementwise_binary(op)) {
        const Tensor& a = in(0);
        const Tensor& b = in(1);
        out_shape = {broadcast_extent(a.rows(), b.rows(), op), broadcast_extent(a.cols(), b.cols(), op)};
        out.resize(out_shape.size());
        for (std::size_t r = 0; r < out_shape.rows; ++r) {
            for (std::size_t c = 0; c < out_shape.cols; ++c) {
                const double x = a.data_[bidx(a.shape(), r, c)];
                const double y = b.data_[bidx(b.shape(), r, c)];
                double v = 0.0;
                switch (op) {
                    case Op::Add: v = x + y; break;
                    case Op::Sub: v = x - y; break;
                    case Op::Mul: v = x * y; break;
                    default: v = x / y; break;
                }
                out[r * out_shape.cols + c] = v;
            }
        }
    } else if (is_unary(op)) {
        const Tensor& a = in(0);
        out_shape = a.shape();
        out.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            out[i] = apply_unary(op, a.data_[i]);
        }
    } else {
        switch (op) {
            case Op::MatMul: {
                const Tensor& a = in(0);
                const Tensor& b = in(1);
                const bool ta = node.attr.transpose_a;
                const bool tb = node.attr.transpose_b;
                const std::size_t m = ta ? a.cols() : a.rows();
                const std::size_t k = ta ? a.rows() : a.cols();
                const std::size_t kb = tb ? b.cols() : b.rows();
                const std::size_t n = tb ? b.rows() : b.cols();
                if (k != kb) {
                    throw ShapeError("matmul inner extents differ: " + to_string(a.shape()) + " x " +
                                     to_string(b.shape()));
                }
                out_shape = {m, n};
                out.assign(m * n, 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = ta ? a.data_[p * a.cols() + i] : a.data_[i * a.cols() + p];
                        if (av == 0.0) continue;
                        double* orow = out.data() + i * n;
                        if (tb) {
                            for (std::size_t j = 0; j < n; ++j) orow[j] += av * b.data_[j * b.cols() + p];
                        } else {
                            const double* brow = b.data_.data() + p * n;
                            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
                        }
                    }
                }
                break;
            }
            case Op::Sum: {
                const Tensor& a = in(0);
                out_shape = reduced_shape(node.attr.axis, a.shape());
                out.assign(out_shape.size(), 0.0);
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    for (std::size_t c = 0; c < a.cols(); ++c) {
                        out[reduced_index(node.attr.axis, a.shape(), r, c)] += a(r, c);
                    }
                }
                break;
            }
            case Op::MaxReduce: {
                const Tensor& a = in(0);
                if (a.size() == 0) throw ShapeError("max_reduce of an empty tensor");
                out_shape = reduced_shape(node.attr.axis, a.shape());
                out.assign(out_shape.size(), -std::numeric_limits<double>::infinity());
                node.saved_index.assign(out_shape.size(), 0);
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    for (std::size_t c = 0; c < a.cols(); ++c) {
                        const std::size_t o = reduced_index(node.attr.axis, a.shape(), r, c);
                        if (a(r, c) > out[o]) {
                            out[o] = a(r, c);
                            node.saved_index[o] = r * a.cols() + c;
                        }
                    }
                }
                break;
            }
            case Op::Softmax: {
                const Tensor& a = in(0);
                out_shape = a.shape();
                out.resize(a.size());
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    double mx = -std::numeric_limits<double>::infinity();
                    for (std::size_t c = 0; c < a.cols(); ++c) mx = std::max(mx, a(r, c));
                    double total = 0.0;
                    for (std::size_t c = 0; c < a.cols(); ++c) {
                        const double e = std::exp(a(r, c) - mx);
                        out[r * a.cols() + c] = e;
                        total += e;
                    }
                    for (std::size_t c = 0; c < a.cols(); ++c) out[r * a.cols() + c] /= total;
                }
                break;
            }
            case Op::Dot: {
                const Tensor& a = in(0);
                const Tensor& b = in(1);
                if (a.cols() != b.cols()) {
                    throw ShapeError("dot needs equal widths: " + to_string(a.shape()) + " vs " +
                                     to_string(b.shape()));
                }
                const std::size_t rows = broadcast_extent(a.rows(), b.rows(), op);
                out_shape = {rows, 1};
                out.assign(rows, 0.0);
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* ar = a.data_.data() + (a.rows() == 1 ? 0 : r) * a.cols();
                    const double* br = b.data_.data() + (b.rows() == 1 ? 0 : r) * b.cols();
                    double s = 0.0;
                    for (std::size_t c = 0; c < a.cols(); ++c) s += ar[c] * br[c];
                    out[r] = s;
                }
                break;
            }
            case Op::Norm: {
                const Tensor& a = in(0);
                out_shape = {a.rows(), 1};
                out.assign(a.rows(), 0.0);
                node.saved_index.assign(a.rows(), 0);
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < a.cols(); ++c) s += a(r, c) * a(r, c);
                    const double n = std::sqrt(s);
                    if (n > node.attr.scalar) {
                        out[r] = n;
                    } else {
                        out[r] = node.attr.scalar;
                        node.saved_index[r] = 1;
                    }
                }
                break;
            }
            case Op::Concat: {
                if (node.attr.axis == Axis::Rows) {
                    const std::size_t cols = in(0).cols();
                    std::size_t rows = 0;
                    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                        if (in(k).cols() != cols) throw ShapeError("row concat needs equal widths");
                        rows += in(k).rows();
                    }
                    out_shape = {rows, cols};
                    out.reserve(out_shape.size());
                    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                        out.insert(out.end(), in(k).data_.begin(), in(k).data_.end());
                    }
                } else {
                    const std::size_t rows = in(0).rows();
                    std::size_t cols = 0;
                    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                        if (in(k).rows() != rows) throw ShapeError("column concat needs equal heights");
                        cols += in(k).cols();
                    }
                    out_shape = {rows, cols};
                    out.resize(out_shape.size());
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                        const Tensor& p = in(k);
                        for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t c = 0; c < p.cols(); ++c) out[r * cols + offset + c] = p(r, c);
                        }
                        offset += p.cols();
                    }
                }
                break;
            }
            case Op::Slice: {
                const Tensor& a = in(0);
                const std::size_t b = node.attr.begin;
                const std::size_t e = node.attr.end;
                const std::size_t extent = node.attr.axis == Axis::Rows ? a.rows() : a.cols();
                if (b >= e || e > extent) {
                    throw ShapeError("slice [" + std::to_string(b) + "," + std::to_string(e) + ") out of range for " +
                                     to_string(a.shape()));
                }
                if (node.attr.axis == Axis::Rows) {
                    out_shape = {e - b, a.cols()};
                    out.assign(a.data_.begin() + static_cast<std::ptrdiff_t>(b * a.cols()),
                               a.data_.begin() + static_cast<std::ptrdiff_t>(e * a.cols()));
                } else {
                    out_shape = {a.rows(), e - b};
                    out.resize(out_shape.size());
                    for (std::size_t r = 0; r < a.rows(); ++r) {
                        for (std::size_t c = b; c < e; ++c) out[r * (e - b) + (c - b)] = a(r, c);
                    }
                }
                break;
            }
            case Op::Broadcast: {
                const Tensor& a = in(0);
                const Shape to = node.attr.shape;
                if ((a.rows() != to.rows && a.rows() != 1) || (a.cols() != to.cols && a.cols() != 1)) {
                    throw ShapeError("cannot broadcast " + to_string(a.shape()) + " to " + to_string(to));
                }
                out_shape = to;
                out.resize(to.size());
                for (std::size_t r = 0; r < to.rows; ++r) {
                    for (std::size_t c = 0; c < to.cols; ++c) out[r * to.cols + c] = a.data_[bidx(a.shape(), r, c)];
                }
                break;
            }
            case Op::ClampNorm: {
                const Tensor& a = in(0);
                out_shape = a.shape();
                out = a.data_;
                node.saved_index.assign(a.rows(), 0);
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < a.cols(); ++c) s += a(r, c) * a(r, c);
                    const double n = std::sqrt(s);
                    if (n > node.attr.scalar) {
                        const double k = node.attr.scalar / n;
                        for (std::size_t c = 0; c < a.cols(); ++c) out[r * a.cols() + c] *= k;
                        node.saved_index[r] = 1;
                    }
                }
                break;
            }
            default: throw std::logic_error("unhandled op in evaluate");
        }
    }

    for (double v : out) {
        if (!std::isfinite(v)) {
            throw NonFiniteError(id, op);
        }
    }
    node.value.shape_ = out_shape;
    node.value.data_ = std::move(out);
    node.value.requires_grad_ = false;
}

std::map<std::string, Tensor> Tape::forward(const std::map<std::string, Tensor>& inputs) {
    for (const auto& [name, tensor] : inputs) {
        auto it = named_inputs_.find(name);
        if (it == named_inputs_.end()) {
            throw std::invalid_argument("unknown input '" + name + "'");
        }
        Node& node = nodes_[it->second];
        if (!(tensor.shape() == node.value.shape())) {
            throw ShapeError("input '" + name + "' has shape " + to_string(tensor.shape()) + ", recorded " +
                             to_string(node.value.shape()));
        }
        const bool rg = node.value.requires_grad();
        node.value = tensor.with_requires_grad(rg);
    }
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        evaluate(id);
    }
    std::map<std::string, Tensor> outputs;
    for (const auto& [name, id] : named_outputs_) {
        outputs[name] = nodes_[id].value;
    }
    return outputs;
}

// ---------------------------------------------------------------------------
// Reverse accumulation

void Tape::accumulate_input_grads(const Node& node, const std::vector<double>& g,
                                  std::vector<std::vector<double>>& grads) const {
    auto in = [&](std::size_t k) -> const Tensor& { return nodes_[node.inputs[k]].value; };
    auto slot = [&](std::size_t k) -> std::vector<double>& {
        std::vector<double>& s = grads[node.inputs[k]];
        if (s.empty()) s.assign(in(k).size(), 0.0);
        return s;
    };
    const Op op = node.op;
    const Tensor& y = node.value;

    if (is_elementwise_binary(op)) {
        const Tensor& a = in(0);
        const Tensor& b = in(1);
        std::vector<double>& ga = slot(0);
        std::vector<double>& gb = slot(1);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            for (std::size_t c = 0; c < y.cols(); ++c) {
                const double go = g[r * y.cols() + c];
                const std::size_t ia = bidx(a.shape(), r, c);
                const std::size_t ib = bidx(b.shape(), r, c);
                switch (op) {
                    case Op::Add:
                        ga[ia] += go;
                        gb[ib] += go;
                        break;
                    case Op::Sub:
                        ga[ia] += go;
                        gb[ib] -= go;
                        break;
                    case Op::Mul:
                        ga[ia] += go * b.data_[ib];
                        gb[ib] += go * a.data_[ia];
                        break;
                    default: {
                        const double bv = b.data_[ib];
                        ga[ia] += go / bv;
                        gb[ib] -= go * a.data_[ia] / (bv * bv);
                        break;
                    }
                }
            }
        }
        return;
    }
    if (is_unary(op)) {
        const Tensor& a = in(0);
        std::vector<double>& ga = slot(0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            ga[i] += g[i] * unary_derivative(op, a.data_[i], y.data_[i]);
        }
        return;
    }
    switch (op) {
        case Op::MatMul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            const bool ta = node.attr.transpose_a;
            const bool tb = node.attr.transpose_b;
            const std::size_t m = y.rows();
            const std::size_t n = y.cols();
            const std::size_t k = ta ? a.rows() : a.cols();
            auto a_at = [&](std::size_t i, std::size_t p) { return ta ? a.data_[p * a.cols() + i] : a.data_[i * a.cols() + p]; };
            auto b_at = [&](std::size_t p, std::size_t j) { return tb ? b.data_[j * b.cols() + p] : b.data_[p * b.cols() + j]; };
            std::vector<double>& ga = slot(0);
            std::vector<double>& gb = slot(1);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double go = g[i * n + j];
                    if (go == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) {
                        const std::size_t ia = ta ? p * a.cols() + i : i * a.cols() + p;
                        const std::size_t ib = tb ? j * b.cols() + p : p * b.cols() + j;
                        ga[ia] += go * b_at(p, j);
                        gb[ib] += go * a_at(i, p);
                    }
                }
            }
            return;
        }
        case Op::Sum: {
            const Tensor& a = in(0);
            std::vector<double>& ga = slot(0);
            for (std::size_t r = 0; r < a.rows(); ++r) {
                for (std::size_t c = 0; c < a.cols(); ++c) {
                    ga[r * a.cols() + c] += g[reduced_index(node.attr.axis, a.shape(), r, c)];
                }
            }
            return;
        }
        case Op::MaxReduce: {
            std::vector<double>& ga = slot(0);
            for (std::size_t o = 0; o < node.saved_index.size(); ++o) ga[node.saved_index[o]] += g[o];
            return;
        }
        case Op::Softmax: {
            std::vector<double>& ga = slot(0);
            for (std::size_t r = 0; r < y.rows(); ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < y.cols(); ++c) s += g[r * y.cols() + c] * y(r, c);
                for (std::size_t c = 0; c < y.cols(); ++c) ga[r * y.cols() + c] += y(r, c) * (g[r * y.cols() + c] - s);
            }
            return;
        }
        case Op::Dot: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            std::vector<double>& ga = slot(0);
            std::vector<double>& gb = slot(1);
            for (std::size_t r = 0; r < y.rows(); ++r) {
                const std::size_t ra = a.rows() == 1 ? 0 : r;
                const std::size_t rb = b.rows() == 1 ? 0 : r;
                for (std::size_t c = 0; c < a.cols(); ++c) {
                    ga[ra * a.cols() + c] += g[r] * b(rb, c);
                    gb[rb * b.cols() + c] += g[r] * a(ra, c);
                }
            }
            return;
        }
        case Op::Norm: {
            const Tensor& a = in(0);
            std::vector<double>& ga = slot(0);
            for (std::size_t r = 0; r < a.rows(); ++r) {
                if (node.saved_index[r] != 0) continue;
                const double n = y.data_[r];
                for (std::size_t c = 0; c < a.cols(); ++c) ga[r * a.cols() + c] += g[r] * a(r, c) / n;
            }
            return;
        }
        case Op::Concat: {
            if (node.attr.axis == Axis::Rows) {
                std::size_t offset = 0;
                for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                    std::vector<double>& gk = slot(k);
                    for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += g[offset + i];
                    offset += gk.size();
                }
            } else {
                std::size_t offset = 0;
                for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                    const Tensor& p = in(k);
                    std::vector<double>& gk = slot(k);
                    for (std::size_t r = 0; r < p.rows(); ++r) {
                        for (std::size_t c = 0; c < p.cols(); ++c) gk[r * p.cols() + c] += g[r * y.cols() + offset + c];
                    }
                    offset += p.cols();
                }
            }
            return;
        }
        case Op::Slice: {
            const Tensor& a = in(0);
            std::vector<double>& ga = slot(0);
            const std::size_t b = node.attr.begin;
            if (node.attr.axis == Axis::Rows) {
                for (std::size_t i = 0; i < g.size(); ++i) ga[b * a.cols() + i] += g[i];
            } else {
                const std::size_t w = y.cols();
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    for (std::size_t c = 0; c < w; ++c) ga[r * a.cols() + b + c] += g[r * w + c];
                }
            }
            return;
        }
        case Op::Broadcast: {
            const Tensor& a = in(0);
            std::vector<double>& ga = slot(0);
            for (std::size_t r = 0; r < y.rows(); ++r) {
                for (std::size_t c = 0; c < y.cols(); ++c) ga[bidx(a.shape(), r, c)] += g[r * y.cols() + c];
            }
            return;
        }
        case Op::ClampNorm: {
            const Tensor& a = in(0);
            std::vector<double>& ga = slot(0);
            for (std::size_t r = 0; r < a.rows(); ++r) {
                if (node.saved_index[r] != 0) continue;
                for (std::size_t c = 0; c < a.cols(); ++c) ga[r * a.cols() + c] += g[r * a.cols() + c];
            }
            return;
        }
        default: throw std::logic_error("unhandled op in backward");
    }
}

Gradients Tape::backward(Var output) const {
    check_same_tape(output);
    if (!(output.shape() == Shape{1, 1})) {
        throw ShapeError("backward needs a scalar output, got " + to_string(output.shape()));
    }
    const NodeId out = output.id();

    std::vector<char> needs(out + 1, 0);
    for (NodeId id = 0; id <= out; ++id) {
        const Node& node = nodes_[id];
        if (node.op == Op::Input) {
            needs[id] = node.value.requires_grad() ? 1 : 0;
            continue;
        }
        for (NodeId p : node.inputs) {
            if (needs[p]) {
                needs[id] = 1;
                break;
            }
        }
    }

    std::vector<std::vector<double>> grads(out + 1);
    grads[out] = {1.0};
    for (NodeId id = out + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (!needs[id] || grads[id].empty() || node.op == Op::Input || node.op == Op::Constant) {
            continue;
        }
        accumulate_input_grads(node, grads[id], grads);
        if (id != out) {
            std::vector<double>().swap(grads[id]);
        }
    }

    Gradients result;
    for (NodeId id = 0; id <= out; ++id) {
        const Node& node = nodes_[id];
        if (node.op != Op::Input || !node.value.requires_grad()) {
            continue;
        }
        Tensor t;
        t.shape_ = node.value.shape();
        t.data_ = grads[id].empty() ? std::vector<double>(t.shape_.size(), 0.0) : grads[id];
        result.by_id_[id] = t;
        if (node.name) {
            result.by_name_[*node.name] = t;
        }
    }
    for (const auto& [name, id] : named_inputs_) {
        if (id > out && nodes_[id].value.requires_grad()) {
            result.by_name_[name] = Tensor::zeros(nodes_[id].value.shape());
        }
    }
    return result;
}

// ---------------------------------------------------------------------------

Var operator+(Var a, Var b) { return a.tape().add(a, b); }
Var operator-(Var a, Var b) { return a.tape().sub(a, b); }
Var operator*(Var a, Var b) { return a.tape().mul(a, b); }
Var operator/(Var a, Var b) { return a.tape().div(a, b); }
Var operator-(Var a) { return a.tape().neg(a); }
Var operator+(Var a, double b) { return a.tape().add(a, a.tape().scalar(b)); }
Var operator+(double a, Var b) { return b.tape().add(b.tape().scalar(a), b); }
Var operator-(Var a, double b) { return a.tape().sub(a, a.tape().scalar(b)); }
Var operator-(double a, Var b) { return b.tape().sub(b.tape().scalar(a), b); }
Var operator*(Var a, double b) { return a.tape().mul(a, a.tape().scalar(b)); }
Var operator*(double a, Var b) { return b.tape().mul(b.tape().scalar(a), b); }
Var operator/(Var a, double b) { return a.tape().div(a, a.tape().scalar(b)); }
Var operator/(double a, Var b) { return b.tape().div(b.tape().scalar(a), b); }

}  // namespace gyronet::diff
