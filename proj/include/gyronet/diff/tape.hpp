#pragma once

// Reverse-mode differentiation over a fixed set of primitives.
//
// Graphs are recorded eagerly: every primitive evaluates when it is added, so
// values are available immediately. The recorded node list can be replayed
// with new bindings for the named inputs (Tape::forward), and any scalar node
// can be differentiated (Tape::backward).

#include "gyronet/diff/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gyronet::diff {

using NodeId = std::size_t;

enum class Op : std::uint8_t {
    Input,
    Constant,
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    Neg,
    Sum,
    MaxReduce,
    Exp,
    Log,
    Tanh,
    Atanh,
    Sinh,
    Asinh,
    Cosh,
    Sqrt,
    Sigmoid,
    Softmax,
    Dot,
    Norm,
    Concat,
    Slice,
    Broadcast,
    ClampNorm,
};

const char* op_name(Op op);

/// Reduction / concatenation direction.
enum class Axis : std::uint8_t {
    All,   ///< reduce everything to 1×1
    Rows,  ///< reduce over rows → 1×cols; concat stacks rows
    Cols,  ///< reduce over columns → rows×1; concat appends columns
};

class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(NodeId node, Op op);
    NodeId node() const noexcept { return node_; }

private:
    NodeId node_;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    NodeId id() const noexcept { return id_; }
    const Tensor& value() const;
    Shape shape() const;
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    NodeId id_ = 0;
};

/// Gradients of one scalar output with respect to every requires_grad input.
class Gradients {
public:
    const Tensor& operator[](Var v) const&;
    const Tensor& operator[](const std::string& input_name) const&;
    // Copies out of a temporary so `tape.backward(l)["x"]` never dangles.
    Tensor operator[](Var v) && { return static_cast<const Gradients&>(*this)[v]; }
    Tensor operator[](const std::string& input_name) && { return static_cast<const Gradients&>(*this)[input_name]; }
    bool contains(const std::string& input_name) const;
    const std::map<std::string, Tensor>& by_name() const noexcept { return by_name_; }

private:
    friend class Tape;
    std::map<NodeId, Tensor> by_id_;
    std::map<std::string, Tensor> by_name_;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Named leaf; receives a gradient when value.requires_grad().
    Var input(const std::string& name, Tensor value);
    Var constant(Tensor value);
    Var scalar(double value) { return constant(Tensor::scalar(value)); }

    // Elementwise binary ops broadcast size-1 rows/columns.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
    Var neg(Var a);
    Var sum(Var a, Axis axis = Axis::All);
    Var max_reduce(Var a, Axis axis = Axis::All);
    Var exp(Var a);
    Var log(Var a);
    Var tanh(Var a);
    Var atanh(Var a);
    Var sinh(Var a);
    Var asinh(Var a);
    Var cosh(Var a);
    Var sqrt(Var a);
    Var sigmoid(Var a);
    /// Row-wise softmax.
    Var softmax(Var a);
    /// Row-wise inner product → rows×1; a 1-row operand broadcasts.
    Var dot(Var a, Var b);
    /// Row-wise Euclidean norm → rows×1, floored at `floor` (zero gradient when floored).
    Var norm(Var a, double floor = 0.0);
    Var concat(const std::vector<Var>& parts, Axis axis);
    /// Rows [begin, end) for Axis::Rows, columns [begin, end) for Axis::Cols.
    Var slice(Var a, Axis axis, std::size_t begin, std::size_t end);
    Var broadcast(Var a, Shape to);
    /// Row-wise radial rescale onto `max_norm` when a row's norm exceeds it.
    /// The gradient is the identity for rows left untouched and zero for rescaled rows.
    Var clamp_norm(Var a, double max_norm);

    /// Names an output node for forward().
    void mark_output(const std::string& name, Var v);

    /// Rebinds the given named inputs (others keep their values) and
    /// re-evaluates every node in recording order.
    std::map<std::string, Tensor> forward(const std::map<std::string, Tensor>& inputs);

    /// Reverse accumulation from a 1×1 node.
    Gradients backward(Var output) const;

    const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
    std::size_t size() const noexcept { return nodes_.size(); }
    Op op(NodeId id) const { return nodes_.at(id).op; }

private:
    struct Attr {
        Axis axis = Axis::All;
        bool transpose_a = false;
        bool transpose_b = false;
        std::size_t begin = 0;
        std::size_t end = 0;
        double scalar = 0.0;
        Shape shape{};
    };

    struct Node {
        Op op = Op::Constant;
        std::vector<NodeId> inputs;
        Attr attr;
        Tensor value;
        std::vector<std::size_t> saved_index;  // argmax positions / clamp flags
        std::optional<std::string> name;
    };

    Var record(Op op, std::vector<NodeId> inputs, Attr attr);
    Var record(Op op, std::vector<NodeId> inputs) { return record(op, std::move(inputs), Attr()); }
    void evaluate(NodeId id);
    void accumulate_input_grads(const Node& node, const std::vector<double>& grad_out,
                                std::vector<std::vector<double>>& grads) const;
    void check_same_tape(Var v) const;

    std::vector<Node> nodes_;
    std::map<std::string, NodeId> named_inputs_;
    std::map<std::string, NodeId> named_outputs_;
};

// Operator sugar; scalar operands become 1×1 constants on the same tape.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

}  // namespace gyronet::diff
