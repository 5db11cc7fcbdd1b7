#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scorecraft/errors.hpp"
#include "scorecraft/tensor.hpp"

namespace scorecraft {

// Operation kinds of the reverse-mode engine. Elementwise ops require equal
// shapes; Sum/Mean reduce to 1x1; BroadcastAddRow adds a 1xN row vector to
// every row of an MxN matrix.
enum class Op {
    Constant,
    Parameter,
    MatMul,
    Add,
    Sub,
    Mul,
    Div,
    Exp,
    Log,
    Neg,
    Elu,
    EluPrime,
    Relu,
    Abs,
    Square,
    Sum,
    Mean,
    BroadcastAddRow,
    Transpose,
};

// Handle into a Graph. Only valid for the graph that produced it.
struct NodeRef {
    std::size_t index = 0;
};

namespace detail {

// alpha = 1 throughout; the value and both one-sided derivatives agree at 0,
// and the right-limit convention fixes elu_prime(0) = 1.
inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
inline double elu_prime(double z) { return z > 0.0 ? 1.0 : std::exp(z); }
// Derivative of elu_prime, taking the left branch at 0.
inline double elu_second(double z) { return z > 0.0 ? 0.0 : std::exp(z); }

}  // namespace detail

// Reverse-mode autodiff over dense matrices.
//
// Nodes are appended in evaluation order, so node indices are already a
// topological order and backward() is a single reverse sweep with additive
// gradient accumulation. For a fixed construction sequence the result is
// bit-identical across runs.
class Graph {
public:
    NodeRef constant(Tensor value) { return leaf(Op::Constant, std::move(value)); }

    NodeRef parameter(Tensor value) { return leaf(Op::Parameter, std::move(value)); }

    // 1x1 constant.
    NodeRef scalar(double value) { return constant(Tensor::scalar(value)); }

    NodeRef apply(Op op, const std::vector<NodeRef>& args) {
        switch (op) {
            case Op::Constant:
            case Op::Parameter:
                throw ContractError("leaf ops take a tensor, not node arguments");
            case Op::MatMul:
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
            case Op::BroadcastAddRow:
                expect_arity(args, 2);
                break;
            default:
                expect_arity(args, 1);
                break;
        }
        for (NodeRef a : args) {
            if (a.index >= nodes_.size()) {
                throw ContractError("node argument does not belong to this graph");
            }
        }

        Node node;
        node.op = op;
        for (NodeRef a : args) node.inputs.push_back(a.index);
        node.value = forward_value(op, args);
        for (NodeRef a : args) node.needs_grad = node.needs_grad || nodes_[a.index].needs_grad;
        nodes_.push_back(std::move(node));
        return NodeRef{nodes_.size() - 1};
    }

    NodeRef matmul(NodeRef a, NodeRef b) { return apply(Op::MatMul, {a, b}); }
    NodeRef add(NodeRef a, NodeRef b) { return apply(Op::Add, {a, b}); }
    NodeRef sub(NodeRef a, NodeRef b) { return apply(Op::Sub, {a, b}); }
    NodeRef mul(NodeRef a, NodeRef b) { return apply(Op::Mul, {a, b}); }
    NodeRef div(NodeRef a, NodeRef b) { return apply(Op::Div, {a, b}); }
    NodeRef exp(NodeRef a) { return apply(Op::Exp, {a}); }
    NodeRef log(NodeRef a) { return apply(Op::Log, {a}); }
    NodeRef neg(NodeRef a) { return apply(Op::Neg, {a}); }
    NodeRef elu(NodeRef a) { return apply(Op::Elu, {a}); }
    NodeRef elu_prime(NodeRef a) { return apply(Op::EluPrime, {a}); }
    NodeRef relu(NodeRef a) { return apply(Op::Relu, {a}); }
    NodeRef abs(NodeRef a) { return apply(Op::Abs, {a}); }
    NodeRef square(NodeRef a) { return apply(Op::Square, {a}); }
    NodeRef sum(NodeRef a) { return apply(Op::Sum, {a}); }
    NodeRef mean(NodeRef a) { return apply(Op::Mean, {a}); }
    NodeRef broadcast_add_row(NodeRef a, NodeRef row) { return apply(Op::BroadcastAddRow, {a, row}); }
    NodeRef transpose(NodeRef a) { return apply(Op::Transpose, {a}); }

    const Tensor& value(NodeRef ref) const { return nodes_.at(ref.index).value; }

    // Zero before accumulation; valid after backward().
    const Tensor& grad(NodeRef ref) const { return nodes_.at(ref.index).grad; }

    Op op(NodeRef ref) const { return nodes_.at(ref.index).op; }

    std::size_t size() const { return nodes_.size(); }

    // Gradient of a scalar root w.r.t. every parameter node, by reverse
    // topological sweep. May be called repeatedly; gradients are re-zeroed.
    void backward(NodeRef root) {
        if (root.index >= nodes_.size()) {
            throw ContractError("backward root does not belong to this graph");
        }
        if (!nodes_[root.index].value.is_scalar()) {
            throw ContractError("backward root must be a 1x1 scalar");
        }
        for (auto& node : nodes_) {
            node.grad = Tensor(node.value.rows(), node.value.cols());
        }
        nodes_[root.index].grad(0, 0) = 1.0;
        for (std::size_t i = root.index + 1; i-- > 0;) {
            const Node& node = nodes_[i];
            if (!node.needs_grad || node.inputs.empty()) continue;
            propagate(node);
        }
    }

private:
    struct Node {
        Op op = Op::Constant;
        std::vector<std::size_t> inputs;
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
    };

    NodeRef leaf(Op op, Tensor value) {
        if (!value.all_finite()) {
            throw DomainError("leaf tensor has non-finite entries");
        }
        Node node;
        node.op = op;
        node.value = std::move(value);
        node.needs_grad = (op == Op::Parameter);
        nodes_.push_back(std::move(node));
        return NodeRef{nodes_.size() - 1};
    }

    static void expect_arity(const std::vector<NodeRef>& args, std::size_t n) {
        if (args.size() != n) {
            throw ContractError("wrong number of node arguments for op");
        }
    }

    const Tensor& in(const std::vector<NodeRef>& args, std::size_t i) const {
        return nodes_[args[i].index].value;
    }

    Tensor forward_value(Op op, const std::vector<NodeRef>& args) const {
        switch (op) {
            case Op::MatMul: {
                const Tensor& a = in(args, 0);
                const Tensor& b = in(args, 1);
                if (a.cols() != b.rows()) {
                    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
                }
                return matmul_values(a, b);
            }
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div: {
                const Tensor& a = in(args, 0);
                const Tensor& b = in(args, 1);
                if (!a.same_shape(b)) {
                    throw ShapeError("elementwise op: " + shape_str(a) + " vs " + shape_str(b));
                }
                Tensor out(a.rows(), a.cols());
                for (std::size_t i = 0; i < a.size(); ++i) {
                    switch (op) {
                        case Op::Add: out[i] = a[i] + b[i]; break;
                        case Op::Sub: out[i] = a[i] - b[i]; break;
                        case Op::Mul: out[i] = a[i] * b[i]; break;
                        default:
                            if (b[i] == 0.0) throw DomainError("division by zero");
                            out[i] = a[i] / b[i];
                            break;
                    }
                }
                return out;
            }
            case Op::BroadcastAddRow: {
                const Tensor& a = in(args, 0);
                const Tensor& row = in(args, 1);
                if (row.rows() != 1 || row.cols() != a.cols()) {
                    throw ShapeError("broadcast_add_row: " + shape_str(a) + " + " + shape_str(row));
                }
                Tensor out(a.rows(), a.cols());
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    for (std::size_t c = 0; c < a.cols(); ++c) {
                        out(r, c) = a(r, c) + row(0, c);
                    }
                }
                return out;
            }
            case Op::Sum:
            case Op::Mean: {
                const Tensor& a = in(args, 0);
                double acc = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
                if (op == Op::Mean) acc /= static_cast<double>(a.size());
                return Tensor::scalar(acc);
            }
            case Op::Transpose: {
                const Tensor& a = in(args, 0);
                Tensor out(a.cols(), a.rows());
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    for (std::size_t c = 0; c < a.cols(); ++c) {
                        out(c, r) = a(r, c);
                    }
                }
                return out;
            }
            default: {
                const Tensor& a = in(args, 0);
                Tensor out(a.rows(), a.cols());
                for (std::size_t i = 0; i < a.size(); ++i) {
                    out[i] = unary_value(op, a[i]);
                }
                return out;
            }
        }
    }

    static double unary_value(Op op, double z) {
        switch (op) {
            case Op::Exp: return std::exp(z);
            case Op::Log:
                if (z <= 0.0) throw DomainError("log of non-positive value");
                return std::log(z);
            case Op::Neg: return -z;
            case Op::Elu: return detail::elu(z);
            case Op::EluPrime: return detail::elu_prime(z);
            case Op::Relu: return z > 0.0 ? z : 0.0;
            case Op::Abs: return std::abs(z);
            case Op::Square: return z * z;
            default: throw ContractError("not a unary op");
        }
    }

    static std::string shape_str(const Tensor& t) {
        return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
    }

    static Tensor matmul_values(const Tensor& a, const Tensor& b) {
        Tensor out(a.rows(), b.cols());
        for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t k = 0; k < a.cols(); ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols(); ++j) {
                    out(i, j) += aik * b(k, j);
                }
            }
        }
        return out;
    }

    Tensor& grad_of(std::size_t idx) { return nodes_[idx].grad; }

    bool wants_grad(std::size_t idx) const { return nodes_[idx].needs_grad; }

    void propagate(const Node& node) {
        const Tensor& gy = node.grad;
        switch (node.op) {
            case Op::Add: {
                accumulate_if(node.inputs[0], gy, 1.0);
                accumulate_if(node.inputs[1], gy, 1.0);
                break;
            }
            case Op::Sub: {
                accumulate_if(node.inputs[0], gy, 1.0);
                accumulate_if(node.inputs[1], gy, -1.0);
                break;
            }
            case Op::Mul: {
                const Tensor& a = nodes_[node.inputs[0]].value;
                const Tensor& b = nodes_[node.inputs[1]].value;
                if (wants_grad(node.inputs[0])) {
                    Tensor& ga = grad_of(node.inputs[0]);
                    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * b[i];
                }
                if (wants_grad(node.inputs[1])) {
                    Tensor& gb = grad_of(node.inputs[1]);
                    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * a[i];
                }
                break;
            }
            case Op::Div: {
                const Tensor& a = nodes_[node.inputs[0]].value;
                const Tensor& b = nodes_[node.inputs[1]].value;
                if (wants_grad(node.inputs[0])) {
                    Tensor& ga = grad_of(node.inputs[0]);
                    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] / b[i];
                }
                if (wants_grad(node.inputs[1])) {
                    Tensor& gb = grad_of(node.inputs[1]);
                    for (std::size_t i = 0; i < gy.size(); ++i) {
                        gb[i] -= gy[i] * a[i] / (b[i] * b[i]);
                    }
                }
                break;
            }
            case Op::MatMul: {
                const Tensor& a = nodes_[node.inputs[0]].value;
                const Tensor& b = nodes_[node.inputs[1]].value;
                if (wants_grad(node.inputs[0])) {
                    // ga += gy . b^T
                    Tensor& ga = grad_of(node.inputs[0]);
                    for (std::size_t i = 0; i < a.rows(); ++i) {
                        for (std::size_t j = 0; j < b.cols(); ++j) {
                            const double g = gy(i, j);
                            if (g == 0.0) continue;
                            for (std::size_t k = 0; k < a.cols(); ++k) {
                                ga(i, k) += g * b(k, j);
                            }
                        }
                    }
                }
                if (wants_grad(node.inputs[1])) {
                    // gb += a^T . gy
                    Tensor& gb = grad_of(node.inputs[1]);
                    for (std::size_t i = 0; i < a.rows(); ++i) {
                        for (std::size_t k = 0; k < a.cols(); ++k) {
                            const double av = a(i, k);
                            if (av == 0.0) continue;
                            for (std::size_t j = 0; j < b.cols(); ++j) {
                                gb(k, j) += av * gy(i, j);
                            }
                        }
                    }
                }
                break;
            }
            case Op::BroadcastAddRow: {
                accumulate_if(node.inputs[0], gy, 1.0);
                if (wants_grad(node.inputs[1])) {
                    Tensor& grow = grad_of(node.inputs[1]);
                    for (std::size_t r = 0; r < gy.rows(); ++r) {
                        for (std::size_t c = 0; c < gy.cols(); ++c) {
                            grow(0, c) += gy(r, c);
                        }
                    }
                }
                break;
            }
            case Op::Sum:
            case Op::Mean: {
                if (!wants_grad(node.inputs[0])) break;
                Tensor& ga = grad_of(node.inputs[0]);
                double g = gy(0, 0);
                if (node.op == Op::Mean) g /= static_cast<double>(ga.size());
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
                break;
            }
            case Op::Transpose: {
                if (!wants_grad(node.inputs[0])) break;
                Tensor& ga = grad_of(node.inputs[0]);
                for (std::size_t r = 0; r < gy.rows(); ++r) {
                    for (std::size_t c = 0; c < gy.cols(); ++c) {
                        ga(c, r) += gy(r, c);
                    }
                }
                break;
            }
            default: {
                if (!wants_grad(node.inputs[0])) break;
                const Tensor& a = nodes_[node.inputs[0]].value;
                Tensor& ga = grad_of(node.inputs[0]);
                for (std::size_t i = 0; i < gy.size(); ++i) {
                    ga[i] += gy[i] * unary_derivative(node.op, a[i]);
                }
                break;
            }
        }
    }

    static double unary_derivative(Op op, double z) {
        switch (op) {
            case Op::Exp: return std::exp(z);
            case Op::Log: return 1.0 / z;
            case Op::Neg: return -1.0;
            case Op::Elu: return detail::elu_prime(z);
            case Op::EluPrime: return detail::elu_second(z);
            case Op::Relu: return z > 0.0 ? 1.0 : 0.0;
            case Op::Abs: return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
            case Op::Square: return 2.0 * z;
            default: throw ContractError("not a unary op");
        }
    }

    void accumulate_if(std::size_t idx, const Tensor& gy, double sign) {
        if (!wants_grad(idx)) return;
        Tensor& g = grad_of(idx);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += sign * gy[i];
    }

    std::vector<Node> nodes_;
};

}  // namespace scorecraft
