#pragma once

// Minimal reverse-mode differentiation over dense vectors, plus the training
// utilities built on it (global-norm clipping, Adam with L2 decay, inverted
// dropout masks). Values are 64-bit; Eigen supplies the dense kernels.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointparse/rng.hpp"

namespace jointparse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct NeuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One learned tensor: the value plus its gradient and Adam moment
// accumulators, all of identical shape. Vectors are stored as n x 1.
struct Parameter {
    std::string name;
    Mat value;
    Mat grad;
    Mat adam_m;
    Mat adam_v;
    long step_count = 0;
    bool trainable = true;   // frozen tables skip gradient updates entirely
    bool l2_exempt = false;  // embeddings can be excluded from weight decay

    Parameter(std::string n, int rows, int cols)
        : name(std::move(n)),
          value(Mat::Zero(rows, cols)),
          grad(Mat::Zero(rows, cols)),
          adam_m(Mat::Zero(rows, cols)),
          adam_v(Mat::Zero(rows, cols)) {
        if (rows <= 0 || cols <= 0)
            throw NeuralError("parameter " + name + " has empty shape");
    }

    int rows() const { return static_cast<int>(value.rows()); }
    int cols() const { return static_cast<int>(value.cols()); }
    long size() const { return value.size(); }
    void zero_grad() { grad.setZero(); }

    void init_glorot(Rng& rng) {
        const double bound = std::sqrt(6.0 / (value.rows() + value.cols()));
        for (long i = 0; i < value.size(); ++i)
            value.data()[i] = rng.uniform(-bound, bound);
    }
};

// Owns every Parameter of one model; iteration order is insertion order, and
// all whole-model operations (clipping, Adam, serialization, gradient
// checking) walk it in that order so runs are reproducible.
class ParameterStore {
public:
    Parameter& add(const std::string& name, int rows, int cols) {
        for (const auto& p : params_)
            if (p->name == name) throw NeuralError("duplicate parameter " + name);
        params_.push_back(std::make_unique<Parameter>(name, rows, cols));
        return *params_.back();
    }

    std::size_t size() const { return params_.size(); }
    Parameter& operator[](std::size_t i) { return *params_[i]; }
    const Parameter& operator[](std::size_t i) const { return *params_[i]; }

    Parameter* find(const std::string& name) {
        for (auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    void zero_grads() {
        for (auto& p : params_) p->zero_grad();
    }

    void zero_values() {
        for (auto& p : params_) p->value.setZero();
    }

    long total_size() const {
        long n = 0;
        for (const auto& p : params_) n += p->size();
        return n;
    }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

// If the global L2 norm of all trainable gradients exceeds max_norm, scales
// every gradient by max_norm / norm. Returns the factor applied.
inline double clip_global_norm(ParameterStore& params, double max_norm) {
    if (max_norm <= 0) throw NeuralError("max_norm must be positive");
    double sq = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        sq += params[i].grad.squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return 1.0;
    const double factor = max_norm / norm;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        params[i].grad *= factor;
    }
    return factor;
}

// One Adam update with bias correction. The L2 term enters as lambda * theta
// added to each gradient before the moment updates.
inline void adam_step(ParameterStore& params, double learning_rate, double beta1,
                      double beta2, double epsilon, double l2_lambda) {
    if (learning_rate <= 0) throw NeuralError("learning rate must be positive");
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params[i];
        if (!p.trainable) continue;
        const double lambda = p.l2_exempt ? 0.0 : l2_lambda;
        Mat g = p.grad + lambda * p.value;
        p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * g;
        p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * g.cwiseProduct(g);
        const long t = ++p.step_count;
        const double mc = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double vc = 1.0 - std::pow(beta2, static_cast<double>(t));
        p.value.array() -= learning_rate * (p.adam_m.array() / mc) /
                           ((p.adam_v.array() / vc).sqrt() + epsilon);
    }
}

// Inverted-dropout mask: entries are 0 with probability rate, else
// 1 / (1 - rate). Callers apply masks in training mode only.
inline Vec dropout_mask(int length, double rate, Rng& rng) {
    if (rate < 0 || rate >= 1) throw NeuralError("dropout rate must be in [0, 1)");
    Vec mask(length);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (int i = 0; i < length; ++i)
        mask[i] = rng.bernoulli(rate) ? 0.0 : keep_scale;
    return mask;
}

// Numerically stable softmax (max subtraction).
inline Vec softmax(const Vec& logits) {
    Vec p = (logits.array() - logits.maxCoeff()).exp();
    return p / p.sum();
}

// ---------------------------------------------------------------------------
// Tape

// Append-only record of the forward computation in topological order. Each
// node owns its output vector and gradient; backward() sweeps in reverse,
// accumulating into Parameter::grad at the leaves.
class Tape {
public:
    using NodeId = int;

    enum class Op {
        Input,        // constant vector, no gradient
        ParamVec,     // whole n x 1 parameter
        Lookup,       // one row of a table parameter
        Affine,       // W x + b
        Concat,
        Sigmoid,
        Tanh,
        Relu,
        Add,          // elementwise
        Mul,          // elementwise
        MulConst,     // elementwise by a fixed vector (dropout masks)
        SoftmaxXent,  // scalar loss; caches the probability vector
        Sum,          // sum of scalars
    };

    NodeId input(Vec v) {
        Node n(Op::Input);
        n.value = std::move(v);
        return push(std::move(n));
    }

    NodeId param_vector(Parameter& p) {
        if (p.cols() != 1) throw NeuralError(p.name + " is not a vector");
        Node n(Op::ParamVec);
        n.param = &p;
        n.value = p.value.col(0);
        return push(std::move(n));
    }

    NodeId lookup(Parameter& table, int row) {
        if (row < 0 || row >= table.rows())
            throw NeuralError("lookup row " + std::to_string(row) + " out of range for " +
                              table.name);
        Node n(Op::Lookup);
        n.param = &table;
        n.row = row;
        n.value = table.value.row(row).transpose();
        return push(std::move(n));
    }

    NodeId affine(Parameter& w, Parameter& b, NodeId x) {
        const Vec& xv = value(x);
        if (w.cols() != xv.size() || b.rows() != w.rows() || b.cols() != 1)
            throw NeuralError("affine shape mismatch: " + w.name + " is " +
                              std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                              ", input has length " + std::to_string(xv.size()));
        Node n(Op::Affine);
        n.param = &w;
        n.param_b = &b;
        n.a = x;
        n.value = w.value * xv + b.value.col(0);
        return push(std::move(n));
    }

    NodeId concat(const std::vector<NodeId>& xs) {
        if (xs.empty()) throw NeuralError("concat of nothing");
        long total = 0;
        for (NodeId x : xs) total += value(x).size();
        Node n(Op::Concat);
        n.inputs = xs;
        n.value.resize(total);
        long at = 0;
        for (NodeId x : xs) {
            const Vec& v = value(x);
            n.value.segment(at, v.size()) = v;
            at += v.size();
        }
        return push(std::move(n));
    }

    NodeId sigmoid(NodeId x) {
        Node n(Op::Sigmoid);
        n.a = x;
        n.value = 1.0 / (1.0 + (-value(x).array()).exp());
        return push(std::move(n));
    }

    NodeId tanh(NodeId x) {
        Node n(Op::Tanh);
        n.a = x;
        n.value = value(x).array().tanh();
        return push(std::move(n));
    }

    NodeId relu(NodeId x) {
        Node n(Op::Relu);
        n.a = x;
        n.value = value(x).cwiseMax(0.0);
        return push(std::move(n));
    }

    NodeId add(NodeId a, NodeId b) {
        check_same_size(a, b, "add");
        Node n(Op::Add);
        n.a = a;
        n.b = b;
        n.value = value(a) + value(b);
        return push(std::move(n));
    }

    NodeId mul(NodeId a, NodeId b) {
        check_same_size(a, b, "mul");
        Node n(Op::Mul);
        n.a = a;
        n.b = b;
        n.value = value(a).cwiseProduct(value(b));
        return push(std::move(n));
    }

    NodeId mul_const(NodeId a, const Vec& c) {
        if (value(a).size() != c.size()) throw NeuralError("mul_const size mismatch");
        Node n(Op::MulConst);
        n.a = a;
        n.aux = c;
        n.value = value(a).cwiseProduct(c);
        return push(std::move(n));
    }

    // Scalar node [ -log softmax(logits)[gold] ]; the probability vector is
    // cached for the backward rule (p - onehot).
    NodeId softmax_xent(NodeId logits, int gold) {
        const Vec& lv = value(logits);
        if (gold < 0 || gold >= lv.size())
            throw NeuralError("gold index " + std::to_string(gold) + " out of range [0, " +
                              std::to_string(lv.size()) + ")");
        Node n(Op::SoftmaxXent);
        n.a = logits;
        n.gold = gold;
        n.aux = softmax(lv);
        n.value = Vec::Constant(1, -std::log(n.aux[gold]));
        return push(std::move(n));
    }

    NodeId sum(const std::vector<NodeId>& xs) {
        if (xs.empty()) throw NeuralError("sum of nothing");
        double total = 0;
        for (NodeId x : xs) {
            if (value(x).size() != 1) throw NeuralError("sum expects scalar nodes");
            total += value(x)[0];
        }
        Node n(Op::Sum);
        n.inputs = xs;
        n.value = Vec::Constant(1, total);
        return push(std::move(n));
    }

    const Vec& value(NodeId id) const { return at(id).value; }

    // Cached softmax probabilities of a SoftmaxXent node.
    const Vec& probs(NodeId id) const {
        const Node& n = at(id);
        if (n.op != Op::SoftmaxXent) throw NeuralError("probs: not a softmax node");
        return n.aux;
    }

    std::size_t size() const { return nodes_.size(); }

    // Reverse sweep from a scalar node, seeding its gradient with 1 and
    // accumulating leaf gradients into the Parameters. Node gradients are
    // reset per call, so repeated calls add into Parameter::grad again.
    void backward(NodeId final_node) {
        if (nodes_.empty()) throw NeuralError("backward before any forward computation");
        Node& last = at(final_node);
        if (last.value.size() != 1) throw NeuralError("backward target must be scalar");
        for (auto& n : nodes_) n.grad.setZero(n.value.size());
        last.grad[0] = 1.0;

        for (int id = final_node; id >= 0; --id) {
            Node& n = nodes_[id];
            if (n.grad.isZero(0)) continue;
            const Vec& g = n.grad;
            switch (n.op) {
                case Op::Input:
                    break;
                case Op::ParamVec:
                    if (n.param->trainable) n.param->grad.col(0) += g;
                    break;
                case Op::Lookup:
                    if (n.param->trainable) n.param->grad.row(n.row) += g.transpose();
                    break;
                case Op::Affine: {
                    const Vec& x = nodes_[n.a].value;
                    if (n.param->trainable) {
                        n.param->grad.noalias() += g * x.transpose();
                        n.param_b->grad.col(0) += g;
                    }
                    nodes_[n.a].grad.noalias() += n.param->value.transpose() * g;
                    break;
                }
                case Op::Concat: {
                    long at_ = 0;
                    for (NodeId x : n.inputs) {
                        Node& in = nodes_[x];
                        in.grad += g.segment(at_, in.value.size());
                        at_ += in.value.size();
                    }
                    break;
                }
                case Op::Sigmoid:
                    nodes_[n.a].grad.array() +=
                        g.array() * n.value.array() * (1.0 - n.value.array());
                    break;
                case Op::Tanh:
                    nodes_[n.a].grad.array() +=
                        g.array() * (1.0 - n.value.array().square());
                    break;
                case Op::Relu:
                    nodes_[n.a].grad.array() +=
                        g.array() * (n.value.array() > 0.0).cast<double>();
                    break;
                case Op::Add:
                    nodes_[n.a].grad += g;
                    nodes_[n.b].grad += g;
                    break;
                case Op::Mul:
                    nodes_[n.a].grad.array() += g.array() * nodes_[n.b].value.array();
                    nodes_[n.b].grad.array() += g.array() * nodes_[n.a].value.array();
                    break;
                case Op::MulConst:
                    nodes_[n.a].grad.array() += g.array() * n.aux.array();
                    break;
                case Op::SoftmaxXent: {
                    Vec d = n.aux;
                    d[n.gold] -= 1.0;
                    nodes_[n.a].grad += g[0] * d;
                    break;
                }
                case Op::Sum:
                    for (NodeId x : n.inputs) nodes_[x].grad[0] += g[0];
                    break;
            }
        }
    }

private:
    struct Node {
        explicit Node(Op o) : op(o) {}
        Op op;
        NodeId a = -1, b = -1;
        std::vector<NodeId> inputs;
        Parameter* param = nullptr;
        Parameter* param_b = nullptr;
        int row = -1;
        int gold = -1;
        Vec value;
        Vec grad;
        Vec aux;
    };

    NodeId push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    Node& at(NodeId id) {
        if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
            throw NeuralError("bad node id " + std::to_string(id));
        return nodes_[id];
    }
    const Node& at(NodeId id) const {
        if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
            throw NeuralError("bad node id " + std::to_string(id));
        return nodes_[id];
    }

    void check_same_size(NodeId a, NodeId b, const char* what) {
        if (value(a).size() != value(b).size())
            throw NeuralError(std::string(what) + " size mismatch: " +
                              std::to_string(value(a).size()) + " vs " +
                              std::to_string(value(b).size()));
    }

    std::vector<Node> nodes_;
};

// Convenience wrapper matching the math: returns W x + b on the tape.
inline Tape::NodeId linear(Tape& tape, Parameter& w, Parameter& b, Tape::NodeId x) {
    return tape.affine(w, b, x);
}

}  // namespace jointparse
