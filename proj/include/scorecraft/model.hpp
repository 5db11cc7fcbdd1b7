#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scorecraft/errors.hpp"
#include "scorecraft/features.hpp"
#include "scorecraft/graph.hpp"
#include "scorecraft/tensor.hpp"

namespace scorecraft {

using ScoreBatch = std::vector<double>;

// 3-layer dense scoring network. Weights are stored in the log domain; with
// the monotone flag set the forward pass exponentiates them, so every
// effective weight is positive and the score is nondecreasing in every
// input. With the flag cleared the stored matrices are used as-is.
// Hidden activations are ELU, the output layer is linear.
struct MonotoneMlp {
    std::array<std::size_t, 4> layer_dims{};  // {n_features, h1, h2, 1}
    std::array<Tensor, 3> log_weights;        // n x h1, h1 x h2, h2 x 1
    std::array<Tensor, 3> biases;             // 1 x h1, 1 x h2, 1 x 1
    bool monotone = true;

    std::size_t n_features() const { return layer_dims[0]; }
};

// Weights are drawn as log w = log(1/fan_in) + Uniform(-0.5, 0.5), i.e. the
// effective weights scatter around 1/fan_in; biases start at zero.
// Deterministic per seed. In raw-weight mode the stored matrices hold the
// effective weights themselves, so both modes start at the identical
// function (an all-negative raw start would pin the network to a decreasing
// score and training cannot escape it).
inline MonotoneMlp init_model(std::size_t n_features, std::array<std::size_t, 2> hidden,
                              bool monotone, std::uint64_t seed) {
    if (n_features < 1 || hidden[0] < 1 || hidden[1] < 1) {
        throw ConfigError("model dimensions must be >= 1");
    }
    MonotoneMlp m;
    m.layer_dims = {n_features, hidden[0], hidden[1], 1};
    m.monotone = monotone;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    for (std::size_t layer = 0; layer < 3; ++layer) {
        const std::size_t fan_in = m.layer_dims[layer];
        const std::size_t fan_out = m.layer_dims[layer + 1];
        Tensor w(fan_in, fan_out);
        const double base = std::log(1.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double log_w = base + jitter(rng);
            w[i] = monotone ? log_w : std::exp(log_w);
        }
        m.log_weights[layer] = std::move(w);
        m.biases[layer] = Tensor(1, fan_out);
    }
    return m;
}

// Parameter nodes of one model registered in one graph, plus the effective
// weight nodes derived from them.
struct ModelBinding {
    std::array<NodeRef, 3> log_weights{};
    std::array<NodeRef, 3> biases{};
    std::array<NodeRef, 3> weights{};  // exp(log_weights) when monotone, raw otherwise
};

inline ModelBinding bind_model(Graph& g, const MonotoneMlp& m) {
    ModelBinding b;
    for (std::size_t layer = 0; layer < 3; ++layer) {
        b.log_weights[layer] = g.parameter(m.log_weights[layer]);
        b.biases[layer] = g.parameter(m.biases[layer]);
        b.weights[layer] = m.monotone ? g.exp(b.log_weights[layer]) : b.log_weights[layer];
    }
    return b;
}

// Forward-pass nodes kept around so the input-gradient chain can reuse the
// pre-activations.
struct ForwardPass {
    NodeRef input;   // batch x n constant
    NodeRef pre1;    // batch x h1
    NodeRef pre2;    // batch x h2
    NodeRef scores;  // batch x 1
};

inline ForwardPass forward(Graph& g, const ModelBinding& b, const MonotoneMlp& m,
                           const Tensor& x) {
    if (x.cols() != m.n_features()) {
        throw ShapeError("input has " + std::to_string(x.cols()) + " features, model expects " +
                         std::to_string(m.n_features()));
    }
    ForwardPass f;
    f.input = g.constant(x);
    f.pre1 = g.broadcast_add_row(g.matmul(f.input, b.weights[0]), b.biases[0]);
    NodeRef a1 = g.elu(f.pre1);
    f.pre2 = g.broadcast_add_row(g.matmul(a1, b.weights[1]), b.biases[1]);
    NodeRef a2 = g.elu(f.pre2);
    f.scores = g.broadcast_add_row(g.matmul(a2, b.weights[2]), b.biases[2]);
    return f;
}

// Rows of d(score)/d(input), built as graph nodes so losses over these
// gradients backpropagate into the parameters:
//   grad = (elu'(z2) .* w3^T) W2^T .* elu'(z1)) W1^T   (per sample)
inline NodeRef input_gradients(Graph& g, const ModelBinding& b, const ForwardPass& f) {
    const std::size_t batch = g.value(f.input).rows();
    NodeRef ones = g.constant(Tensor::full(batch, 1, 1.0));
    NodeRef w3_rows = g.matmul(ones, g.transpose(b.weights[2]));  // batch x h2
    NodeRef d2 = g.mul(g.elu_prime(f.pre2), w3_rows);             // batch x h2
    NodeRef back1 = g.matmul(d2, g.transpose(b.weights[1]));      // batch x h1
    NodeRef d1 = g.mul(g.elu_prime(f.pre1), back1);               // batch x h1
    return g.matmul(d1, g.transpose(b.weights[0]));               // batch x n
}

inline NodeRef input_gradients(Graph& g, const MonotoneMlp& m, const Tensor& x) {
    ModelBinding b = bind_model(g, m);
    ForwardPass f = forward(g, b, m, x);
    return input_gradients(g, b, f);
}

// Plain scoring without gradient bookkeeping.
inline ScoreBatch score_rows(const MonotoneMlp& m, const Tensor& x) {
    Graph g;
    ModelBinding b = bind_model(g, m);
    ForwardPass f = forward(g, b, m, x);
    const Tensor& s = g.value(f.scores);
    ScoreBatch out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i];
    return out;
}

// Affine map fitted on one score batch: source_min -> a, source_max -> b.
struct AffineRescale {
    double source_min = 0.0;
    double source_max = 1.0;
    double a = 0.0;
    double b = 1.0;

    double operator()(double s) const {
        return a + (s - source_min) * (b - a) / (source_max - source_min);
    }
};

inline AffineRescale fit_rescale(const ScoreBatch& scores, double a, double b) {
    if (!(b > a)) throw ConfigError("rescale needs b > a");
    if (scores.empty()) throw DomainError("cannot rescale an empty score batch");
    double lo = scores[0];
    double hi = scores[0];
    for (double s : scores) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (!(hi > lo)) throw DomainError("degenerate scores: rescale needs max > min");
    return AffineRescale{lo, hi, a, b};
}

// Map observed min -> a and observed max -> b. Rank-preserving.
inline ScoreBatch rescale_scores(const ScoreBatch& scores, double a, double b) {
    const AffineRescale map = fit_rescale(scores, a, b);
    ScoreBatch out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = map(scores[i]);
    return out;
}

}  // namespace scorecraft
