#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "scorecraft/errors.hpp"
#include "scorecraft/graph.hpp"

namespace scorecraft {

// Weights of the combined objective: alpha scales the bound loss, beta the
// sensitivity loss, gamma the distribution loss, delta the mode loss.
struct LossWeights {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double delta = 1.0;
};

// Ordered groups of feature indices, most important first. Features absent
// from every tier form the implicit least-important group.
struct SensitivityTiers {
    std::vector<std::vector<std::size_t>> tiers;
};

struct TargetDistribution {
    enum class Kind { None, Gaussian, Exponential };
    Kind kind = Kind::None;
    double mu = 0.0;      // Gaussian mean
    double sigma = 1.0;   // Gaussian standard deviation
    double lambda = 1.0;  // Exponential rate
};

// Guards sensitivity denominators; monotone models have strictly positive
// gradients but the raw-weight mode does not.
inline constexpr double kSensitivityEpsilon = 1e-8;

// Floor applied to the batch standard deviation before logs and divisions.
inline constexpr double kSigmaFloor = 1e-6;

// Mean hinge penalty for scores outside [a, b]. With squared set, each hinge
// term is squared individually (terms are nonnegative, so the sign survives).
inline NodeRef bound_loss(Graph& g, NodeRef scores, double a, double b, bool squared = false) {
    if (!(b > a)) throw ConfigError("bound loss needs b > a");
    const Tensor& s = g.value(scores);
    NodeRef lower = g.constant(Tensor::full(s.rows(), s.cols(), a));
    NodeRef upper = g.constant(Tensor::full(s.rows(), s.cols(), b));
    NodeRef below = g.relu(g.sub(lower, scores));
    NodeRef above = g.relu(g.sub(scores, upper));
    if (squared) {
        below = g.square(below);
        above = g.square(above);
    }
    return g.mean(g.add(below, above));
}

// Mean absolute deviation from the requested mode m.
inline NodeRef mode_loss(Graph& g, NodeRef scores, double m) {
    const Tensor& s = g.value(scores);
    NodeRef target = g.constant(Tensor::full(s.rows(), s.cols(), m));
    return g.mean(g.abs(g.sub(scores, target)));
}

namespace detail {

inline void validate_tiers(const SensitivityTiers& tiers, std::size_t n_features) {
    if (tiers.tiers.empty()) throw ConfigError("sensitivity tiers are empty");
    std::vector<bool> seen(n_features, false);
    for (const auto& tier : tiers.tiers) {
        if (tier.empty()) throw ConfigError("sensitivity tier has no features");
        for (std::size_t idx : tier) {
            if (idx >= n_features) {
                throw ConfigError("tier feature index " + std::to_string(idx) +
                                  " out of range for " + std::to_string(n_features) + " features");
            }
            if (seen[idx]) {
                throw ConfigError("feature index " + std::to_string(idx) +
                                  " appears in more than one tier");
            }
            seen[idx] = true;
        }
    }
}

}  // namespace detail

// Per sample and per tier: (sum of gradients of all strictly less important
// features) / (eps + sum of gradients of the tier's features), then the tier
// terms are summed and averaged over the batch. With a single one-feature
// tier this is exactly sum_j!=i grad_j / grad_i.
inline NodeRef sensitivity_loss(Graph& g, NodeRef grads, const SensitivityTiers& tiers) {
    const Tensor& gv = g.value(grads);
    const std::size_t n_features = gv.cols();
    detail::validate_tiers(tiers, n_features);

    // in_tier[f] = tier index, or tier count for untiered features
    const std::size_t implicit = tiers.tiers.size();
    std::vector<std::size_t> tier_of(n_features, implicit);
    for (std::size_t t = 0; t < tiers.tiers.size(); ++t) {
        for (std::size_t idx : tiers.tiers[t]) tier_of[idx] = t;
    }

    NodeRef eps = g.constant(Tensor::full(gv.rows(), 1, kSensitivityEpsilon));
    std::optional<NodeRef> total;
    for (std::size_t t = 0; t < tiers.tiers.size(); ++t) {
        Tensor num_select(n_features, 1);
        Tensor den_select(n_features, 1);
        bool any_lower = false;
        for (std::size_t f = 0; f < n_features; ++f) {
            if (tier_of[f] == t) {
                den_select(f, 0) = 1.0;
            } else if (tier_of[f] > t) {
                num_select(f, 0) = 1.0;
                any_lower = true;
            }
        }
        if (!any_lower) continue;  // nothing below this tier, term is zero
        NodeRef num = g.matmul(grads, g.constant(num_select));
        NodeRef den = g.add(eps, g.matmul(grads, g.constant(den_select)));
        NodeRef term = g.div(num, den);
        total = total ? g.add(*total, term) : term;
    }
    if (!total) return g.scalar(0.0);
    return g.mean(*total);
}

// Differentiable batch mean and population standard deviation. The returned
// sigma is floored at kSigmaFloor (max via relu) so downstream logs and
// divisions stay defined on degenerate batches.
inline std::pair<NodeRef, NodeRef> batch_moments(Graph& g, NodeRef scores) {
    const Tensor& s = g.value(scores);
    if (s.size() < 2) throw ContractError("batch moments need at least 2 scores");
    NodeRef mu = g.mean(scores);
    NodeRef centered = g.broadcast_add_row(scores, g.neg(mu));
    NodeRef variance = g.mean(g.square(centered));
    // max(variance, floor^2), then sigma = exp(0.5 log .) = sqrt
    const double var_floor = kSigmaFloor * kSigmaFloor;
    NodeRef floor = g.scalar(var_floor);
    NodeRef floored = g.add(g.relu(g.sub(variance, floor)), floor);
    NodeRef sigma = g.exp(g.mul(g.scalar(0.5), g.log(floored)));
    return {mu, sigma};
}

// Reverse KL between the batch Gaussian fit q = N(mu1, sigma1^2) and the
// target p = N(mu2, sigma2^2), in closed form:
//   log(sigma2/sigma1) + (sigma1^2 + (mu1 - mu2)^2) / (2 sigma2^2) - 1/2
inline NodeRef kl_gaussian(Graph& g, NodeRef mu1, NodeRef sigma1, double mu2, double sigma2) {
    if (!(sigma2 > 0.0)) throw DomainError("gaussian target needs sigma > 0");
    NodeRef log_ratio = g.sub(g.scalar(std::log(sigma2)), g.log(sigma1));
    NodeRef diff = g.sub(mu1, g.scalar(mu2));
    NodeRef quad = g.mul(g.add(g.square(sigma1), g.square(diff)),
                         g.scalar(1.0 / (2.0 * sigma2 * sigma2)));
    return g.sub(g.add(log_ratio, quad), g.scalar(0.5));
}

// Divergence of the batch Gaussian fit against an Exp(lambda) target:
//   -1/2 - (1/2) log(2 pi sigma1^2) - log(lambda) + mu1 * lambda
// This is a differential-entropy form and may go negative for wide fits; it
// is used as a training signal, not as a nonnegative divergence.
inline NodeRef kl_exponential(Graph& g, NodeRef mu1, NodeRef sigma1, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("exponential target needs lambda > 0");
    const double constant = -0.5 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(lambda);
    NodeRef entropy = g.sub(g.scalar(constant), g.log(sigma1));
    return g.add(entropy, g.mul(mu1, g.scalar(lambda)));
}

struct LossComponents {
    std::optional<NodeRef> bound;
    std::optional<NodeRef> sensitivity;
    std::optional<NodeRef> distribution;
    std::optional<NodeRef> mode;
};

// alpha*BL + beta*SL + gamma*KL + delta*ML over the enabled components.
inline NodeRef total_loss(Graph& g, const LossComponents& parts, const LossWeights& w) {
    std::optional<NodeRef> total;
    auto accumulate = [&](const std::optional<NodeRef>& part, double weight) {
        if (!part) return;
        NodeRef scaled = g.mul(g.scalar(weight), *part);
        total = total ? g.add(*total, scaled) : scaled;
    };
    accumulate(parts.bound, w.alpha);
    accumulate(parts.sensitivity, w.beta);
    accumulate(parts.distribution, w.gamma);
    accumulate(parts.mode, w.delta);
    if (!total) throw ConfigError("no loss components enabled");
    return *total;
}

}  // namespace scorecraft
