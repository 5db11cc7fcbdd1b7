#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "scorecraft/config.hpp"
#include "scorecraft/data.hpp"
#include "scorecraft/errors.hpp"
#include "scorecraft/losses.hpp"
#include "scorecraft/model.hpp"

namespace scorecraft {

// Unweighted per-component batch means plus the weighted total; components
// that were not built stay at zero.
struct EpochLosses {
    double total = 0.0;
    double bound = 0.0;
    double sensitivity = 0.0;
    double distribution = 0.0;
    double mode = 0.0;
};

struct TrainReport {
    std::vector<EpochLosses> epochs;
    double duration_seconds = 0.0;
    std::vector<std::string> warnings;
};

inline nlohmann::json train_report_to_json(const TrainReport& r) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochLosses& e : r.epochs) {
        epochs.push_back({{"total", e.total},
                          {"bound", e.bound},
                          {"sensitivity", e.sensitivity},
                          {"distribution", e.distribution},
                          {"mode", e.mode}});
    }
    return {{"epochs", std::move(epochs)},
            {"duration_seconds", r.duration_seconds},
            {"warnings", r.warnings}};
}

namespace detail {

// Per-tensor first/second moment state; step count is shared across the
// model so bias correction matches the textbook update.
class AdamOptimizer {
public:
    AdamOptimizer(const AdamParams& p, double lr) : params_(p), lr_(lr) {}

    void step(std::vector<Tensor*> tensors, const std::vector<const Tensor*>& grads) {
        if (m_.empty()) {
            for (Tensor* t : tensors) {
                m_.emplace_back(t->rows(), t->cols());
                v_.emplace_back(t->rows(), t->cols());
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(params_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(params_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            Tensor& theta = *tensors[k];
            const Tensor& g = *grads[k];
            for (std::size_t i = 0; i < theta.size(); ++i) {
                m_[k][i] = params_.beta1 * m_[k][i] + (1.0 - params_.beta1) * g[i];
                v_[k][i] = params_.beta2 * v_[k][i] + (1.0 - params_.beta2) * g[i] * g[i];
                const double mhat = m_[k][i] / bc1;
                const double vhat = v_[k][i] / bc2;
                theta[i] -= lr_ * mhat / (std::sqrt(vhat) + params_.eps);
            }
        }
    }

private:
    AdamParams params_;
    double lr_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

class SgdOptimizer {
public:
    SgdOptimizer(const SgdParams& p, double lr) : params_(p), lr_(lr) {}

    void step(std::vector<Tensor*> tensors, const std::vector<const Tensor*>& grads) {
        if (velocity_.empty()) {
            for (Tensor* t : tensors) velocity_.emplace_back(t->rows(), t->cols());
        }
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            Tensor& theta = *tensors[k];
            const Tensor& g = *grads[k];
            for (std::size_t i = 0; i < theta.size(); ++i) {
                velocity_[k][i] = params_.momentum * velocity_[k][i] + g[i];
                theta[i] -= lr_ * velocity_[k][i];
            }
        }
    }

private:
    SgdParams params_;
    double lr_;
    std::vector<Tensor> velocity_;
};

class Optimizer {
public:
    Optimizer(const OptimizerConfig& cfg, double lr) {
        if (cfg.kind == OptimizerConfig::Kind::Adam) {
            adam_.emplace(cfg.adam, lr);
        } else {
            sgd_.emplace(cfg.sgd, lr);
        }
    }

    void step(std::vector<Tensor*> tensors, const std::vector<const Tensor*>& grads) {
        if (adam_) {
            adam_->step(std::move(tensors), grads);
        } else {
            sgd_->step(std::move(tensors), grads);
        }
    }

private:
    std::optional<AdamOptimizer> adam_;
    std::optional<SgdOptimizer> sgd_;
};

inline Tensor batch_rows(const Tensor& all, const std::vector<std::size_t>& order,
                         std::size_t begin, std::size_t count) {
    Tensor out(count, all.cols());
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t c = 0; c < all.cols(); ++c) out(i, c) = all(order[begin + i], c);
    }
    return out;
}

}  // namespace detail

// The per-batch objective: components are built only for constraints that
// are both configured and carry a positive weight; the sensitivity chain in
// particular is skipped entirely when beta = 0.
struct BatchObjective {
    NodeRef total;
    LossComponents parts;
};

inline BatchObjective build_objective(Graph& g, const ModelBinding& b, const MonotoneMlp& m,
                                      const ForwardPass& f, const ConstraintConfig& cfg) {
    LossComponents parts;
    if (cfg.bound_enabled() && cfg.weights.alpha > 0.0) {
        parts.bound = bound_loss(g, f.scores, cfg.bounds->first, cfg.bounds->second,
                                 cfg.squared_bounds);
    }
    if (cfg.sensitivity_enabled() && cfg.weights.beta > 0.0) {
        NodeRef grads = input_gradients(g, b, f);
        parts.sensitivity = sensitivity_loss(g, grads, cfg.tiers());
    }
    if (cfg.distribution_enabled() && cfg.weights.gamma > 0.0) {
        auto [mu, sigma] = batch_moments(g, f.scores);
        if (cfg.distribution.kind == TargetDistribution::Kind::Gaussian) {
            parts.distribution = kl_gaussian(g, mu, sigma, cfg.distribution.mu,
                                             cfg.distribution.sigma);
        } else {
            parts.distribution = kl_exponential(g, mu, sigma, cfg.distribution.lambda);
        }
    }
    if (cfg.mode_enabled() && cfg.weights.delta > 0.0) {
        parts.mode = mode_loss(g, f.scores, *cfg.mode);
    }

    BatchObjective obj;
    obj.parts = parts;
    if (!parts.bound && !parts.sensitivity && !parts.distribution && !parts.mode) {
        // every configured loss has weight zero; nothing to optimize
        obj.total = g.scalar(0.0);
    } else {
        obj.total = total_loss(g, parts, cfg.weights);
    }
    return obj;
}

namespace detail {

inline void check_finite(double value, const char* component, std::size_t step,
                         const EpochLosses& batch_losses) {
    if (std::isfinite(value)) return;
    throw DivergenceError(std::string("non-finite ") + component + " loss at step " +
                          std::to_string(step) + " (bound=" + std::to_string(batch_losses.bound) +
                          ", sensitivity=" + std::to_string(batch_losses.sensitivity) +
                          ", distribution=" + std::to_string(batch_losses.distribution) +
                          ", mode=" + std::to_string(batch_losses.mode) + ")");
}

template <typename BuildLoss>
TrainReport run_loop(MonotoneMlp& model, const Tensor& inputs, const TrainConfig& cfg,
                     BuildLoss&& build, std::vector<std::string> warnings) {
    if (inputs.rows() < 2) throw ContractError("training needs at least 2 rows");
    if (inputs.cols() != model.n_features()) {
        throw ShapeError("training data has " + std::to_string(inputs.cols()) +
                         " features, model expects " + std::to_string(model.n_features()));
    }

    const auto t_start = std::chrono::steady_clock::now();
    TrainReport report;
    report.warnings = std::move(warnings);

    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(inputs.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochLosses acc;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < inputs.rows(); begin += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, inputs.rows() - begin);
            if (count < 2) continue;  // batch_moments needs two scores
            ++step;

            Graph g;
            ModelBinding binding = bind_model(g, model);
            Tensor batch = batch_rows(inputs, order, begin, count);
            EpochLosses batch_losses;
            NodeRef total = build(g, binding, batch, order, begin, count, batch_losses);
            batch_losses.total = g.value(total)(0, 0);
            check_finite(batch_losses.total, "total", step, batch_losses);

            g.backward(total);
            std::vector<Tensor*> tensors;
            std::vector<const Tensor*> grads;
            for (std::size_t layer = 0; layer < 3; ++layer) {
                tensors.push_back(&model.log_weights[layer]);
                grads.push_back(&g.grad(binding.log_weights[layer]));
                tensors.push_back(&model.biases[layer]);
                grads.push_back(&g.grad(binding.biases[layer]));
            }
            opt.step(std::move(tensors), grads);

            acc.total += batch_losses.total;
            acc.bound += batch_losses.bound;
            acc.sensitivity += batch_losses.sensitivity;
            acc.distribution += batch_losses.distribution;
            acc.mode += batch_losses.mode;
            ++batches;
        }
        if (batches == 0) throw ContractError("batch size leaves no usable batches");
        const double inv = 1.0 / static_cast<double>(batches);
        acc.total *= inv;
        acc.bound *= inv;
        acc.sensitivity *= inv;
        acc.distribution *= inv;
        acc.mode *= inv;
        report.epochs.push_back(acc);
    }

    report.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

}  // namespace detail

// Mini-batch constrained training: assembles the weighted objective per
// batch and takes one optimizer step per batch. `data` must already be
// normalized and direction-transformed. Deterministic per seed.
inline TrainReport train(MonotoneMlp& model, const Dataset& data, const ConstraintConfig& cfg,
                         const TrainConfig& tc) {
    validate_config(cfg);
    std::vector<std::string> warnings = config_warnings(cfg);

    auto build = [&](Graph& g, const ModelBinding& binding, const Tensor& batch,
                     const std::vector<std::size_t>&, std::size_t, std::size_t,
                     EpochLosses& batch_losses) {
        ForwardPass f = forward(g, binding, model, batch);
        BatchObjective obj = build_objective(g, binding, model, f, cfg);
        if (obj.parts.bound) batch_losses.bound = g.value(*obj.parts.bound)(0, 0);
        if (obj.parts.sensitivity) {
            batch_losses.sensitivity = g.value(*obj.parts.sensitivity)(0, 0);
        }
        if (obj.parts.distribution) {
            batch_losses.distribution = g.value(*obj.parts.distribution)(0, 0);
        }
        if (obj.parts.mode) batch_losses.mode = g.value(*obj.parts.mode)(0, 0);
        return obj.total;
    };
    return detail::run_loop(model, data.rows, tc, build, std::move(warnings));
}

// Supervised baseline: same loop and optimizer, mean-squared-error against
// the label column instead of constraint losses.
inline TrainReport train_supervised(MonotoneMlp& model, const Dataset& data,
                                    const TrainConfig& tc) {
    if (!data.labels) throw ConfigError("supervised training needs a label column");
    const std::vector<double>& labels = *data.labels;

    auto build = [&](Graph& g, const ModelBinding& binding, const Tensor& batch,
                     const std::vector<std::size_t>& order, std::size_t begin, std::size_t count,
                     EpochLosses&) {
        ForwardPass f = forward(g, binding, model, batch);
        Tensor y(count, 1);
        for (std::size_t i = 0; i < count; ++i) y(i, 0) = labels[order[begin + i]];
        NodeRef target = g.constant(y);
        return g.mean(g.square(g.sub(f.scores, target)));
    };
    return detail::run_loop(model, data.rows, tc, build, {});
}

}  // namespace scorecraft
