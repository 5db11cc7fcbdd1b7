#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scorecraft/errors.hpp"
#include "scorecraft/features.hpp"
#include "scorecraft/losses.hpp"

namespace scorecraft {

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct SgdParams {
    double momentum = 0.0;
};

struct OptimizerConfig {
    enum class Kind { Adam, Sgd };
    Kind kind = Kind::Adam;
    AdamParams adam;
    SgdParams sgd;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    bool shuffle = true;
    std::array<std::size_t, 2> hidden = {64, 64};
};

// The expert's full constraint specification: which features exist and how
// they act, score bounds, an optional mode, a target output distribution,
// sensitivity tiers (carried on the features), and loss weights.
struct ConstraintConfig {
    std::vector<FeatureSpec> features;
    std::optional<std::pair<double, double>> bounds;
    bool squared_bounds = false;
    std::optional<double> mode;
    TargetDistribution distribution;
    LossWeights weights;
    bool rescale_after_training = false;
    TrainConfig train;

    bool bound_enabled() const { return bounds.has_value(); }
    bool mode_enabled() const { return mode.has_value(); }
    bool distribution_enabled() const {
        return distribution.kind != TargetDistribution::Kind::None;
    }
    bool sensitivity_enabled() const {
        return std::any_of(features.begin(), features.end(),
                           [](const FeatureSpec& f) { return f.tier.has_value(); });
    }

    // Tier groups in importance order (lower stored index = more important),
    // compacted over the tier values that actually occur.
    SensitivityTiers tiers() const {
        std::map<std::size_t, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (features[i].tier) groups[*features[i].tier].push_back(i);
        }
        SensitivityTiers t;
        for (auto& [level, indices] : groups) t.tiers.push_back(std::move(indices));
        return t;
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("unknown key '" + key + "' at " + (path.empty() ? "/" : path));
        }
    }
}

inline double require_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError("expected a number at " + path);
    return j.get<double>();
}

inline TargetDistribution parse_distribution(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("expected an object at " + path);
    reject_unknown_keys(j, {"kind", "mu", "sigma", "lambda"}, path);
    TargetDistribution d;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "none") {
        d.kind = TargetDistribution::Kind::None;
    } else if (kind == "gaussian") {
        d.kind = TargetDistribution::Kind::Gaussian;
        d.mu = require_number(j.at("mu"), path + "/mu");
        d.sigma = require_number(j.at("sigma"), path + "/sigma");
        if (!(d.sigma > 0.0) || !std::isfinite(d.sigma) || !std::isfinite(d.mu)) {
            throw ConfigError("gaussian target needs finite mu and sigma > 0 at " + path);
        }
    } else if (kind == "exponential") {
        d.kind = TargetDistribution::Kind::Exponential;
        d.lambda = require_number(j.at("lambda"), path + "/lambda");
        if (!(d.lambda > 0.0) || !std::isfinite(d.lambda)) {
            throw ConfigError("exponential target needs lambda > 0 at " + path);
        }
    } else {
        throw ConfigError("unknown distribution kind '" + kind + "' at " + path + "/kind");
    }
    return d;
}

inline TrainConfig parse_train(const nlohmann::json& j, const std::string& path) {
    reject_unknown_keys(j, {"batch_size", "epochs", "learning_rate", "optimizer", "seed",
                            "shuffle", "hidden"},
                        path);
    TrainConfig t;
    if (j.contains("batch_size")) t.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("epochs")) t.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("learning_rate")) {
        t.learning_rate = require_number(j.at("learning_rate"), path + "/learning_rate");
    }
    if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("shuffle")) t.shuffle = j.at("shuffle").get<bool>();
    if (j.contains("hidden")) {
        const auto dims = j.at("hidden").get<std::vector<std::size_t>>();
        if (dims.size() != 2) throw ConfigError("hidden must be two layer widths at " + path);
        t.hidden = {dims[0], dims[1]};
    }
    if (j.contains("optimizer")) {
        const nlohmann::json& oj = j.at("optimizer");
        reject_unknown_keys(oj, {"kind", "beta1", "beta2", "eps", "momentum"},
                            path + "/optimizer");
        const std::string kind = oj.at("kind").get<std::string>();
        if (kind == "adam") {
            t.optimizer.kind = OptimizerConfig::Kind::Adam;
            if (oj.contains("beta1")) t.optimizer.adam.beta1 = oj.at("beta1").get<double>();
            if (oj.contains("beta2")) t.optimizer.adam.beta2 = oj.at("beta2").get<double>();
            if (oj.contains("eps")) t.optimizer.adam.eps = oj.at("eps").get<double>();
        } else if (kind == "sgd") {
            t.optimizer.kind = OptimizerConfig::Kind::Sgd;
            if (oj.contains("momentum")) t.optimizer.sgd.momentum = oj.at("momentum").get<double>();
        } else {
            throw ConfigError("unknown optimizer '" + kind + "' at " + path + "/optimizer/kind");
        }
    }
    if (t.batch_size < 2) throw ConfigError("batch_size must be >= 2 at " + path);
    if (t.epochs < 1) throw ConfigError("epochs must be >= 1 at " + path);
    if (!(t.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0 at " + path);
    return t;
}

}  // namespace detail

// Validates cross-field invariants; throws ConfigError naming the violation.
inline void validate_config(const ConstraintConfig& c) {
    if (c.features.empty()) throw ConfigError("config needs at least one feature");
    std::set<std::string> names;
    for (const FeatureSpec& f : c.features) {
        if (f.name.empty()) throw ConfigError("feature name must not be empty");
        if (!names.insert(f.name).second) {
            throw ConfigError("duplicate feature name '" + f.name + "'");
        }
    }
    if (c.bounds && !(c.bounds->second > c.bounds->first)) {
        throw ConfigError("bounds must satisfy b > a");
    }
    if (c.mode && c.bounds &&
        (*c.mode < c.bounds->first || *c.mode > c.bounds->second)) {
        throw ConfigError("mode outside bounds");
    }
    if (c.weights.alpha < 0 || c.weights.beta < 0 || c.weights.gamma < 0 || c.weights.delta < 0) {
        throw ConfigError("loss weights must be nonnegative");
    }
    if (!c.bound_enabled() && !c.mode_enabled() && !c.distribution_enabled() &&
        !c.sensitivity_enabled()) {
        throw ConfigError("no loss enabled: set bounds, mode, a distribution or feature tiers");
    }
}

// Non-fatal oddities worth surfacing to the user.
inline std::vector<std::string> config_warnings(const ConstraintConfig& c) {
    std::vector<std::string> out;
    if (c.bounds && c.distribution.kind == TargetDistribution::Kind::Gaussian) {
        if (c.distribution.mu < c.bounds->first || c.distribution.mu > c.bounds->second) {
            out.push_back("gaussian target mean lies outside the score bounds");
        }
    }
    if (c.weights.alpha == 0 && c.weights.beta == 0 && c.weights.gamma == 0 &&
        c.weights.delta == 0) {
        out.push_back("all loss weights are zero; training will not change the model");
    }
    return out;
}

// Strict parse: unknown keys anywhere are rejected so expert typos cannot
// silently drop a constraint.
inline ConstraintConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    detail::reject_unknown_keys(j,
                                {"features", "bounds", "squared_bounds", "mode", "distribution",
                                 "weights", "rescale_after_training", "train"},
                                "");

    ConstraintConfig c;
    if (!j.contains("features") || !j.at("features").is_array()) {
        throw ConfigError("config needs a 'features' array");
    }
    std::size_t idx = 0;
    for (const nlohmann::json& fj : j.at("features")) {
        const std::string path = "/features/" + std::to_string(idx++);
        if (!fj.is_object()) throw ConfigError("expected an object at " + path);
        detail::reject_unknown_keys(fj, {"name", "direction", "tier"}, path);
        FeatureSpec f;
        f.name = fj.at("name").get<std::string>();
        f.direction = fj.contains("direction")
                          ? direction_from_string(fj.at("direction").get<std::string>())
                          : Direction::Positive;
        if (fj.contains("tier")) {
            if (!fj.at("tier").is_number_unsigned()) {
                throw ConfigError("tier must be a nonnegative integer at " + path + "/tier");
            }
            f.tier = fj.at("tier").get<std::size_t>();
        }
        c.features.push_back(std::move(f));
    }

    if (j.contains("bounds")) {
        const nlohmann::json& bj = j.at("bounds");
        if (!bj.is_array() || bj.size() != 2) {
            throw ConfigError("bounds must be a two-element array [a, b]");
        }
        c.bounds = {detail::require_number(bj.at(0), "/bounds/0"),
                    detail::require_number(bj.at(1), "/bounds/1")};
    }
    if (j.contains("squared_bounds")) c.squared_bounds = j.at("squared_bounds").get<bool>();
    if (j.contains("mode")) c.mode = detail::require_number(j.at("mode"), "/mode");
    if (j.contains("distribution")) {
        c.distribution = detail::parse_distribution(j.at("distribution"), "/distribution");
    }
    if (j.contains("weights")) {
        const nlohmann::json& wj = j.at("weights");
        detail::reject_unknown_keys(wj, {"alpha", "beta", "gamma", "delta"}, "/weights");
        if (wj.contains("alpha")) c.weights.alpha = detail::require_number(wj.at("alpha"), "/weights/alpha");
        if (wj.contains("beta")) c.weights.beta = detail::require_number(wj.at("beta"), "/weights/beta");
        if (wj.contains("gamma")) c.weights.gamma = detail::require_number(wj.at("gamma"), "/weights/gamma");
        if (wj.contains("delta")) c.weights.delta = detail::require_number(wj.at("delta"), "/weights/delta");
    }
    if (j.contains("rescale_after_training")) {
        c.rescale_after_training = j.at("rescale_after_training").get<bool>();
    }
    if (j.contains("train")) c.train = detail::parse_train(j.at("train"), "/train");

    validate_config(c);
    return c;
}

inline nlohmann::json serialize_config(const ConstraintConfig& c) {
    nlohmann::json j;
    nlohmann::json features = nlohmann::json::array();
    for (const FeatureSpec& f : c.features) {
        nlohmann::json fj;
        fj["name"] = f.name;
        fj["direction"] = to_string(f.direction);
        if (f.tier) fj["tier"] = *f.tier;
        features.push_back(std::move(fj));
    }
    j["features"] = std::move(features);
    if (c.bounds) j["bounds"] = {c.bounds->first, c.bounds->second};
    if (c.squared_bounds) j["squared_bounds"] = true;
    if (c.mode) j["mode"] = *c.mode;
    switch (c.distribution.kind) {
        case TargetDistribution::Kind::None:
            break;
        case TargetDistribution::Kind::Gaussian:
            j["distribution"] = {{"kind", "gaussian"}, {"mu", c.distribution.mu},
                                 {"sigma", c.distribution.sigma}};
            break;
        case TargetDistribution::Kind::Exponential:
            j["distribution"] = {{"kind", "exponential"}, {"lambda", c.distribution.lambda}};
            break;
    }
    j["weights"] = {{"alpha", c.weights.alpha}, {"beta", c.weights.beta},
                    {"gamma", c.weights.gamma}, {"delta", c.weights.delta}};
    if (c.rescale_after_training) j["rescale_after_training"] = true;
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"epochs", c.train.epochs},
                  {"learning_rate", c.train.learning_rate},
                  {"seed", c.train.seed},
                  {"shuffle", c.train.shuffle},
                  {"hidden", c.train.hidden}};
    switch (c.train.optimizer.kind) {
        case OptimizerConfig::Kind::Adam:
            j["train"]["optimizer"] = {{"kind", "adam"},
                                       {"beta1", c.train.optimizer.adam.beta1},
                                       {"beta2", c.train.optimizer.adam.beta2},
                                       {"eps", c.train.optimizer.adam.eps}};
            break;
        case OptimizerConfig::Kind::Sgd:
            j["train"]["optimizer"] = {{"kind", "sgd"},
                                       {"momentum", c.train.optimizer.sgd.momentum}};
            break;
    }
    return j;
}

// FNV-1a over the canonical serialization; stable across platforms.
inline std::string config_digest(const ConstraintConfig& c) {
    const std::string text = serialize_config(c).dump();
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string("fnv1a:") + buf;
}

// Shipped constraint sets for the reference datasets. Data files are
// supplied by the user; these encode only the published domain knowledge.
inline ConstraintConfig preset(const std::string& name) {
    ConstraintConfig c;
    auto feature = [](std::string n, Direction d,
                      std::optional<std::size_t> tier = std::nullopt) {
        return FeatureSpec{std::move(n), d, tier};
    };
    const auto positive = Direction::Positive;
    const auto negative = Direction::Negative;

    if (name == "synthetic") {
        // y = x1 + 5 x2 + 15 x3 + x4^2 over N(10, 3) features: importance
        // x4 > x3 > x2, bounds at the ground-truth score range and a
        // gaussian target at the analytic score moments.
        c.features = {feature("x1", positive), feature("x2", positive, 2),
                      feature("x3", positive, 1), feature("x4", positive, 0)};
        c.bounds = {{19.62, 654.45}};
        c.distribution = {TargetDistribution::Kind::Gaussian, 313.0, 44.4, 1.0};
        c.weights = {1.0, 1.0, 1.0, 1.0};
    } else if (name == "cwur") {
        c.features = {feature("national_rank", positive, 3),
                      feature("quality_of_faculty", positive, 2),
                      feature("publications", positive, 0),
                      feature("influence", positive, 1),
                      feature("citations", positive, 1),
                      feature("patents", positive, 0),
                      feature("broad_impact", positive, 2)};
        c.bounds = {{40.0, 100.0}};
        c.mode = 45.0;
        c.squared_bounds = true;
        c.weights = {1.0, 1.0, 1.0, 1.0};
    } else if (name == "journal") {
        c.features = {feature("pct_cited", positive, 2), feature("snip", positive, 1),
                      feature("sjr", positive, 0)};
        c.bounds = {{5.0, 150.0}};
        c.mode = 13.0;
        c.squared_bounds = true;
        c.weights = {1.0, 1.0, 1.0, 1.0};
    } else if (name == "imdb") {
        c.features = {feature("votes", positive),
                      feature("average_votes", positive),
                      feature("budget", negative),
                      feature("gross_income", positive, 0),
                      feature("meta_score", positive),
                      feature("user_reviews", positive),
                      feature("critic_reviews", positive)};
        c.bounds = {{0.0, 10.0}};
        c.distribution = {TargetDistribution::Kind::Gaussian, 5.0, 1.0, 1.0};
        c.weights = {1.0, 1.0, 1.0, 1.0};
    } else if (name == "ad") {
        c.features = {feature("amount_spent", negative),
                      feature("clicks", positive, 2),
                      feature("click_through_rate", positive),
                      feature("cost_per_click", negative),
                      feature("cost_per_lead", negative, 1),
                      feature("impressions", positive, 2),
                      feature("leads", positive, 2),
                      feature("lead_generation_rate", positive),
                      feature("form_fill_rate", positive, 0)};
        c.bounds = {{0.0, 10.0}};
        c.distribution = {TargetDistribution::Kind::Gaussian, 5.0, 1.0, 1.0};
        c.weights = {1.0, 1.0, 1.0, 1.0};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    validate_config(c);
    return c;
}

}  // namespace scorecraft
