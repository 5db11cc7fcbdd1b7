#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "scorecraft/data.hpp"
#include "scorecraft/errors.hpp"
#include "scorecraft/tensor.hpp"

namespace scorecraft {

// How a raw feature is believed to influence the score. Negative and convex
// effects are folded into the input so the network itself can stay monotone
// nondecreasing.
enum class Direction {
    Positive,
    Negative,
    ConvexLinear,
    ConvexQuadratic,
};

inline std::string to_string(Direction d) {
    switch (d) {
        case Direction::Positive: return "positive";
        case Direction::Negative: return "negative";
        case Direction::ConvexLinear: return "convex_linear";
        case Direction::ConvexQuadratic: return "convex_quadratic";
    }
    return "positive";
}

inline Direction direction_from_string(const std::string& s) {
    if (s == "positive") return Direction::Positive;
    if (s == "negative") return Direction::Negative;
    if (s == "convex_linear") return Direction::ConvexLinear;
    if (s == "convex_quadratic") return Direction::ConvexQuadratic;
    throw ConfigError("unknown feature direction '" + s + "'");
}

struct FeatureSpec {
    std::string name;
    Direction direction = Direction::Positive;
    // Sensitivity tier, lower = more important. Untiered features form the
    // implicit least important group.
    std::optional<std::size_t> tier;
};

// Training-time min/max per feature, persisted with the model so scoring
// always normalizes with the same statistics.
struct NormalizationStats {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t n_features() const { return min.size(); }
};

// Maps each column to [0,1] by min-max. Constant columns cannot be
// normalized and are reported by name.
inline std::pair<Dataset, NormalizationStats> fit_normalize(const Dataset& d) {
    NormalizationStats stats;
    stats.min.resize(d.n_features());
    stats.max.resize(d.n_features());
    for (std::size_t c = 0; c < d.n_features(); ++c) {
        double lo = d.rows(0, c);
        double hi = d.rows(0, c);
        for (std::size_t r = 1; r < d.n_rows(); ++r) {
            lo = std::min(lo, d.rows(r, c));
            hi = std::max(hi, d.rows(r, c));
        }
        if (!(hi > lo)) {
            throw DomainError("feature '" + d.feature_names[c] +
                              "' is constant and cannot be normalized");
        }
        stats.min[c] = lo;
        stats.max[c] = hi;
    }

    Dataset out = d;
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        for (std::size_t c = 0; c < d.n_features(); ++c) {
            out.rows(r, c) = (d.rows(r, c) - stats.min[c]) / (stats.max[c] - stats.min[c]);
        }
    }
    return {std::move(out), std::move(stats)};
}

// Normalize with stored stats; values beyond the training range clamp to
// [0,1] so the monotone contract survives unseen extremes.
inline double apply_stats(double x, double lo, double hi) {
    const double z = (x - lo) / (hi - lo);
    return std::clamp(z, 0.0, 1.0);
}

inline double apply_direction(double x, Direction d) {
    switch (d) {
        case Direction::Positive: return x;
        case Direction::Negative: return 1.0 - x;
        case Direction::ConvexLinear: return x <= 0.5 ? x : 1.0 - x;
        case Direction::ConvexQuadratic: {
            const double t = x <= 0.5 ? x : 1.0 - x;
            return t * t;
        }
    }
    return x;
}

// Fitted normalization plus per-feature direction transforms; the full
// raw-data -> network-input map.
struct FeaturePipeline {
    std::vector<FeatureSpec> features;
    NormalizationStats stats;

    // Raw rows -> model input in [0,1]^(n x k). Column order must match the
    // pipeline's feature order; mismatches are the caller's to detect.
    Tensor transform(const Tensor& raw) const {
        if (raw.cols() != features.size()) {
            throw ShapeError("pipeline expects " + std::to_string(features.size()) +
                             " features, got " + std::to_string(raw.cols()));
        }
        Tensor out(raw.rows(), raw.cols());
        for (std::size_t r = 0; r < raw.rows(); ++r) {
            for (std::size_t c = 0; c < raw.cols(); ++c) {
                const double z = apply_stats(raw(r, c), stats.min[c], stats.max[c]);
                out(r, c) = apply_direction(z, features[c].direction);
            }
        }
        return out;
    }
};

}  // namespace scorecraft
