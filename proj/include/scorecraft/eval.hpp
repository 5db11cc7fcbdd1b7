#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scorecraft/config.hpp"
#include "scorecraft/data.hpp"
#include "scorecraft/errors.hpp"

namespace scorecraft {

namespace detail {

// 1-based ranks with ties resolved by average rank.
inline std::vector<double> fractional_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    if (da == 0.0 || db == 0.0) throw MetricError("correlation of a constant series");
    return num / std::sqrt(da * db);
}

inline std::pair<double, double> fit_moments(const std::vector<double>& scores) {
    const double n = static_cast<double>(scores.size());
    double mu = 0.0;
    for (double s : scores) mu += s;
    mu /= n;
    double var = 0.0;
    for (double s : scores) var += (s - mu) * (s - mu);
    var /= n;  // population convention, matching training-time moments
    return {mu, std::sqrt(var)};
}

}  // namespace detail

// Spearman's rho: Pearson correlation of fractional ranks.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw MetricError("rank correlation needs equal lengths");
    if (a.size() < 2) throw MetricError("rank correlation needs at least 2 points");
    return detail::pearson(detail::fractional_ranks(a), detail::fractional_ranks(b));
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size()) throw MetricError("rmse needs equal lengths");
    if (pred.empty()) throw MetricError("rmse of empty series");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

// Scalar twins of the graph-built divergences; the score distribution q is
// the Gaussian moment fit used during training.
inline double kl_gaussian_value(double mu1, double sigma1, double mu2, double sigma2) {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw DomainError("gaussian KL needs positive sigmas");
    const double d = mu1 - mu2;
    return std::log(sigma2 / sigma1) + (sigma1 * sigma1 + d * d) / (2.0 * sigma2 * sigma2) - 0.5;
}

inline double kl_exponential_value(double mu1, double sigma1, double lambda) {
    if (!(sigma1 > 0.0)) throw DomainError("exponential divergence needs sigma > 0");
    if (!(lambda > 0.0)) throw DomainError("exponential divergence needs lambda > 0");
    return -0.5 - 0.5 * std::log(2.0 * std::numbers::pi * sigma1 * sigma1) - std::log(lambda) +
           mu1 * lambda;
}

inline double kl_to_target(const std::vector<double>& scores, const TargetDistribution& target) {
    if (target.kind == TargetDistribution::Kind::None) {
        throw MetricError("no target distribution configured");
    }
    if (scores.size() < 2) throw MetricError("divergence needs at least 2 scores");
    auto [mu, sigma] = detail::fit_moments(scores);
    if (!(sigma > 0.0)) throw MetricError("divergence of degenerate scores");
    if (target.kind == TargetDistribution::Kind::Gaussian) {
        return kl_gaussian_value(mu, sigma, target.mu, target.sigma);
    }
    return kl_exponential_value(mu, sigma, target.lambda);
}

// Percentage of scores inside [a, b], endpoints inclusive.
inline double bounds_coverage(const std::vector<double>& scores, double a, double b) {
    if (!(b > a)) throw ConfigError("coverage needs b > a");
    if (scores.empty()) throw MetricError("coverage of an empty series");
    std::size_t inside = 0;
    for (double s : scores) {
        if (s >= a && s <= b) ++inside;
    }
    return 100.0 * static_cast<double>(inside) / static_cast<double>(scores.size());
}

// Spearman of each raw (pre-transform) feature column against the scores.
// Constant columns have no defined rank correlation and are left out.
inline std::vector<std::pair<std::string, std::optional<double>>> feature_correlations(
    const Dataset& data, const std::vector<double>& scores) {
    if (scores.size() != data.n_rows()) {
        throw MetricError("scores and data row counts differ");
    }
    std::vector<std::pair<std::string, std::optional<double>>> out;
    for (std::size_t c = 0; c < data.n_features(); ++c) {
        std::vector<double> column(data.n_rows());
        for (std::size_t r = 0; r < data.n_rows(); ++r) column[r] = data.rows(r, c);
        std::optional<double> rho;
        try {
            rho = spearman(column, scores);
        } catch (const MetricError&) {
            rho = std::nullopt;
        }
        out.emplace_back(data.feature_names[c], rho);
    }
    return out;
}

struct KdeCurve {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;

    double trapezoid_integral() const {
        double acc = 0.0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            acc += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
        }
        return acc;
    }
};

// Gaussian-kernel density estimate on a uniform grid over
// [min - 3h, max + 3h]. Default bandwidth is Silverman's rule of thumb
// 1.06 sigma n^(-1/5).
inline KdeCurve kde(const std::vector<double>& scores,
                    std::optional<double> bandwidth = std::nullopt,
                    std::size_t grid_points = 256) {
    if (scores.size() < 2) throw MetricError("density estimate needs at least 2 scores");
    if (grid_points < 2) throw ConfigError("density estimate needs at least 2 grid points");
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    if (!(*hi_it > *lo_it)) throw MetricError("density estimate of degenerate scores");

    KdeCurve curve;
    if (bandwidth) {
        if (!(*bandwidth > 0.0)) throw ConfigError("bandwidth must be > 0");
        curve.bandwidth = *bandwidth;
    } else {
        const auto [mu, sigma] = detail::fit_moments(scores);
        (void)mu;
        curve.bandwidth =
            1.06 * sigma * std::pow(static_cast<double>(scores.size()), -0.2);
    }

    const double h = curve.bandwidth;
    const double lo = *lo_it - 3.0 * h;
    const double hi = *hi_it + 3.0 * h;
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    const double norm =
        1.0 / (static_cast<double>(scores.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    curve.grid.resize(grid_points);
    curve.density.resize(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double x = lo + step * static_cast<double>(i);
        double acc = 0.0;
        for (double s : scores) {
            const double z = (x - s) / h;
            acc += std::exp(-0.5 * z * z);
        }
        curve.grid[i] = x;
        curve.density[i] = acc * norm;
    }
    return curve;
}

// One Table-1-style row.
struct MetricsReport {
    std::optional<double> rank_correlation;
    std::optional<double> rmse_value;
    std::optional<double> kl_divergence;
    double min_score = 0.0;
    double max_score = 0.0;
    std::optional<double> pct_within_bounds;
    std::vector<std::pair<std::string, std::optional<double>>> correlations;
};

// Assembles every metric the config makes meaningful. Label-dependent
// fields stay absent without truth values; the divergence column stays
// absent without a configured target.
inline MetricsReport compute_metrics(const Dataset& raw_data, const std::vector<double>& scores,
                                     const std::optional<std::vector<double>>& truth,
                                     const ConstraintConfig& cfg) {
    if (scores.empty()) throw MetricError("no scores to evaluate");
    MetricsReport r;
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    r.min_score = *lo;
    r.max_score = *hi;
    if (truth) {
        r.rank_correlation = spearman(scores, *truth);
        r.rmse_value = rmse(scores, *truth);
    }
    if (cfg.distribution.kind != TargetDistribution::Kind::None) {
        r.kl_divergence = kl_to_target(scores, cfg.distribution);
    }
    if (cfg.bounds) {
        r.pct_within_bounds = bounds_coverage(scores, cfg.bounds->first, cfg.bounds->second);
    }
    r.correlations = feature_correlations(raw_data, scores);
    return r;
}

// Two-column CSV (grid, density) for external plotting.
inline void write_kde_csv(const KdeCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "grid,density\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << detail::format_number(curve.grid[i]) << ','
            << detail::format_number(curve.density[i]) << '\n';
    }
}

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    if (r.rank_correlation) j["rank_correlation"] = *r.rank_correlation;
    if (r.rmse_value) j["rmse"] = *r.rmse_value;
    if (r.kl_divergence) j["kl_divergence"] = *r.kl_divergence;
    j["min"] = r.min_score;
    j["max"] = r.max_score;
    if (r.pct_within_bounds) j["pct_within_bounds"] = *r.pct_within_bounds;
    nlohmann::ordered_json corr;
    for (const auto& [name, rho] : r.correlations) {
        if (rho) corr[name] = *rho;
    }
    j["feature_correlations"] = std::move(corr);
    return j;
}

}  // namespace scorecraft
