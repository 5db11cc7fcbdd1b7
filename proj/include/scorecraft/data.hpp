#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scorecraft/errors.hpp"
#include "scorecraft/tensor.hpp"

namespace scorecraft {

// Named numeric feature columns with an optional ground-truth label column.
struct Dataset {
    std::vector<std::string> feature_names;
    Tensor rows;  // n_rows x n_features
    std::optional<std::vector<double>> labels;

    std::size_t n_rows() const { return rows.rows(); }
    std::size_t n_features() const { return rows.cols(); }
};

// Four i.i.d. Gaussian features combined into y = x1 + a1*x2 + a2*x3 + x4^2.
struct SyntheticSpec {
    std::size_t n = 10000;
    double mean = 10.0;
    double variance = 3.0;  // variance, not std
    double a1 = 5.0;
    double a2 = 15.0;
    std::uint64_t seed = 0;
};

inline double synthetic_label(double x1, double x2, double x3, double x4,
                              double a1 = 5.0, double a2 = 15.0) {
    return x1 + a1 * x2 + a2 * x3 + x4 * x4;
}

inline Dataset synth_generate(const SyntheticSpec& spec) {
    if (spec.n < 1) throw ConfigError("synthetic dataset needs n >= 1");
    if (spec.variance <= 0.0) throw ConfigError("synthetic dataset needs variance > 0");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(spec.mean, std::sqrt(spec.variance));

    Dataset d;
    d.feature_names = {"x1", "x2", "x3", "x4"};
    d.rows = Tensor(spec.n, 4);
    std::vector<double> labels(spec.n);
    for (std::size_t r = 0; r < spec.n; ++r) {
        for (std::size_t c = 0; c < 4; ++c) d.rows(r, c) = gauss(rng);
        labels[r] = synthetic_label(d.rows(r, 0), d.rows(r, 1), d.rows(r, 2), d.rows(r, 3),
                                    spec.a1, spec.a2);
    }
    d.labels = std::move(labels);
    return d;
}

namespace detail {

// Shortest decimal representation that round-trips to the same double.
inline std::string format_number(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        double back = 0.0;
        std::from_chars(buf, buf + std::strlen(buf), back);
        if (back == v) break;
    }
    return buf;
}

inline double parse_cell(const std::string& cell, std::size_t line, std::size_t column) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    // tolerate surrounding spaces, nothing else
    while (begin < end && *begin == ' ') ++begin;
    while (end > begin && *(end - 1) == ' ') --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || begin == end) {
        throw ParseError("non-numeric cell '" + cell + "' at line " + std::to_string(line) +
                         ", column " + std::to_string(column + 1));
    }
    return value;
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace detail

// Strict CSV: UTF-8, one header row, comma separators, '.' decimal point,
// every cell numeric. When label_column is given that column becomes labels.
inline Dataset load_csv(const std::string& path,
                        const std::optional<std::string>& label_column = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header row in '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = detail::split_line(line);
    if (header.empty()) throw ParseError("missing header row in '" + path + "'");

    std::optional<std::size_t> label_index;
    if (label_column) {
        auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end()) {
            throw ConfigError("label column '" + *label_column + "' not found in '" + path + "'");
        }
        label_index = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::vector<double>> raw;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = detail::split_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        }
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            values[c] = detail::parse_cell(cells[c], line_no, c);
        }
        raw.push_back(std::move(values));
    }

    Dataset d;
    const std::size_t n_features = header.size() - (label_index ? 1 : 0);
    d.rows = Tensor(raw.size(), n_features);
    if (label_index) d.labels = std::vector<double>(raw.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (label_index && c == *label_index) continue;
        d.feature_names.push_back(header[c]);
    }
    for (std::size_t r = 0; r < raw.size(); ++r) {
        std::size_t out_c = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (label_index && c == *label_index) {
                (*d.labels)[r] = raw[r][c];
            } else {
                d.rows(r, out_c++) = raw[r][c];
            }
        }
    }
    return d;
}

// Row indices of a seeded shuffle-then-partition split.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

inline SplitIndices split_indices(std::size_t n_rows, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> order(n_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n_rows)));
    SplitIndices idx;
    idx.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    idx.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return idx;
}

inline Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& indices) {
    Dataset part;
    part.feature_names = d.feature_names;
    part.rows = Tensor(indices.size(), d.n_features());
    if (d.labels) part.labels = std::vector<double>(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t c = 0; c < d.n_features(); ++c) part.rows(i, c) = d.rows(indices[i], c);
        if (d.labels) (*part.labels)[i] = (*d.labels)[indices[i]];
    }
    return part;
}

// Seeded uniform shuffle then partition; train gets floor(fraction * n) rows.
inline std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction,
                                         std::uint64_t seed) {
    const SplitIndices idx = split_indices(d.n_rows(), train_fraction, seed);
    return {select_rows(d, idx.train), select_rows(d, idx.test)};
}

// Writes the dataset in the same strict CSV dialect load_csv reads; the
// label column, when present, is appended under `label_name`.
inline void save_csv(const Dataset& d, const std::string& path,
                     const std::string& label_name = "y") {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    for (std::size_t c = 0; c < d.feature_names.size(); ++c) {
        if (c) out << ',';
        out << d.feature_names[c];
    }
    if (d.labels) out << (d.feature_names.empty() ? "" : ",") << label_name;
    out << '\n';
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        for (std::size_t c = 0; c < d.n_features(); ++c) {
            if (c) out << ',';
            out << detail::format_number(d.rows(r, c));
        }
        if (d.labels) out << ',' << detail::format_number((*d.labels)[r]);
        out << '\n';
    }
    if (!out) throw ParseError("failed while writing '" + path + "'");
}

}  // namespace scorecraft
