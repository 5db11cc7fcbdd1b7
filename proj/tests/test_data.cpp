#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <set>

#include "scorecraft/data.hpp"

using namespace scorecraft;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents)
        : path("scorecraft_test_" + name) {
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("synthetic labels follow the generating formula") {
    CHECK(synthetic_label(10, 10, 10, 10) == 310.0);
    CHECK(synthetic_label(0, 0, 0, 0) == 0.0);

    Dataset d = synth_generate({.n = 500, .seed = 42});
    REQUIRE(d.labels.has_value());
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        const double expect =
            synthetic_label(d.rows(r, 0), d.rows(r, 1), d.rows(r, 2), d.rows(r, 3));
        CHECK(std::abs((*d.labels)[r] - expect) < 1e-9);
    }
}

TEST_CASE("synthetic generation is deterministic per seed") {
    Dataset a = synth_generate({.n = 200, .seed = 42});
    Dataset b = synth_generate({.n = 200, .seed = 42});
    CHECK(a.rows.data() == b.rows.data());
    CHECK(*a.labels == *b.labels);

    Dataset c = synth_generate({.n = 200, .seed = 43});
    CHECK(a.rows.data() != c.rows.data());
}

TEST_CASE("synthetic feature moments are near the target distribution") {
    const std::size_t n = 10000;
    Dataset d = synth_generate({.n = n, .seed = 7});
    for (std::size_t c = 0; c < 4; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += d.rows(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double diff = d.rows(r, c) - mean;
            var += diff * diff;
        }
        var /= static_cast<double>(n);
        CHECK(std::abs(mean - 10.0) < 10.0 * std::sqrt(3.0 / static_cast<double>(n)));
        CHECK(std::abs(var - 3.0) < 0.2 * 3.0);
    }
}

TEST_CASE("csv loading with a label column") {
    TempFile f("basic.csv", "a,b,score\n1,2,3\n4,5,6\n7,8,9\n");
    Dataset d = load_csv(f.path, "score");
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(d.n_rows() == 3);
    CHECK(d.n_features() == 2);
    REQUIRE(d.labels.has_value());
    CHECK(*d.labels == std::vector<double>{3.0, 6.0, 9.0});
    CHECK(d.rows(2, 1) == 8.0);
}

TEST_CASE("csv parse errors carry the location") {
    TempFile f("bad.csv", "a,b\n1,2\n3,N/A\n");
    try {
        load_csv(f.path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("N/A") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("column 2") != std::string::npos);
    }
}

TEST_CASE("missing label column is a config error") {
    TempFile f("nolabel.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(load_csv(f.path, "score"), ConfigError);
}

TEST_CASE("empty file is a format error") {
    TempFile f("empty.csv", "");
    CHECK_THROWS_AS(load_csv(f.path), ParseError);
}

TEST_CASE("split is a seeded partition") {
    Dataset d = synth_generate({.n = 10, .seed = 1});
    auto [train, test] = split(d, 0.7, 99);
    CHECK(train.n_rows() == 7);
    CHECK(test.n_rows() == 3);

    auto [train2, test2] = split(d, 0.7, 99);
    CHECK(train.rows.data() == train2.rows.data());
    CHECK(test.rows.data() == test2.rows.data());

    // union of the split equals the original multiset of rows
    std::multiset<double> original, recombined;
    for (std::size_t r = 0; r < d.n_rows(); ++r) original.insert(d.rows(r, 0));
    for (std::size_t r = 0; r < train.n_rows(); ++r) recombined.insert(train.rows(r, 0));
    for (std::size_t r = 0; r < test.n_rows(); ++r) recombined.insert(test.rows(r, 0));
    CHECK(original == recombined);

    CHECK_THROWS_AS(split(d, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split(d, 1.0, 1), ConfigError);
}

TEST_CASE("split indices agree with split") {
    Dataset d = synth_generate({.n = 25, .seed = 3});
    auto idx = split_indices(d.n_rows(), 0.7, 5);
    auto [train, test] = split(d, 0.7, 5);
    Dataset via_idx = select_rows(d, idx.train);
    CHECK(via_idx.rows.data() == train.rows.data());
    CHECK(idx.train.size() + idx.test.size() == d.n_rows());
}
