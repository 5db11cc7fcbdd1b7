#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "scorecraft/features.hpp"

using namespace scorecraft;

namespace {

Dataset single_column(std::vector<double> values) {
    Dataset d;
    d.feature_names = {"a"};
    const std::size_t n = values.size();
    d.rows = Tensor(n, 1, std::move(values));
    return d;
}

}  // namespace

TEST_CASE("min-max normalization hits the endpoints") {
    auto [out, stats] = fit_normalize(single_column({0.0, 5.0, 10.0}));
    CHECK(out.rows(0, 0) == 0.0);
    CHECK(out.rows(1, 0) == 0.5);
    CHECK(out.rows(2, 0) == 1.0);
    CHECK(stats.min[0] == 0.0);
    CHECK(stats.max[0] == 10.0);
}

TEST_CASE("constant column is rejected by name") {
    try {
        fit_normalize(single_column({7.0, 7.0, 7.0}));
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    }
}

TEST_CASE("stored stats clamp unseen values") {
    CHECK(apply_stats(12.0, 0.0, 10.0) == 1.0);
    CHECK(apply_stats(-3.0, 0.0, 10.0) == 0.0);
    CHECK(apply_stats(4.0, 0.0, 10.0) == 0.4);
}

TEST_CASE("direction transforms") {
    CHECK(apply_direction(0.3, Direction::Negative) == Catch::Approx(0.7));
    CHECK(apply_direction(0.2, Direction::ConvexLinear) == Catch::Approx(0.2));
    CHECK(apply_direction(0.8, Direction::ConvexLinear) == Catch::Approx(0.2));
    // both branches meet at 0.5
    CHECK(apply_direction(0.5, Direction::ConvexQuadratic) == Catch::Approx(0.25));
    CHECK(apply_direction(0.5, Direction::ConvexLinear) == Catch::Approx(0.5));
}

TEST_CASE("transforms map [0,1] into [0,1], negative is an involution") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = unit(rng);
        for (Direction d : {Direction::Positive, Direction::Negative, Direction::ConvexLinear,
                            Direction::ConvexQuadratic}) {
            const double y = apply_direction(x, d);
            CHECK(y >= 0.0);
            CHECK(y <= 1.0);
        }
        CHECK(apply_direction(apply_direction(x, Direction::Negative), Direction::Negative) ==
              Catch::Approx(x).margin(1e-12));
        CHECK(apply_direction(x, Direction::Positive) == x);
    }
}

TEST_CASE("convex transforms are continuous and symmetric about 0.5") {
    for (Direction d : {Direction::ConvexLinear, Direction::ConvexQuadratic}) {
        for (double x = 0.0; x <= 0.5 + 1e-9; x += 0.01) {
            CHECK(apply_direction(x, d) ==
                  Catch::Approx(apply_direction(1.0 - x, d)).margin(1e-12));
        }
        const double left = apply_direction(0.5 - 1e-9, d);
        const double right = apply_direction(0.5 + 1e-9, d);
        CHECK(left == Catch::Approx(right).margin(1e-8));
    }
}

TEST_CASE("pipeline transform applies stats then direction") {
    FeaturePipeline p;
    p.features = {{"up", Direction::Positive, {}}, {"down", Direction::Negative, {}}};
    p.stats.min = {0.0, 0.0};
    p.stats.max = {10.0, 100.0};

    Tensor raw{{5.0, 25.0}, {20.0, -1.0}};
    Tensor out = p.transform(raw);
    CHECK(out(0, 0) == Catch::Approx(0.5));
    CHECK(out(0, 1) == Catch::Approx(0.75));
    CHECK(out(1, 0) == 1.0);  // clamped
    CHECK(out(1, 1) == 1.0);  // clamped then inverted

    Tensor bad{{1.0}};
    CHECK_THROWS_AS(p.transform(bad), ShapeError);
}
