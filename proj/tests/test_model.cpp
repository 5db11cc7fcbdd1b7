#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scorecraft/model.hpp"
#include "scorecraft/model_io.hpp"

using namespace scorecraft;

namespace {

Tensor random_inputs(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Tensor x(rows, cols);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = unit(rng);
    return x;
}

double score_one(const MonotoneMlp& m, const Tensor& x_row) {
    return score_rows(m, x_row)[0];
}

}  // namespace

TEST_CASE("init is deterministic per seed and positive when monotone") {
    MonotoneMlp a = init_model(4, {64, 64}, true, 7);
    MonotoneMlp b = init_model(4, {64, 64}, true, 7);
    for (std::size_t layer = 0; layer < 3; ++layer) {
        CHECK(a.log_weights[layer].data() == b.log_weights[layer].data());
        for (double w : a.log_weights[layer].data()) {
            CHECK(std::exp(w) > 0.0);
        }
        for (double bias : a.biases[layer].data()) CHECK(bias == 0.0);
    }
    MonotoneMlp c = init_model(4, {64, 64}, true, 8);
    CHECK(a.log_weights[0].data() != c.log_weights[0].data());

    CHECK_THROWS_AS(init_model(0, {4, 4}, true, 1), ConfigError);
    CHECK_THROWS_AS(init_model(3, {0, 4}, true, 1), ConfigError);
}

TEST_CASE("log-domain weights scatter around 1/fan_in") {
    MonotoneMlp m = init_model(8, {16, 16}, true, 3);
    const double base = std::log(1.0 / 8.0);
    for (double w : m.log_weights[0].data()) {
        CHECK(w >= base - 0.5);
        CHECK(w <= base + 0.5);
    }
}

TEST_CASE("forward is monotone in every coordinate") {
    MonotoneMlp m = init_model(5, {16, 16}, true, 21);
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        Tensor x(1, 5);
        Tensor y(1, 5);
        for (std::size_t c = 0; c < 5; ++c) {
            x(0, c) = unit(rng);
            y(0, c) = x(0, c) + unit(rng) * (1.0 - x(0, c));  // y >= x componentwise
        }
        CHECK(score_one(m, y) >= score_one(m, x) - 1e-9);
    }
}

TEST_CASE("zero input with zero biases scores zero") {
    MonotoneMlp m = init_model(4, {8, 8}, true, 2);
    Tensor x(1, 4);
    CHECK(score_one(m, x) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("forward shapes and mismatches") {
    MonotoneMlp m = init_model(3, {4, 4}, true, 5);
    Tensor batch = random_inputs(64, 3, 9);
    Graph g;
    ModelBinding b = bind_model(g, m);
    ForwardPass f = forward(g, b, m, batch);
    CHECK(g.value(f.scores).rows() == 64);
    CHECK(g.value(f.scores).cols() == 1);

    Tensor wrong = random_inputs(4, 2, 9);
    CHECK_THROWS_AS(forward(g, b, m, wrong), ShapeError);
}

TEST_CASE("input gradients are strictly positive for a monotone model") {
    MonotoneMlp m = init_model(4, {12, 12}, true, 17);
    Tensor x = random_inputs(1000, 4, 4);
    Graph g;
    NodeRef grads = input_gradients(g, m, x);
    const Tensor& gv = g.value(grads);
    REQUIRE(gv.rows() == 1000);
    REQUIRE(gv.cols() == 4);
    for (std::size_t i = 0; i < gv.size(); ++i) CHECK(gv[i] > 0.0);
}

TEST_CASE("unit-weight single-unit chain has gradient one on the positive branch") {
    MonotoneMlp m = init_model(3, {1, 1}, true, 1);
    for (auto& w : m.log_weights) w.fill(0.0);  // effective weights exp(0) = 1
    Tensor x{{0.2, 0.4, 0.9}};
    Graph g;
    const Tensor& gv = g.value(input_gradients(g, m, x));
    for (std::size_t c = 0; c < 3; ++c) CHECK(gv(0, c) == Catch::Approx(1.0).margin(1e-12));
    CHECK(score_one(m, x) == Catch::Approx(1.5).margin(1e-12));
}

TEST_CASE("input gradients match finite differences of the forward pass") {
    for (bool monotone : {true, false}) {
        MonotoneMlp m = init_model(4, {8, 8}, monotone, 23);
        Tensor points = random_inputs(50, 4, 51);
        Graph g;
        const Tensor gv = g.value(input_gradients(g, m, points));
        for (std::size_t r = 0; r < 50; ++r) {
            for (std::size_t c = 0; c < 4; ++c) {
                Tensor lo(1, 4), hi(1, 4);
                for (std::size_t k = 0; k < 4; ++k) lo(0, k) = hi(0, k) = points(r, k);
                lo(0, c) -= 1e-6;
                hi(0, c) += 1e-6;
                const double fd = (score_one(m, hi) - score_one(m, lo)) / 2e-6;
                CHECK(oracles::relative_error(gv(r, c), fd) < 1e-4);
            }
        }
    }
}

TEST_CASE("rescale maps the observed range onto [a, b]") {
    ScoreBatch out = rescale_scores({2.0, 4.0, 6.0}, 0.0, 10.0);
    CHECK(out == ScoreBatch{0.0, 5.0, 10.0});

    ScoreBatch spanning = rescale_scores({0.0, 5.0, 10.0}, 0.0, 10.0);
    CHECK(spanning[0] == Catch::Approx(0.0));
    CHECK(spanning[1] == Catch::Approx(5.0));
    CHECK(spanning[2] == Catch::Approx(10.0));

    CHECK_THROWS_AS(rescale_scores({5.0, 5.0, 5.0}, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(rescale_scores({1.0, 2.0}, 3.0, 3.0), ConfigError);
}

TEST_CASE("rescale preserves ranks") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> val(-100.0, 100.0);
    ScoreBatch s(200);
    for (auto& v : s) v = val(rng);
    ScoreBatch r = rescale_scores(s, 0.0, 1.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            CHECK((s[i] < s[j]) == (r[i] < r[j]));
        }
    }
}

TEST_CASE("model bundle round-trips exactly through JSON") {
    MonotoneMlp m = init_model(3, {6, 5}, true, 77);
    // touch the weights so they are not the init pattern
    m.biases[1](0, 2) = -0.1234567890123456789;
    m.log_weights[2](4, 0) = 1.0 / 3.0;

    ModelBundle bundle;
    bundle.model = m;
    bundle.pipeline.features = {{"alpha", Direction::Positive, 0},
                                {"beta", Direction::Negative, {}},
                                {"gamma", Direction::ConvexQuadratic, 2}};
    bundle.pipeline.stats.min = {0.0, -1.5, 1e-17};
    bundle.pipeline.stats.max = {10.0, 2.5, 1.0 + 1e-15};
    bundle.config_digest = "fnv1a:deadbeef";
    bundle.rescale = AffineRescale{-0.3333333333333333, 7.7, 0.0, 10.0};

    const nlohmann::json j = to_json(bundle);
    ModelBundle back = model_bundle_from_json(nlohmann::json::parse(j.dump()));

    for (std::size_t layer = 0; layer < 3; ++layer) {
        CHECK(back.model.log_weights[layer].data() == m.log_weights[layer].data());
        CHECK(back.model.biases[layer].data() == m.biases[layer].data());
    }
    CHECK(back.model.monotone == m.monotone);
    CHECK(back.pipeline.stats.min == bundle.pipeline.stats.min);
    CHECK(back.pipeline.stats.max == bundle.pipeline.stats.max);
    CHECK(back.pipeline.features[2].direction == Direction::ConvexQuadratic);
    CHECK(back.pipeline.features[0].tier == std::optional<std::size_t>{0});
    CHECK(!back.pipeline.features[1].tier.has_value());
    CHECK(back.config_digest == bundle.config_digest);
    REQUIRE(back.rescale.has_value());
    CHECK(back.rescale->source_min == bundle.rescale->source_min);

    // serialized form is itself stable
    CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("bundle scoring matches pipeline + forward + rescale") {
    MonotoneMlp m = init_model(2, {4, 4}, true, 13);
    ModelBundle bundle;
    bundle.model = m;
    bundle.pipeline.features = {{"a", Direction::Positive, {}}, {"b", Direction::Negative, {}}};
    bundle.pipeline.stats.min = {0.0, 0.0};
    bundle.pipeline.stats.max = {1.0, 1.0};

    Tensor raw{{0.25, 0.5}, {0.75, 0.1}};
    ScoreBatch direct = score_rows(m, bundle.pipeline.transform(raw));
    ScoreBatch via_bundle = score_with_bundle(bundle, raw);
    CHECK(direct == via_bundle);
}
