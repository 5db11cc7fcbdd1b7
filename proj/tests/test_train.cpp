#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "scorecraft/config.hpp"
#include "scorecraft/eval.hpp"
#include "scorecraft/features.hpp"
#include "scorecraft/train.hpp"

using namespace scorecraft;

namespace {

// Small synthetic pipeline shared by the loop tests.
Dataset prepared_synthetic(std::size_t n, std::uint64_t seed) {
    Dataset raw = synth_generate({.n = n, .seed = seed});
    auto [normalized, stats] = fit_normalize(raw);
    return normalized;  // all directions positive, no transform needed
}

ConstraintConfig small_config() {
    ConstraintConfig c = preset("synthetic");
    c.train.epochs = 5;
    c.train.hidden = {16, 16};
    c.train.seed = 7;
    return c;
}

}  // namespace

TEST_CASE("one adam step matches the hand-computed update") {
    const double lr = 1e-3;
    const AdamParams p;
    detail::AdamOptimizer adam(p, lr);

    Tensor theta{{0.5, -0.25}};
    Tensor grad{{0.2, -0.4}};
    Tensor expect = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double m = (1.0 - p.beta1) * grad[i];
        const double v = (1.0 - p.beta2) * grad[i] * grad[i];
        const double mhat = m / (1.0 - p.beta1);
        const double vhat = v / (1.0 - p.beta2);
        expect[i] = theta[i] - lr * mhat / (std::sqrt(vhat) + p.eps);
    }
    adam.step({&theta}, {&grad});
    for (std::size_t i = 0; i < theta.size(); ++i) {
        CHECK(theta[i] == Catch::Approx(expect[i]).margin(1e-12));
    }

    // second step with the same gradient
    Tensor expect2 = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double m = p.beta1 * (1.0 - p.beta1) * grad[i] + (1.0 - p.beta1) * grad[i];
        const double v =
            p.beta2 * (1.0 - p.beta2) * grad[i] * grad[i] + (1.0 - p.beta2) * grad[i] * grad[i];
        const double mhat = m / (1.0 - p.beta1 * p.beta1);
        const double vhat = v / (1.0 - p.beta2 * p.beta2);
        expect2[i] = theta[i] - lr * mhat / (std::sqrt(vhat) + p.eps);
    }
    adam.step({&theta}, {&grad});
    for (std::size_t i = 0; i < theta.size(); ++i) {
        CHECK(theta[i] == Catch::Approx(expect2[i]).margin(1e-12));
    }
}

TEST_CASE("sgd with momentum accumulates velocity") {
    detail::SgdOptimizer sgd(SgdParams{0.5}, 0.1);
    Tensor theta{{1.0}};
    Tensor grad{{2.0}};
    sgd.step({&theta}, {&grad});
    CHECK(theta[0] == Catch::Approx(1.0 - 0.1 * 2.0).margin(1e-15));
    sgd.step({&theta}, {&grad});
    CHECK(theta[0] == Catch::Approx(0.8 - 0.1 * (0.5 * 2.0 + 2.0)).margin(1e-15));
}

TEST_CASE("training is deterministic per seed") {
    Dataset data = prepared_synthetic(256, 5);
    ConstraintConfig cfg = small_config();
    cfg.train.epochs = 3;

    MonotoneMlp a = init_model(4, cfg.train.hidden, true, cfg.train.seed);
    MonotoneMlp b = init_model(4, cfg.train.hidden, true, cfg.train.seed);
    TrainReport ra = train(a, data, cfg, cfg.train);
    TrainReport rb = train(b, data, cfg, cfg.train);

    for (std::size_t layer = 0; layer < 3; ++layer) {
        CHECK(a.log_weights[layer].data() == b.log_weights[layer].data());
        CHECK(a.biases[layer].data() == b.biases[layer].data());
    }
    REQUIRE(ra.epochs.size() == rb.epochs.size());
    for (std::size_t e = 0; e < ra.epochs.size(); ++e) {
        CHECK(ra.epochs[e].total == rb.epochs[e].total);
    }
}

TEST_CASE("loss decreases on the shipped synthetic constraints") {
    Dataset data = prepared_synthetic(512, 11);
    ConstraintConfig cfg = small_config();
    MonotoneMlp m = init_model(4, cfg.train.hidden, true, cfg.train.seed);
    TrainReport r = train(m, data, cfg, cfg.train);
    REQUIRE(r.epochs.size() == cfg.train.epochs);
    CHECK(r.epochs.back().total < r.epochs.front().total);
}

TEST_CASE("weights stay positive under training in monotone mode") {
    Dataset data = prepared_synthetic(128, 13);
    ConstraintConfig cfg = small_config();
    cfg.train.epochs = 2;
    MonotoneMlp m = init_model(4, cfg.train.hidden, true, 1);
    train(m, data, cfg, cfg.train);
    for (const Tensor& w : m.log_weights) {
        for (double v : w.data()) {
            CHECK(std::isfinite(v));
            CHECK(std::exp(v) > 0.0);
        }
    }
}

TEST_CASE("already-satisfied bound-only objective is a fixed point") {
    Dataset data = prepared_synthetic(64, 17);
    ConstraintConfig cfg;
    cfg.features = preset("synthetic").features;
    for (auto& f : cfg.features) f.tier.reset();
    cfg.bounds = {{-1000.0, 1000.0}};  // init scores are tiny, well inside
    cfg.weights = {1.0, 0.0, 0.0, 0.0};
    cfg.train.epochs = 3;
    cfg.train.hidden = {8, 8};

    MonotoneMlp m = init_model(4, {8, 8}, true, 23);
    MonotoneMlp before = m;
    TrainReport r = train(m, data, cfg, cfg.train);
    for (const EpochLosses& e : r.epochs) CHECK(e.total == 0.0);
    for (std::size_t layer = 0; layer < 3; ++layer) {
        CHECK(m.log_weights[layer].data() == before.log_weights[layer].data());
        CHECK(m.biases[layer].data() == before.biases[layer].data());
    }
}

TEST_CASE("all-zero weights warn and change nothing") {
    Dataset data = prepared_synthetic(64, 19);
    ConstraintConfig cfg = small_config();
    cfg.weights = {0.0, 0.0, 0.0, 0.0};
    cfg.train.epochs = 1;
    MonotoneMlp m = init_model(4, cfg.train.hidden, true, 3);
    MonotoneMlp before = m;
    TrainReport r = train(m, data, cfg, cfg.train);
    REQUIRE(!r.warnings.empty());
    CHECK(m.log_weights[0].data() == before.log_weights[0].data());
}

TEST_CASE("incomplete tail batches below two rows are skipped") {
    Dataset data = prepared_synthetic(65, 29);  // 64 + 1 leftover row
    ConstraintConfig cfg = small_config();
    cfg.train.epochs = 1;
    cfg.train.batch_size = 64;
    MonotoneMlp m = init_model(4, cfg.train.hidden, true, 5);
    CHECK_NOTHROW(train(m, data, cfg, cfg.train));

    // a batch size larger than every usable chunk must be reported
    Dataset tiny = prepared_synthetic(3, 31);
    ConstraintConfig cfg2 = small_config();
    cfg2.train.batch_size = 2;
    MonotoneMlp m2 = init_model(4, cfg2.train.hidden, true, 5);
    CHECK_NOTHROW(train(m2, tiny, cfg2, cfg2.train));
}

TEST_CASE("divergence is reported with the step and components") {
    Dataset data = prepared_synthetic(64, 37);
    ConstraintConfig cfg = small_config();
    cfg.train.epochs = 50;
    cfg.train.learning_rate = 1e7;  // guaranteed blow-up through exp()
    MonotoneMlp m = init_model(4, cfg.train.hidden, true, 7);
    try {
        train(m, data, cfg, cfg.train);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("step") != std::string::npos);
        CHECK(msg.find("bound=") != std::string::npos);
    }
}

TEST_CASE("supervised training fits a linear target") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = 256;
    Dataset data;
    data.feature_names = {"a", "b"};
    data.rows = Tensor(n, 2);
    std::vector<double> labels(n);
    for (std::size_t r = 0; r < n; ++r) {
        data.rows(r, 0) = unit(rng);
        data.rows(r, 1) = unit(rng);
        labels[r] = 2.0 * data.rows(r, 0) + data.rows(r, 1);
    }
    data.labels = labels;

    TrainConfig tc;
    tc.epochs = 200;
    tc.hidden = {16, 16};
    tc.learning_rate = 3e-3;
    tc.seed = 1;
    MonotoneMlp m = init_model(2, tc.hidden, false, tc.seed);
    train_supervised(m, data, tc);

    ScoreBatch pred = score_rows(m, data.rows);
    const double err = rmse(pred, labels);
    auto [mu, sigma] = detail::fit_moments(labels);
    (void)mu;
    CHECK(err < 0.05 * sigma);
}

TEST_CASE("supervised training drives constant labels to constant output") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Dataset data;
    data.feature_names = {"a", "b", "c"};
    data.rows = Tensor(64, 3);
    for (std::size_t i = 0; i < data.rows.size(); ++i) data.rows[i] = unit(rng);
    data.labels = std::vector<double>(64, 0.5);

    TrainConfig tc;
    tc.epochs = 150;
    tc.hidden = {8, 8};
    tc.learning_rate = 5e-3;
    tc.seed = 2;
    MonotoneMlp m = init_model(3, tc.hidden, false, tc.seed);
    train_supervised(m, data, tc);
    ScoreBatch pred = score_rows(m, data.rows);
    CHECK(rmse(pred, *data.labels) < 0.02);
}

TEST_CASE("supervised training requires labels") {
    Dataset data = prepared_synthetic(32, 41);
    data.labels.reset();
    TrainConfig tc;
    MonotoneMlp m = init_model(4, {8, 8}, false, 1);
    CHECK_THROWS_AS(train_supervised(m, data, tc), ConfigError);
}
