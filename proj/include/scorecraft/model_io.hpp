#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scorecraft/errors.hpp"
#include "scorecraft/features.hpp"
#include "scorecraft/model.hpp"

namespace scorecraft {

// Everything needed to score new data: the network, the feature pipeline it
// was trained behind, an optional post-training rescale, and a digest of the
// constraint config used (for provenance checks).
struct ModelBundle {
    MonotoneMlp model;
    FeaturePipeline pipeline;
    std::string config_digest;
    std::optional<AffineRescale> rescale;
};

namespace detail {

inline nlohmann::json tensor_to_json(const Tensor& t) {
    return nlohmann::json(t.data());
}

inline Tensor tensor_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
    std::vector<double> data = j.get<std::vector<double>>();
    if (data.size() != rows * cols) {
        throw ParseError("model tensor has " + std::to_string(data.size()) +
                         " entries, expected " + std::to_string(rows * cols));
    }
    return Tensor(rows, cols, std::move(data));
}

}  // namespace detail

inline nlohmann::json to_json(const ModelBundle& bundle) {
    const MonotoneMlp& m = bundle.model;
    nlohmann::json j;
    j["schema_version"] = 1;
    j["layer_dims"] = m.layer_dims;
    j["monotone_flag"] = m.monotone;
    j["log_weights"] = {detail::tensor_to_json(m.log_weights[0]),
                        detail::tensor_to_json(m.log_weights[1]),
                        detail::tensor_to_json(m.log_weights[2])};
    j["biases"] = {detail::tensor_to_json(m.biases[0]), detail::tensor_to_json(m.biases[1]),
                   detail::tensor_to_json(m.biases[2])};

    nlohmann::json features = nlohmann::json::array();
    for (const FeatureSpec& f : bundle.pipeline.features) {
        nlohmann::json fj;
        fj["name"] = f.name;
        fj["direction"] = to_string(f.direction);
        if (f.tier) fj["tier"] = *f.tier;
        features.push_back(std::move(fj));
    }
    j["feature_pipeline"] = {
        {"features", std::move(features)},
        {"stats", {{"min", bundle.pipeline.stats.min}, {"max", bundle.pipeline.stats.max}}},
    };
    j["constraint_config_digest"] = bundle.config_digest;
    if (bundle.rescale) {
        j["rescale"] = {{"source_min", bundle.rescale->source_min},
                        {"source_max", bundle.rescale->source_max},
                        {"a", bundle.rescale->a},
                        {"b", bundle.rescale->b}};
    }
    return j;
}

inline ModelBundle model_bundle_from_json(const nlohmann::json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1) {
        throw ParseError("unsupported model schema version");
    }
    ModelBundle bundle;
    MonotoneMlp& m = bundle.model;
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    if (dims.size() != 4 || dims[3] != 1) throw ParseError("model layer_dims must be [n,h1,h2,1]");
    m.layer_dims = {dims[0], dims[1], dims[2], dims[3]};
    m.monotone = j.at("monotone_flag").get<bool>();
    for (std::size_t layer = 0; layer < 3; ++layer) {
        m.log_weights[layer] = detail::tensor_from_json(j.at("log_weights").at(layer),
                                                        m.layer_dims[layer],
                                                        m.layer_dims[layer + 1]);
        m.biases[layer] =
            detail::tensor_from_json(j.at("biases").at(layer), 1, m.layer_dims[layer + 1]);
    }

    const nlohmann::json& pipeline = j.at("feature_pipeline");
    for (const nlohmann::json& fj : pipeline.at("features")) {
        FeatureSpec f;
        f.name = fj.at("name").get<std::string>();
        f.direction = direction_from_string(fj.at("direction").get<std::string>());
        if (fj.contains("tier")) f.tier = fj.at("tier").get<std::size_t>();
        bundle.pipeline.features.push_back(std::move(f));
    }
    bundle.pipeline.stats.min = pipeline.at("stats").at("min").get<std::vector<double>>();
    bundle.pipeline.stats.max = pipeline.at("stats").at("max").get<std::vector<double>>();
    if (bundle.pipeline.features.size() != m.n_features() ||
        bundle.pipeline.stats.min.size() != m.n_features() ||
        bundle.pipeline.stats.max.size() != m.n_features()) {
        throw ParseError("feature pipeline does not match model input width");
    }

    bundle.config_digest = j.value("constraint_config_digest", std::string{});
    if (j.contains("rescale")) {
        const nlohmann::json& r = j.at("rescale");
        bundle.rescale = AffineRescale{r.at("source_min").get<double>(),
                                       r.at("source_max").get<double>(),
                                       r.at("a").get<double>(), r.at("b").get<double>()};
    }
    return bundle;
}

inline void save_model(const ModelBundle& bundle, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write model file '" + path + "'");
    out << to_json(bundle).dump(2) << '\n';
}

inline ModelBundle load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_bundle_from_json(j);
}

// Scores raw feature rows through the stored pipeline, network and optional
// rescale; the exact map the CLI's score subcommand applies.
inline ScoreBatch score_with_bundle(const ModelBundle& bundle, const Tensor& raw) {
    Tensor x = bundle.pipeline.transform(raw);
    ScoreBatch scores = score_rows(bundle.model, x);
    if (bundle.rescale) {
        for (double& s : scores) s = (*bundle.rescale)(s);
    }
    return scores;
}

}  // namespace scorecraft
