// scorecraft command line: synthesize data, train scoring models against
// expert constraints, score new rows, evaluate and report.
//
// Exit codes: 0 success, 2 usage or validation failure, 3 numerical
// divergence during training.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scorecraft/config.hpp"
#include "scorecraft/data.hpp"
#include "scorecraft/errors.hpp"
#include "scorecraft/eval.hpp"
#include "scorecraft/features.hpp"
#include "scorecraft/model.hpp"
#include "scorecraft/model_io.hpp"
#include "scorecraft/train.hpp"

namespace {

using namespace scorecraft;

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("SCORECRAFT_LOG");
    if (!env) return LogLevel::Error;
    const std::string v(env);
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Error;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << '\n';
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::cerr << "[debug] " << msg << '\n';
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ParseError("failed while writing '" + path + "'");
}

// model.json -> model.report.json
std::string report_path_for(const std::string& model_path) {
    const std::string suffix = ".json";
    if (model_path.size() > suffix.size() &&
        model_path.compare(model_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return model_path.substr(0, model_path.size() - suffix.size()) + ".report.json";
    }
    return model_path + ".report.json";
}

// Projects the dataset onto the named columns, in that order. Missing
// columns are an error that also names any extras present in the file.
Dataset project_columns(const Dataset& d, const std::vector<std::string>& wanted) {
    std::vector<std::size_t> indices;
    std::vector<std::string> missing;
    for (const std::string& name : wanted) {
        auto it = std::find(d.feature_names.begin(), d.feature_names.end(), name);
        if (it == d.feature_names.end()) {
            missing.push_back(name);
        } else {
            indices.push_back(static_cast<std::size_t>(it - d.feature_names.begin()));
        }
    }
    std::vector<std::string> extra;
    for (const std::string& name : d.feature_names) {
        if (std::find(wanted.begin(), wanted.end(), name) == wanted.end()) {
            extra.push_back(name);
        }
    }
    if (!missing.empty()) {
        std::string msg = "data is missing feature column(s):";
        for (const auto& m : missing) msg += " " + m;
        if (!extra.empty()) {
            msg += "; unmatched column(s) present:";
            for (const auto& e : extra) msg += " " + e;
        }
        throw ConfigError(msg);
    }
    if (!extra.empty()) {
        std::string names;
        for (const auto& e : extra) names += " " + e;
        log_info("ignoring unmatched data column(s):" + names);
    }

    Dataset out;
    out.feature_names = wanted;
    out.rows = Tensor(d.n_rows(), wanted.size());
    out.labels = d.labels;
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        for (std::size_t c = 0; c < indices.size(); ++c) {
            out.rows(r, c) = d.rows(r, indices[c]);
        }
    }
    return out;
}

struct ScoreRow {
    std::size_t row_id;
    double score;
};

void write_scores_csv(const std::vector<ScoreRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "row_id,score\n";
    for (const ScoreRow& r : rows) {
        out << r.row_id << ',' << detail::format_number(r.score) << '\n';
    }
}

std::vector<ScoreRow> read_scores_csv(const std::string& path) {
    Dataset d = load_csv(path);
    auto row_col = std::find(d.feature_names.begin(), d.feature_names.end(), "row_id");
    auto score_col = std::find(d.feature_names.begin(), d.feature_names.end(), "score");
    if (row_col == d.feature_names.end() || score_col == d.feature_names.end()) {
        throw ParseError("scores file '" + path + "' needs row_id and score columns");
    }
    const std::size_t ri = static_cast<std::size_t>(row_col - d.feature_names.begin());
    const std::size_t si = static_cast<std::size_t>(score_col - d.feature_names.begin());
    std::vector<ScoreRow> rows(d.n_rows());
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        rows[r] = {static_cast<std::size_t>(d.rows(r, ri)), d.rows(r, si)};
    }
    return rows;
}

std::vector<std::string> config_feature_names(const ConstraintConfig& cfg) {
    std::vector<std::string> names;
    for (const FeatureSpec& f : cfg.features) names.push_back(f.name);
    return names;
}

// ---------------------------------------------------------------- synth --

struct SynthArgs {
    std::size_t n = 10000;
    std::uint64_t seed = 0;
    std::string out;
};

int run_synth(const SynthArgs& args) {
    if (args.n < 1) throw ConfigError("--n must be at least 1");
    Dataset d = synth_generate({.n = args.n, .seed = args.seed});
    save_csv(d, args.out, "y");
    log_info("wrote " + std::to_string(args.n) + " synthetic rows to " + args.out);
    return 0;
}

// ---------------------------------------------------------------- train --

struct TrainArgs {
    std::string config_path;
    std::string data_path;
    std::string out_model;
    bool supervised = false;
    std::string label;
    bool no_monotone = false;
};

struct TrainedArtifacts {
    ModelBundle bundle;
    TrainReport report;
};

// Shared by the train subcommand and ablate: fit the pipeline on the full
// dataset, apply directions, split 70/30, train on the train part.
TrainedArtifacts train_pipeline(const ConstraintConfig& cfg, const TrainConfig& tc,
                                const Dataset& raw, bool monotone, bool supervised) {
    auto [normalized_all, stats] = fit_normalize(raw);
    FeaturePipeline pipeline{cfg.features, stats};

    Dataset transformed = normalized_all;
    for (std::size_t r = 0; r < transformed.n_rows(); ++r) {
        for (std::size_t c = 0; c < transformed.n_features(); ++c) {
            transformed.rows(r, c) =
                apply_direction(transformed.rows(r, c), cfg.features[c].direction);
        }
    }

    auto [train_part, test_part] = split(transformed, 0.7, tc.seed);
    log_debug("split " + std::to_string(train_part.n_rows()) + "/" +
              std::to_string(test_part.n_rows()) + " rows");

    TrainedArtifacts out;
    out.bundle.pipeline = pipeline;
    out.bundle.config_digest = config_digest(cfg);
    out.bundle.model = init_model(cfg.features.size(), tc.hidden, monotone, tc.seed);
    if (supervised) {
        out.report = train_supervised(out.bundle.model, train_part, tc);
    } else {
        out.report = train(out.bundle.model, train_part, cfg, tc);
    }
    for (const std::string& w : out.report.warnings) log_info("warning: " + w);

    if (cfg.rescale_after_training && cfg.bounds) {
        ScoreBatch train_scores = score_rows(out.bundle.model, train_part.rows);
        out.bundle.rescale = fit_rescale(train_scores, cfg.bounds->first, cfg.bounds->second);
    }
    return out;
}

int run_train(const TrainArgs& args) {
    if (args.supervised && args.label.empty()) {
        throw ConfigError("--supervised requires --label <column>");
    }
    ConstraintConfig cfg = parse_config(read_file(args.config_path));
    for (const std::string& w : config_warnings(cfg)) log_info("warning: " + w);

    std::optional<std::string> label;
    if (args.supervised) label = args.label;
    Dataset raw = load_csv(args.data_path, label);
    Dataset data = project_columns(raw, config_feature_names(cfg));

    const bool monotone = args.supervised ? false : !args.no_monotone;
    TrainedArtifacts artifacts = train_pipeline(cfg, cfg.train, data, monotone, args.supervised);

    save_model(artifacts.bundle, args.out_model);
    write_text(report_path_for(args.out_model),
               train_report_to_json(artifacts.report).dump(2) + "\n");
    log_info("model written to " + args.out_model);
    return 0;
}

// ---------------------------------------------------------------- score --

struct ScoreArgs {
    std::string model_path;
    std::string data_path;
    std::string out;
};

int run_score(const ScoreArgs& args) {
    ModelBundle bundle = load_model(args.model_path);
    std::vector<std::string> wanted;
    for (const FeatureSpec& f : bundle.pipeline.features) wanted.push_back(f.name);
    Dataset data = project_columns(load_csv(args.data_path), wanted);

    ScoreBatch scores = score_with_bundle(bundle, data.rows);
    std::vector<ScoreRow> rows(scores.size());
    for (std::size_t r = 0; r < scores.size(); ++r) rows[r] = {r, scores[r]};
    write_scores_csv(rows, args.out);
    log_info("scored " + std::to_string(scores.size()) + " rows");
    return 0;
}

// ----------------------------------------------------------------- eval --

struct EvalArgs {
    std::string scores_path;
    std::string data_path;
    std::string config_path;
    std::string out;
    std::string truth;
};

int run_eval(const EvalArgs& args) {
    ConstraintConfig cfg = parse_config(read_file(args.config_path));
    std::vector<ScoreRow> score_rows_in = read_scores_csv(args.scores_path);
    if (score_rows_in.empty()) throw MetricError("scores file has no rows");

    std::optional<std::string> truth_col;
    if (!args.truth.empty()) truth_col = args.truth;
    Dataset raw = load_csv(args.data_path, truth_col);
    Dataset data = project_columns(raw, config_feature_names(cfg));

    std::vector<std::size_t> ids;
    std::vector<double> scores;
    for (const ScoreRow& r : score_rows_in) {
        if (r.row_id >= data.n_rows()) {
            throw ConfigError("scores reference row " + std::to_string(r.row_id) +
                              " but data has only " + std::to_string(data.n_rows()) + " rows");
        }
        ids.push_back(r.row_id);
        scores.push_back(r.score);
    }
    Dataset selected = select_rows(data, ids);

    std::optional<std::vector<double>> truth;
    if (truth_col) truth = selected.labels;
    MetricsReport report = compute_metrics(selected, scores, truth, cfg);
    write_text(args.out, metrics_to_json(report).dump(2) + "\n");
    return 0;
}

// --------------------------------------------------------------- report --

struct ReportArgs {
    std::string scores_path;
    std::string out;
    std::optional<double> bandwidth;
};

int run_report(const ReportArgs& args) {
    std::vector<ScoreRow> rows = read_scores_csv(args.scores_path);
    std::vector<double> scores;
    for (const ScoreRow& r : rows) scores.push_back(r.score);
    KdeCurve curve = kde(scores, args.bandwidth);
    write_kde_csv(curve, args.out);
    log_info("density estimate over " + std::to_string(scores.size()) + " scores, bandwidth " +
             std::to_string(curve.bandwidth));
    return 0;
}

// --------------------------------------------------------------- ablate --

struct AblateArgs {
    std::string data_path;
    std::string config_path;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::string label = "y";
};

struct AblateCase {
    int case_id;
    const char* constraint;
    bool monotone;
    bool bound;
    bool sensitivity;
    bool distribution;
};

// Cases 3-16 of the synthetic comparison: {raw weights, monotone} x the
// seven loss combinations, preceded by the supervised baseline (case 2).
const AblateCase kAblateCases[] = {
    {3, "distribution", false, false, false, true},
    {4, "bound", false, true, false, false},
    {5, "sensitivity", false, false, true, false},
    {6, "bound+distribution", false, true, false, true},
    {7, "distribution+sensitivity", false, false, true, true},
    {8, "bound+sensitivity", false, true, true, false},
    {9, "all", false, true, true, true},
    {10, "distribution", true, false, false, true},
    {11, "bound", true, true, false, false},
    {12, "sensitivity", true, false, true, false},
    {13, "bound+distribution", true, true, false, true},
    {14, "distribution+sensitivity", true, false, true, true},
    {15, "bound+sensitivity", true, true, true, false},
    {16, "all", true, true, true, true},
};

int run_ablate(const AblateArgs& args) {
    ConstraintConfig cfg = parse_config(read_file(args.config_path));
    if (!cfg.bound_enabled() || !cfg.sensitivity_enabled() || !cfg.distribution_enabled()) {
        throw ConfigError("ablate needs bounds, feature tiers and a target distribution");
    }
    Dataset raw_all = load_csv(args.data_path, args.label);
    if (!raw_all.labels) throw ConfigError("ablate needs the ground-truth column");
    Dataset data = project_columns(raw_all, config_feature_names(cfg));

    std::vector<std::uint64_t> seeds = args.seeds;
    if (seeds.empty()) seeds = {cfg.train.seed};

    nlohmann::ordered_json out = nlohmann::ordered_json::array();

    auto evaluate_case = [&](const nlohmann::ordered_json& header, const ModelBundle& bundle,
                             std::uint64_t seed) {
        // metrics come from the held-out part of the same split the case
        // trained on
        SplitIndices idx = split_indices(data.n_rows(), 0.7, seed);
        Dataset test_raw = select_rows(data, idx.test);
        ScoreBatch scores = score_with_bundle(bundle, test_raw.rows);
        MetricsReport metrics = compute_metrics(test_raw, scores, test_raw.labels, cfg);
        nlohmann::ordered_json row = header;
        row["seed"] = seed;
        row["metrics"] = metrics_to_json(metrics);
        out.push_back(std::move(row));
    };

    for (std::uint64_t seed : seeds) {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        log_info("ablate: supervised baseline, seed " + std::to_string(seed));
        TrainedArtifacts supervised = train_pipeline(cfg, tc, data, false, true);
        evaluate_case({{"case", 2}, {"constraint", "supervised"}, {"monotone", false}},
                      supervised.bundle, seed);
    }

    for (const AblateCase& c : kAblateCases) {
        ConstraintConfig case_cfg = cfg;
        case_cfg.weights.alpha = c.bound ? cfg.weights.alpha : 0.0;
        case_cfg.weights.beta = c.sensitivity ? cfg.weights.beta : 0.0;
        case_cfg.weights.gamma = c.distribution ? cfg.weights.gamma : 0.0;
        case_cfg.weights.delta = 0.0;  // the synthetic comparison uses no mode loss
        for (std::uint64_t seed : seeds) {
            TrainConfig tc = cfg.train;
            tc.seed = seed;
            log_info("ablate: case " + std::to_string(c.case_id) + " (" + c.constraint +
                     (c.monotone ? ", monotone" : ", raw weights") + "), seed " +
                     std::to_string(seed));
            TrainedArtifacts artifacts = train_pipeline(case_cfg, tc, data, c.monotone, false);
            evaluate_case({{"case", c.case_id},
                           {"constraint", c.constraint},
                           {"monotone", c.monotone}},
                          artifacts.bundle, seed);
        }
    }

    write_text(args.out, out.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learn bounded monotone scoring functions from expert constraints"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic benchmark dataset");
    synth->add_option("--n", synth_args.n, "number of rows")->required();
    synth->add_option("--seed", synth_args.seed, "random seed")->required();
    synth->add_option("--out", synth_args.out, "output CSV path")->required();

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a scoring model");
    train_cmd->add_option("--config", train_args.config_path, "constraint config JSON")
        ->required();
    train_cmd->add_option("--data", train_args.data_path, "training data CSV")->required();
    train_cmd->add_option("--out-model", train_args.out_model, "model output path")->required();
    train_cmd->add_flag("--supervised", train_args.supervised,
                        "train the mean-squared-error baseline instead");
    train_cmd->add_option("--label", train_args.label, "ground-truth column for --supervised");
    train_cmd->add_flag("--no-monotone", train_args.no_monotone,
                        "use raw weights instead of the exponentiated ones");

    ScoreArgs score_args;
    CLI::App* score_cmd = app.add_subcommand("score", "score rows with a trained model");
    score_cmd->add_option("--model", score_args.model_path, "model JSON path")->required();
    score_cmd->add_option("--data", score_args.data_path, "data CSV")->required();
    score_cmd->add_option("--out", score_args.out, "output scores CSV")->required();

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "compute metrics for generated scores");
    eval_cmd->add_option("--scores", eval_args.scores_path, "scores CSV from `score`")
        ->required();
    eval_cmd->add_option("--data", eval_args.data_path, "raw data CSV")->required();
    eval_cmd->add_option("--config", eval_args.config_path, "constraint config JSON")
        ->required();
    eval_cmd->add_option("--out", eval_args.out, "metrics JSON output path")->required();
    eval_cmd->add_option("--truth", eval_args.truth, "ground-truth column name");

    ReportArgs report_args;
    double bandwidth_in = 0.0;
    CLI::App* report_cmd = app.add_subcommand("report", "kernel density estimate of scores");
    report_cmd->add_option("--scores", report_args.scores_path, "scores CSV")->required();
    report_cmd->add_option("--out", report_args.out, "KDE CSV output path")->required();
    CLI::Option* bw_opt = report_cmd->add_option("--bandwidth", bandwidth_in,
                                                 "kernel bandwidth (default: Silverman)");

    AblateArgs ablate_args;
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "run the loss-combination comparison cases");
    ablate_cmd->add_option("--data", ablate_args.data_path, "labelled data CSV")->required();
    ablate_cmd->add_option("--config", ablate_args.config_path, "constraint config JSON")
        ->required();
    ablate_cmd->add_option("--out", ablate_args.out, "metrics JSON array output path")
        ->required();
    ablate_cmd->add_option("--seeds", ablate_args.seeds, "comma-separated seeds")
        ->delimiter(',');
    ablate_cmd->add_option("--label", ablate_args.label,
                           "ground-truth column name (default: y)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (score_cmd->parsed()) return run_score(score_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (report_cmd->parsed()) {
            if (bw_opt->count() > 0) report_args.bandwidth = bandwidth_in;
            return run_report(report_args);
        }
        if (ablate_cmd->parsed()) return run_ablate(ablate_args);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
