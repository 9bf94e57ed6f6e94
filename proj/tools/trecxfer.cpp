// Command-line driver for the TREC-COVID -> CORD-19 label transfer workflow.
//
//   trecxfer ingest        --config run.json
//   trecxfer build-dataset --config run.json
//   trecxfer map-auto      --config run.json --method tf|dense [--vectors v.jsonl]
//   trecxfer map-diff      --config run.json --predictions trec_preds.jsonl
//   trecxfer review        --config run.json --edits edits.json [--accept-all | --from-file d.jsonl]
//   trecxfer evaluate      --config run.json --predictions cord_preds.jsonl
//   trecxfer baseline      train|predict --config run.json --kind cord|trec
//   trecxfer preset        --which manual|optimal --out mapping.json

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trecxfer/pipeline.hpp"

namespace fs = std::filesystem;
using namespace trecxfer;

int main(int argc, char** argv)
{
    CLI::App app{"Repurpose TREC-COVID relevance judgments as CORD-19 key-question training data"};
    app.require_subcommand(1);

    std::string config_path;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
    };

    auto* ingest = app.add_subcommand("ingest", "parse corpus, topics and qrels into normalized outputs");
    add_config(ingest);

    auto* build = app.add_subcommand("build-dataset", "transfer labels through the mapping and emit the dataset");
    add_config(build);

    auto* map_auto = app.add_subcommand("map-auto", "task similarity matrix from TF or dense embeddings");
    add_config(map_auto);
    std::string method = "tf";
    std::string vectors;
    bool raw = false;
    bool normalize = false;
    int n_max = 5;
    map_auto->add_option("--method", method, "tf or dense")->check(CLI::IsMember({"tf", "dense"}));
    map_auto->add_option("--vectors", vectors, "dense task vectors (JSON Lines)")->check(CLI::ExistingFile);
    map_auto->add_flag("--raw", raw, "skip per-column normalization");
    map_auto->add_flag("--normalize", normalize, "force per-column normalization");
    map_auto->add_option("--ngram-max", n_max, "largest n-gram for TF embeddings")->check(CLI::PositiveNumber);

    auto* map_diff = app.add_subcommand("map-diff", "differential table and suggested mapping edits");
    add_config(map_diff);
    std::string trec_predictions;
    std::string similarity;
    map_diff->add_option("--predictions", trec_predictions, "TREC-task predictions (exchange format)")
        ->required()
        ->check(CLI::ExistingFile);
    map_diff->add_option("--similarity", similarity, "similarity TSV attached as corroboration")
        ->check(CLI::ExistingFile);

    auto* review = app.add_subcommand("review", "accept or reject suggested mapping edits");
    add_config(review);
    std::string edits_path;
    std::string decisions;
    std::string review_out;
    bool accept_all = false;
    review->add_option("--edits", edits_path, "edits.json from map-diff")->required()->check(CLI::ExistingFile);
    auto* accept_opt = review->add_flag("--accept-all", accept_all, "accept every suggestion");
    review->add_option("--from-file", decisions, "decisions in audit-log format")
        ->check(CLI::ExistingFile)
        ->excludes(accept_opt);
    review->add_option("--out", review_out, "revised mapping path");

    auto* evaluate = app.add_subcommand("evaluate", "kappa of CORD predictions against majority annotations");
    add_config(evaluate);
    std::string cord_predictions;
    evaluate->add_option("--predictions", cord_predictions, "CORD-task predictions (exchange format)")
        ->required()
        ->check(CLI::ExistingFile);

    auto* base = app.add_subcommand("baseline", "hashed n-gram logistic baseline");
    std::string action;
    std::string kind_name = "cord";
    std::string predict_out;
    base->add_option("action", action, "train or predict")->required()->check(CLI::IsMember({"train", "predict"}));
    add_config(base);
    base->add_option("--kind", kind_name, "cord or trec")->check(CLI::IsMember({"cord", "trec"}));
    base->add_option("--out", predict_out, "predictions path (predict only)");

    auto* preset = app.add_subcommand("preset", "write a built-in task mapping");
    std::string which;
    std::string preset_out;
    preset->add_option("--which", which, "manual or optimal")->required()->check(CLI::IsMember({"manual", "optimal"}));
    preset->add_option("--out", preset_out, "output path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (preset->parsed()) {
            auto text = format_mapping_json(which == "manual" ? manual_mapping() : optimal_mapping());
            if (preset_out.empty()) {
                std::cout << text;
            } else {
                write_file(preset_out, text);
            }
            return 0;
        }

        auto cfg = pipeline::load_config(config_path);
        if (ingest->parsed()) {
            pipeline::cmd_ingest(cfg);
        } else if (build->parsed()) {
            pipeline::cmd_build_dataset(cfg);
        } else if (map_auto->parsed()) {
            pipeline::MapAutoOptions opt;
            opt.method = method == "dense" ? pipeline::AutoMethod::Dense : pipeline::AutoMethod::Tf;
            if (!vectors.empty()) {
                opt.vectors_path = vectors;
            }
            if (raw) {
                opt.normalize = false;
            } else if (normalize) {
                opt.normalize = true;
            }
            opt.n_max = n_max;
            pipeline::cmd_map_auto(cfg, opt);
        } else if (map_diff->parsed()) {
            pipeline::MapDiffOptions opt{trec_predictions, std::nullopt};
            if (!similarity.empty()) {
                opt.similarity_path = similarity;
            }
            pipeline::cmd_map_diff(cfg, opt);
        } else if (review->parsed()) {
            pipeline::ReviewOptions opt;
            opt.edits_path = edits_path;
            if (accept_all) {
                opt.mode = pipeline::ReviewMode::AcceptAll;
            } else if (!decisions.empty()) {
                opt.mode = pipeline::ReviewMode::FromFile;
                opt.decisions_path = decisions;
            }
            if (!review_out.empty()) {
                opt.out_path = review_out;
            }
            pipeline::cmd_review(cfg, opt);
        } else if (evaluate->parsed()) {
            pipeline::cmd_evaluate(cfg, cord_predictions);
        } else if (base->parsed()) {
            auto kind = kind_name == "trec" ? TaskKind::Trec : TaskKind::Cord;
            if (action == "train") {
                pipeline::cmd_baseline_train(cfg, kind);
            } else {
                std::optional<fs::path> out;
                if (!predict_out.empty()) {
                    out = predict_out;
                }
                pipeline::cmd_baseline_predict(cfg, kind, out);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
