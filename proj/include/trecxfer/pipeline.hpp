#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trecxfer/baseline.hpp"
#include "trecxfer/common.hpp"
#include "trecxfer/corpus.hpp"
#include "trecxfer/mapping.hpp"
#include "trecxfer/metrics.hpp"
#include "trecxfer/transfer.hpp"
#include "trecxfer/trec.hpp"

namespace trecxfer::pipeline {

namespace fs = std::filesystem;

struct QrelsSource {
    fs::path path;
    int round = 1;
};

struct Thresholds {
    double relevance = 0.5;
    int add_min = 2;
    int remove_max = -4;
};

/// Declarative run configuration, read from a JSON file. Relative paths resolve
/// against the directory holding the config file.
struct PipelineConfig {
    fs::path corpus_root;
    fs::path metadata_path;  ///< defaults to <corpus_root>/metadata.csv
    std::vector<QrelsSource> qrels;
    fs::path topics_path;
    fs::path mapping_path;
    std::optional<fs::path> annotations_path;
    fs::path output_dir;
    Thresholds thresholds;
    std::uint64_t seed = 0;
    PartialPolicy partial = PartialPolicy::AsRelevant;
    baseline::TrainConfig baseline;  ///< seed is overwritten by `seed`
};

namespace detail {

inline void require_exists(const fs::path& p, const char* what)
{
    if (!fs::exists(p)) {
        throw SchemaError(std::string("config: ") + what + " '" + p.string() + "' does not exist");
    }
}

}  // namespace detail

inline PipelineConfig parse_config(std::string_view text, const fs::path& base_dir, const std::string& source = "config")
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(source + ": " + e.what());
    }
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
    PipelineConfig c;
    try {
        c.corpus_root = resolve(j.at("corpus_root").get<std::string>());
        c.metadata_path = j.contains("metadata_path") ? resolve(j.at("metadata_path").get<std::string>())
                                                      : c.corpus_root / "metadata.csv";
        for (const auto& q : j.at("qrels")) {
            c.qrels.push_back({resolve(q.at("path").get<std::string>()), q.at("round").get<int>()});
        }
        c.topics_path = resolve(j.at("topics_path").get<std::string>());
        c.mapping_path = resolve(j.at("mapping_path").get<std::string>());
        if (j.contains("annotations_path") && !j.at("annotations_path").is_null()) {
            c.annotations_path = resolve(j.at("annotations_path").get<std::string>());
        }
        c.output_dir = resolve(j.at("output_dir").get<std::string>());
        if (j.contains("thresholds")) {
            const auto& t = j.at("thresholds");
            c.thresholds.relevance = t.value("relevance", c.thresholds.relevance);
            c.thresholds.add_min = t.value("add_min", c.thresholds.add_min);
            c.thresholds.remove_max = t.value("remove_max", c.thresholds.remove_max);
        }
        c.seed = j.value("seed", std::uint64_t{0});
        auto partial = j.value("partial_relevance", std::string("relevant"));
        if (partial == "relevant") {
            c.partial = PartialPolicy::AsRelevant;
        } else if (partial == "exclude") {
            c.partial = PartialPolicy::Exclude;
        } else {
            throw SchemaError(source + ": partial_relevance must be 'relevant' or 'exclude'");
        }
        if (j.contains("baseline")) {
            c.baseline.epochs = j.at("baseline").value("epochs", c.baseline.epochs);
            c.baseline.lr = j.at("baseline").value("lr", c.baseline.lr);
        }
        c.baseline.seed = c.seed;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(source + ": " + e.what());
    }

    if (!(c.thresholds.relevance > 0.0 && c.thresholds.relevance <= 1.0)) {
        throw SchemaError(source + ": thresholds.relevance must lie in (0, 1]");
    }
    if (!(c.thresholds.add_min > 0 && c.thresholds.remove_max < 0)) {
        throw SchemaError(source + ": thresholds require add_min > 0 > remove_max");
    }
    if (c.baseline.epochs < 1 || !(c.baseline.lr > 0.0)) {
        throw SchemaError(source + ": baseline needs epochs >= 1 and lr > 0");
    }
    detail::require_exists(c.corpus_root, "corpus_root");
    detail::require_exists(c.metadata_path, "metadata_path");
    for (const auto& q : c.qrels) {
        detail::require_exists(q.path, "qrels");
        if (q.round < 1) {
            throw SchemaError(source + ": qrels round must be >= 1");
        }
    }
    detail::require_exists(c.topics_path, "topics_path");
    detail::require_exists(c.mapping_path, "mapping_path");
    if (c.annotations_path) {
        detail::require_exists(*c.annotations_path, "annotations_path");
    }
    return c;
}

inline PipelineConfig load_config(const fs::path& path)
{
    return parse_config(read_file(path), fs::absolute(path).parent_path(), path.string());
}

/// Standard file names under output_dir.
namespace files {
inline constexpr const char* excerpts = "excerpts.jsonl";
inline constexpr const char* judgments = "judgments.jsonl";
inline constexpr const char* topics = "topics.jsonl";
inline constexpr const char* dataset = "dataset.jsonl";
inline constexpr const char* conflicts = "conflicts.jsonl";
inline constexpr const char* differential = "differential.tsv";
inline constexpr const char* differential_counts = "differential_counts.tsv";
inline constexpr const char* edits = "edits.json";
inline constexpr const char* reviewed_mapping = "mapping.reviewed.json";
inline constexpr const char* review_audit = "review_audit.jsonl";
inline constexpr const char* evaluation_tsv = "evaluation.tsv";
inline constexpr const char* evaluation_json = "evaluation.json";
inline constexpr const char* models_dir = "models";
}  // namespace files

inline void print_warnings(const Warnings& w, std::ostream& err)
{
    for (const auto& m : w) {
        err << "warning: " << m << '\n';
    }
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestSummary {
    std::size_t documents = 0;
    std::size_t excerpts = 0;
    std::size_t judgments = 0;
    std::size_t unique_annotated_docs = 0;
};

inline IngestSummary cmd_ingest(const PipelineConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    auto meta = parse_metadata(cfg.metadata_path);
    print_warnings(meta.warnings, err);

    std::vector<Excerpt> excerpts;
    for (const auto& doc : meta.value) {
        std::optional<FullText> body;
        if (auto p = resolve_fulltext(doc, cfg.corpus_root)) {
            try {
                body = parse_fulltext(*p);
            } catch (const SchemaError& e) {
                err << "warning: " << e.what() << "; using metadata only\n";
            }
        }
        for (auto& e : extract_excerpts(doc, body)) {
            excerpts.push_back(std::move(e));
        }
    }

    std::vector<Judgment> all;
    for (const auto& q : cfg.qrels) {
        auto js = restrict_to_round(parse_qrels(q.path, q.round), q.round);
        all.insert(all.end(), js.begin(), js.end());
    }
    auto deduped = dedupe(all);
    print_warnings(deduped.warnings, err);

    auto topics = parse_topics(cfg.topics_path);
    std::set<std::string> annotated;
    for (const auto& j : deduped.value) {
        annotated.insert(j.cord_uid);
    }

    fs::create_directories(cfg.output_dir);
    write_file(cfg.output_dir / files::excerpts, format_excerpts_jsonl(excerpts));
    write_file(cfg.output_dir / files::judgments, format_judgments_jsonl(deduped.value));
    write_file(cfg.output_dir / files::topics, format_topics_jsonl(topics));

    IngestSummary s{meta.value.size(), excerpts.size(), deduped.value.size(), annotated.size()};
    out << "documents\t" << s.documents << '\n'
        << "excerpts\t" << s.excerpts << '\n'
        << "judgments\t" << s.judgments << '\n'
        << "unique_annotated_docs\t" << s.unique_annotated_docs << '\n';
    return s;
}

inline std::vector<Excerpt> load_excerpts(const PipelineConfig& cfg)
{
    auto p = cfg.output_dir / files::excerpts;
    return parse_excerpts_jsonl(read_file(p), p.string());
}

inline std::vector<Judgment> load_judgments(const PipelineConfig& cfg)
{
    auto p = cfg.output_dir / files::judgments;
    return parse_judgments_jsonl(read_file(p), p.string());
}

// ---------------------------------------------------------------------------
// build-dataset
// ---------------------------------------------------------------------------

struct BuildSummary {
    std::size_t records = 0;
    std::size_t conflicts = 0;
    std::array<std::size_t, kCordTaskCount> positives{};
    std::array<std::size_t, kCordTaskCount> negatives{};
};

inline BuildSummary cmd_build_dataset(const PipelineConfig& cfg, std::ostream& out = std::cout,
                                      std::ostream& err = std::cerr)
{
    auto mapping = load_mapping(cfg.mapping_path);
    auto judgments = binarize_all(load_judgments(cfg), cfg.partial);
    auto transferred = transfer_labels(mapping, judgments);
    auto store = index_excerpts(load_excerpts(cfg));
    auto built = build_dataset(transferred, store);
    print_warnings(built.warnings, err);

    write_file(cfg.output_dir / files::dataset, format_dataset_jsonl(built.value));
    write_file(cfg.output_dir / files::conflicts, format_conflicts_jsonl(transferred.conflicts));

    BuildSummary s;
    s.records = built.value.size();
    s.conflicts = transferred.conflicts.size();
    for (const auto& r : built.value) {
        auto i = static_cast<std::size_t>(r.cord_task - 1);
        (r.label ? s.positives[i] : s.negatives[i])++;
    }
    out << "records\t" << s.records << '\n' << "conflicts\t" << s.conflicts << '\n';
    for (int c = 1; c <= kCordTaskCount; ++c) {
        auto i = static_cast<std::size_t>(c - 1);
        out << "task_" << c << "\tpositive " << s.positives[i] << "\tnegative " << s.negatives[i] << '\n';
    }
    return s;
}

// ---------------------------------------------------------------------------
// map-auto
// ---------------------------------------------------------------------------

enum class AutoMethod { Tf, Dense };

struct MapAutoOptions {
    AutoMethod method = AutoMethod::Tf;
    std::optional<fs::path> vectors_path;  ///< required for Dense
    std::optional<bool> normalize;         ///< default: on for Tf, off for Dense
    int n_max = 5;
};

/// Topic statement per TREC id from topics.jsonl when present, falling back to the round-3 queries.
inline std::map<int, std::string> topic_queries(const PipelineConfig& cfg)
{
    std::map<int, std::string> q;
    for (int t = 1; t <= kTrecTaskCount; ++t) {
        q[t] = std::string(round3_topic_queries()[static_cast<std::size_t>(t - 1)]);
    }
    auto p = cfg.output_dir / files::topics;
    if (fs::exists(p)) {
        for_each_line(read_file(p), [&](std::size_t, std::string_view line) {
            if (trim(line).empty()) {
                return;
            }
            auto j = nlohmann::json::parse(line);
            q[j.at("topic").get<int>()] = j.at("query").get<std::string>();
        });
    }
    return q;
}

inline SimilarityMatrix cmd_map_auto(const PipelineConfig& cfg, const MapAutoOptions& opt,
                                     std::ostream& out = std::cout)
{
    SimilarityMatrix sims;
    std::string name;
    if (opt.method == AutoMethod::Dense) {
        if (!opt.vectors_path) {
            throw SchemaError("map-auto --method dense requires --vectors");
        }
        auto vecs = load_dense_vectors(*opt.vectors_path);
        std::vector<std::vector<double>> trec;
        std::vector<std::vector<double>> cord;
        for (int t = 1; t <= kTrecTaskCount; ++t) {
            trec.push_back(vecs.at({TaskKind::Trec, t}));
        }
        for (int c = 1; c <= kCordTaskCount; ++c) {
            cord.push_back(vecs.at({TaskKind::Cord, c}));
        }
        sims = similarity_matrix(std::span<const std::vector<double>>(trec), std::span<const std::vector<double>>(cord),
                                 opt.normalize.value_or(false));
        name = "similarity_dense.tsv";
    } else {
        auto store = index_excerpts(load_excerpts(cfg));
        auto abstract_of = [&](const std::string& uid) -> const std::string* {
            auto it = store.find(uid);
            if (it == store.end()) {
                return nullptr;
            }
            for (const auto& e : it->second) {
                if (e.section_kind == SectionKind::Abstract) {
                    return &e.text;
                }
            }
            return nullptr;
        };
        auto queries = topic_queries(cfg);
        std::vector<std::vector<std::string>> trec_texts(kTrecTaskCount);
        for (int t = 1; t <= kTrecTaskCount; ++t) {
            trec_texts[static_cast<std::size_t>(t - 1)].push_back(queries[t]);
        }
        for (const auto& j : binarize_all(load_judgments(cfg), cfg.partial)) {
            if (j.relevant && valid_trec_task(j.topic_id)) {
                if (const auto* a = abstract_of(j.cord_uid)) {
                    trec_texts[static_cast<std::size_t>(j.topic_id - 1)].push_back(*a);
                }
            }
        }
        std::vector<std::vector<std::string>> cord_texts(kCordTaskCount);
        for (int c = 1; c <= kCordTaskCount; ++c) {
            cord_texts[static_cast<std::size_t>(c - 1)].emplace_back(key_question(c));
        }
        if (cfg.annotations_path) {
            for (const auto& [key, relevant] : load_annotations(*cfg.annotations_path).majority()) {
                if (relevant) {
                    if (const auto* a = abstract_of(key.second)) {
                        cord_texts[static_cast<std::size_t>(key.first - 1)].push_back(*a);
                    }
                }
            }
        }
        std::vector<TfEmbedding> trec;
        std::vector<TfEmbedding> cord;
        for (int t = 1; t <= kTrecTaskCount; ++t) {
            trec.push_back(build_tf_embedding(trec_texts[static_cast<std::size_t>(t - 1)], opt.n_max));
            trec.back().task = {TaskKind::Trec, t};
        }
        for (int c = 1; c <= kCordTaskCount; ++c) {
            cord.push_back(build_tf_embedding(cord_texts[static_cast<std::size_t>(c - 1)], opt.n_max));
            cord.back().task = {TaskKind::Cord, c};
        }
        sims = similarity_matrix(std::span<const TfEmbedding>(trec), std::span<const TfEmbedding>(cord),
                                 opt.normalize.value_or(true));
        name = "similarity_tf.tsv";
    }
    write_file(cfg.output_dir / name, format_similarity_tsv(sims));
    for (std::size_t c = 0; c < sims.cols; ++c) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < sims.rows; ++r) {
            if (sims.at(r, c) > sims.at(best, c)) {
                best = r;
            }
        }
        out << "cord_" << (c + 1) << "\tbest_trec " << (best + 1) << '\t' << sims.at(best, c) << '\n';
    }
    return sims;
}

// ---------------------------------------------------------------------------
// map-diff
// ---------------------------------------------------------------------------

struct MapDiffOptions {
    fs::path predictions_path;
    std::optional<fs::path> similarity_path;
};

inline std::string format_doc_counts_tsv(const DifferentialTable& t)
{
    std::ostringstream out;
    out << "trec\\cord";
    for (int c = 1; c <= kCordTaskCount; ++c) {
        out << '\t' << c;
    }
    out << '\n';
    for (int r = 1; r <= t.trec_count; ++r) {
        out << r;
        for (int c = 1; c <= kCordTaskCount; ++c) {
            out << '\t' << t.doc_count(r, c);
        }
        out << '\n';
    }
    return out.str();
}

inline std::vector<MappingEdit> cmd_map_diff(const PipelineConfig& cfg, const MapDiffOptions& opt,
                                             std::ostream& out = std::cout)
{
    if (!cfg.annotations_path) {
        throw SchemaError("map-diff requires annotations_path in the config");
    }
    auto human = load_annotations(*cfg.annotations_path).majority();
    auto preds = threshold_all(document_probabilities(load_predictions(opt.predictions_path), TaskKind::Trec),
                               cfg.thresholds.relevance);
    auto table = differential_table(preds, human);
    std::optional<SimilarityMatrix> sims;
    if (opt.similarity_path) {
        sims = parse_similarity_tsv(read_file(*opt.similarity_path), opt.similarity_path->string());
    }
    auto edits = suggest_edits(table, sims ? &*sims : nullptr, load_mapping(cfg.mapping_path),
                               {cfg.thresholds.add_min, cfg.thresholds.remove_max});
    write_file(cfg.output_dir / files::differential, format_differential_tsv(table));
    write_file(cfg.output_dir / files::differential_counts, format_doc_counts_tsv(table));
    write_file(cfg.output_dir / files::edits, format_edits_json(edits));
    out << "suggested_edits\t" << edits.size() << '\n';
    for (const auto& e : edits) {
        out << to_string(e.kind) << "\ttrec " << e.trec_task << "\tcord " << e.cord_task << "\tdifferential "
            << *e.differential << '\n';
    }
    return edits;
}

// ---------------------------------------------------------------------------
// review
// ---------------------------------------------------------------------------

enum class Decision { Accept, Reject, Skip };

inline std::string_view to_string(Decision d)
{
    switch (d) {
    case Decision::Accept:
        return "accept";
    case Decision::Reject:
        return "reject";
    default:
        return "skip";
    }
}

inline Decision decision_from_string(std::string_view s)
{
    if (s == "accept") {
        return Decision::Accept;
    }
    if (s == "reject") {
        return Decision::Reject;
    }
    if (s == "skip") {
        return Decision::Skip;
    }
    throw SchemaError("decision must be accept, reject or skip; got '" + std::string(s) + "'");
}

struct AuditEntry {
    MappingEdit edit;
    Decision decision = Decision::Skip;
};

inline std::string format_audit_jsonl(const std::vector<AuditEntry>& log)
{
    std::string out;
    for (const auto& a : log) {
        auto j = edit_to_json(a.edit);
        j.erase("accepted");
        j["decision"] = to_string(a.decision);
        out += j.dump() + "\n";
    }
    return out;
}

inline std::vector<AuditEntry> parse_audit_jsonl(std::string_view text, const std::string& source = "audit.jsonl")
{
    std::vector<AuditEntry> out;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) {
            return;
        }
        try {
            auto j = nlohmann::json::parse(line);
            out.push_back({edit_from_json(j), decision_from_string(j.at("decision").get<std::string>())});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source, line_no, e.what());
        } catch (const SchemaError& e) {
            throw ParseError(source, line_no, e.what());
        }
    });
    return out;
}

/// Re-applies the accepted entries of an audit log, in order.
inline TaskMapping replay_audit(TaskMapping mapping, const std::vector<AuditEntry>& log)
{
    for (const auto& a : log) {
        if (a.decision == Decision::Accept) {
            apply_edit(mapping, a.edit);
        }
    }
    return mapping;
}

enum class ReviewMode { Interactive, AcceptAll, FromFile };

struct ReviewOptions {
    fs::path edits_path;
    ReviewMode mode = ReviewMode::Interactive;
    std::optional<fs::path> decisions_path;  ///< FromFile: JSONL in the audit format
    std::optional<fs::path> out_path;        ///< default <output_dir>/mapping.reviewed.json
};

struct ReviewResult {
    TaskMapping mapping;
    std::vector<AuditEntry> audit;
};

namespace detail {

inline Decision prompt(const MappingEdit& e, std::istream& in, std::ostream& out)
{
    out << to_string(e.kind) << " TREC topic " << e.trec_task << " -> CORD task " << e.cord_task;
    if (e.differential) {
        out << " (differential " << *e.differential;
        if (e.similarity) {
            out << ", similarity " << *e.similarity;
        }
        out << ')';
    }
    out << "\n  accept? [y]es / [n]o / [s]kip: " << std::flush;
    std::string answer;
    while (std::getline(in, answer)) {
        auto a = trim(answer);
        if (a == "y" || a == "yes") {
            return Decision::Accept;
        }
        if (a == "n" || a == "no") {
            return Decision::Reject;
        }
        if (a == "s" || a == "skip" || a.empty()) {
            return Decision::Skip;
        }
        out << "  please answer y, n or s: " << std::flush;
    }
    return Decision::Skip;
}

}  // namespace detail

/// Walks the suggested edits, recording a decision for each; only accepted edits change the mapping.
inline ReviewResult cmd_review(const PipelineConfig& cfg, const ReviewOptions& opt, std::istream& in = std::cin,
                               std::ostream& out = std::cout)
{
    auto edits = parse_edits_json(read_file(opt.edits_path), opt.edits_path.string());
    const auto original = load_mapping(cfg.mapping_path);

    std::map<std::tuple<EditKind, int, int>, Decision> preset;
    if (opt.mode == ReviewMode::FromFile) {
        if (!opt.decisions_path) {
            throw SchemaError("review --from-file requires a decisions file");
        }
        for (const auto& a : parse_audit_jsonl(read_file(*opt.decisions_path), opt.decisions_path->string())) {
            preset[{a.edit.kind, a.edit.trec_task, a.edit.cord_task}] = a.decision;
        }
    }

    ReviewResult res{original, {}};
    for (auto e : edits) {
        Decision d = Decision::Skip;
        switch (opt.mode) {
        case ReviewMode::AcceptAll:
            d = Decision::Accept;
            break;
        case ReviewMode::FromFile: {
            auto it = preset.find({e.kind, e.trec_task, e.cord_task});
            d = it == preset.end() ? Decision::Skip : it->second;
            break;
        }
        case ReviewMode::Interactive:
            d = detail::prompt(e, in, out);
            break;
        }
        if (d != Decision::Skip) {
            e.accepted = d == Decision::Accept;
        }
        if (d == Decision::Accept) {
            apply_edit(res.mapping, e);
        }
        res.audit.push_back({e, d});
    }

    auto out_path = opt.out_path.value_or(cfg.output_dir / files::reviewed_mapping);
    write_file(out_path, format_mapping_json(res.mapping));
    write_file(cfg.output_dir / files::review_audit, format_audit_jsonl(res.audit));
    std::size_t accepted = 0;
    for (const auto& a : res.audit) {
        accepted += a.decision == Decision::Accept;
    }
    out << "reviewed\t" << res.audit.size() << "\naccepted\t" << accepted << "\nmapping\t" << out_path.string()
        << '\n';
    return res;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

inline AgreementReport cmd_evaluate(const PipelineConfig& cfg, const fs::path& predictions_path,
                                    std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    if (!cfg.annotations_path) {
        throw SchemaError("evaluate requires annotations_path in the config");
    }
    auto majority = load_annotations(*cfg.annotations_path).majority();
    auto probs = document_probabilities(load_predictions(predictions_path), TaskKind::Cord);
    auto rep = per_task_report(probs, majority, cfg.thresholds.relevance, cfg.mapping_path.filename().string());
    if (rep.missing_predictions) {
        err << "warning: " << rep.missing_predictions << " annotated items have no prediction\n";
    }
    write_file(cfg.output_dir / files::evaluation_tsv, format_report_tsv(rep));
    write_file(cfg.output_dir / files::evaluation_json, format_report_json(rep, threshold_sweep(probs, majority)));
    out << format_report_tsv(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// baseline train / predict
// ---------------------------------------------------------------------------

inline fs::path model_path(const PipelineConfig& cfg, TaskKey key)
{
    return cfg.output_dir / files::models_dir / (std::string(to_string(key.kind)) + "_" + std::to_string(key.id) + ".json");
}

/// Trains one model per task. Tasks lacking either class are reported and skipped.
/// Returns the number of models written.
inline std::size_t cmd_baseline_train(const PipelineConfig& cfg, TaskKind kind, std::ostream& out = std::cout,
                                      std::ostream& err = std::cerr)
{
    std::map<int, std::vector<baseline::Example>> per_task;
    if (kind == TaskKind::Cord) {
        for (const auto& r : read_dataset(cfg.output_dir / files::dataset)) {
            per_task[r.cord_task].push_back({baseline::featurize(r.text, r.aux_sentence), r.label});
        }
    } else {
        auto store = index_excerpts(load_excerpts(cfg));
        auto queries = topic_queries(cfg);
        for (const auto& j : binarize_all(load_judgments(cfg), cfg.partial)) {
            auto it = store.find(j.cord_uid);
            if (it == store.end() || !valid_trec_task(j.topic_id)) {
                continue;
            }
            for (const auto& e : it->second) {
                per_task[j.topic_id].push_back({baseline::featurize(e.text, queries[j.topic_id]), j.relevant});
            }
        }
    }
    const int count = kind == TaskKind::Cord ? kCordTaskCount : kTrecTaskCount;
    std::size_t written = 0;
    for (int t = 1; t <= count; ++t) {
        TaskKey key{kind, t};
        fs::remove(model_path(cfg, key));
        const auto& data = per_task[t];
        try {
            auto res = baseline::train(data, key, cfg.baseline);
            baseline::save_model(res.model, model_path(cfg, key));
            out << to_string(kind) << '_' << t << "\texamples " << data.size() << "\tloss "
                << res.epoch_loss.back() << '\n';
            ++written;
        } catch (const std::invalid_argument& e) {
            err << "warning: skipped model: " << e.what() << '\n';
        }
    }
    return written;
}

/// Scores every excerpt of every human-annotated document. CORD models score a
/// document only for the tasks it was annotated for; TREC models score all
/// annotated documents.
inline std::vector<Prediction> cmd_baseline_predict(const PipelineConfig& cfg, TaskKind kind,
                                                    std::optional<fs::path> out_path = std::nullopt,
                                                    std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    if (!cfg.annotations_path) {
        throw SchemaError("baseline predict requires annotations_path in the config");
    }
    auto annotations = load_annotations(*cfg.annotations_path);
    auto store = index_excerpts(load_excerpts(cfg));
    auto queries = topic_queries(cfg);

    std::map<int, std::set<std::string>> targets;  // task -> docs to score
    std::set<std::string> annotated_docs;
    for (const auto& [key, by] : annotations.labels) {
        annotated_docs.insert(key.second);
        if (kind == TaskKind::Cord) {
            targets[key.first].insert(key.second);
        }
    }
    const int count = kind == TaskKind::Cord ? kCordTaskCount : kTrecTaskCount;
    if (kind == TaskKind::Trec) {
        for (int t = 1; t <= count; ++t) {
            targets[t] = annotated_docs;
        }
    }

    std::vector<Prediction> preds;
    std::size_t missing_excerpts = 0;
    for (int t = 1; t <= count; ++t) {
        TaskKey key{kind, t};
        auto path = model_path(cfg, key);
        if (!fs::exists(path) || targets[t].empty()) {
            continue;
        }
        auto model = baseline::load_model(path);
        const std::string aux = kind == TaskKind::Cord ? std::string(key_question(t)) : queries[t];
        for (const auto& uid : targets[t]) {
            auto it = store.find(uid);
            if (it == store.end()) {
                ++missing_excerpts;
                continue;
            }
            for (const auto& e : it->second) {
                double p = baseline::predict_proba(model, baseline::featurize(e.text, aux));
                preds.push_back({make_record_id(t, uid, e.section_kind), uid, kind, t, p});
            }
        }
    }
    if (missing_excerpts) {
        err << "warning: " << missing_excerpts << " (task, document) targets had no excerpts\n";
    }
    auto dest = out_path.value_or(cfg.output_dir / ("predictions_" + std::string(to_string(kind)) + ".jsonl"));
    write_file(dest, format_predictions_jsonl(preds));
    out << "predictions\t" << preds.size() << "\nfile\t" << dest.string() << '\n';
    return preds;
}

}  // namespace trecxfer::pipeline
