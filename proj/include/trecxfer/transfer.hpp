#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trecxfer/common.hpp"
#include "trecxfer/corpus.hpp"
#include "trecxfer/mapping.hpp"
#include "trecxfer/trec.hpp"

namespace trecxfer {

struct KeyQuestion {
    int cord_task = 0;
    std::string_view text;
};

/// The ten CORD-19 key questions, in task order.
inline const std::array<KeyQuestion, kCordTaskCount>& key_questions()
{
    static constexpr std::array<KeyQuestion, kCordTaskCount> questions = {{
        {1, "What is known about transmission, incubation, and environmental stability?"},
        {2, "What do we know about COVID-19 risk factors?"},
        {3, "What do we know about virus genetics, origin, and evolution?"},
        {4, "What do we know about vaccines and therapeutics?"},
        {5, "What has been published about medical care?"},
        {6, "What do we know about non-pharmaceutical interventions?"},
        {7, "Are there geographic variations in the rate of COVID-19 spread?"},
        {8, "What do we know about diagnostics and surveillance?"},
        {9, "What has been published about ethical and social science considerations?"},
        {10, "What has been published about information sharing and inter-sectoral collaboration?"},
    }};
    return questions;
}

inline std::string_view key_question(int cord_task)
{
    if (!valid_cord_task(cord_task)) {
        throw std::out_of_range("no key question for task " + std::to_string(cord_task));
    }
    return key_questions()[static_cast<std::size_t>(cord_task - 1)].text;
}

/// A document whose mapped TREC judgments disagree for one CORD task.
struct ConflictReport {
    int cord_task = 0;
    std::string cord_uid;
    std::set<int> supporting_trec_tasks;  ///< judged relevant
    std::set<int> opposing_trec_tasks;    ///< judged not relevant

    friend bool operator==(const ConflictReport&, const ConflictReport&) = default;
};

struct TransferResult {
    /// labels[c - 1] maps cord_uid to the transferred label for CORD task c.
    std::array<std::map<std::string, bool>, kCordTaskCount> labels;
    /// Ordered by (cord_task, cord_uid).
    std::vector<ConflictReport> conflicts;

    const std::map<std::string, bool>& for_task(int cord) const { return labels[static_cast<std::size_t>(cord - 1)]; }
};

/// Carries binary TREC judgments over to CORD tasks through the mapping. A document
/// keeps a label for task c only when every mapped topic that judged it agrees;
/// any disagreement drops it from c and yields a ConflictReport.
inline TransferResult transfer_labels(const TaskMapping& mapping, const std::vector<BinaryJudgment>& judgments)
{
    // (cord, uid) -> (topics judging relevant, topics judging not relevant)
    std::map<std::pair<int, std::string>, std::pair<std::set<int>, std::set<int>>> votes;
    std::array<std::set<int>, kTrecTaskCount + 1> targets;
    for (int t = 1; t <= kTrecTaskCount; ++t) {
        targets[static_cast<std::size_t>(t)] = mapping.cord_tasks_for(t);
    }
    for (const auto& j : judgments) {
        if (!valid_trec_task(j.topic_id)) {
            continue;
        }
        for (int c : targets[static_cast<std::size_t>(j.topic_id)]) {
            auto& v = votes[{c, j.cord_uid}];
            (j.relevant ? v.first : v.second).insert(j.topic_id);
        }
    }
    TransferResult out;
    for (auto& [key, v] : votes) {
        auto& [cord, uid] = key;
        if (!v.first.empty() && !v.second.empty()) {
            out.conflicts.push_back({cord, uid, std::move(v.first), std::move(v.second)});
            continue;
        }
        out.labels[static_cast<std::size_t>(cord - 1)].emplace(uid, !v.first.empty());
    }
    return out;
}

struct TrainingRecord {
    std::string record_id;
    std::string cord_uid;
    SectionKind section_kind = SectionKind::Abstract;
    std::string text;
    std::string aux_sentence;
    int cord_task = 0;
    bool label = false;

    friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

inline std::string make_record_id(int cord_task, std::string_view uid, SectionKind kind)
{
    return std::to_string(cord_task) + ":" + std::string(uid) + ":" + std::string(to_string(kind));
}

/// Pairs every labeled (task, document) with each excerpt of the document and the
/// task's key question. Ordered by task, then cord_uid, abstract before conclusion.
inline WithWarnings<std::vector<TrainingRecord>> build_dataset(const TransferResult& transfer,
                                                               const ExcerptStore& excerpts,
                                                               const std::array<KeyQuestion, kCordTaskCount>& questions =
                                                                   key_questions())
{
    WithWarnings<std::vector<TrainingRecord>> out;
    for (int c = 1; c <= kCordTaskCount; ++c) {
        const std::string aux(questions[static_cast<std::size_t>(c - 1)].text);
        for (const auto& [uid, label] : transfer.for_task(c)) {
            auto it = excerpts.find(uid);
            if (it == excerpts.end() || it->second.empty()) {
                out.warnings.push_back("task " + std::to_string(c) + ": labeled document " + uid +
                                       " has no excerpts; dropped");
                continue;
            }
            for (const auto& e : it->second) {
                out.value.push_back(
                    {make_record_id(c, uid, e.section_kind), uid, e.section_kind, e.text, aux, c, label});
            }
        }
    }
    return out;
}

inline nlohmann::ordered_json record_to_json(const TrainingRecord& r)
{
    nlohmann::ordered_json j;
    j["record_id"] = r.record_id;
    j["cord_uid"] = r.cord_uid;
    j["section_kind"] = to_string(r.section_kind);
    j["text"] = r.text;
    j["aux"] = r.aux_sentence;
    j["cord_task"] = r.cord_task;
    j["label"] = r.label ? 1 : 0;
    return j;
}

inline std::string format_dataset_jsonl(const std::vector<TrainingRecord>& records)
{
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r).dump() + "\n";
    }
    return out;
}

inline std::vector<TrainingRecord> parse_dataset_jsonl(std::string_view text, const std::string& source = "dataset.jsonl")
{
    std::vector<TrainingRecord> out;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) {
            return;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
        }
        try {
            TrainingRecord r;
            r.record_id = j.at("record_id").get<std::string>();
            r.cord_uid = j.at("cord_uid").get<std::string>();
            auto kind = section_kind_from_string(j.at("section_kind").get<std::string>());
            if (!kind) {
                throw ParseError(source, line_no, "section_kind must be 'abstract' or 'conclusion'");
            }
            r.section_kind = *kind;
            r.text = j.at("text").get<std::string>();
            r.aux_sentence = j.at("aux").get<std::string>();
            r.cord_task = j.at("cord_task").get<int>();
            if (!valid_cord_task(r.cord_task)) {
                throw ParseError(source, line_no, "cord_task outside 1..10");
            }
            const auto& label = j.at("label");
            if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
                throw ParseError(source, line_no, "label must be 0 or 1");
            }
            r.label = label.get<int>() == 1;
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source, line_no, e.what());
        }
    });
    return out;
}

inline void emit_dataset(const std::vector<TrainingRecord>& records, const std::filesystem::path& path)
{
    write_file(path, format_dataset_jsonl(records));
}

inline std::vector<TrainingRecord> read_dataset(const std::filesystem::path& path)
{
    return parse_dataset_jsonl(read_file(path), path.string());
}

inline std::string format_conflicts_jsonl(const std::vector<ConflictReport>& conflicts)
{
    std::string out;
    for (const auto& c : conflicts) {
        nlohmann::ordered_json j;
        j["cord_task"] = c.cord_task;
        j["cord_uid"] = c.cord_uid;
        j["supporting_trec_tasks"] = std::vector<int>(c.supporting_trec_tasks.begin(), c.supporting_trec_tasks.end());
        j["opposing_trec_tasks"] = std::vector<int>(c.opposing_trec_tasks.begin(), c.opposing_trec_tasks.end());
        out += j.dump() + "\n";
    }
    return out;
}

/// Seeded uniform split; `holdout_fraction` of records (rounded down) go to the second list.
inline std::pair<std::vector<TrainingRecord>, std::vector<TrainingRecord>> split_dataset(
    const std::vector<TrainingRecord>& records, double holdout_fraction, std::uint64_t seed)
{
    if (!(holdout_fraction >= 0.0 && holdout_fraction <= 1.0)) {
        throw std::invalid_argument("holdout_fraction must lie in [0, 1]");
    }
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    SplitMix64 rng(seed);
    shuffle(order, rng);
    auto holdout = static_cast<std::size_t>(holdout_fraction * static_cast<double>(records.size()));
    std::pair<std::vector<TrainingRecord>, std::vector<TrainingRecord>> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < holdout ? out.second : out.first).push_back(records[order[i]]);
    }
    return out;
}

}  // namespace trecxfer
