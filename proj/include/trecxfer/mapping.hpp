#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trecxfer/common.hpp"
#include "trecxfer/text.hpp"

namespace trecxfer {

// ---------------------------------------------------------------------------
// Task mapping
// ---------------------------------------------------------------------------

/// Many-to-many assignment of TREC topics (1..40) onto CORD-19 tasks (1..10).
class TaskMapping {
public:
    TaskMapping() = default;

    /// Missing CORD tasks get empty sets; out-of-range ids throw SchemaError.
    explicit TaskMapping(const std::map<int, std::set<int>>& entries)
    {
        for (const auto& [cord, trecs] : entries) {
            check_cord(cord);
            for (int t : trecs) {
                check_trec(t);
            }
            entries_[static_cast<std::size_t>(cord - 1)] = trecs;
        }
    }

    const std::set<int>& trec_tasks(int cord) const
    {
        check_cord(cord);
        return entries_[static_cast<std::size_t>(cord - 1)];
    }

    bool contains(int trec, int cord) const { return trec_tasks(cord).count(trec) != 0; }

    void add(int trec, int cord)
    {
        check_trec(trec);
        check_cord(cord);
        entries_[static_cast<std::size_t>(cord - 1)].insert(trec);
    }

    void remove(int trec, int cord)
    {
        check_cord(cord);
        entries_[static_cast<std::size_t>(cord - 1)].erase(trec);
    }

    /// CORD tasks a TREC topic is mapped onto.
    std::set<int> cord_tasks_for(int trec) const
    {
        std::set<int> out;
        for (int c = 1; c <= kCordTaskCount; ++c) {
            if (contains(trec, c)) {
                out.insert(c);
            }
        }
        return out;
    }

    friend bool operator==(const TaskMapping&, const TaskMapping&) = default;

private:
    static void check_cord(int cord)
    {
        if (!valid_cord_task(cord)) {
            throw SchemaError("CORD-19 task id " + std::to_string(cord) + " outside 1..10");
        }
    }
    static void check_trec(int trec)
    {
        if (!valid_trec_task(trec)) {
            throw SchemaError("TREC-COVID task id " + std::to_string(trec) + " outside 1..40");
        }
    }

    std::array<std::set<int>, kCordTaskCount> entries_{};
};

/// The hand-built starting mapping.
inline TaskMapping manual_mapping()
{
    return TaskMapping({
        {1, {2, 3, 10, 13, 14, 15, 16, 17}},
        {2, {4, 21, 22, 23, 24, 25}},
        {3, {1, 2, 5, 8, 13, 15, 18, 19, 32}},
        {4, {1, 2, 5, 8, 13, 15, 18, 19, 28, 29, 30, 31, 32, 33, 34}},
        {5, {11, 17, 18, 19, 20, 28, 29, 30, 33, 34}},
        {6, {10, 12, 18, 34}},
        {7, {2, 13, 32}},
        {8, {6, 7, 11, 19, 25, 26}},
        {9, {8}},
        {10, {35}},
    });
}

/// The mapping reached after refinement against human annotations.
inline TaskMapping optimal_mapping()
{
    return TaskMapping({
        {1, {2, 3, 10, 13, 14, 15, 19}},
        {2, {4, 22, 23, 24, 25}},
        {3, {1, 5, 17, 18, 29, 30, 36, 40}},
        {4, {1, 2, 5, 18, 28, 29, 30, 32, 33, 34}},
        {5, {11, 17, 22, 30, 33, 34, 38}},
        {6, {10, 12, 14, 18}},
        {7, {2, 4, 6, 8, 9}},
        {8, {7, 13, 15, 19, 25}},
        {9, {8, 12}},
        {10, {2, 10, 35}},
    });
}

/// {"1": [..], ..., "10": [..]} with ascending ids.
inline std::string format_mapping_json(const TaskMapping& m)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (int c = 1; c <= kCordTaskCount; ++c) {
        const auto& s = m.trec_tasks(c);
        j[std::to_string(c)] = std::vector<int>(s.begin(), s.end());
    }
    return j.dump(2) + "\n";
}

inline TaskMapping parse_mapping_json(std::string_view text, const std::string& source = "mapping.json")
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(source + ": " + e.what());
    }
    if (!j.is_object()) {
        throw SchemaError(source + ": mapping must be a JSON object");
    }
    std::map<int, std::set<int>> entries;
    for (const auto& [key, val] : j.items()) {
        int cord = 0;
        try {
            std::size_t used = 0;
            cord = std::stoi(key, &used);
            if (used != key.size()) {
                throw std::invalid_argument(key);
            }
        } catch (const std::exception&) {
            throw SchemaError(source + ": key '" + key + "' is not a CORD-19 task id");
        }
        if (!val.is_array()) {
            throw SchemaError(source + ": entry '" + key + "' must be an array");
        }
        std::set<int> trecs;
        for (const auto& t : val) {
            if (!t.is_number_integer()) {
                throw SchemaError(source + ": entry '" + key + "' contains a non-integer");
            }
            trecs.insert(t.get<int>());
        }
        entries[cord] = std::move(trecs);
    }
    try {
        return TaskMapping(entries);
    } catch (const SchemaError& e) {
        throw SchemaError(source + ": " + e.what());
    }
}

inline TaskMapping load_mapping(const std::filesystem::path& path)
{
    return parse_mapping_json(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Differential table
// ---------------------------------------------------------------------------

/// Binary per-(task, document) labels; used both for thresholded model output
/// and for majority human annotations.
using DocLabels = std::map<std::pair<int, std::string>, bool>;

/// For each (TREC topic, CORD task): #relevant minus #not-relevant human
/// annotations among the task's annotated documents that the TREC model
/// predicts relevant to the topic. Undefined when no such documents exist.
struct DifferentialTable {
    int trec_count = kTrecTaskCount;
    std::vector<std::optional<int>> cells = std::vector<std::optional<int>>(kTrecTaskCount * kCordTaskCount);
    /// Size of the predicted-relevant set per cell; empty when the table was read back from a report.
    std::vector<int> doc_counts = std::vector<int>(kTrecTaskCount * kCordTaskCount, 0);

    std::optional<int> cell(int trec, int cord) const { return cells[index(trec, cord)]; }
    int doc_count(int trec, int cord) const { return doc_counts.empty() ? 0 : doc_counts[index(trec, cord)]; }

    std::size_t index(int trec, int cord) const
    {
        if (trec < 1 || trec > trec_count || !valid_cord_task(cord)) {
            throw std::out_of_range("differential cell (" + std::to_string(trec) + ", " + std::to_string(cord) +
                                    ") out of range");
        }
        return static_cast<std::size_t>((trec - 1) * kCordTaskCount + (cord - 1));
    }
};

inline DifferentialTable differential_table(const DocLabels& trec_predictions, const DocLabels& human)
{
    std::unordered_map<std::string, std::vector<int>> relevant_topics;
    for (const auto& [key, relevant] : trec_predictions) {
        if (relevant && valid_trec_task(key.first)) {
            relevant_topics[key.second].push_back(key.first);
        }
    }
    DifferentialTable table;
    std::vector<int> diff(table.cells.size(), 0);
    for (const auto& [key, relevant] : human) {
        const auto& [cord, uid] = key;
        auto it = relevant_topics.find(uid);
        if (it == relevant_topics.end()) {
            continue;
        }
        for (int t : it->second) {
            auto i = table.index(t, cord);
            ++table.doc_counts[i];
            diff[i] += relevant ? 1 : -1;
        }
    }
    for (std::size_t i = 0; i < diff.size(); ++i) {
        if (table.doc_counts[i] > 0) {
            table.cells[i] = diff[i];
        }
    }
    return table;
}

/// TSV laid out with TREC topics as rows and CORD tasks as columns; "X" marks undefined cells.
inline std::string format_differential_tsv(const DifferentialTable& t)
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
            auto v = t.cell(r, c);
            out << '\t';
            if (v) {
                out << *v;
            } else {
                out << 'X';
            }
        }
        out << '\n';
    }
    return out.str();
}

inline DifferentialTable parse_differential_tsv(std::string_view text, const std::string& source = "differential.tsv")
{
    DifferentialTable t;
    t.doc_counts.clear();
    std::vector<bool> seen(static_cast<std::size_t>(kTrecTaskCount), false);
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (line_no == 1 || trim(line).empty()) {
            return;
        }
        auto cols = split_ws(line);
        if (cols.size() != kCordTaskCount + 1) {
            throw ParseError(source, line_no, "expected 11 columns");
        }
        int trec = 0;
        try {
            trec = std::stoi(std::string(cols[0]));
        } catch (const std::exception&) {
            throw ParseError(source, line_no, "bad row id");
        }
        if (!valid_trec_task(trec)) {
            throw ParseError(source, line_no, "row id outside 1..40");
        }
        seen[static_cast<std::size_t>(trec - 1)] = true;
        for (int c = 1; c <= kCordTaskCount; ++c) {
            auto cell = cols[static_cast<std::size_t>(c)];
            if (cell == "X") {
                continue;
            }
            try {
                std::size_t used = 0;
                int v = std::stoi(std::string(cell), &used);
                if (used != cell.size()) {
                    throw std::invalid_argument("trailing");
                }
                t.cells[t.index(trec, c)] = v;
            } catch (const std::invalid_argument&) {
                throw ParseError(source, line_no, "cell '" + std::string(cell) + "' is neither an integer nor X");
            }
        }
    });
    return t;
}

// ---------------------------------------------------------------------------
// Embeddings and cosine similarity
// ---------------------------------------------------------------------------

enum class TaskKind { Trec, Cord };

inline std::string_view to_string(TaskKind k) { return k == TaskKind::Trec ? "trec" : "cord"; }

inline std::optional<TaskKind> task_kind_from_string(std::string_view s)
{
    if (s == "trec") {
        return TaskKind::Trec;
    }
    if (s == "cord") {
        return TaskKind::Cord;
    }
    return std::nullopt;
}

struct TaskKey {
    TaskKind kind = TaskKind::Trec;
    int id = 0;

    friend auto operator<=>(const TaskKey&, const TaskKey&) = default;
};

/// Raw n-gram counts (n-gram tokens joined by single spaces).
struct TfEmbedding {
    TaskKey task;
    std::map<std::string, std::int64_t> counts;
};

/// Counts every 1..n_max token n-gram across all texts.
inline TfEmbedding build_tf_embedding(std::span<const std::string> texts, int n_max = 5)
{
    if (n_max < 1) {
        throw std::invalid_argument("n_max must be >= 1");
    }
    TfEmbedding emb;
    for (const auto& t : texts) {
        auto tokens = text::tokenize(t);
        text::for_each_ngram(tokens, n_max, [&](std::string_view g) { ++emb.counts[std::string(g)]; });
    }
    return emb;
}

template <class M>
concept SparseVector = requires(const M& m) {
    typename M::key_type;
    typename M::mapped_type;
    m.find(std::declval<typename M::key_type>());
    m.size();
};

/// u.v / (|u||v|), or 0 when either vector is zero.
template <SparseVector U, SparseVector V>
double cosine(const U& u, const V& v)
{
    double nu = 0.0;
    double nv = 0.0;
    double dot = 0.0;
    for (const auto& [k, x] : u) {
        nu += static_cast<double>(x) * static_cast<double>(x);
    }
    for (const auto& [k, y] : v) {
        nv += static_cast<double>(y) * static_cast<double>(y);
    }
    if (nu == 0.0 || nv == 0.0) {
        return 0.0;
    }
    const bool u_small = u.size() <= v.size();
    if (u_small) {
        for (const auto& [k, x] : u) {
            if (auto it = v.find(k); it != v.end()) {
                dot += static_cast<double>(x) * static_cast<double>(it->second);
            }
        }
    } else {
        for (const auto& [k, y] : v) {
            if (auto it = u.find(k); it != u.end()) {
                dot += static_cast<double>(it->second) * static_cast<double>(y);
            }
        }
    }
    return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

inline double cosine(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size()) {
        throw std::invalid_argument("dense vectors differ in dimension: " + std::to_string(u.size()) + " vs " +
                                    std::to_string(v.size()));
    }
    double nu = 0.0;
    double nv = 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        nu += u[i] * u[i];
        nv += v[i] * v[i];
        dot += u[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

/// Row-major grid of TREC (rows) by CORD (columns) cosine similarities.
struct SimilarityMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    bool normalized = false;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

/// Divides each column by its maximum; columns whose maximum is not positive stay untouched.
inline void normalize_columns(SimilarityMatrix& m)
{
    for (std::size_t c = 0; c < m.cols; ++c) {
        double mx = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) {
            mx = std::max(mx, m.at(r, c));
        }
        if (mx <= 0.0) {
            continue;
        }
        for (std::size_t r = 0; r < m.rows; ++r) {
            m.at(r, c) /= mx;
        }
    }
    m.normalized = true;
}

inline SimilarityMatrix similarity_matrix(std::span<const TfEmbedding> trec, std::span<const TfEmbedding> cord,
                                          bool normalize)
{
    SimilarityMatrix m{trec.size(), cord.size(), std::vector<double>(trec.size() * cord.size()), false};
    for (std::size_t r = 0; r < trec.size(); ++r) {
        for (std::size_t c = 0; c < cord.size(); ++c) {
            m.at(r, c) = cosine(trec[r].counts, cord[c].counts);
        }
    }
    if (normalize) {
        normalize_columns(m);
    }
    return m;
}

inline SimilarityMatrix similarity_matrix(std::span<const std::vector<double>> trec,
                                          std::span<const std::vector<double>> cord, bool normalize)
{
    SimilarityMatrix m{trec.size(), cord.size(), std::vector<double>(trec.size() * cord.size()), false};
    for (std::size_t r = 0; r < trec.size(); ++r) {
        for (std::size_t c = 0; c < cord.size(); ++c) {
            m.at(r, c) = cosine(std::span<const double>(trec[r]), std::span<const double>(cord[c]));
        }
    }
    if (normalize) {
        normalize_columns(m);
    }
    return m;
}

inline std::string format_similarity_tsv(const SimilarityMatrix& m)
{
    std::ostringstream out;
    out << "trec\\cord";
    for (std::size_t c = 1; c <= m.cols; ++c) {
        out << '\t' << c;
    }
    out << '\n';
    out << std::fixed << std::setprecision(6);
    for (std::size_t r = 0; r < m.rows; ++r) {
        out << (r + 1);
        for (std::size_t c = 0; c < m.cols; ++c) {
            out << '\t' << m.at(r, c);
        }
        out << '\n';
    }
    return out.str();
}

inline SimilarityMatrix parse_similarity_tsv(std::string_view text, const std::string& source = "similarity.tsv")
{
    SimilarityMatrix m;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (line_no == 1 || trim(line).empty()) {
            return;
        }
        auto cols = split_ws(line);
        if (cols.size() < 2) {
            throw ParseError(source, line_no, "row without values");
        }
        if (m.cols == 0) {
            m.cols = cols.size() - 1;
        } else if (cols.size() - 1 != m.cols) {
            throw ParseError(source, line_no, "ragged row");
        }
        for (std::size_t i = 1; i < cols.size(); ++i) {
            try {
                m.values.push_back(std::stod(std::string(cols[i])));
            } catch (const std::exception&) {
                throw ParseError(source, line_no, "bad value '" + std::string(cols[i]) + "'");
            }
        }
        ++m.rows;
    });
    return m;
}

/// Externally produced task embeddings, keyed by task.
using DenseVectors = std::map<TaskKey, std::vector<double>>;

/// Reads {"task_kind", "task_id", "vector"} lines. Every TREC topic 1..trec_count and
/// CORD task 1..10 must be present and all vectors must share one length.
inline DenseVectors parse_dense_vectors(std::string_view text, int trec_count = kTrecTaskCount,
                                        const std::string& source = "vectors.jsonl")
{
    DenseVectors out;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) {
            return;
        }
        try {
            auto j = nlohmann::json::parse(line);
            auto kind = task_kind_from_string(j.at("task_kind").get<std::string>());
            if (!kind) {
                throw ParseError(source, line_no, "task_kind must be 'trec' or 'cord'");
            }
            TaskKey key{*kind, j.at("task_id").get<int>()};
            auto vec = j.at("vector").get<std::vector<double>>();
            if (!out.emplace(key, std::move(vec)).second) {
                throw ParseError(source, line_no,
                                 "duplicate vector for " + std::string(to_string(key.kind)) + " task " +
                                     std::to_string(key.id));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source, line_no, e.what());
        }
    });
    auto require = [&](TaskKind kind, int count) {
        for (int i = 1; i <= count; ++i) {
            if (!out.count({kind, i})) {
                throw SchemaError(source + ": missing vector for " + std::string(to_string(kind)) + " task " +
                                  std::to_string(i));
            }
        }
    };
    require(TaskKind::Trec, trec_count);
    require(TaskKind::Cord, kCordTaskCount);
    const std::size_t dim = out.begin()->second.size();
    for (const auto& [key, vec] : out) {
        if (vec.size() != dim) {
            throw SchemaError(source + ": " + std::string(to_string(key.kind)) + " task " + std::to_string(key.id) +
                              " has dimension " + std::to_string(vec.size()) + ", expected " + std::to_string(dim));
        }
    }
    return out;
}

inline DenseVectors load_dense_vectors(const std::filesystem::path& path, int trec_count = kTrecTaskCount)
{
    return parse_dense_vectors(read_file(path), trec_count, path.string());
}

inline std::string format_dense_vectors(const DenseVectors& vectors)
{
    std::string out;
    for (const auto& [key, vec] : vectors) {
        nlohmann::ordered_json j;
        j["task_kind"] = to_string(key.kind);
        j["task_id"] = key.id;
        j["vector"] = vec;
        out += j.dump() + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Edit suggestions
// ---------------------------------------------------------------------------

enum class EditKind { Add, Remove };

inline std::string_view to_string(EditKind k) { return k == EditKind::Add ? "add" : "remove"; }

struct MappingEdit {
    EditKind kind = EditKind::Add;
    int trec_task = 0;
    int cord_task = 0;
    std::optional<int> differential;
    std::optional<double> similarity;
    std::optional<bool> accepted;

    friend bool operator==(const MappingEdit&, const MappingEdit&) = default;
};

struct SuggestionThresholds {
    int add_min = 2;
    int remove_max = -4;
};

/// Proposes Add for unmapped pairs whose differential is >= add_min and Remove for
/// mapped pairs whose differential is <= remove_max, strongest evidence first.
inline std::vector<MappingEdit> suggest_edits(const DifferentialTable& table, const SimilarityMatrix* sims,
                                              const TaskMapping& current, SuggestionThresholds th = {})
{
    if (!(th.add_min > 0 && th.remove_max < 0)) {
        throw std::invalid_argument("suggestion thresholds require add_min > 0 > remove_max");
    }
    std::vector<MappingEdit> edits;
    for (int t = 1; t <= table.trec_count; ++t) {
        for (int c = 1; c <= kCordTaskCount; ++c) {
            auto v = table.cell(t, c);
            if (!v) {
                continue;
            }
            const bool mapped = valid_trec_task(t) && current.contains(t, c);
            MappingEdit e;
            if (!mapped && *v >= th.add_min) {
                e.kind = EditKind::Add;
            } else if (mapped && *v <= th.remove_max) {
                e.kind = EditKind::Remove;
            } else {
                continue;
            }
            e.trec_task = t;
            e.cord_task = c;
            e.differential = *v;
            if (sims && static_cast<std::size_t>(t) <= sims->rows && static_cast<std::size_t>(c) <= sims->cols) {
                e.similarity = sims->at(static_cast<std::size_t>(t - 1), static_cast<std::size_t>(c - 1));
            }
            edits.push_back(e);
        }
    }
    std::stable_sort(edits.begin(), edits.end(), [](const MappingEdit& a, const MappingEdit& b) {
        return std::abs(*a.differential) > std::abs(*b.differential);
    });
    return edits;
}

inline nlohmann::ordered_json edit_to_json(const MappingEdit& e)
{
    nlohmann::ordered_json j;
    j["kind"] = to_string(e.kind);
    j["trec_task"] = e.trec_task;
    j["cord_task"] = e.cord_task;
    j["differential"] = e.differential ? nlohmann::ordered_json(*e.differential) : nlohmann::ordered_json(nullptr);
    j["similarity"] = e.similarity ? nlohmann::ordered_json(*e.similarity) : nlohmann::ordered_json(nullptr);
    j["accepted"] = e.accepted ? nlohmann::ordered_json(*e.accepted) : nlohmann::ordered_json(nullptr);
    return j;
}

inline MappingEdit edit_from_json(const nlohmann::json& j)
{
    MappingEdit e;
    auto kind = j.at("kind").get<std::string>();
    if (kind == "add") {
        e.kind = EditKind::Add;
    } else if (kind == "remove") {
        e.kind = EditKind::Remove;
    } else {
        throw SchemaError("edit kind must be 'add' or 'remove', got '" + kind + "'");
    }
    e.trec_task = j.at("trec_task").get<int>();
    e.cord_task = j.at("cord_task").get<int>();
    if (!valid_trec_task(e.trec_task) || !valid_cord_task(e.cord_task)) {
        throw SchemaError("edit references task ids out of range");
    }
    if (j.contains("differential") && !j.at("differential").is_null()) {
        e.differential = j.at("differential").get<int>();
    }
    if (j.contains("similarity") && !j.at("similarity").is_null()) {
        e.similarity = j.at("similarity").get<double>();
    }
    if (j.contains("accepted") && !j.at("accepted").is_null()) {
        e.accepted = j.at("accepted").get<bool>();
    }
    return e;
}

inline std::string format_edits_json(const std::vector<MappingEdit>& edits)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : edits) {
        arr.push_back(edit_to_json(e));
    }
    return arr.dump(2) + "\n";
}

inline std::vector<MappingEdit> parse_edits_json(std::string_view text, const std::string& source = "edits.json")
{
    try {
        auto arr = nlohmann::json::parse(text);
        if (!arr.is_array()) {
            throw SchemaError(source + ": edits must be a JSON array");
        }
        std::vector<MappingEdit> out;
        for (const auto& j : arr) {
            out.push_back(edit_from_json(j));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(source + ": " + e.what());
    }
}

/// Applies an edit to a mapping (no-op for edits that are already satisfied).
inline void apply_edit(TaskMapping& m, const MappingEdit& e)
{
    if (e.kind == EditKind::Add) {
        m.add(e.trec_task, e.cord_task);
    } else {
        m.remove(e.trec_task, e.cord_task);
    }
}

}  // namespace trecxfer
