#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trecxfer/common.hpp"
#include "trecxfer/csv.hpp"
#include "trecxfer/mapping.hpp"

namespace trecxfer {

/// Binary labels, one byte per item, each 0 or 1.
using LabelVector = std::vector<std::uint8_t>;

namespace detail {

inline void check_binary(std::span<const std::uint8_t> v, const char* what)
{
    for (auto x : v) {
        if (x > 1) {
            throw std::invalid_argument(std::string(what) + " contains a non-binary label");
        }
    }
}

}  // namespace detail

/// Cohen's kappa for two binary raters. When chance agreement is 1 the statistic
/// is 0/0; it is defined as 1 for identical vectors and 0 otherwise.
inline double cohen_kappa(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("cohen_kappa: length mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
    if (a.empty()) {
        throw std::invalid_argument("cohen_kappa: empty label vectors");
    }
    detail::check_binary(a, "cohen_kappa: a");
    detail::check_binary(b, "cohen_kappa: b");
    const double n = static_cast<double>(a.size());
    std::size_t agree = 0;
    std::size_t a1 = 0;
    std::size_t b1 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        agree += a[i] == b[i];
        a1 += a[i];
        b1 += b[i];
    }
    const double po = static_cast<double>(agree) / n;
    const double pa = static_cast<double>(a1) / n;
    const double pb = static_cast<double>(b1) / n;
    const double pe = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (pe == 1.0) {
        return agree == a.size() ? 1.0 : 0.0;
    }
    return (po - pe) / (1.0 - pe);
}

/// Items x annotators grid of binary labels.
class AnnotationMatrix {
public:
    AnnotationMatrix(std::vector<std::string> items, std::vector<LabelVector> rows)
        : items_(std::move(items)), rows_(std::move(rows))
    {
        if (rows_.empty()) {
            throw std::invalid_argument("annotation matrix needs at least one item");
        }
        if (items_.size() != rows_.size()) {
            throw std::invalid_argument("annotation matrix: item ids and label rows differ in count");
        }
        const auto width = rows_.front().size();
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (rows_[i].size() != width) {
                throw std::invalid_argument("annotation matrix is ragged at item " + items_[i]);
            }
            detail::check_binary(rows_[i], "annotation matrix");
        }
    }

    /// Items named by their row index.
    explicit AnnotationMatrix(const std::vector<LabelVector>& rows) : AnnotationMatrix(index_names(rows.size()), rows) {}

    std::size_t item_count() const { return rows_.size(); }
    std::size_t annotator_count() const { return rows_.front().size(); }
    const std::vector<std::string>& items() const { return items_; }
    const LabelVector& row(std::size_t i) const { return rows_[i]; }

    LabelVector annotator(std::size_t k) const
    {
        LabelVector out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) {
            out.push_back(r[k]);
        }
        return out;
    }

private:
    static std::vector<std::string> index_names(std::size_t n)
    {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i) {
            names.push_back(std::to_string(i));
        }
        return names;
    }

    std::vector<std::string> items_;
    std::vector<LabelVector> rows_;
};

/// Fleiss' kappa over two categories. Returns 1 when every label falls in one category.
inline double fleiss_kappa(const AnnotationMatrix& m)
{
    const auto raters = m.annotator_count();
    if (raters < 2) {
        throw std::invalid_argument("fleiss_kappa needs at least two annotators");
    }
    const double n = static_cast<double>(raters);
    const double items = static_cast<double>(m.item_count());
    double p_bar = 0.0;
    double ones_total = 0.0;
    for (std::size_t i = 0; i < m.item_count(); ++i) {
        double ones = 0.0;
        for (auto x : m.row(i)) {
            ones += x;
        }
        const double zeros = n - ones;
        p_bar += (ones * ones + zeros * zeros - n) / (n * (n - 1.0));
        ones_total += ones;
    }
    p_bar /= items;
    const double p1 = ones_total / (items * n);
    const double pe = p1 * p1 + (1.0 - p1) * (1.0 - p1);
    if (pe == 1.0) {
        return 1.0;
    }
    return (p_bar - pe) / (1.0 - pe);
}

/// Per-item modal label; requires an odd number of annotators so binary votes cannot tie.
inline LabelVector majority_vote(const AnnotationMatrix& m)
{
    if (m.annotator_count() % 2 == 0) {
        throw std::invalid_argument("majority_vote: " + std::to_string(m.annotator_count()) +
                                    " annotators is even; a tie-breaking rule is required");
    }
    LabelVector out;
    out.reserve(m.item_count());
    for (std::size_t i = 0; i < m.item_count(); ++i) {
        std::size_t ones = 0;
        for (auto x : m.row(i)) {
            ones += x;
        }
        out.push_back(2 * ones > m.annotator_count() ? 1 : 0);
    }
    return out;
}

inline bool threshold(double p, double cut = 0.5) { return p >= cut; }

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Rates {
    std::optional<double> tnr;
    std::optional<double> tpr;
    ConfusionCounts counts;
};

/// True-negative and true-positive rates; a rate is absent when its class has no truth items.
inline Rates tnr_tpr(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth)
{
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("tnr_tpr: length mismatch");
    }
    detail::check_binary(pred, "tnr_tpr: pred");
    detail::check_binary(truth, "tnr_tpr: truth");
    Rates r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i]) {
            (pred[i] ? r.counts.tp : r.counts.fn)++;
        } else {
            (pred[i] ? r.counts.fp : r.counts.tn)++;
        }
    }
    if (r.counts.tp + r.counts.fn > 0) {
        r.tpr = static_cast<double>(r.counts.tp) / static_cast<double>(r.counts.tp + r.counts.fn);
    }
    if (r.counts.tn + r.counts.fp > 0) {
        r.tnr = static_cast<double>(r.counts.tn) / static_cast<double>(r.counts.tn + r.counts.fp);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Human annotation file: cord_task,cord_uid,annotator_id,label
// ---------------------------------------------------------------------------

struct AnnotationSet {
    /// (cord_task, cord_uid) -> annotator_id -> label
    std::map<std::pair<int, std::string>, std::map<std::string, std::uint8_t>> labels;

    std::set<std::string> annotators() const
    {
        std::set<std::string> out;
        for (const auto& [key, by] : labels) {
            for (const auto& [a, l] : by) {
                out.insert(a);
            }
        }
        return out;
    }

    /// Items x annotators for one task (or all tasks when cord_task is empty), items
    /// ordered by (task, uid), annotators by id. Every item must carry every annotator.
    AnnotationMatrix matrix(std::optional<int> cord_task = std::nullopt) const
    {
        auto ann = annotators();
        std::vector<std::string> items;
        std::vector<LabelVector> rows;
        for (const auto& [key, by] : labels) {
            if (cord_task && key.first != *cord_task) {
                continue;
            }
            LabelVector row;
            for (const auto& a : ann) {
                auto it = by.find(a);
                if (it == by.end()) {
                    throw SchemaError("annotator " + a + " did not label task " + std::to_string(key.first) +
                                      " document " + key.second);
                }
                row.push_back(it->second);
            }
            items.push_back(std::to_string(key.first) + ":" + key.second);
            rows.push_back(std::move(row));
        }
        return AnnotationMatrix(std::move(items), std::move(rows));
    }

    /// Majority labels per (task, uid).
    DocLabels majority() const
    {
        DocLabels out;
        for (const auto& [key, by] : labels) {
            if (by.size() % 2 == 0) {
                throw SchemaError("task " + std::to_string(key.first) + " document " + key.second + " has " +
                                  std::to_string(by.size()) + " annotations; majority needs an odd count");
            }
            std::size_t ones = 0;
            for (const auto& [a, l] : by) {
                ones += l;
            }
            out[key] = 2 * ones > by.size();
        }
        return out;
    }
};

inline AnnotationSet parse_annotations_csv(std::string_view text, const std::string& source = "annotations.csv")
{
    auto rows = csv::parse(text, source);
    if (rows.empty()) {
        throw SchemaError(source + ": missing header row");
    }
    const auto& header = rows.front().fields;
    const std::array<std::string_view, 4> required = {"cord_task", "cord_uid", "annotator_id", "label"};
    std::array<std::size_t, 4> col{};
    for (std::size_t k = 0; k < required.size(); ++k) {
        auto it = std::find(header.begin(), header.end(), required[k]);
        if (it == header.end()) {
            throw SchemaError(source + ": missing required column '" + std::string(required[k]) + "'");
        }
        col[k] = static_cast<std::size_t>(it - header.begin());
    }
    AnnotationSet out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        const auto line = rows[r].line;
        if (f.size() != header.size()) {
            throw ParseError(source, line, "wrong field count");
        }
        int task = 0;
        try {
            task = std::stoi(f[col[0]]);
        } catch (const std::exception&) {
            throw ParseError(source, line, "cord_task is not an integer");
        }
        if (!valid_cord_task(task)) {
            throw ParseError(source, line, "cord_task outside 1..10");
        }
        auto label = trim(f[col[3]]);
        if (label != "0" && label != "1") {
            throw ParseError(source, line, "label must be 0 or 1");
        }
        std::string uid(trim(f[col[1]]));
        std::string annotator(trim(f[col[2]]));
        auto& slot = out.labels[{task, uid}];
        if (!slot.emplace(annotator, label == "1" ? 1 : 0).second) {
            throw ParseError(source, line, "annotator " + annotator + " labeled this item twice");
        }
    }
    return out;
}

inline AnnotationSet load_annotations(const std::filesystem::path& path)
{
    return parse_annotations_csv(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Prediction exchange file
// ---------------------------------------------------------------------------

struct Prediction {
    std::string record_id;  ///< may be empty when only cord_uid is known
    std::string cord_uid;
    TaskKind task_kind = TaskKind::Cord;
    int task_id = 0;
    double prob = 0.0;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

namespace detail {

/// record ids look like "<task>:<cord_uid>:<section>"; anything else is taken as the uid itself.
inline std::string uid_from_record_id(const std::string& rid)
{
    auto first = rid.find(':');
    auto last = rid.rfind(':');
    if (first == std::string::npos || first == last) {
        return rid;
    }
    return rid.substr(first + 1, last - first - 1);
}

}  // namespace detail

inline std::vector<Prediction> parse_predictions_jsonl(std::string_view text,
                                                       const std::string& source = "predictions.jsonl")
{
    std::vector<Prediction> out;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) {
            return;
        }
        try {
            auto j = nlohmann::json::parse(line);
            Prediction p;
            if (j.contains("record_id")) {
                p.record_id = j.at("record_id").get<std::string>();
            }
            if (j.contains("cord_uid")) {
                p.cord_uid = j.at("cord_uid").get<std::string>();
            } else if (!p.record_id.empty()) {
                p.cord_uid = detail::uid_from_record_id(p.record_id);
            } else {
                throw ParseError(source, line_no, "prediction needs record_id or cord_uid");
            }
            auto kind = task_kind_from_string(j.at("task_kind").get<std::string>());
            if (!kind) {
                throw ParseError(source, line_no, "task_kind must be 'trec' or 'cord'");
            }
            p.task_kind = *kind;
            p.task_id = j.at("task_id").get<int>();
            p.prob = j.at("prob").get<double>();
            if (!(p.prob >= 0.0 && p.prob <= 1.0)) {
                throw ParseError(source, line_no, "prob outside [0, 1]");
            }
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source, line_no, e.what());
        }
    });
    return out;
}

inline std::vector<Prediction> load_predictions(const std::filesystem::path& path)
{
    return parse_predictions_jsonl(read_file(path), path.string());
}

inline std::string format_predictions_jsonl(const std::vector<Prediction>& preds)
{
    std::string out;
    for (const auto& p : preds) {
        nlohmann::ordered_json j;
        if (!p.record_id.empty()) {
            j["record_id"] = p.record_id;
        }
        j["cord_uid"] = p.cord_uid;
        j["task_kind"] = to_string(p.task_kind);
        j["task_id"] = p.task_id;
        j["prob"] = p.prob;
        out += j.dump() + "\n";
    }
    return out;
}

/// Document-level probability per (task, uid) for one task kind: the maximum over
/// the document's excerpts, so a document counts as relevant if any excerpt is.
inline std::map<std::pair<int, std::string>, double> document_probabilities(const std::vector<Prediction>& preds,
                                                                            TaskKind kind)
{
    std::map<std::pair<int, std::string>, double> out;
    for (const auto& p : preds) {
        if (p.task_kind != kind) {
            continue;
        }
        auto [it, inserted] = out.try_emplace({p.task_id, p.cord_uid}, p.prob);
        if (!inserted) {
            it->second = std::max(it->second, p.prob);
        }
    }
    return out;
}

inline DocLabels threshold_all(const std::map<std::pair<int, std::string>, double>& probs, double cut = 0.5)
{
    DocLabels out;
    for (const auto& [key, p] : probs) {
        out.emplace(key, threshold(p, cut));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-task agreement report
// ---------------------------------------------------------------------------

struct TaskAgreement {
    int cord_task = 0;
    std::size_t items = 0;
    std::optional<double> kappa;
    Rates rates;
};

struct AgreementReport {
    std::vector<TaskAgreement> tasks;
    /// Kappa over every scored (task, item) pair as one vector.
    std::optional<double> pooled_kappa;
    /// Unweighted mean of the defined per-task kappas.
    std::optional<double> mean_kappa;
    std::size_t missing_predictions = 0;
    double cut = 0.5;
    std::string label;
};

/// Scores model output against majority annotations, per task and pooled.
/// Annotated items without a prediction are counted in missing_predictions and skipped.
inline AgreementReport per_task_report(const std::map<std::pair<int, std::string>, double>& cord_probs,
                                       const DocLabels& majority, double cut = 0.5, std::string label = {})
{
    AgreementReport rep;
    rep.cut = cut;
    rep.label = std::move(label);
    LabelVector all_pred;
    LabelVector all_truth;
    double kappa_sum = 0.0;
    std::size_t kappa_n = 0;
    for (int c = 1; c <= kCordTaskCount; ++c) {
        LabelVector pred;
        LabelVector truth;
        for (auto it = majority.lower_bound({c, std::string()}); it != majority.end() && it->first.first == c; ++it) {
            auto p = cord_probs.find(it->first);
            if (p == cord_probs.end()) {
                ++rep.missing_predictions;
                continue;
            }
            pred.push_back(threshold(p->second, cut) ? 1 : 0);
            truth.push_back(it->second ? 1 : 0);
        }
        TaskAgreement t;
        t.cord_task = c;
        t.items = pred.size();
        if (!pred.empty()) {
            t.kappa = cohen_kappa(pred, truth);
            t.rates = tnr_tpr(pred, truth);
            kappa_sum += *t.kappa;
            ++kappa_n;
        }
        all_pred.insert(all_pred.end(), pred.begin(), pred.end());
        all_truth.insert(all_truth.end(), truth.begin(), truth.end());
        rep.tasks.push_back(t);
    }
    if (!all_pred.empty()) {
        rep.pooled_kappa = cohen_kappa(all_pred, all_truth);
        rep.mean_kappa = kappa_sum / static_cast<double>(kappa_n);
    }
    return rep;
}

/// Pooled kappa at each cut in {0.05, 0.10, ..., 0.95}.
inline std::vector<std::pair<double, std::optional<double>>> threshold_sweep(
    const std::map<std::pair<int, std::string>, double>& cord_probs, const DocLabels& majority)
{
    std::vector<std::pair<double, std::optional<double>>> out;
    for (int k = 1; k <= 19; ++k) {
        const double cut = 0.05 * k;
        out.emplace_back(cut, per_task_report(cord_probs, majority, cut).pooled_kappa);
    }
    return out;
}

namespace detail {

inline std::string fmt_opt(const std::optional<double>& v)
{
    if (!v) {
        return "NA";
    }
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
}

inline nlohmann::ordered_json json_opt(const std::optional<double>& v)
{
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline std::string format_report_tsv(const AgreementReport& rep)
{
    std::ostringstream out;
    out << "cord_task\titems\tkappa\ttnr\ttpr\ttp\tfp\ttn\tfn\n";
    for (const auto& t : rep.tasks) {
        out << t.cord_task << '\t' << t.items << '\t' << detail::fmt_opt(t.kappa) << '\t'
            << detail::fmt_opt(t.rates.tnr) << '\t' << detail::fmt_opt(t.rates.tpr) << '\t' << t.rates.counts.tp
            << '\t' << t.rates.counts.fp << '\t' << t.rates.counts.tn << '\t' << t.rates.counts.fn << '\n';
    }
    std::size_t pooled_items = 0;
    for (const auto& t : rep.tasks) {
        pooled_items += t.items;
    }
    out << "pooled\t" << pooled_items << '\t' << detail::fmt_opt(rep.pooled_kappa) << "\t\t\t\t\t\t\n";
    out << "mean\t\t" << detail::fmt_opt(rep.mean_kappa) << "\t\t\t\t\t\t\n";
    return out.str();
}

inline std::string format_report_json(const AgreementReport& rep,
                                      const std::vector<std::pair<double, std::optional<double>>>& sweep = {})
{
    nlohmann::ordered_json j;
    if (!rep.label.empty()) {
        j["label"] = rep.label;
    }
    j["threshold"] = rep.cut;
    j["pooled_kappa"] = detail::json_opt(rep.pooled_kappa);
    j["mean_kappa"] = detail::json_opt(rep.mean_kappa);
    j["missing_predictions"] = rep.missing_predictions;
    auto tasks = nlohmann::ordered_json::array();
    for (const auto& t : rep.tasks) {
        nlohmann::ordered_json o;
        o["cord_task"] = t.cord_task;
        o["items"] = t.items;
        o["kappa"] = detail::json_opt(t.kappa);
        o["tnr"] = detail::json_opt(t.rates.tnr);
        o["tpr"] = detail::json_opt(t.rates.tpr);
        tasks.push_back(o);
    }
    j["tasks"] = tasks;
    if (!sweep.empty()) {
        auto s = nlohmann::ordered_json::array();
        for (const auto& [cut, k] : sweep) {
            s.push_back({{"threshold", cut}, {"pooled_kappa", detail::json_opt(k)}});
        }
        j["threshold_sweep"] = s;
    }
    return j.dump(2) + "\n";
}

}  // namespace trecxfer
