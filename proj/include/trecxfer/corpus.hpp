#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trecxfer/common.hpp"
#include "trecxfer/csv.hpp"

namespace trecxfer {

struct DocumentRecord {
    std::string cord_uid;
    std::string title;
    std::optional<std::string> abstract;
    /// Relative to the corpus root; pmc parses precede pdf parses.
    std::vector<std::string> fulltext_paths;
    std::optional<std::string> publish_time;
    std::string source;

    friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

enum class SectionKind { Abstract, Conclusion };

inline std::string_view to_string(SectionKind kind)
{
    return kind == SectionKind::Abstract ? "abstract" : "conclusion";
}

inline std::optional<SectionKind> section_kind_from_string(std::string_view s)
{
    if (s == "abstract") {
        return SectionKind::Abstract;
    }
    if (s == "conclusion") {
        return SectionKind::Conclusion;
    }
    return std::nullopt;
}

struct Excerpt {
    std::string cord_uid;
    SectionKind section_kind;
    std::string text;

    friend bool operator==(const Excerpt&, const Excerpt&) = default;
};

/// One paragraph of a parsed full-text file, in document order.
struct BodyParagraph {
    std::string section;
    std::string text;
};

using FullText = std::vector<BodyParagraph>;

namespace detail {

inline std::vector<std::string> split_path_list(std::string_view field)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= field.size()) {
        auto semi = field.find(';', pos);
        auto end = semi == std::string_view::npos ? field.size() : semi;
        auto part = trim(field.substr(pos, end - pos));
        if (!part.empty()) {
            out.emplace_back(part);
        }
        if (semi == std::string_view::npos) {
            break;
        }
        pos = semi + 1;
    }
    return out;
}

inline std::optional<std::string> non_empty(const std::string& s)
{
    if (trim(s).empty()) {
        return std::nullopt;
    }
    return s;
}

}  // namespace detail

inline constexpr std::array<std::string_view, 7> kMetadataColumns = {
    "cord_uid", "title", "abstract", "pmc_json_files", "pdf_json_files", "publish_time", "source_x"};

/// Parses CORD-19 metadata CSV text. Duplicate cord_uid rows keep the first occurrence.
inline WithWarnings<std::vector<DocumentRecord>> parse_metadata_text(std::string_view text,
                                                                     const std::string& source = "metadata.csv")
{
    auto rows = csv::parse(text, source);
    if (rows.empty()) {
        throw SchemaError(source + ": missing header row");
    }
    const auto& header = rows.front().fields;
    std::array<std::size_t, kMetadataColumns.size()> col{};
    for (std::size_t k = 0; k < kMetadataColumns.size(); ++k) {
        auto it = std::find(header.begin(), header.end(), kMetadataColumns[k]);
        if (it == header.end()) {
            throw SchemaError(source + ": missing required column '" + std::string(kMetadataColumns[k]) + "'");
        }
        col[k] = static_cast<std::size_t>(it - header.begin());
    }

    WithWarnings<std::vector<DocumentRecord>> out;
    std::unordered_set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != header.size()) {
            throw ParseError(source, rows[r].line,
                             "expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(f.size()));
        }
        std::string uid(trim(f[col[0]]));
        if (uid.empty()) {
            throw ParseError(source, rows[r].line, "empty cord_uid");
        }
        if (!seen.insert(uid).second) {
            out.warnings.push_back(source + ":" + std::to_string(rows[r].line) + ": duplicate cord_uid '" + uid +
                                   "', keeping first occurrence");
            continue;
        }
        DocumentRecord doc;
        doc.cord_uid = std::move(uid);
        doc.title = f[col[1]];
        doc.abstract = detail::non_empty(f[col[2]]);
        doc.fulltext_paths = detail::split_path_list(f[col[3]]);
        for (auto& p : detail::split_path_list(f[col[4]])) {
            doc.fulltext_paths.push_back(std::move(p));
        }
        doc.publish_time = detail::non_empty(f[col[5]]);
        doc.source = f[col[6]];
        out.value.push_back(std::move(doc));
    }
    return out;
}

inline WithWarnings<std::vector<DocumentRecord>> parse_metadata(const std::filesystem::path& path)
{
    return parse_metadata_text(read_file(path), path.string());
}

/// Serializes records back to the metadata schema (required columns only).
/// pmc/pdf provenance is not tracked per path, so all paths land in pmc_json_files.
inline std::string format_metadata(const std::vector<DocumentRecord>& docs)
{
    std::string out;
    out += csv::format_row({kMetadataColumns.begin(), kMetadataColumns.end()});
    for (const auto& d : docs) {
        std::string paths;
        for (std::size_t i = 0; i < d.fulltext_paths.size(); ++i) {
            paths += (i ? "; " : "") + d.fulltext_paths[i];
        }
        out += csv::format_row({d.cord_uid, d.title, d.abstract.value_or(""), paths, "",
                                d.publish_time.value_or(""), d.source});
    }
    return out;
}

inline FullText parse_fulltext_text(std::string_view text, const std::string& source = "<fulltext>")
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(source + ": " + e.what());
    }
    FullText body;
    if (!j.is_object() || !j.contains("body_text")) {
        return body;
    }
    const auto& paragraphs = j.at("body_text");
    if (!paragraphs.is_array()) {
        throw SchemaError(source + ": body_text is not an array");
    }
    for (const auto& p : paragraphs) {
        if (!p.is_object() || !p.contains("text") || !p.at("text").is_string()) {
            throw SchemaError(source + ": body_text entry without string 'text'");
        }
        std::string section;
        if (p.contains("section") && p.at("section").is_string()) {
            section = p.at("section").get<std::string>();
        }
        body.push_back({std::move(section), p.at("text").get<std::string>()});
    }
    return body;
}

inline FullText parse_fulltext(const std::filesystem::path& path)
{
    return parse_fulltext_text(read_file(path), path.string());
}

namespace detail {

inline std::string prepend_title(const std::string& title, const std::string& body)
{
    if (trim(title).empty()) {
        return body;
    }
    return title + " " + body;
}

inline std::string lowercase_ascii(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

}  // namespace detail

/// Produces the abstract and conclusion excerpts of one article, each prefixed
/// with the title. Conclusion paragraphs are those whose section name contains
/// "conclusion" (case-insensitive), joined in document order.
inline std::vector<Excerpt> extract_excerpts(const DocumentRecord& doc, const std::optional<FullText>& body)
{
    std::vector<Excerpt> out;
    if (doc.abstract && !trim(*doc.abstract).empty()) {
        out.push_back({doc.cord_uid, SectionKind::Abstract, detail::prepend_title(doc.title, *doc.abstract)});
    }
    if (body) {
        std::string joined;
        bool any = false;
        for (const auto& p : *body) {
            if (detail::lowercase_ascii(p.section).find("conclusion") == std::string::npos) {
                continue;
            }
            if (any) {
                joined.push_back(' ');
            }
            joined += p.text;
            any = true;
        }
        if (any && !trim(joined).empty()) {
            out.push_back({doc.cord_uid, SectionKind::Conclusion, detail::prepend_title(doc.title, joined)});
        }
    }
    return out;
}

/// First listed full-text file that exists under the root (pmc entries come first).
inline std::optional<std::filesystem::path> resolve_fulltext(const DocumentRecord& doc,
                                                             const std::filesystem::path& corpus_root)
{
    for (const auto& rel : doc.fulltext_paths) {
        auto p = corpus_root / rel;
        if (std::filesystem::is_regular_file(p)) {
            return p;
        }
    }
    return std::nullopt;
}

/// Excerpts grouped per document, abstract before conclusion.
using ExcerptStore = std::map<std::string, std::vector<Excerpt>>;

inline ExcerptStore index_excerpts(const std::vector<Excerpt>& excerpts)
{
    ExcerptStore store;
    for (const auto& e : excerpts) {
        store[e.cord_uid].push_back(e);
    }
    for (auto& [uid, list] : store) {
        std::stable_sort(list.begin(), list.end(),
                         [](const Excerpt& a, const Excerpt& b) { return a.section_kind < b.section_kind; });
    }
    return store;
}

inline std::string format_excerpts_jsonl(const std::vector<Excerpt>& excerpts)
{
    std::string out;
    for (const auto& e : excerpts) {
        nlohmann::ordered_json j;
        j["cord_uid"] = e.cord_uid;
        j["section_kind"] = to_string(e.section_kind);
        j["text"] = e.text;
        out += j.dump() + "\n";
    }
    return out;
}

inline std::vector<Excerpt> parse_excerpts_jsonl(std::string_view text, const std::string& source = "excerpts.jsonl")
{
    std::vector<Excerpt> out;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) {
            return;
        }
        try {
            auto j = nlohmann::json::parse(line);
            auto kind = section_kind_from_string(j.at("section_kind").get<std::string>());
            if (!kind) {
                throw ParseError(source, line_no, "section_kind must be 'abstract' or 'conclusion'");
            }
            Excerpt e{j.at("cord_uid").get<std::string>(), *kind, j.at("text").get<std::string>()};
            if (e.cord_uid.empty() || trim(e.text).empty()) {
                throw ParseError(source, line_no, "empty cord_uid or text");
            }
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(source, line_no, ex.what());
        }
    });
    return out;
}

}  // namespace trecxfer
