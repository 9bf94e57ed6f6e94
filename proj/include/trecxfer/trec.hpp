#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "trecxfer/common.hpp"

namespace trecxfer {

struct Topic {
    int topic_id = 0;
    std::string query;
    std::string question;
    std::string narrative;

    friend bool operator==(const Topic&, const Topic&) = default;
};

/// Relevance levels: 0 not relevant, 1 somewhat relevant, 2 relevant.
struct Judgment {
    int topic_id = 0;
    std::string cord_uid;
    int level = 0;
    int round = 1;

    friend bool operator==(const Judgment&, const Judgment&) = default;
};

struct BinaryJudgment {
    int topic_id = 0;
    std::string cord_uid;
    bool relevant = false;

    friend bool operator==(const BinaryJudgment&, const BinaryJudgment&) = default;
};

/// Round-3 topic queries, indexed by topic_id - 1.
inline const std::array<std::string_view, kTrecTaskCount>& round3_topic_queries()
{
    static constexpr std::array<std::string_view, kTrecTaskCount> queries = {
        "coronavirus origin",
        "coronavirus response to weather changes",
        "coronavirus immunity",
        "how do people die from the coronavirus",
        "animal models of COVID-19",
        "coronavirus test rapid testing",
        "serological tests for coronavirus",
        "coronavirus under reporting",
        "coronavirus in Canada",
        "coronavirus social distancing impact",
        "coronavirus hospital rationing",
        "coronavirus quarantine",
        "how does coronavirus spread",
        "coronavirus super spreaders",
        "coronavirus outside body",
        "how long does coronavirus survive on surfaces",
        "coronavirus clinical trials",
        "masks prevent coronavirus",
        "what alcohol sanitizer kills coronavirus",
        "coronavirus and ACE inhibitors",
        "coronavirus mortality",
        "coronavirus heart impacts",
        "coronavirus hypertension",
        "coronavirus diabetes",
        "coronavirus biomarkers",
        "coronavirus early symptoms",
        "coronavirus asymptomatic",
        "coronavirus hydroxychloroquine",
        "coronavirus drug repurposing",
        "coronavirus remdesivir",
        "difference between coronavirus and flu",
        "coronavirus subtypes",
        "coronavirus vaccine candidates",
        "coronavirus recovery",
        "coronavirus public datasets",
        "SARS-CoV-2 spike structure",
        "SARS-CoV-2 phylogenetic analysis",
        "COVID inflammatory response",
        "COVID-19 cytokine storm",
        "coronavirus mutations",
    };
    return queries;
}

/// Number of topics available in a competition round: 30 initially, 5 more per round.
inline constexpr int topics_in_round(int round) { return 25 + 5 * round; }

/// Parses a topics XML document: <topics><topic number="N"><query/><question/><narrative/></topic>...</topics>.
inline std::vector<Topic> parse_topics_text(const std::string& text, const std::string& source = "topics.xml")
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError(source, e.line(), "malformed XML: " + e.message());
    }
    auto root = tree.get_child_optional("topics");
    if (!root) {
        throw SchemaError(source + ": root element must be <topics>");
    }
    std::vector<Topic> out;
    for (const auto& [name, node] : *root) {
        if (name != "topic") {
            continue;
        }
        auto number = node.get_optional<std::string>("<xmlattr>.number");
        if (!number) {
            throw SchemaError(source + ": <topic> without number attribute");
        }
        Topic t;
        auto num = trim(*number);
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), t.topic_id);
        if (ec != std::errc{} || ptr != num.data() + num.size() || t.topic_id < 1) {
            throw SchemaError(source + ": topic number '" + *number + "' is not a positive integer");
        }
        auto child = [&](const char* key) {
            auto v = node.get_optional<std::string>(key);
            if (!v || trim(*v).empty()) {
                throw SchemaError(source + ": topic " + std::to_string(t.topic_id) + " is missing <" + key + ">");
            }
            return std::string(trim(*v));
        };
        t.query = child("query");
        t.question = child("question");
        t.narrative = child("narrative");
        if (std::any_of(out.begin(), out.end(), [&](const Topic& o) { return o.topic_id == t.topic_id; })) {
            throw SchemaError(source + ": duplicate topic " + std::to_string(t.topic_id));
        }
        out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<Topic> parse_topics(const std::filesystem::path& path)
{
    return parse_topics_text(read_file(path), path.string());
}

namespace detail {

inline bool parse_int(std::string_view s, int& out)
{
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses qrels lines `topic iteration cord_uid level`. The iteration column is
/// ignored (it is fractional in some releases); every judgment is stamped with `round`.
inline std::vector<Judgment> parse_qrels_text(std::string_view text, int round, const std::string& source = "qrels")
{
    std::vector<Judgment> out;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        auto cols = split_ws(line);
        if (cols.empty()) {
            return;
        }
        if (cols.size() != 4) {
            throw ParseError(source, line_no, "expected 4 columns, found " + std::to_string(cols.size()));
        }
        Judgment j;
        j.round = round;
        if (!detail::parse_int(cols[0], j.topic_id)) {
            throw ParseError(source, line_no, "non-integer topic id '" + std::string(cols[0]) + "'");
        }
        if (!detail::parse_int(cols[3], j.level)) {
            throw ParseError(source, line_no, "non-integer relevance level '" + std::string(cols[3]) + "'");
        }
        if (j.level < 0 || j.level > 2) {
            throw ParseError(source, line_no, "relevance level " + std::to_string(j.level) + " not in {0,1,2}");
        }
        j.cord_uid = std::string(cols[2]);
        out.push_back(std::move(j));
    });
    return out;
}

inline std::vector<Judgment> parse_qrels(const std::filesystem::path& path, int round)
{
    return parse_qrels_text(read_file(path), round, path.string());
}

inline BinaryJudgment binarize(const Judgment& j)
{
    return {j.topic_id, j.cord_uid, j.level >= 1};
}

/// How "somewhat relevant" judgments enter the binary label space.
enum class PartialPolicy {
    AsRelevant,  ///< level 1 counts as relevant
    Exclude,     ///< level-1 judgments are dropped before binarization
};

inline std::vector<BinaryJudgment> binarize_all(const std::vector<Judgment>& judgments,
                                                PartialPolicy policy = PartialPolicy::AsRelevant)
{
    std::vector<BinaryJudgment> out;
    out.reserve(judgments.size());
    for (const auto& j : judgments) {
        if (policy == PartialPolicy::Exclude && j.level == 1) {
            continue;
        }
        out.push_back(binarize(j));
    }
    return out;
}

/// Keeps one judgment per (topic, cord_uid): the highest round wins, and among
/// equal rounds the last one seen (with a conflict warning when levels differ).
/// Output is ordered by (topic_id, cord_uid).
inline WithWarnings<std::vector<Judgment>> dedupe(const std::vector<Judgment>& judgments)
{
    WithWarnings<std::vector<Judgment>> out;
    std::map<std::pair<int, std::string>, Judgment> best;
    for (const auto& j : judgments) {
        auto [it, inserted] = best.try_emplace({j.topic_id, j.cord_uid}, j);
        if (inserted) {
            continue;
        }
        auto& cur = it->second;
        if (j.round > cur.round) {
            cur = j;
        } else if (j.round == cur.round) {
            if (j.level != cur.level) {
                out.warnings.push_back("conflicting judgments for topic " + std::to_string(j.topic_id) + ", doc " +
                                       j.cord_uid + " in round " + std::to_string(j.round) +
                                       "; keeping last seen level " + std::to_string(j.level));
            }
            cur = j;
        }
    }
    out.value.reserve(best.size());
    for (auto& [key, j] : best) {
        out.value.push_back(std::move(j));
    }
    return out;
}

/// Drops judgments and topics that a given round had not released yet.
inline std::vector<Judgment> restrict_to_round(std::vector<Judgment> judgments, int round)
{
    const int limit = topics_in_round(round);
    std::erase_if(judgments, [&](const Judgment& j) { return j.topic_id > limit; });
    return judgments;
}

inline std::vector<Topic> restrict_to_round(std::vector<Topic> topics, int round)
{
    const int limit = topics_in_round(round);
    std::erase_if(topics, [&](const Topic& t) { return t.topic_id > limit; });
    return topics;
}

inline std::string format_judgments_jsonl(const std::vector<Judgment>& judgments)
{
    std::string out;
    for (const auto& j : judgments) {
        nlohmann::ordered_json o;
        o["topic"] = j.topic_id;
        o["cord_uid"] = j.cord_uid;
        o["level"] = j.level;
        o["round"] = j.round;
        out += o.dump() + "\n";
    }
    return out;
}

inline std::vector<Judgment> parse_judgments_jsonl(std::string_view text, const std::string& source = "judgments.jsonl")
{
    std::vector<Judgment> out;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) {
            return;
        }
        try {
            auto o = nlohmann::json::parse(line);
            Judgment j{o.at("topic").get<int>(), o.at("cord_uid").get<std::string>(), o.at("level").get<int>(),
                       o.at("round").get<int>()};
            if (j.level < 0 || j.level > 2) {
                throw ParseError(source, line_no, "level not in {0,1,2}");
            }
            out.push_back(std::move(j));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source, line_no, e.what());
        }
    });
    return out;
}

inline std::string format_topics_jsonl(const std::vector<Topic>& topics)
{
    std::string out;
    for (const auto& t : topics) {
        nlohmann::ordered_json o;
        o["topic"] = t.topic_id;
        o["query"] = t.query;
        o["question"] = t.question;
        o["narrative"] = t.narrative;
        out += o.dump() + "\n";
    }
    return out;
}

}  // namespace trecxfer
