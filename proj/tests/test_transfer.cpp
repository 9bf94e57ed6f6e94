#include <catch_amalgamated.hpp>

#include <filesystem>

#include "trecxfer/transfer.hpp"

#include "golden.hpp"
#include "oracles.hpp"

using namespace trecxfer;

namespace {

using Entries = std::map<int, std::set<int>>;

ExcerptStore store_with(const std::string& uid, bool abstract, bool conclusion)
{
    std::vector<Excerpt> ex;
    if (abstract) ex.push_back({uid, SectionKind::Abstract, uid + " abstract"});
    if (conclusion) ex.push_back({uid, SectionKind::Conclusion, uid + " conclusion"});
    return index_excerpts(ex);
}

std::vector<BinaryJudgment> random_judgments(SplitMix64& rng, std::size_t n, int docs)
{
    std::vector<BinaryJudgment> js;
    std::set<std::pair<int, std::string>> seen;
    for (std::size_t i = 0; i < n; ++i) {
        int t = 1 + static_cast<int>(rng.below(kTrecTaskCount));
        auto uid = "d" + std::to_string(rng.below(static_cast<std::uint64_t>(docs)));
        if (seen.insert({t, uid}).second) js.push_back({t, uid, rng.below(2) == 0});
    }
    return js;
}

TaskMapping random_mapping(SplitMix64& rng)
{
    TaskMapping m;
    for (int c = 1; c <= kCordTaskCount; ++c) {
        for (int t = 1; t <= kTrecTaskCount; ++t) {
            if (rng.below(8) == 0) m.add(t, c);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("transfer: disagreeing mapped topics drop the document and report a conflict")
{
    TaskMapping m(Entries{{1, {2, 3}}});
    auto r = transfer_labels(m, {{2, "d", true}, {3, "d", false}});
    CHECK(r.for_task(1).empty());
    REQUIRE(r.conflicts.size() == 1);
    CHECK(r.conflicts[0] == ConflictReport{1, "d", {2}, {3}});
}

TEST_CASE("transfer: agreeing topics and unmapped topics")
{
    TaskMapping m(Entries{{1, {2, 3}}, {4, {3}}});
    auto r = transfer_labels(m, {{2, "d", true}, {3, "d", true}, {9, "d", false}, {3, "e", false}});
    CHECK(r.for_task(1) == std::map<std::string, bool>{{"d", true}, {"e", false}});
    CHECK(r.for_task(4) == std::map<std::string, bool>{{"d", true}, {"e", false}});
    CHECK(r.for_task(2).empty());
    CHECK(r.conflicts.empty());
}

TEST_CASE("transfer: an empty mapping entry yields no labels for that task")
{
    TaskMapping m(Entries{{1, {}}, {2, {1}}});
    auto r = transfer_labels(m, {{1, "d", true}});
    CHECK(r.for_task(1).empty());
    CHECK(r.for_task(2).size() == 1);
}

TEST_CASE("transfer: agrees with the grouping oracle")
{
    SplitMix64 rng(43);
    for (int inst = 0; inst < 300; ++inst) {
        auto m = random_mapping(rng);
        auto js = random_judgments(rng, 120, 30);
        auto got = transfer_labels(m, js);

        std::map<int, std::set<int>> entries;
        for (int c = 1; c <= kCordTaskCount; ++c) entries[c] = m.trec_tasks(c);
        std::vector<oracle::Judged> oj;
        for (const auto& j : js) oj.push_back({j.topic_id, j.cord_uid, j.relevant});
        auto want = oracle::transfer(entries, oj);

        std::size_t n = 0;
        for (int c = 1; c <= kCordTaskCount; ++c) {
            for (const auto& [uid, label] : got.for_task(c)) {
                REQUIRE(want.labels.count({c, uid}));
                CHECK(want.labels.at({c, uid}) == label);
                ++n;
            }
        }
        CHECK(n == want.labels.size());
        REQUIRE(got.conflicts.size() == want.conflicts.size());
        for (const auto& cr : got.conflicts) {
            const auto& w = want.conflicts.at({cr.cord_task, cr.cord_uid});
            CHECK(cr.supporting_trec_tasks == w.first);
            CHECK(cr.opposing_trec_tasks == w.second);
        }
    }
}

TEST_CASE("transfer: removing topics never creates new conflicts")
{
    SplitMix64 rng(47);
    for (int inst = 0; inst < 200; ++inst) {
        auto m = random_mapping(rng);
        auto js = random_judgments(rng, 150, 25);
        auto smaller = m;
        for (int c = 1; c <= kCordTaskCount; ++c) {
            for (int t : m.trec_tasks(c)) {
                if (rng.below(2)) smaller.remove(t, c);
            }
        }
        auto big = transfer_labels(m, js);
        auto small = transfer_labels(smaller, js);
        std::set<std::pair<int, std::string>> big_conflicts;
        for (const auto& c : big.conflicts) big_conflicts.insert({c.cord_task, c.cord_uid});
        for (const auto& c : small.conflicts) {
            CHECK(big_conflicts.count({c.cord_task, c.cord_uid}));
        }
        // every labeled pair under the bigger mapping stays labeled or unjudged, with the same label
        for (int c = 1; c <= kCordTaskCount; ++c) {
            for (const auto& [uid, label] : big.for_task(c)) {
                auto it = small.for_task(c).find(uid);
                if (it != small.for_task(c).end()) CHECK(it->second == label);
            }
        }
    }
}

TEST_CASE("build_dataset: two excerpts give two records")
{
    TransferResult tr;
    tr.labels[3]["u"] = true;
    auto ds = build_dataset(tr, store_with("u", true, true));
    REQUIRE(ds.value.size() == 2);
    CHECK(ds.value[0].section_kind == SectionKind::Abstract);
    CHECK(ds.value[1].section_kind == SectionKind::Conclusion);
    for (const auto& r : ds.value) {
        CHECK(r.cord_task == 4);
        CHECK(r.label);
        CHECK(r.aux_sentence == key_question(4));
    }
    CHECK(ds.value[0].record_id == "4:u:abstract");
    CHECK(ds.value[0].record_id != ds.value[1].record_id);
}

TEST_CASE("build_dataset: one labeled document per task at three tasks gives three records")
{
    TransferResult tr;
    tr.labels[0]["u"] = true;
    tr.labels[1]["u"] = false;
    tr.labels[9]["u"] = true;
    auto ds = build_dataset(tr, store_with("u", true, false));
    REQUIRE(ds.value.size() == 3);
    CHECK(ds.value[0].cord_task == 1);
    CHECK(ds.value[1].cord_task == 2);
    CHECK_FALSE(ds.value[1].label);
    CHECK(ds.value[2].cord_task == 10);
}

TEST_CASE("build_dataset: documents without excerpts are dropped with a warning")
{
    TransferResult tr;
    tr.labels[0]["gone"] = true;
    auto ds = build_dataset(tr, {});
    CHECK(ds.value.empty());
    REQUIRE(ds.warnings.size() == 1);
    CHECK(ds.warnings[0].find("gone") != std::string::npos);
}

TEST_CASE("build_dataset: records pair each excerpt with the task's question")
{
    SplitMix64 rng(53);
    for (int inst = 0; inst < 100; ++inst) {
        auto m = random_mapping(rng);
        auto js = random_judgments(rng, 200, 5);
        std::vector<Excerpt> ex;
        for (int d = 0; d < 5; ++d) {
            auto uid = "d" + std::to_string(d);
            if (rng.below(2)) ex.push_back({uid, SectionKind::Abstract, "A" + uid});
            if (rng.below(2)) ex.push_back({uid, SectionKind::Conclusion, "C" + uid});
        }
        auto store = index_excerpts(ex);
        auto tr = transfer_labels(m, js);
        auto ds = build_dataset(tr, store).value;

        std::size_t expected = 0;
        for (int c = 1; c <= kCordTaskCount; ++c) {
            for (const auto& [uid, label] : tr.for_task(c)) {
                auto it = store.find(uid);
                expected += it == store.end() ? 0 : it->second.size();
            }
        }
        CHECK(ds.size() == expected);
        std::map<std::pair<int, std::string>, std::set<bool>> labels;
        std::map<std::pair<int, std::string>, std::set<SectionKind>> kinds;
        for (const auto& r : ds) {
            labels[{r.cord_task, r.cord_uid}].insert(r.label);
            CHECK(kinds[{r.cord_task, r.cord_uid}].insert(r.section_kind).second);
            CHECK(r.label == tr.for_task(r.cord_task).at(r.cord_uid));
            CHECK(r.aux_sentence == key_question(r.cord_task));
        }
        for (const auto& [k, v] : labels) CHECK(v.size() == 1);
        CHECK(parse_dataset_jsonl(format_dataset_jsonl(ds)) == ds);
    }
}

TEST_CASE("key questions match the golden table")
{
    auto g = golden::key_questions();
    REQUIRE(g.size() == 10);
    for (int c = 1; c <= kCordTaskCount; ++c) {
        CHECK(key_question(c) == g.at(c));
        CHECK(key_questions()[static_cast<std::size_t>(c - 1)].cord_task == c);
    }
    CHECK_THROWS_AS(key_question(0), std::out_of_range);
}

TEST_CASE("dataset file: 100 records survive emit and read")
{
    std::vector<TrainingRecord> rs;
    for (int i = 0; i < 100; ++i) {
        auto kind = i % 2 ? SectionKind::Conclusion : SectionKind::Abstract;
        int c = 1 + i % 10;
        auto uid = "u" + std::to_string(i / 2);
        rs.push_back({make_record_id(c, uid, kind), uid, kind, "text \"" + std::to_string(i) + "\"\nsecond line",
                      std::string(key_question(c)), c, i % 3 == 0});
    }
    auto path = std::filesystem::temp_directory_path() / "trecxfer_transfer_dataset.jsonl";
    emit_dataset(rs, path);
    CHECK(read_dataset(path) == rs);
    auto text = read_file(path);
    CHECK(text.find("\"label\":1") != std::string::npos);
    CHECK(text.find("\"label\":true") == std::string::npos);
}

TEST_CASE("dataset parser cites the failing line")
{
    TrainingRecord r{"1:u:abstract", "u", SectionKind::Abstract, "t", "q", 1, true};
    std::string text;
    for (int i = 0; i < 6; ++i) text += format_dataset_jsonl({r});
    auto check_line = [&](const std::string& bad) {
        try {
            parse_dataset_jsonl(text + bad + "\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 7);
            CHECK(std::string(e.what()).find("7") != std::string::npos);
        }
    };
    check_line("{not json");
    check_line(R"({"record_id":"x","cord_uid":"u","section_kind":"abstract","text":"t","aux":"q","cord_task":1,"label":2})");
    check_line(R"({"record_id":"x","cord_uid":"u","section_kind":"body","text":"t","aux":"q","cord_task":1,"label":0})");
    check_line(R"({"record_id":"x","cord_uid":"u","section_kind":"abstract","text":"t","aux":"q","cord_task":11,"label":0})");
    check_line(R"({"record_id":"x"})");
}

TEST_CASE("split_dataset partitions deterministically")
{
    std::vector<TrainingRecord> rs(50);
    for (int i = 0; i < 50; ++i) rs[static_cast<std::size_t>(i)].record_id = std::to_string(i);
    auto [a, b] = split_dataset(rs, 0.2, 9);
    CHECK(a.size() == 40);
    CHECK(b.size() == 10);
    auto [a2, b2] = split_dataset(rs, 0.2, 9);
    CHECK(a == a2);
    CHECK(b == b2);
    std::set<std::string> ids;
    for (const auto& r : a) ids.insert(r.record_id);
    for (const auto& r : b) ids.insert(r.record_id);
    CHECK(ids.size() == 50);
    CHECK(split_dataset(rs, 0.0, 1).second.empty());
    CHECK_THROWS_AS(split_dataset(rs, 1.5, 1), std::invalid_argument);
}

TEST_CASE("conflicts JSON Lines layout")
{
    auto text = format_conflicts_jsonl({{2, "d", {1, 4}, {7}}});
    CHECK(text == "{\"cord_task\":2,\"cord_uid\":\"d\",\"supporting_trec_tasks\":[1,4],\"opposing_trec_tasks\":[7]}\n");
}
