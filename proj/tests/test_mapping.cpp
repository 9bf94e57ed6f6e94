#include <catch_amalgamated.hpp>

#include <cmath>

#include "trecxfer/mapping.hpp"

#include "golden.hpp"
#include "oracles.hpp"

using namespace trecxfer;
using Catch::Matchers::WithinAbs;

namespace {

using Entries = std::map<int, std::set<int>>;

std::map<int, std::set<int>> entries_of(const TaskMapping& m)
{
    std::map<int, std::set<int>> out;
    for (int c = 1; c <= kCordTaskCount; ++c) {
        out[c] = m.trec_tasks(c);
    }
    return out;
}

std::string dense_line(TaskKind kind, int id, const std::vector<double>& v)
{
    nlohmann::json j;
    j["task_kind"] = to_string(kind);
    j["task_id"] = id;
    j["vector"] = v;
    return j.dump() + "\n";
}

std::string full_dense_text(std::size_t dim, SplitMix64& rng)
{
    std::string text;
    for (int t = 1; t <= kTrecTaskCount; ++t) {
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.uniform() - 0.5;
        text += dense_line(TaskKind::Trec, t, v);
    }
    for (int c = 1; c <= kCordTaskCount; ++c) {
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.uniform() - 0.5;
        text += dense_line(TaskKind::Cord, c, v);
    }
    return text;
}

}  // namespace

TEST_CASE("presets match the golden mapping files")
{
    CHECK(entries_of(manual_mapping()) == golden::manual_mapping());
    CHECK(entries_of(optimal_mapping()) == golden::optimal_mapping());
}

TEST_CASE("manual preset shape")
{
    auto m = manual_mapping();
    CHECK(m.trec_tasks(9) == std::set<int>{8});
    CHECK(m.trec_tasks(10) == std::set<int>{35});
    for (int c = 1; c <= kCordTaskCount; ++c) {
        CHECK_FALSE(m.trec_tasks(c).empty());
        for (int t : m.trec_tasks(c)) {
            CHECK(valid_trec_task(t));
        }
    }
}

TEST_CASE("optimal preset differs from manual by the reviewed edits")
{
    auto opt = optimal_mapping();
    const auto g = golden::optimal_mapping();
    for (int c : {6, 9, 10}) {
        CHECK(opt.trec_tasks(c) == g.at(c));
    }
    CHECK(opt != manual_mapping());
}

TEST_CASE("TaskMapping validates ids and edits")
{
    CHECK_THROWS_AS(TaskMapping(Entries{{11, {1}}}), SchemaError);
    CHECK_THROWS_AS(TaskMapping(Entries{{1, {41}}}), SchemaError);
    CHECK_THROWS_AS(TaskMapping(Entries{{0, {}}}), SchemaError);
    TaskMapping m(Entries{{1, {3}}});
    CHECK(m.trec_tasks(2).empty());
    m.add(5, 2);
    CHECK(m.cord_tasks_for(5) == std::set<int>{2});
    m.remove(5, 2);
    m.remove(5, 2);
    CHECK(m.cord_tasks_for(5).empty());
}

TEST_CASE("mapping JSON round trip and errors")
{
    for (const auto& m : {manual_mapping(), optimal_mapping(), TaskMapping()}) {
        CHECK(parse_mapping_json(format_mapping_json(m)) == m);
    }
    CHECK_THROWS_AS(parse_mapping_json("[1]"), SchemaError);
    CHECK_THROWS_AS(parse_mapping_json(R"({"x":[1]})"), SchemaError);
    CHECK_THROWS_AS(parse_mapping_json(R"({"1":[99]})"), SchemaError);
    CHECK_THROWS_AS(parse_mapping_json("{"), SchemaError);
}

TEST_CASE("differential: two positives and one negative give +1")
{
    DocLabels pred{{{17, "a"}, true}, {{17, "b"}, true}, {{17, "c"}, true}, {{17, "d"}, false}};
    DocLabels human{{{1, "a"}, true}, {{1, "b"}, true}, {{1, "c"}, false}, {{1, "d"}, false}};
    auto t = differential_table(pred, human);
    CHECK(t.cell(17, 1) == std::optional<int>(1));
    CHECK(t.doc_count(17, 1) == 3);
}

TEST_CASE("differential: no predicted-relevant annotated documents is undefined")
{
    DocLabels pred{{{3, "z"}, true}, {{3, "a"}, false}};
    DocLabels human{{{2, "a"}, true}};
    auto t = differential_table(pred, human);
    CHECK_FALSE(t.cell(3, 2));
    CHECK(t.doc_count(3, 2) == 0);
    CHECK_THROWS_AS(t.cell(41, 1), std::out_of_range);
    CHECK_THROWS_AS(t.cell(1, 11), std::out_of_range);
}

TEST_CASE("differential: matches a direct count on random labels")
{
    SplitMix64 rng(5);
    for (int inst = 0; inst < 100; ++inst) {
        DocLabels pred, human;
        for (int d = 0; d < 15; ++d) {
            const auto uid = "d" + std::to_string(d);
            for (int t = 1; t <= kTrecTaskCount; ++t) {
                if (rng.below(4) == 0) pred[{t, uid}] = rng.below(2) == 0;
            }
            for (int c = 1; c <= kCordTaskCount; ++c) {
                if (rng.below(3) == 0) human[{c, uid}] = rng.below(2) == 0;
            }
        }
        auto table = differential_table(pred, human);
        for (int t = 1; t <= kTrecTaskCount; ++t) {
            for (int c = 1; c <= kCordTaskCount; ++c) {
                int n = 0, diff = 0;
                for (const auto& [key, rel] : human) {
                    if (key.first != c) continue;
                    auto it = pred.find({t, key.second});
                    if (it == pred.end() || !it->second) continue;
                    ++n;
                    diff += rel ? 1 : -1;
                }
                REQUIRE(table.cell(t, c) == (n ? std::optional<int>(diff) : std::nullopt));
            }
        }
        auto back = parse_differential_tsv(format_differential_tsv(table));
        CHECK(back.cells == table.cells);
    }
}

TEST_CASE("differential TSV reads the golden fixture")
{
    auto t = parse_differential_tsv(golden::differential_text());
    CHECK(t.cell(17, 1) == std::optional<int>(-8));
    CHECK(t.cell(30, 3) == std::optional<int>(3));
    CHECK(t.doc_count(17, 1) == 0);
    CHECK_THROWS_AS(parse_differential_tsv("trec\\cord\t1\n1\tfoo\n"), ParseError);
}

TEST_CASE("tf embedding counts unigrams and bigrams")
{
    std::vector<std::string> texts{"a b a"};
    auto e = build_tf_embedding(texts, 2);
    std::map<std::string, std::int64_t> want{{"a", 2}, {"b", 1}, {"a b", 1}, {"b a", 1}};
    CHECK(e.counts == want);
    CHECK(build_tf_embedding(std::vector<std::string>{""}, 5).counts.empty());
    CHECK(build_tf_embedding(std::vector<std::string>{}, 5).counts.empty());
    CHECK_THROWS_AS(build_tf_embedding(texts, 0), std::invalid_argument);
}

TEST_CASE("tf embedding matches the exhaustive span oracle")
{
    SplitMix64 rng(17);
    const char* words[] = {"virus", "Mask", "ACE2", "the", "of", "covid-19", "R0,"};
    for (int inst = 0; inst < 200; ++inst) {
        std::vector<std::string> texts(1 + rng.below(3));
        for (auto& t : texts) {
            const auto n = rng.below(12);
            for (std::uint64_t i = 0; i < n; ++i) {
                t += std::string(words[rng.below(7)]) + (rng.below(3) ? " " : ". ");
            }
        }
        const int n_max = 1 + static_cast<int>(rng.below(5));
        auto got = build_tf_embedding(texts, n_max).counts;
        auto want = oracle::ngram_counts(texts, n_max);
        REQUIRE(got.size() == want.size());
        for (const auto& [g, c] : want) {
            CHECK(got.at(g) == c);
        }
    }
}

TEST_CASE("tokenizer lowercases and splits on punctuation")
{
    CHECK(text::tokenize("COVID-19 Spreads, fast!") == std::vector<std::string>{"covid", "19", "spreads", "fast"});
    CHECK(text::tokenize("  ").empty());
}

TEST_CASE("sparse cosine examples")
{
    std::map<std::string, std::int64_t> u{{"a", 1}}, v{{"a", 1}, {"b", 1}}, w{{"c", 4}}, zero;
    CHECK_THAT(cosine(u, v), WithinAbs(1.0 / std::sqrt(2.0), 1e-15));
    CHECK(cosine(u, w) == 0.0);
    CHECK(cosine(u, zero) == 0.0);
    CHECK_THAT(cosine(v, v), WithinAbs(1.0, 1e-15));
}

TEST_CASE("cosine is symmetric, bounded and agrees with the oracles")
{
    SplitMix64 rng(23);
    for (int inst = 0; inst < 300; ++inst) {
        std::map<std::string, std::int64_t> u, v;
        for (int k = 0; k < 8; ++k) {
            if (rng.below(2)) u["k" + std::to_string(k)] = static_cast<std::int64_t>(rng.below(5));
            if (rng.below(2)) v["k" + std::to_string(k)] = static_cast<std::int64_t>(rng.below(5));
        }
        const double s = cosine(u, v);
        CHECK_THAT(s, WithinAbs(cosine(v, u), 1e-15));
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK_THAT(s, WithinAbs(oracle::sparse_cosine(u, v), 1e-12));

        std::vector<double> a(6), b(6);
        for (auto& x : a) x = rng.uniform() * 2 - 1;
        for (auto& x : b) x = rng.uniform() * 2 - 1;
        const double d = cosine(std::span<const double>(a), std::span<const double>(b));
        CHECK(d >= -1.0);
        CHECK(d <= 1.0);
        CHECK_THAT(d, WithinAbs(oracle::dense_cosine(a, b), 1e-12));
    }
}

TEST_CASE("dense cosine rejects mismatched dimensions")
{
    std::vector<double> a{1, 2}, b{1, 2, 3};
    CHECK_THROWS_AS(cosine(std::span<const double>(a), std::span<const double>(b)), std::invalid_argument);
}

TEST_CASE("column normalization is scale invariant and keeps the argmax")
{
    SplitMix64 rng(29);
    for (int inst = 0; inst < 50; ++inst) {
        std::vector<std::vector<double>> trec(6, std::vector<double>(4)), cord(3, std::vector<double>(4));
        for (auto& v : trec)
            for (auto& x : v) x = rng.uniform();
        for (auto& v : cord)
            for (auto& x : v) x = rng.uniform();
        auto raw = similarity_matrix(trec, cord, false);
        auto norm = similarity_matrix(trec, cord, true);
        CHECK(norm.normalized);
        auto scaled = cord;
        for (auto& v : scaled)
            for (auto& x : v) x *= 7.5;
        auto norm2 = similarity_matrix(trec, scaled, true);
        for (std::size_t c = 0; c < raw.cols; ++c) {
            std::size_t arg = 0;
            double mx = -1;
            for (std::size_t r = 0; r < raw.rows; ++r) {
                if (raw.at(r, c) > mx) {
                    mx = raw.at(r, c);
                    arg = r;
                }
                CHECK_THAT(norm.at(r, c), WithinAbs(norm2.at(r, c), 1e-12));
            }
            CHECK(norm.at(arg, c) == 1.0);
        }
    }
}

TEST_CASE("similarity TSV round trip")
{
    SimilarityMatrix m{2, 3, {0.1, 0.25, 1.0, 0.0, 0.5, 0.333333333333}, true};
    auto back = parse_similarity_tsv(format_similarity_tsv(m));
    REQUIRE(back.rows == 2);
    REQUIRE(back.cols == 3);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        CHECK_THAT(back.values[i], WithinAbs(m.values[i], 1e-6));
    }
}

TEST_CASE("dense vectors: a complete file loads and round-trips")
{
    SplitMix64 rng(31);
    auto text = full_dense_text(8, rng);
    auto v = parse_dense_vectors(text);
    CHECK(v.size() == 50);
    CHECK(parse_dense_vectors(format_dense_vectors(v)) == v);
}

TEST_CASE("dense vectors: ragged or missing entries are schema errors")
{
    SplitMix64 rng(37);
    auto text = full_dense_text(8, rng);
    auto ragged = text + "";
    // replace CORD task 3 with a shorter vector
    auto pos = ragged.find("{\"task_id\":3,\"task_kind\":\"cord\"");
    REQUIRE(pos != std::string::npos);
    auto end = ragged.find('\n', pos);
    ragged.replace(pos, end - pos + 1, dense_line(TaskKind::Cord, 3, {1.0, 2.0}));
    try {
        parse_dense_vectors(ragged);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("cord task 3") != std::string::npos);
    }

    auto missing = text.substr(0, pos) + text.substr(end + 1);
    try {
        parse_dense_vectors(missing);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("cord task 3") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_dense_vectors(text + dense_line(TaskKind::Trec, 1, std::vector<double>(8))), ParseError);
    CHECK_THROWS_AS(parse_dense_vectors("{\"task_kind\":\"x\",\"task_id\":1,\"vector\":[]}\n"), ParseError);
}

TEST_CASE("suggest_edits never proposes both kinds for one pair and respects thresholds")
{
    SplitMix64 rng(41);
    const auto current = manual_mapping();
    for (int inst = 0; inst < 100; ++inst) {
        DifferentialTable t;
        for (auto& c : t.cells) {
            if (rng.below(3)) c = static_cast<int>(rng.below(21)) - 10;
        }
        auto edits = suggest_edits(t, nullptr, current);
        std::set<std::pair<int, int>> seen;
        for (const auto& e : edits) {
            CHECK(seen.insert({e.trec_task, e.cord_task}).second);
            if (e.kind == EditKind::Add) {
                CHECK_FALSE(current.contains(e.trec_task, e.cord_task));
                CHECK(*e.differential >= 2);
            } else {
                CHECK(current.contains(e.trec_task, e.cord_task));
                CHECK(*e.differential <= -4);
            }
            CHECK_FALSE(e.similarity);
        }
        for (std::size_t i = 1; i < edits.size(); ++i) {
            CHECK(std::abs(*edits[i - 1].differential) >= std::abs(*edits[i].differential));
        }
    }
}

TEST_CASE("suggest_edits on the golden differential")
{
    auto t = parse_differential_tsv(golden::differential_text());
    SimilarityMatrix sims{40, 10, std::vector<double>(400, 0.5), true};
    auto edits = suggest_edits(t, &sims, manual_mapping());
    auto has = [&](EditKind k, int tr, int c) {
        return std::any_of(edits.begin(), edits.end(),
                           [&](const MappingEdit& e) { return e.kind == k && e.trec_task == tr && e.cord_task == c; });
    };
    CHECK(has(EditKind::Remove, 17, 1));
    CHECK(has(EditKind::Add, 30, 3));
    for (const auto& e : edits) {
        CHECK(e.similarity == std::optional<double>(0.5));
    }
    CHECK_THROWS_AS(suggest_edits(t, nullptr, manual_mapping(), {0, -4}), std::invalid_argument);
    CHECK_THROWS_AS(suggest_edits(t, nullptr, manual_mapping(), {2, 0}), std::invalid_argument);
}

TEST_CASE("edits JSON round trip and application")
{
    std::vector<MappingEdit> edits{{EditKind::Remove, 17, 1, -8, 0.25, true},
                                   {EditKind::Add, 30, 3, 3, std::nullopt, std::nullopt}};
    CHECK(parse_edits_json(format_edits_json(edits)) == edits);
    CHECK_THROWS_AS(parse_edits_json(R"([{"kind":"swap","trec_task":1,"cord_task":1}])"), SchemaError);
    CHECK_THROWS_AS(parse_edits_json(R"([{"kind":"add","trec_task":41,"cord_task":1}])"), SchemaError);
    CHECK_THROWS_AS(parse_edits_json("{}"), SchemaError);

    auto m = manual_mapping();
    for (const auto& e : edits) apply_edit(m, e);
    CHECK_FALSE(m.contains(17, 1));
    CHECK(m.contains(30, 3));
}
