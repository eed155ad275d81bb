#include <catch_amalgamated.hpp>

#include <random>

#include "llmrank/dataio.hpp"
#include "testutil.hpp"

using namespace llmrank;
using testutil::TempDir;
using testutil::write_file;

TEST_CASE("corpus loader maps fields and streams in order", "[dataio]") {
    TempDir dir;
    auto path = dir.file("corpus.jsonl");
    write_file(path,
               "{\"_id\":\"d1\",\"title\":\"T\",\"text\":\"body\"}\n"
               "{\"_id\":\"d2\",\"title\":\"\",\"text\":\"more\",\"metadata\":{}}\n");
    std::vector<Passage> seen;
    load_corpus(path, [&](Passage&& p) { seen.push_back(std::move(p)); });
    REQUIRE(seen.size() == 2);
    CHECK(seen[0].id == "d1");
    CHECK(seen[0].title == "T");
    CHECK(seen[0].text == "body");
    CHECK(seen[1].id == "d2");
    CHECK(seen[1].title.empty());
}

TEST_CASE("corpus loader edge cases", "[dataio]") {
    TempDir dir;

    auto empty = dir.file("empty.jsonl");
    write_file(empty, "");
    std::size_t count = 0;
    load_corpus(empty, [&](Passage&&) { ++count; });
    CHECK(count == 0);

    auto missing_text = dir.file("missing.jsonl");
    write_file(missing_text, "{\"_id\":\"d1\",\"title\":\"T\"}\n");
    CHECK_THROWS_WITH(load_corpus(missing_text, [](Passage&&) {}),
                      Catch::Matchers::ContainsSubstring("\"text\"") &&
                          Catch::Matchers::ContainsSubstring(":1"));

    auto dup = dir.file("dup.jsonl");
    write_file(dup,
               "{\"_id\":\"d1\",\"title\":\"\",\"text\":\"a\"}\n"
               "{\"_id\":\"d1\",\"title\":\"\",\"text\":\"b\"}\n");
    CHECK_THROWS_WITH(load_corpus(dup, [](Passage&&) {}),
                      Catch::Matchers::ContainsSubstring("d1") &&
                          Catch::Matchers::ContainsSubstring(":2"));

    auto bad_json = dir.file("bad.jsonl");
    write_file(bad_json,
               "{\"_id\":\"d1\",\"title\":\"\",\"text\":\"a\"}\n"
               "not json at all\n");
    CHECK_THROWS_WITH(load_corpus(bad_json, [](Passage&&) {}),
                      Catch::Matchers::ContainsSubstring(":2"));

    CHECK_THROWS_AS(load_corpus(dir.file("nope.jsonl"), [](Passage&&) {}), DataError);
}

TEST_CASE("query loader", "[dataio]") {
    TempDir dir;
    auto path = dir.file("queries.jsonl");
    write_file(path,
               "{\"_id\":\"q1\",\"text\":\"first question\"}\n"
               "{\"_id\":\"q2\",\"text\":\"second question\"}\n");
    auto queries = load_queries(path);
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].id == "q1");
    CHECK(queries[1].text == "second question");

    auto missing = dir.file("missing.jsonl");
    write_file(missing, "{\"_id\":\"q1\"}\n");
    CHECK_THROWS_WITH(load_queries(missing),
                      Catch::Matchers::ContainsSubstring("\"text\""));
}

TEST_CASE("qrels loader", "[dataio]") {
    TempDir dir;
    auto path = dir.file("qrels.txt");
    write_file(path,
               "q1 0 d1 2\n"
               "q1 0 d2 0\n"
               "q2 0 d1 1\n");
    auto qrels = load_qrels(path);
    CHECK(qrels.at("q1").at("d1") == 2);
    CHECK(qrels.at("q1").at("d2") == 0);
    CHECK(qrels.at("q2").at("d1") == 1);
}

TEST_CASE("qrels duplicate pair overwrites with a warning", "[dataio]") {
    TempDir dir;
    auto path = dir.file("qrels.txt");
    write_file(path,
               "q1 0 d1 1\n"
               "q1 0 d1 3\n");
    std::vector<std::string> warnings;
    auto qrels = load_qrels(path, &warnings);
    CHECK(qrels.at("q1").at("d1") == 3);
    REQUIRE(warnings.size() == 1);
    CHECK_THAT(warnings[0], Catch::Matchers::ContainsSubstring("q1"));
}

TEST_CASE("qrels malformed lines are fatal with line numbers", "[dataio]") {
    TempDir dir;

    auto three = dir.file("three.txt");
    write_file(three, "q1 0 d1 1\nq2 0 d2\n");
    CHECK_THROWS_WITH(load_qrels(three), Catch::Matchers::ContainsSubstring(":2"));

    auto noninteger = dir.file("nonint.txt");
    write_file(noninteger, "q1 0 d1 relevant\n");
    CHECK_THROWS_WITH(load_qrels(noninteger),
                      Catch::Matchers::ContainsSubstring("relevant") &&
                          Catch::Matchers::ContainsSubstring(":1"));

    auto trailing = dir.file("five.txt");
    write_file(trailing, "q1 0 d1 1 extra\n");
    CHECK_THROWS_AS(load_qrels(trailing), DataError);

    auto negative = dir.file("neg.txt");
    write_file(negative, "q1 0 d1 -2\n");
    CHECK_THROWS_AS(load_qrels(negative), DataError);
}

TEST_CASE("run writer emits the exact TREC line format", "[dataio]") {
    TempDir dir;
    auto path = dir.file("run.txt");
    Ranking ranking{"q1", {{"d2", 3.7, 1}, {"d1", 1.2, 2}}, "tag"};
    write_run({ranking}, "tag", path);
    CHECK(testutil::read_file(path) ==
          "q1 Q0 d2 1 3.700000 tag\n"
          "q1 Q0 d1 2 1.200000 tag\n");
}

TEST_CASE("run writer is deterministic", "[dataio]") {
    TempDir dir;
    Ranking ranking{"q1", {{"d1", 1.0 / 3.0, 1}, {"d2", 0.25, 2}}, "t"};
    write_run({ranking}, "t", dir.file("a.txt"));
    write_run({ranking}, "t", dir.file("b.txt"));
    CHECK(testutil::read_file(dir.file("a.txt")) == testutil::read_file(dir.file("b.txt")));
}

TEST_CASE("run round-trip preserves ids, ranks and scores", "[dataio]") {
    TempDir dir;
    auto path = dir.file("run.txt");
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);

    std::vector<Ranking> run;
    for (int q = 0; q < 100; ++q) {
        Ranking ranking;
        ranking.query_id = "q" + std::to_string(q);
        ranking.method_tag = "t";
        double score = 50.0;
        for (int i = 0; i < 20; ++i) {
            score -= jitter(rng);
            ranking.items.push_back({"d" + std::to_string(i), score, i + 1});
        }
        run.push_back(std::move(ranking));
    }
    write_run(run, "t", path);
    auto loaded = read_run(path);
    REQUIRE(loaded.size() == run.size());
    for (std::size_t q = 0; q < run.size(); ++q) {
        CHECK(loaded[q].query_id == run[q].query_id);
        REQUIRE(loaded[q].items.size() == run[q].items.size());
        for (std::size_t i = 0; i < run[q].items.size(); ++i) {
            CHECK(loaded[q].items[i].passage_id == run[q].items[i].passage_id);
            CHECK(loaded[q].items[i].rank == run[q].items[i].rank);
            CHECK(loaded[q].items[i].score ==
                  Catch::Approx(run[q].items[i].score).margin(5e-7));
        }
    }
}

TEST_CASE("run reader validates structure", "[dataio]") {
    TempDir dir;

    auto ascending = dir.file("ascending.txt");
    write_file(ascending,
               "q1 Q0 d1 1 1.000000 t\n"
               "q1 Q0 d2 2 2.000000 t\n");
    CHECK_THROWS_WITH(read_run(ascending), Catch::Matchers::ContainsSubstring(":2"));

    auto gap = dir.file("gap.txt");
    write_file(gap,
               "q1 Q0 d1 1 2.000000 t\n"
               "q1 Q0 d2 3 1.000000 t\n");
    CHECK_THROWS_AS(read_run(gap), DataError);

    auto dup = dir.file("dup.txt");
    write_file(dup,
               "q1 Q0 d1 1 2.000000 t\n"
               "q1 Q0 d1 2 1.000000 t\n");
    CHECK_THROWS_AS(read_run(dup), DataError);

    auto short_line = dir.file("short.txt");
    write_file(short_line, "q1 Q0 d1\n");
    CHECK_THROWS_AS(read_run(short_line), DataError);
}

TEST_CASE("corpus loading stays within a streaming memory budget", "[dataio][slow]") {
    TempDir dir;
    auto path = dir.file("big.jsonl");
    {
        std::ofstream out(path);
        for (int i = 0; i < 100000; ++i)
            out << "{\"_id\":\"doc" << i << "\",\"title\":\"t\",\"text\":\""
                << "lorem ipsum dolor sit amet consectetur adipiscing elit sed do eiusmod"
                << "\"}\n";
    }

    auto peak_kb = [] {
        std::ifstream status("/proc/self/status");
        std::string line;
        while (std::getline(status, line))
            if (line.rfind("VmHWM:", 0) == 0) return std::stol(line.substr(6));
        return -1L;
    };

    long before = peak_kb();
    std::size_t count = 0;
    load_corpus(path, [&](Passage&& p) {
        count += p.text.size();
    });
    long after = peak_kb();
    CHECK(count > 0);
    if (before > 0 && after > 0) {
        // ~11 MB of input; allow slack for the duplicate-id set but far
        // below whole-file size times the JSON expansion factor
        CHECK(after - before < 40 * 1024);
    }
}
