#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "llmrank/bm25.hpp"
#include "testutil.hpp"

using namespace llmrank;

namespace {

InvertedIndex tiny_index(std::vector<Passage> docs, TokenizerOptions opts = {}) {
    return build_index(docs, opts);
}

}  // namespace

TEST_CASE("build_index counts document frequencies and lengths", "[bm25]") {
    auto index = tiny_index({{"d1", "", "a b"}, {"d2", "", "b c"}});
    CHECK(index.num_docs() == 2);
    CHECK(index.document_frequency("b") == 2);
    CHECK(index.document_frequency("a") == 1);
    CHECK(index.document_frequency("c") == 1);
    CHECK(index.document_frequency("z") == 0);
    CHECK(index.avgdl() == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("title and text are concatenated before tokenization", "[bm25]") {
    auto index = tiny_index({{"d1", "alpha beta", "gamma"}});
    CHECK(index.document_frequency("alpha") == 1);
    CHECK(index.document_frequency("gamma") == 1);
    CHECK(index.doc_length(0) == 3);

    auto hits = search(index, {}, {"q", "alpha"}, 10);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].passage_id == "d1");
}

TEST_CASE("empty corpus: N=0 and search returns empty", "[bm25]") {
    auto index = tiny_index({});
    CHECK(index.num_docs() == 0);
    CHECK(search(index, {}, {"q", "anything"}, 10).empty());
}

TEST_CASE("duplicate passage id is an ingestion error naming the id", "[bm25]") {
    IndexBuilder builder;
    builder.add({"dup", "", "text one"});
    CHECK_THROWS_WITH(builder.add({"dup", "", "text two"}),
                      Catch::Matchers::ContainsSubstring("dup"));
}

TEST_CASE("synthetic corpus recount", "[bm25]") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> words(1, 30);
    std::vector<Passage> docs;
    std::size_t total_tokens = 0;
    for (int i = 0; i < 1000; ++i) {
        int n = words(rng);
        std::string text;
        for (int w = 0; w < n; ++w) text += "w" + std::to_string(rng() % 50) + " ";
        docs.push_back({"d" + std::to_string(i), "", text});
        total_tokens += static_cast<std::size_t>(n);
    }
    auto index = build_index(docs);
    CHECK(index.num_docs() == 1000);
    std::size_t recount = 0;
    for (std::uint32_t d = 0; d < 1000; ++d) recount += index.doc_length(d);
    CHECK(recount == total_tokens);
    CHECK(index.avgdl() ==
          Catch::Approx(static_cast<double>(total_tokens) / 1000.0).margin(1e-9));
}

TEST_CASE("hand-checked score: lone matching doc among two equal-length docs",
          "[bm25]") {
    // N=2, df=1, tf=1, dl=avgdl=1:
    //   idf = ln(1 + (2-1+0.5)/(1+0.5)) = ln 2
    //   tf part = 1*(0.9+1) / (1 + 0.9*(1-0.4+0.4)) = 1
    auto index = tiny_index({{"d1", "", "a"}, {"d2", "", "b"}});
    auto hits = search(index, Bm25Params{0.9, 0.4}, {"q", "a"}, 10);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].passage_id == "d1");
    CHECK(hits[0].first_stage_score == Catch::Approx(std::log(2.0)).margin(1e-9));
    CHECK(hits[0].first_stage_rank == 1);
}

TEST_CASE("query with no index terms returns empty", "[bm25]") {
    auto index = tiny_index({{"d1", "", "alpha beta"}});
    CHECK(search(index, {}, {"q", "zeta"}, 10).empty());
}

TEST_CASE("duplicate documents tie and break by passage id", "[bm25]") {
    auto index = tiny_index({{"zz", "", "same words here"},
                             {"aa", "", "same words here"},
                             {"mm", "", "same words here"}});
    auto hits = search(index, {}, {"q", "same words"}, 10);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].first_stage_score == hits[1].first_stage_score);
    CHECK(hits[0].passage_id == "aa");
    CHECK(hits[1].passage_id == "mm");
    CHECK(hits[2].passage_id == "zz");
}

TEST_CASE("top_k = 0 is a contract violation", "[bm25]") {
    auto index = tiny_index({{"d1", "", "a"}});
    CHECK_THROWS_AS(search(index, {}, {"q", "a"}, 0), ContractError);
}

TEST_CASE("duplicate query terms count once", "[bm25]") {
    auto index = tiny_index({{"d1", "", "apple pie"}, {"d2", "", "other text"}});
    auto once = search(index, {}, {"q", "apple"}, 10);
    auto thrice = search(index, {}, {"q", "apple apple apple"}, 10);
    REQUIRE(once.size() == 1);
    REQUIRE(thrice.size() == 1);
    CHECK(once[0].first_stage_score == thrice[0].first_stage_score);
}

TEST_CASE("a document without query terms scores zero and is not returned",
          "[bm25]") {
    auto index = tiny_index({{"d1", "", "relevant words"},
                             {"d2", "", "more relevant stuff"},
                             {"d3", "", "entirely unrelated content"}});
    auto hits = search(index, {}, {"q", "relevant"}, index.num_docs());
    CHECK(hits.size() == 2);
    for (const auto& hit : hits) {
        CHECK(hit.passage_id != "d3");
        CHECK(hit.first_stage_score > 0.0);
    }
}

TEST_CASE("score is monotone in term frequency", "[bm25]") {
    // same doc length, growing tf of the probed term
    std::vector<Passage> docs;
    for (int tf = 1; tf <= 8; ++tf) {
        std::string text;
        for (int w = 0; w < 8; ++w) text += (w < tf ? "target " : "filler ");
        docs.push_back({"d" + std::to_string(tf), "", text});
    }
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> k1_dist(0.1, 2.0);
    std::uniform_real_distribution<double> b_dist(0.0, 1.0);
    auto index = build_index(docs);
    for (int round = 0; round < 50; ++round) {
        Bm25Params params{k1_dist(rng), b_dist(rng)};
        std::vector<double> by_tf(9, -1.0);
        for (const auto& hit : search(index, params, {"q", "target"}, 10))
            by_tf[static_cast<std::size_t>(hit.passage_id[1] - '0')] = hit.first_stage_score;
        for (int tf = 2; tf <= 8; ++tf) CHECK(by_tf[tf] >= by_tf[tf - 1]);
    }
}

TEST_CASE("candidate list satisfies its invariants", "[bm25]") {
    auto fixture = testutil::make_rank_fixture(1, 30, 99);
    std::vector<Passage> docs;
    for (const auto& [id, p] : fixture.passages) docs.push_back(p);
    auto index = build_index(docs);
    auto hits = search(index, {}, {"q", "passage body text"}, 20);
    CHECK_NOTHROW(validate(hits));
    CHECK(hits.size() == 20);
}

TEST_CASE("index save/load round-trip preserves scores", "[bm25]") {
    testutil::TempDir dir;
    TokenizerOptions opts;
    opts.stem = true;
    opts.remove_stopwords = true;
    auto index = tiny_index({{"d1", "Search Engines", "ranking and retrieval systems"},
                             {"d2", "Cooking", "the art of baking bread"},
                             {"d3", "", "ranking functions for retrieval"}},
                            opts);
    auto path = dir.file("test.idx");
    index.save(path);
    auto loaded = InvertedIndex::load(path);

    CHECK(loaded.num_docs() == index.num_docs());
    CHECK(loaded.avgdl() == index.avgdl());
    CHECK(loaded.vocab_size() == index.vocab_size());
    CHECK(loaded.tokenizer_options().stem);
    CHECK(loaded.tokenizer_options().remove_stopwords);

    Query q{"q", "ranking retrieval"};
    auto before = search(index, {}, q, 10);
    auto after = search(loaded, {}, q, 10);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(before[i].passage_id == after[i].passage_id);
        CHECK(before[i].first_stage_score == after[i].first_stage_score);
    }
}

TEST_CASE("index load rejects junk", "[bm25]") {
    testutil::TempDir dir;
    auto path = dir.file("junk.idx");
    testutil::write_file(path, "this is not an index");
    CHECK_THROWS_AS(InvertedIndex::load(path), DataError);
    CHECK_THROWS_AS(InvertedIndex::load(dir.file("missing.idx")), DataError);
}
