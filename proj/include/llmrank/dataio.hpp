#pragma once

// On-disk formats: BEIR-style JSONL corpus and queries, TREC qrels, and TREC
// run files. Loaders stream line by line and report errors with the file
// path and 1-based line number; writers are deterministic.

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "llmrank/core.hpp"
#include "llmrank/metrics.hpp"

namespace llmrank {

namespace detail {

inline std::string location(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line);
}

inline nlohmann::json parse_jsonl_line(const std::string& line, const std::string& path,
                                       std::size_t line_no) {
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object())
        throw DataError("malformed JSON object at " + location(path, line_no));
    return record;
}

inline std::string require_string_field(const nlohmann::json& record, const char* field,
                                        const std::string& path, std::size_t line_no) {
    auto it = record.find(field);
    if (it == record.end() || !it->is_string())
        throw DataError("missing field \"" + std::string(field) + "\" at " +
                        location(path, line_no));
    return it->get<std::string>();
}

}  // namespace detail

// Streams passages from a JSONL corpus (one object per line with fields
// `_id`, `title`, `text`; `title` may be absent or empty). Duplicate ids and
// missing required fields are fatal.
inline void load_corpus(const std::string& path,
                        const std::function<void(Passage&&)>& sink) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);

    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto record = detail::parse_jsonl_line(line, path, line_no);
        Passage passage;
        passage.id = detail::require_string_field(record, "_id", path, line_no);
        passage.text = detail::require_string_field(record, "text", path, line_no);
        if (auto it = record.find("title"); it != record.end() && it->is_string())
            passage.title = it->get<std::string>();
        if (passage.id.empty())
            throw DataError("empty _id at " + detail::location(path, line_no));
        if (!seen.insert(passage.id).second)
            throw DataError("duplicate _id \"" + passage.id + "\" at " +
                            detail::location(path, line_no));
        sink(std::move(passage));
    }
}

inline std::unordered_map<std::string, Passage> load_corpus_map(const std::string& path) {
    std::unordered_map<std::string, Passage> corpus;
    load_corpus(path, [&](Passage&& p) { corpus.emplace(p.id, std::move(p)); });
    return corpus;
}

// JSONL queries with fields `_id` and `text`.
inline std::vector<Query> load_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open queries file: " + path);

    std::vector<Query> queries;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto record = detail::parse_jsonl_line(line, path, line_no);
        Query query;
        query.id = detail::require_string_field(record, "_id", path, line_no);
        query.text = detail::require_string_field(record, "text", path, line_no);
        if (query.id.empty())
            throw DataError("empty _id at " + detail::location(path, line_no));
        if (!seen.insert(query.id).second)
            throw DataError("duplicate _id \"" + query.id + "\" at " +
                            detail::location(path, line_no));
        queries.push_back(std::move(query));
    }
    return queries;
}

// TREC qrels: whitespace-separated `qid 0 docid grade` lines. A later line
// for the same (qid, docid) overwrites the earlier grade with a warning.
inline Qrels load_qrels(const std::string& path,
                        std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open qrels file: " + path);

    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, iteration, docid, grade_text, extra;
        if (!(fields >> qid)) continue;  // blank line
        if (!(fields >> iteration >> docid >> grade_text) || (fields >> extra))
            throw DataError("expected 4 fields at " + detail::location(path, line_no));
        int grade = 0;
        std::size_t consumed = 0;
        try {
            grade = std::stoi(grade_text, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed != grade_text.size())
            throw DataError("non-integer grade \"" + grade_text + "\" at " +
                            detail::location(path, line_no));
        if (grade < 0)
            throw DataError("negative grade at " + detail::location(path, line_no));
        auto [it, inserted] = qrels[qid].emplace(docid, grade);
        if (!inserted) {
            if (warnings)
                warnings->push_back("duplicate judgment for (" + qid + ", " + docid +
                                    ") at " + detail::location(path, line_no) +
                                    "; keeping the later grade");
            it->second = grade;
        }
    }
    return qrels;
}

// TREC run line: `qid Q0 docid rank score tag`, scores at fixed 6 decimals.
inline void write_run(const std::vector<Ranking>& rankings, const std::string& tag,
                      const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open run file for writing: " + path);
    for (const auto& ranking : rankings) {
        for (const auto& item : ranking.items) {
            char score[64];
            std::snprintf(score, sizeof(score), "%.6f", item.score);
            out << ranking.query_id << " Q0 " << item.passage_id << " " << item.rank
                << " " << score << " " << tag << "\n";
        }
    }
    if (!out) throw DataError("failed writing run file: " + path);
}

// Reads a run file back into Rankings (grouped by query in file order) and
// validates per-query rank contiguity, score monotonicity and id uniqueness.
inline std::vector<Ranking> read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run file: " + path);

    std::vector<Ranking> rankings;
    std::unordered_map<std::string, std::size_t> by_query;
    std::unordered_map<std::string, std::unordered_set<std::string>> seen_pids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, q0, docid, tag;
        long rank = 0;
        double score = 0.0;
        if (!(fields >> qid)) continue;
        if (!(fields >> q0 >> docid >> rank >> score >> tag))
            throw DataError("malformed run line at " + detail::location(path, line_no));

        auto [it, inserted] = by_query.emplace(qid, rankings.size());
        if (inserted) {
            rankings.push_back(Ranking{qid, {}, tag});
        }
        auto& ranking = rankings[it->second];
        if (!seen_pids[qid].insert(docid).second)
            throw DataError("duplicate passage " + docid + " for query " + qid + " at " +
                            detail::location(path, line_no));
        if (rank != static_cast<long>(ranking.items.size()) + 1)
            throw DataError("ranks not contiguous from 1 for query " + qid + " at " +
                            detail::location(path, line_no));
        if (!ranking.items.empty() && score > ranking.items.back().score)
            throw DataError("score increases with rank for query " + qid + " at " +
                            detail::location(path, line_no));
        ranking.items.push_back({docid, score, static_cast<int>(rank)});
    }
    return rankings;
}

}  // namespace llmrank
