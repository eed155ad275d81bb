#pragma once

// trec_eval-compatible NDCG@k over graded relevance judgments. Queries with
// no positively graded passage are skipped, not scored zero, and the mean is
// taken over evaluated queries only.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "llmrank/core.hpp"

namespace llmrank {

// query_id -> passage_id -> grade. std::map keeps report output ordered.
using QueryQrels = std::map<std::string, int>;
using Qrels = std::map<std::string, QueryQrels>;

enum class GainFunction {
    linear,       // g(rel) = rel, matching trec_eval's ndcg_cut
    exponential,  // g(rel) = 2^rel - 1
};

inline double gain(GainFunction fn, int rel) {
    if (rel <= 0) return 0.0;
    return fn == GainFunction::linear ? static_cast<double>(rel)
                                      : std::exp2(static_cast<double>(rel)) - 1.0;
}

// NDCG@k for one ranking. Returns nullopt (the skip marker) when the query
// has no passage with grade > 0. Unjudged passages contribute zero gain; the
// ideal ranking is taken over every judged passage, retrieved or not.
inline std::optional<double> ndcg_at_k(const Ranking& ranking, const QueryQrels& qrels,
                                       std::size_t k,
                                       GainFunction fn = GainFunction::linear) {
    if (k == 0) throw ContractError("ndcg cutoff k must be positive");

    std::vector<int> grades;
    grades.reserve(qrels.size());
    bool any_positive = false;
    for (const auto& [pid, grade] : qrels) {
        grades.push_back(grade);
        if (grade > 0) any_positive = true;
    }
    if (!any_positive) return std::nullopt;

    double dcg = 0.0;
    std::size_t depth = std::min(k, ranking.items.size());
    for (std::size_t i = 0; i < depth; ++i) {
        auto it = qrels.find(ranking.items[i].passage_id);
        int rel = it == qrels.end() ? 0 : it->second;
        dcg += gain(fn, rel) / std::log2(static_cast<double>(i) + 2.0);
    }

    std::sort(grades.begin(), grades.end(), std::greater<int>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, grades.size()); ++i)
        idcg += gain(fn, grades[i]) / std::log2(static_cast<double>(i) + 2.0);

    return dcg / idcg;
}

struct EvalReport {
    std::string metric_name;                   // e.g. "ndcg_cut_10"
    std::map<std::string, double> per_query;   // evaluated queries only
    std::vector<std::string> skipped;          // absent from qrels or no positive grade
    double mean = 0.0;
    std::size_t num_queries_evaluated = 0;
};

// Evaluates a run (one Ranking per query). Queries absent from the qrels or
// with no positive grade are listed as skipped and excluded from the mean.
inline EvalReport evaluate_run(const std::vector<Ranking>& run, const Qrels& qrels,
                               std::size_t k, GainFunction fn = GainFunction::linear) {
    if (k == 0) throw ContractError("ndcg cutoff k must be positive");

    EvalReport report;
    report.metric_name = "ndcg_cut_" + std::to_string(k);

    std::unordered_set<std::string> seen;
    double total = 0.0;
    for (const auto& ranking : run) {
        if (!seen.insert(ranking.query_id).second)
            throw DataError("duplicate query id in run: " + ranking.query_id);
        auto it = qrels.find(ranking.query_id);
        std::optional<double> value;
        if (it != qrels.end()) value = ndcg_at_k(ranking, it->second, k, fn);
        if (value) {
            report.per_query[ranking.query_id] = *value;
            total += *value;
        } else {
            report.skipped.push_back(ranking.query_id);
        }
    }
    report.num_queries_evaluated = report.per_query.size();
    report.mean = report.num_queries_evaluated == 0
                      ? 0.0
                      : total / static_cast<double>(report.num_queries_evaluated);
    return report;
}

// {"metric": "ndcg_cut_10", "mean": <float>, "per_query": {<qid>: <float>}}
inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_query = nlohmann::json::object();
    for (const auto& [qid, value] : report.per_query) per_query[qid] = value;
    return nlohmann::json{{"metric", report.metric_name},
                          {"mean", report.mean},
                          {"per_query", per_query}};
}

inline void write_text_report(const EvalReport& report, std::ostream& out) {
    for (const auto& [qid, value] : report.per_query) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", value);
        out << report.metric_name << "\t" << qid << "\t" << buf << "\n";
    }
    for (const auto& qid : report.skipped)
        out << "# skipped (no relevant passages judged): " << qid << "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", report.mean);
    out << report.metric_name << "\tall\t" << buf << "\n";
}

}  // namespace llmrank
