#pragma once

// Turns scoring into rankings. Three methods:
//   pointwise  score every candidate once, sort descending
//   pairwise   score all ordered pairs among the top pairwise_depth
//              candidates, sum win probabilities, re-sort that head
//   pipeline   pointwise over everything, then pairwise refinement of the
//              pointwise top pairwise_depth
// Ties always break by prior-stage rank, so every stage is a stable re-sort
// and identical inputs yield identical rankings at any parallelism level.

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "llmrank/aggregate.hpp"
#include "llmrank/core.hpp"
#include "llmrank/scorer.hpp"

namespace llmrank {

enum class RerankMethod { pointwise, pairwise, pointwise_then_pairwise };
enum class PointwiseMode { soft, hard, binary, upr };

inline const char* to_string(RerankMethod method) {
    switch (method) {
        case RerankMethod::pointwise: return "pointwise";
        case RerankMethod::pairwise: return "pairwise";
        case RerankMethod::pointwise_then_pairwise: return "pipeline";
    }
    return "?";
}

inline const char* to_string(PointwiseMode mode) {
    switch (mode) {
        case PointwiseMode::soft: return "soft";
        case PointwiseMode::hard: return "hard";
        case PointwiseMode::binary: return "binary";
        case PointwiseMode::upr: return "upr";
    }
    return "?";
}

struct RerankConfig {
    RerankMethod method = RerankMethod::pointwise;
    PointwiseMode pointwise_mode = PointwiseMode::soft;
    std::size_t candidate_depth = 100;  // applied by callers when ingesting runs
    std::size_t pairwise_depth = 40;
    ScoreScale scale = ScoreScale::likert();
    PromptTemplate pointwise_template = default_pointwise_template();
    PromptTemplate pairwise_template = default_pairwise_template();
    PromptTemplate binary_template = default_binary_template();
    PromptTemplate upr_template = default_upr_template();
    bool upr_length_normalize = true;
};

inline void validate(const RerankConfig& config) {
    validate(config.scale);
    if (config.candidate_depth < 1)
        throw ContractError("candidate_depth must be >= 1");
    if (config.pairwise_depth > config.candidate_depth)
        throw ContractError("pairwise_depth must not exceed candidate_depth");
    if (config.method != RerankMethod::pointwise && config.pairwise_depth < 2)
        throw ContractError("pairwise_depth must be >= 2 for pairwise reranking");
    validate_template(config.pointwise_template, TemplateShape::pointwise);
    validate_template(config.pairwise_template, TemplateShape::pairwise);
    validate_template(config.binary_template, TemplateShape::pointwise);
    validate_template(config.upr_template, TemplateShape::upr);
}

// Resolves candidate passage ids to their texts.
class PassageStore {
public:
    explicit PassageStore(const std::unordered_map<std::string, Passage>& passages)
        : passages_(passages) {}

    const Passage& get(const std::string& id) const {
        auto it = passages_.find(id);
        if (it == passages_.end())
            throw DataError("passage id not found in corpus: " + id);
        return it->second;
    }

private:
    const std::unordered_map<std::string, Passage>& passages_;
};

namespace detail {

// Tail items are appended below a reordered head; their scores are shifted
// strictly below the minimum head score while preserving their order, so the
// emitted run stays globally descending.
inline void append_tail(Ranking& ranking, double min_head_score,
                        const std::vector<Ranking::Item>& tail) {
    for (std::size_t t = 0; t < tail.size(); ++t) {
        double score = min_head_score - 1.0 - static_cast<double>(t) * 1e-6;
        ranking.items.push_back(
            {tail[t].passage_id, score, static_cast<int>(ranking.items.size()) + 1});
    }
}

}  // namespace detail

// Scores every candidate once via the configured pointwise mode and sorts by
// score descending, ties by first-stage rank. Any scorer failure (after the
// backend's own retries) aborts the whole query; no partial ranking escapes.
inline Ranking rerank_pointwise(ScorerBackend& backend, const RerankConfig& config,
                                const Query& query, const std::vector<Candidate>& candidates,
                                const PassageStore& passages) {
    if (candidates.empty())
        throw ContractError("rerank needs at least one candidate for query " + query.id);

    const std::size_t n = candidates.size();
    std::vector<double> scores(n, 0.0);
    detail::parallel_for(n, backend.max_parallel_requests(), [&](std::size_t i) {
        const Passage& passage = passages.get(candidates[i].passage_id);
        switch (config.pointwise_mode) {
            case PointwiseMode::soft:
                scores[i] = soft_score(
                    score_pointwise(backend, config.pointwise_template, query, passage,
                                    config.scale),
                    config.scale);
                break;
            case PointwiseMode::hard:
                scores[i] = hard_score(
                    score_pointwise(backend, config.pointwise_template, query, passage,
                                    config.scale),
                    config.scale);
                break;
            case PointwiseMode::binary:
                scores[i] = score_binary(backend, config.binary_template, query, passage);
                break;
            case PointwiseMode::upr:
                scores[i] = upr_loglikelihood(backend, config.upr_template, query, passage,
                                              config.upr_length_normalize);
                break;
        }
    });

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return candidates[a].first_stage_rank < candidates[b].first_stage_rank;
    });

    Ranking ranking;
    ranking.query_id = query.id;
    ranking.method_tag = std::string("pointwise_") + to_string(config.pointwise_mode);
    ranking.items.reserve(n);
    for (std::size_t r = 0; r < n; ++r)
        ranking.items.push_back(
            {candidates[order[r]].passage_id, scores[order[r]], static_cast<int>(r) + 1});
    return ranking;
}

// Tournament reranking of the top pairwise_depth candidates: every ordered
// pair is scored (k'^2 - k' requests), win probabilities are summed into s2,
// and the head is re-sorted by s2. Candidates beyond the head keep their
// input order below it.
inline Ranking rerank_pairwise(ScorerBackend& backend, const RerankConfig& config,
                               const Query& query, const std::vector<Candidate>& candidates,
                               const PassageStore& passages) {
    const std::size_t head = std::min<std::size_t>(config.pairwise_depth, candidates.size());
    if (head < 2)
        throw ContractError("pairwise reranking needs at least 2 candidates for query " +
                            query.id);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(head * head - head);
    for (std::size_t i = 0; i < head; ++i)
        for (std::size_t j = 0; j < head; ++j)
            if (i != j) pairs.emplace_back(i, j);

    std::vector<double> win(pairs.size(), 0.0);
    detail::parallel_for(pairs.size(), backend.max_parallel_requests(), [&](std::size_t t) {
        const auto& [i, j] = pairs[t];
        win[t] = score_pairwise(backend, config.pairwise_template, query,
                                passages.get(candidates[i].passage_id),
                                passages.get(candidates[j].passage_id));
    });

    PairwiseMatrix matrix(head);
    for (std::size_t t = 0; t < pairs.size(); ++t)
        matrix.set(pairs[t].first, pairs[t].second, win[t]);
    auto s2 = pairwise_scores(matrix);

    std::vector<std::size_t> order(head);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s2[a] != s2[b]) return s2[a] > s2[b];
        return a < b;  // prior-stage order
    });

    Ranking ranking;
    ranking.query_id = query.id;
    ranking.method_tag = "pairwise";
    ranking.items.reserve(candidates.size());
    for (std::size_t r = 0; r < head; ++r)
        ranking.items.push_back(
            {candidates[order[r]].passage_id, s2[order[r]], static_cast<int>(r) + 1});

    std::vector<Ranking::Item> tail;
    for (std::size_t t = head; t < candidates.size(); ++t)
        tail.push_back({candidates[t].passage_id, 0.0, 0});
    detail::append_tail(ranking, ranking.items[head - 1].score, tail);
    return ranking;
}

// Pointwise pass over all candidates, then pairwise refinement of the
// pointwise top pairwise_depth. The tail keeps its pointwise order, shifted
// strictly below the pairwise head scores.
inline Ranking rerank_pipeline(ScorerBackend& backend, const RerankConfig& config,
                               const Query& query, const std::vector<Candidate>& candidates,
                               const PassageStore& passages) {
    Ranking pointwise = rerank_pointwise(backend, config, query, candidates, passages);

    const std::size_t head = std::min<std::size_t>(config.pairwise_depth,
                                                   pointwise.items.size());
    if (head < 2)
        throw ContractError("pairwise refinement needs at least 2 candidates for query " +
                            query.id);

    std::vector<Candidate> pool;
    pool.reserve(head);
    for (std::size_t i = 0; i < head; ++i)
        pool.push_back({pointwise.items[i].passage_id, pointwise.items[i].score,
                        pointwise.items[i].rank});

    Ranking refined = rerank_pairwise(backend, config, query, pool, passages);

    Ranking ranking;
    ranking.query_id = query.id;
    ranking.method_tag = pointwise.method_tag + "+pairwise";
    ranking.items = refined.items;

    std::vector<Ranking::Item> tail(pointwise.items.begin() + static_cast<std::ptrdiff_t>(head),
                                    pointwise.items.end());
    detail::append_tail(ranking, ranking.items[head - 1].score, tail);
    return ranking;
}

// Dispatch on the configured method.
inline Ranking rerank(ScorerBackend& backend, const RerankConfig& config, const Query& query,
                      const std::vector<Candidate>& candidates, const PassageStore& passages) {
    switch (config.method) {
        case RerankMethod::pointwise:
            return rerank_pointwise(backend, config, query, candidates, passages);
        case RerankMethod::pairwise:
            return rerank_pairwise(backend, config, query, candidates, passages);
        case RerankMethod::pointwise_then_pairwise:
            return rerank_pipeline(backend, config, query, candidates, passages);
    }
    throw ContractError("unknown rerank method");
}

}  // namespace llmrank
