#pragma once

// Core domain types shared by every module: queries, passages, candidate
// lists, score scales, option-probability distributions and rankings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace llmrank {

// ---------------------------------------------------------------------------
// Error hierarchy
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

// On-disk input could not be ingested (bad format, duplicate id, ...).
// Messages carry file path and line number where applicable.
class DataError : public Error {
public:
    using Error::Error;
};

// Prompt template is malformed or used with the wrong shape.
class TemplateError : public Error {
public:
    using Error::Error;
};

// Transport-level scoring failure that persisted through retries.
class BackendError : public Error {
public:
    BackendError(const std::string& msg, int attempts)
        : Error(msg), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_ = 1;
};

// The backend answered, but not in the shape the wire protocol promises.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// The selected scoring mode is not implemented by the configured backend.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Numerically meaningless input (e.g. every option has zero probability).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small string helpers
// ---------------------------------------------------------------------------

inline std::string trim_copy(const std::string& s) {
    const char* ws = " \t\r\n\f\v";
    auto begin = s.find_first_not_of(ws);
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(ws);
    return s.substr(begin, end - begin + 1);
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Identifiers are opaque strings; they are never parsed as integers.
struct Query {
    std::string id;
    std::string text;
};

struct Passage {
    std::string id;
    std::string title;  // empty when the corpus record has no title
    std::string text;
};

// One first-stage retrieval hit. Ranks start at 1 and are contiguous within
// a candidate list; first-stage scores are non-increasing with rank.
struct Candidate {
    std::string passage_id;
    double first_stage_score = 0.0;
    int first_stage_rank = 0;
};

// The ordered integer rating scale the scorer distributes probability over,
// together with the single token presented to the backend for each option.
struct ScoreScale {
    std::vector<int> values;
    std::vector<std::string> tokens;

    std::size_t size() const { return values.size(); }

    // The default 1..5 Likert scale.
    static ScoreScale likert() { return integer_range(1, 5); }

    static ScoreScale integer_range(int lo, int hi) {
        ScoreScale scale;
        for (int v = lo; v <= hi; ++v) {
            scale.values.push_back(v);
            scale.tokens.push_back(std::to_string(v));
        }
        return scale;
    }
};

inline void validate(const ScoreScale& scale) {
    if (scale.values.size() < 2)
        throw ContractError("score scale needs at least 2 options");
    if (scale.tokens.size() != scale.values.size())
        throw ContractError("score scale needs one token per option");
    for (std::size_t i = 1; i < scale.values.size(); ++i)
        if (scale.values[i] <= scale.values[i - 1])
            throw ContractError("score scale values must be strictly increasing");
    for (std::size_t i = 0; i < scale.tokens.size(); ++i) {
        if (scale.tokens[i].empty())
            throw ContractError("score scale tokens must be non-empty");
        for (std::size_t j = i + 1; j < scale.tokens.size(); ++j)
            if (scale.tokens[i] == scale.tokens[j])
                throw ContractError("score scale tokens must be pairwise distinct: \"" +
                                    scale.tokens[i] + "\"");
    }
}

// Probability vector aligned with a ScoreScale. Entries are non-negative and
// sum to 1 (within 1e-6).
struct ScoreDistribution {
    std::vector<double> probs;
};

inline void validate(const ScoreDistribution& dist) {
    double sum = 0.0;
    for (double p : dist.probs) {
        if (!(p >= 0.0))
            throw ContractError("distribution entries must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw ContractError("distribution entries must sum to 1");
}

// Ordered output of one rerank stage.
struct Ranking {
    struct Item {
        std::string passage_id;
        double score = 0.0;
        int rank = 0;
    };

    std::string query_id;
    std::vector<Item> items;
    std::string method_tag;
};

inline void validate(const Ranking& ranking) {
    for (std::size_t i = 0; i < ranking.items.size(); ++i) {
        const auto& item = ranking.items[i];
        if (item.rank != static_cast<int>(i) + 1)
            throw ContractError("ranking for query " + ranking.query_id +
                                ": ranks must be contiguous from 1");
        if (i > 0 && item.score > ranking.items[i - 1].score)
            throw ContractError("ranking for query " + ranking.query_id +
                                ": scores must be non-increasing with rank");
        for (std::size_t j = i + 1; j < ranking.items.size(); ++j)
            if (ranking.items[j].passage_id == item.passage_id)
                throw ContractError("ranking for query " + ranking.query_id +
                                    ": duplicate passage id " + item.passage_id);
    }
}

// Candidate lists carry ranks 1..n with non-increasing scores.
inline void validate(const std::vector<Candidate>& candidates) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].first_stage_rank != static_cast<int>(i) + 1)
            throw ContractError("candidate ranks must be contiguous from 1");
        if (i > 0 && candidates[i].first_stage_score > candidates[i - 1].first_stage_score)
            throw ContractError("candidate scores must be non-increasing with rank");
    }
}

// ---------------------------------------------------------------------------
// Probability utilities
// ---------------------------------------------------------------------------

// Turns raw per-option token log-probabilities into a proper distribution by
// renormalizing over the option set only (softmax over these entries). Mass
// the backend assigned to non-option tokens is discarded. -inf entries are
// legal and map to probability zero; NaN and +inf are contract violations.
inline ScoreDistribution normalize_over_options(const std::vector<double>& raw_logprobs,
                                                const ScoreScale& scale) {
    if (raw_logprobs.size() != scale.size())
        throw ContractError("logprob vector length " + std::to_string(raw_logprobs.size()) +
                            " does not match option count " + std::to_string(scale.size()));

    double max_lp = -std::numeric_limits<double>::infinity();
    for (double lp : raw_logprobs) {
        if (std::isnan(lp) || lp == std::numeric_limits<double>::infinity())
            throw ContractError("log-probabilities must not be NaN or +inf");
        max_lp = std::max(max_lp, lp);
    }
    if (max_lp == -std::numeric_limits<double>::infinity())
        throw DegenerateInputError("all option log-probabilities are -inf");

    ScoreDistribution dist;
    dist.probs.resize(raw_logprobs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < raw_logprobs.size(); ++i) {
        dist.probs[i] = std::exp(raw_logprobs[i] - max_lp);
        sum += dist.probs[i];
    }
    for (double& p : dist.probs) p /= sum;
    return dist;
}

}  // namespace llmrank
