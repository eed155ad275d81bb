#pragma once

// Optional on-disk score cache; makes reruns of the O(k^2) pairwise stage
// near-instant. Storage is one append-only JSONL file; entries are keyed by
// a hash over template body, backend identity, query text, passage text(s)
// and option tokens (computed by the scoring functions). Reads are
// concurrent, writes serialized.

#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "llmrank/core.hpp"
#include "llmrank/scorer.hpp"

namespace llmrank {

class ScoreCache {
public:
    explicit ScoreCache(std::string path) : path_(std::move(path)) {
        std::ifstream in(path_);
        if (!in) return;  // new cache file on first write
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
            if (record.is_discarded() || !record.contains("key"))
                throw DataError("corrupt cache entry at " + path_ + ":" +
                                std::to_string(line_no));
            if (record.contains("logprobs")) {
                options_[record["key"].get<std::string>()] =
                    record["logprobs"].get<std::vector<double>>();
            } else if (record.contains("logprob")) {
                likelihoods_[record["key"].get<std::string>()] = {
                    record["logprob"].get<double>(), record["num_tokens"].get<int>()};
            }
        }
    }

    bool lookup_options(const std::string& key, std::vector<double>& out) const {
        std::shared_lock lock(mutex_);
        auto it = options_.find(key);
        if (it == options_.end()) return false;
        out = it->second;
        return true;
    }

    bool lookup_likelihood(const std::string& key, LoglikelihoodResult& out) const {
        std::shared_lock lock(mutex_);
        auto it = likelihoods_.find(key);
        if (it == likelihoods_.end()) return false;
        out = it->second;
        return true;
    }

    void store_options(const std::string& key, const std::vector<double>& logprobs) {
        std::unique_lock lock(mutex_);
        if (!options_.emplace(key, logprobs).second) return;
        append(nlohmann::json{{"key", key}, {"logprobs", logprobs}});
    }

    void store_likelihood(const std::string& key, const LoglikelihoodResult& result) {
        std::unique_lock lock(mutex_);
        if (!likelihoods_.emplace(key, result).second) return;
        append(nlohmann::json{{"key", key},
                              {"logprob", result.total_logprob},
                              {"num_tokens", result.num_tokens}});
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return options_.size() + likelihoods_.size();
    }

private:
    void append(const nlohmann::json& record) {
        std::ofstream out(path_, std::ios::app);
        if (!out) throw DataError("cannot append to cache file: " + path_);
        out << record.dump() << "\n";
        out.flush();
    }

    std::string path_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::vector<double>> options_;
    std::unordered_map<std::string, LoglikelihoodResult> likelihoods_;
};

// Serves repeated requests from the cache; misses go to the inner backend
// and are persisted. Requests without a cache key pass straight through.
class CachingBackend : public ScorerBackend {
public:
    CachingBackend(ScorerBackend& inner, ScoreCache& cache)
        : inner_(inner), cache_(cache) {}

    std::vector<double> score_options(const OptionScoreRequest& request) override {
        if (request.cache_key.empty()) return inner_.score_options(request);
        std::vector<double> logprobs;
        if (cache_.lookup_options(request.cache_key, logprobs)) return logprobs;
        logprobs = inner_.score_options(request);
        cache_.store_options(request.cache_key, logprobs);
        return logprobs;
    }

    LoglikelihoodResult loglikelihood(const LoglikelihoodRequest& request) override {
        if (request.cache_key.empty()) return inner_.loglikelihood(request);
        LoglikelihoodResult result;
        if (cache_.lookup_likelihood(request.cache_key, result)) return result;
        result = inner_.loglikelihood(request);
        cache_.store_likelihood(request.cache_key, result);
        return result;
    }

    std::string identity() const override { return inner_.identity(); }
    int max_parallel_requests() const override { return inner_.max_parallel_requests(); }

private:
    ScorerBackend& inner_;
    ScoreCache& cache_;
};

}  // namespace llmrank
