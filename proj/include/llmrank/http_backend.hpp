#pragma once

// HTTP scoring backend speaking a small JSON wire protocol:
//
//   POST /v1/score_options
//     request   {"prompt": "<string>", "options": ["1", "2", ...]}
//     response  {"logprobs": {"1": -2.3, "2": -1.1, ...}}
//               one finite float per requested option; a missing option key
//               is a protocol error
//
//   POST /v1/loglikelihood
//     request   {"context": "<string>", "continuation": "<string>"}
//     response  {"logprob": -12.7, "num_tokens": 9}
//
// Transport failures and 5xx responses are retried with exponential backoff;
// a request that still fails raises BackendError with the attempt count and
// the (query, passage) context. Non-2xx/5xx statuses and malformed bodies
// raise ProtocolError without retrying.

#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "llmrank/core.hpp"
#include "llmrank/scorer.hpp"

namespace llmrank {

struct HttpBackendConfig {
    std::string base_url;         // e.g. "http://localhost:8080"
    int max_parallel_requests = 4;
    int max_retries = 3;          // retries after the first attempt
    int backoff_initial_ms = 100; // doubles per retry
    int timeout_seconds = 120;
};

class HttpBackend : public ScorerBackend {
public:
    explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty())
            throw ContractError("http backend needs a base url");
        if (config_.max_parallel_requests < 1)
            throw ContractError("max_parallel_requests must be >= 1");
        if (config_.max_retries < 0)
            throw ContractError("max_retries must be >= 0");
    }

    std::vector<double> score_options(const OptionScoreRequest& request) override {
        nlohmann::json body{{"prompt", request.prompt}, {"options", request.options}};
        auto response = post_with_retries("/v1/score_options", body.dump(),
                                          context_of(request.query_id, request.passage_ids));

        auto logprobs_it = response.find("logprobs");
        if (logprobs_it == response.end() || !logprobs_it->is_object())
            throw ProtocolError("response lacks \"logprobs\" object" +
                                context_of(request.query_id, request.passage_ids));
        std::vector<double> logprobs;
        logprobs.reserve(request.options.size());
        for (const auto& option : request.options) {
            auto it = logprobs_it->find(option);
            if (it == logprobs_it->end() || !it->is_number())
                throw ProtocolError("response is missing a finite log-probability for option \"" +
                                    option + "\"" +
                                    context_of(request.query_id, request.passage_ids));
            logprobs.push_back(it->get<double>());
        }
        return logprobs;
    }

    LoglikelihoodResult loglikelihood(const LoglikelihoodRequest& request) override {
        nlohmann::json body{{"context", request.context},
                            {"continuation", request.continuation}};
        auto response = post_with_retries("/v1/loglikelihood", body.dump(),
                                          context_of(request.query_id, request.passage_ids));
        if (!response.contains("logprob") || !response["logprob"].is_number() ||
            !response.contains("num_tokens") || !response["num_tokens"].is_number_integer())
            throw ProtocolError("malformed likelihood response" +
                                context_of(request.query_id, request.passage_ids));
        return {response["logprob"].get<double>(), response["num_tokens"].get<int>()};
    }

    std::string identity() const override { return "http(" + config_.base_url + ")"; }
    int max_parallel_requests() const override { return config_.max_parallel_requests; }

private:
    static std::string context_of(const std::string& query_id,
                                  const std::vector<std::string>& passage_ids) {
        std::string ctx = " (query " + query_id;
        for (const auto& pid : passage_ids) ctx += ", passage " + pid;
        return ctx + ")";
    }

    nlohmann::json post_with_retries(const std::string& path, const std::string& body,
                                     const std::string& context) {
        int attempts = 0;
        std::string last_failure;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                auto delay = config_.backoff_initial_ms * (1 << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }
            ++attempts;

            // httplib clients are not safe for concurrent use; one per request.
            httplib::Client client(config_.base_url);
            client.set_connection_timeout(config_.timeout_seconds, 0);
            client.set_read_timeout(config_.timeout_seconds, 0);
            auto result = client.Post(path, body, "application/json");

            if (!result) {
                last_failure = "transport error: " + httplib::to_string(result.error());
                continue;
            }
            if (result->status >= 500) {
                last_failure = "server error: HTTP " + std::to_string(result->status);
                continue;
            }
            if (result->status != 200)
                throw ProtocolError("unexpected HTTP " + std::to_string(result->status) +
                                    " from " + path + context);
            nlohmann::json response = nlohmann::json::parse(result->body, nullptr, false);
            if (response.is_discarded() || !response.is_object())
                throw ProtocolError("response from " + path + " is not a JSON object" + context);
            return response;
        }
        throw BackendError(path + " failed after " + std::to_string(attempts) +
                               " attempts (" + last_failure + ")" + context,
                           attempts);
    }

    HttpBackendConfig config_;
};

}  // namespace llmrank
