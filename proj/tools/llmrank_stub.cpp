// Standalone scoring stub speaking the wire protocol; useful for trying the
// rerank command without a real model server and for failure-injection demos.
//
// Modes:
//   hash    deterministic pseudo-random log-probabilities derived from the
//           (prompt, option) pair
//   length  uniform option scores; log-likelihood = -0.001 * context length
//           (so upr mode ranks shorter passages first, handy for smoke tests)

#include <atomic>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

namespace {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

int count_tokens(const std::string& text) {
    std::istringstream words(text);
    std::string word;
    int n = 0;
    while (words >> word) ++n;
    return n == 0 ? 1 : n;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scoring stub server for the llmrank wire protocol"};
    int port = 0;
    std::string mode = "hash";
    int fail_first = 0;
    app.add_option("--port", port, "Port to listen on (0 = pick any)")
        ->capture_default_str();
    app.add_option("--mode", mode, "Scoring mode")
        ->check(CLI::IsMember({"hash", "length"}))
        ->capture_default_str();
    app.add_option("--fail-first", fail_first,
                   "Answer HTTP 500 to this many initial requests");
    CLI11_PARSE(app, argc, argv);

    std::atomic<int> failures_left{fail_first};
    httplib::Server server;

    server.Post("/v1/score_options", [&](const httplib::Request& req,
                                         httplib::Response& res) {
        if (failures_left.fetch_sub(1) > 0) {
            res.status = 500;
            res.set_content("injected failure", "text/plain");
            return;
        }
        failures_left.store(0);
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("prompt") || !body.contains("options")) {
            res.status = 400;
            res.set_content("bad request", "text/plain");
            return;
        }
        nlohmann::json logprobs = nlohmann::json::object();
        for (const auto& option : body["options"]) {
            auto token = option.get<std::string>();
            double lp;
            if (mode == "hash") {
                auto h = fnv1a(body["prompt"].get<std::string>() + "\x1f" + token);
                lp = -0.1 - static_cast<double>(h % 10000) / 1000.0;
            } else {
                lp = -1.0;
            }
            logprobs[token] = lp;
        }
        res.set_content(nlohmann::json{{"logprobs", logprobs}}.dump(), "application/json");
    });

    server.Post("/v1/loglikelihood", [&](const httplib::Request& req,
                                         httplib::Response& res) {
        if (failures_left.fetch_sub(1) > 0) {
            res.status = 500;
            res.set_content("injected failure", "text/plain");
            return;
        }
        failures_left.store(0);
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("context") ||
            !body.contains("continuation")) {
            res.status = 400;
            res.set_content("bad request", "text/plain");
            return;
        }
        auto context = body["context"].get<std::string>();
        auto continuation = body["continuation"].get<std::string>();
        int num_tokens = count_tokens(continuation);
        double total;
        if (mode == "hash") {
            auto h = fnv1a(context + "\x1f" + continuation);
            total = -0.1 - static_cast<double>(h % 10000) / 100.0;
        } else {
            total = -0.001 * static_cast<double>(context.size()) *
                    static_cast<double>(num_tokens);
        }
        res.set_content(
            nlohmann::json{{"logprob", total}, {"num_tokens", num_tokens}}.dump(),
            "application/json");
    });

    if (port == 0)
        port = server.bind_to_any_port("127.0.0.1");
    else if (!server.bind_to_port("127.0.0.1", port)) {
        std::cerr << "cannot bind to port " << port << "\n";
        return 1;
    }
    std::cout << "listening on http://127.0.0.1:" << port << std::endl;
    server.listen_after_bind();
    return 0;
}
