#pragma once

// Prompt templating and the pluggable scoring backend abstraction. A backend
// answers two kinds of requests: option scoring (log-probability of each
// option token at the first generated position) and sequence log-likelihood.
// Raw option log-probabilities are renormalized over the option set by the
// scoring functions, so backends may return unnormalized values.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "llmrank/core.hpp"

namespace llmrank {

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

enum class TemplateShape { pointwise, pairwise, upr };

// Placeholders: {query}, {passage}, {passage_a}, {passage_b}, {options}.
// Which ones are required or allowed depends on the template shape.
struct PromptTemplate {
    std::string name;
    std::string body;
    std::size_t max_passage_chars = 2000;
};

// Pairwise option labels; letters, never Likert digits.
inline const std::vector<std::string>& pairwise_labels() {
    static const std::vector<std::string> labels = {"A", "B"};
    return labels;
}

inline const std::vector<std::string>& binary_labels() {
    static const std::vector<std::string> labels = {"yes", "no"};
    return labels;
}

namespace detail {

// Collects `{word}` placeholders (lowercase letters and underscores only);
// anything else in braces is literal text.
inline std::vector<std::string> template_placeholders(const std::string& body) {
    std::vector<std::string> found;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') continue;
        auto end = body.find('}', i + 1);
        if (end == std::string::npos) break;
        std::string word = body.substr(i + 1, end - i - 1);
        bool is_word = !word.empty();
        for (char c : word)
            if (!(std::islower(static_cast<unsigned char>(c)) || c == '_')) is_word = false;
        if (is_word) {
            found.push_back(word);
            i = end;
        }
    }
    return found;
}

inline bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace detail

inline void validate_template(const PromptTemplate& tmpl, TemplateShape shape) {
    static const std::vector<std::string> known = {"query", "passage", "passage_a",
                                                   "passage_b", "options"};
    auto placeholders = detail::template_placeholders(tmpl.body);
    for (const auto& p : placeholders)
        if (!detail::contains(known, p))
            throw TemplateError("unknown placeholder {" + p + "} in template " + tmpl.name);
    if (tmpl.max_passage_chars == 0)
        throw TemplateError("template " + tmpl.name + " has zero passage budget");

    auto require = [&](const char* p) {
        if (!detail::contains(placeholders, p))
            throw TemplateError("template " + tmpl.name + " is missing {" + p + "}");
    };
    auto forbid = [&](const char* p) {
        if (detail::contains(placeholders, p))
            throw TemplateError("template " + tmpl.name + " must not use {" + std::string(p) +
                                "} for this shape");
    };
    switch (shape) {
        case TemplateShape::pointwise:
            require("query");
            require("passage");
            forbid("passage_a");
            forbid("passage_b");
            break;
        case TemplateShape::pairwise:
            require("query");
            require("passage_a");
            require("passage_b");
            forbid("passage");
            break;
        case TemplateShape::upr:
            require("passage");
            forbid("query");
            forbid("passage_a");
            forbid("passage_b");
            forbid("options");
            break;
    }
}

inline PromptTemplate load_template(const std::string& path, TemplateShape shape,
                                    std::size_t max_passage_chars = 2000) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open template file: " + path);
    std::ostringstream body;
    body << in.rdbuf();
    PromptTemplate tmpl{path, body.str(), max_passage_chars};
    validate_template(tmpl, shape);
    return tmpl;
}

inline PromptTemplate default_pointwise_template() {
    return {"pointwise-default",
            "Rate how relevant the passage is to the question on a scale of {options}.\n"
            "\n"
            "Question: {query}\n"
            "Passage: {passage}\n"
            "\n"
            "Answer with a single digit from {options}, and nothing else.\n"
            "Relevance:",
            2000};
}

inline PromptTemplate default_pairwise_template() {
    return {"pairwise-default",
            "Which of the two passages is more relevant to the question?\n"
            "\n"
            "Question: {query}\n"
            "\n"
            "Passage A: {passage_a}\n"
            "Passage B: {passage_b}\n"
            "\n"
            "Answer with a single letter, A or B, and nothing else.\n"
            "More relevant passage:",
            2000};
}

inline PromptTemplate default_binary_template() {
    return {"binary-default",
            "Is the passage relevant to the question? Answer yes or no.\n"
            "\n"
            "Question: {query}\n"
            "Passage: {passage}\n"
            "\n"
            "Answer:",
            2000};
}

inline PromptTemplate default_upr_template() {
    return {"upr-default",
            "Please write a question based on this passage.\n"
            "\n"
            "Passage: {passage}\n"
            "\n"
            "Question:",
            2000};
}

namespace detail {

// Longest prefix of at most `budget` bytes ending at a whitespace boundary;
// falls back to a hard cut when the first word alone exceeds the budget.
inline std::string truncate_at_whitespace(const std::string& text, std::size_t budget) {
    if (text.size() <= budget) return text;
    std::size_t cut = budget;
    if (!std::isspace(static_cast<unsigned char>(text[budget]))) {
        std::size_t pos = budget;
        while (pos > 0 && !std::isspace(static_cast<unsigned char>(text[pos - 1]))) --pos;
        if (pos > 0) cut = pos;
    }
    while (cut > 0 && std::isspace(static_cast<unsigned char>(text[cut - 1]))) --cut;
    return text.substr(0, cut);
}

inline std::string passage_prompt_text(const Passage& passage, std::size_t budget) {
    std::string body =
        passage.title.empty() ? passage.text : passage.title + " " + passage.text;
    return truncate_at_whitespace(body, budget);
}

// Hyphen-joined first and last option token, e.g. "1-5".
inline std::string options_text(const std::vector<std::string>& tokens) {
    return tokens.front() + "-" + tokens.back();
}

inline std::string substitute(const std::string& body,
                              const std::map<std::string, std::string>& values,
                              const std::string& template_name) {
    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '{') {
            auto end = body.find('}', i + 1);
            if (end != std::string::npos) {
                std::string word = body.substr(i + 1, end - i - 1);
                bool is_word = !word.empty();
                for (char c : word)
                    if (!(std::islower(static_cast<unsigned char>(c)) || c == '_'))
                        is_word = false;
                if (is_word) {
                    auto it = values.find(word);
                    if (it == values.end())
                        throw TemplateError("unresolved placeholder {" + word +
                                            "} in template " + template_name);
                    out += it->second;
                    i = end;
                    continue;
                }
            }
        }
        out += body[i];
    }
    return out;
}

}  // namespace detail

inline std::string render_pointwise_prompt(const PromptTemplate& tmpl, const Query& query,
                                           const Passage& passage, const ScoreScale& scale) {
    return detail::substitute(
        tmpl.body,
        {{"query", query.text},
         {"passage", detail::passage_prompt_text(passage, tmpl.max_passage_chars)},
         {"options", detail::options_text(scale.tokens)}},
        tmpl.name);
}

inline std::string render_pairwise_prompt(const PromptTemplate& tmpl, const Query& query,
                                          const Passage& first, const Passage& second) {
    return detail::substitute(
        tmpl.body,
        {{"query", query.text},
         {"passage_a", detail::passage_prompt_text(first, tmpl.max_passage_chars)},
         {"passage_b", detail::passage_prompt_text(second, tmpl.max_passage_chars)},
         {"options", detail::options_text(pairwise_labels())}},
        tmpl.name);
}

inline std::string render_binary_prompt(const PromptTemplate& tmpl, const Query& query,
                                        const Passage& passage) {
    return detail::substitute(
        tmpl.body,
        {{"query", query.text},
         {"passage", detail::passage_prompt_text(passage, tmpl.max_passage_chars)},
         {"options", detail::options_text(binary_labels())}},
        tmpl.name);
}

inline std::string render_upr_context(const PromptTemplate& tmpl, const Passage& passage) {
    return detail::substitute(
        tmpl.body,
        {{"passage", detail::passage_prompt_text(passage, tmpl.max_passage_chars)}},
        tmpl.name);
}

// ---------------------------------------------------------------------------
// Backend interface
// ---------------------------------------------------------------------------

// Structured fields travel with the rendered prompt so that backends which do
// not run an actual model (oracle, cache) can act on them. Results are always
// matched to requests by the caller, never by arrival order.
struct OptionScoreRequest {
    std::string prompt;
    std::vector<std::string> options;
    std::string query_id;
    std::vector<std::string> passage_ids;
    std::string cache_key;  // empty disables caching for this request
};

struct LoglikelihoodRequest {
    std::string context;
    std::string continuation;
    std::string query_id;
    std::vector<std::string> passage_ids;
    std::string cache_key;
};

struct LoglikelihoodResult {
    double total_logprob = 0.0;
    int num_tokens = 1;
};

class ScorerBackend {
public:
    virtual ~ScorerBackend() = default;

    // Raw log-probabilities aligned with request.options.
    virtual std::vector<double> score_options(const OptionScoreRequest& request) = 0;

    virtual LoglikelihoodResult loglikelihood(const LoglikelihoodRequest& request) {
        (void)request;
        throw UnsupportedError("backend " + identity() +
                               " does not support likelihood requests");
    }

    // Stable string naming the backend and its configuration; part of the
    // score cache key.
    virtual std::string identity() const = 0;

    // Callers may issue up to this many requests concurrently.
    virtual int max_parallel_requests() const { return 1; }
};

// ---------------------------------------------------------------------------
// Deterministic oracle backend
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t fnv1a(const std::string& data, std::uint64_t hash = 1469598103934665603ULL) {
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Pure function of its arguments: uniform double in [-1, 1).
inline double hash_noise(std::uint64_t seed, const std::string& a, const std::string& b,
                         std::size_t index) {
    std::uint64_t h = fnv1a(b, fnv1a("\x1f", fnv1a(a)));
    h = splitmix64(h ^ seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

}  // namespace detail

// Hidden relevance grades driving the oracle: (query, passage) pairs missing
// from the table default to grade 0.
struct OracleRelevanceTable {
    std::map<std::string, std::map<std::string, int>> grades;
    double sharpness = 10.0;  // lambda >= 0; 0 = uniform, large = one-hot
    int max_grade = 1;
    int binary_threshold = 1;  // grade >= threshold counts as relevant for yes/no

    int grade(const std::string& query_id, const std::string& passage_id) const {
        auto q = grades.find(query_id);
        if (q == grades.end()) return 0;
        auto p = q->second.find(passage_id);
        return p == q->second.end() ? 0 : p->second;
    }
};

inline void validate(const OracleRelevanceTable& table) {
    if (!(table.sharpness >= 0.0))
        throw ContractError("oracle sharpness must be >= 0");
    if (table.max_grade < 0)
        throw ContractError("oracle max grade must be >= 0");
    for (const auto& [qid, by_passage] : table.grades)
        for (const auto& [pid, grade] : by_passage)
            if (grade < 0 || grade > table.max_grade)
                throw ContractError("oracle grade out of range for (" + qid + ", " + pid + ")");
}

// Test scorer whose outputs are a pure function of hidden grades:
//   pointwise  logprob[j] = -lambda * |j - min(grade, n-1)|
//   pairwise   logits (lambda * (g_first - g_second), 0), i.e. p_first =
//              sigmoid(lambda * (g_first - g_second)) after renormalization
//   yes/no     logits (lambda * (2b - 1), 0) with b = [grade >= threshold]
// Optional noise perturbs each logit by a deterministic, seeded amount in
// [-noise_amplitude, +noise_amplitude], emulating an imperfect scorer while
// keeping repeated calls identical.
class OracleBackend : public ScorerBackend {
public:
    explicit OracleBackend(OracleRelevanceTable table, double noise_amplitude = 0.0,
                           std::uint64_t noise_seed = 0, int max_parallel = 8)
        : table_(std::move(table)),
          noise_amplitude_(noise_amplitude),
          noise_seed_(noise_seed),
          max_parallel_(max_parallel) {
        validate(table_);
        if (noise_amplitude_ < 0.0) throw ContractError("noise amplitude must be >= 0");
        if (max_parallel_ < 1) throw ContractError("max_parallel_requests must be >= 1");
        // fold the grade table into the identity so score caches keyed on it
        // never serve one table's scores for another
        std::uint64_t h = detail::fnv1a("oracle-grades");
        for (const auto& [qid, by_passage] : table_.grades) {
            h = detail::fnv1a(qid, h);
            for (const auto& [pid, grade] : by_passage) {
                h = detail::fnv1a(pid, h);
                h = detail::fnv1a(std::to_string(grade), h);
            }
        }
        grades_hash_ = h;
    }

    std::vector<double> score_options(const OptionScoreRequest& request) override {
        const double lambda = table_.sharpness;
        std::vector<double> logprobs(request.options.size(), 0.0);

        if (request.passage_ids.size() == 2) {
            if (request.options.size() != 2)
                throw ContractError("pairwise oracle request needs exactly 2 options");
            int delta = table_.grade(request.query_id, request.passage_ids[0]) -
                        table_.grade(request.query_id, request.passage_ids[1]);
            logprobs[0] = lambda * static_cast<double>(delta);
            logprobs[1] = 0.0;
        } else if (request.passage_ids.size() == 1 && request.options == binary_labels()) {
            int grade = table_.grade(request.query_id, request.passage_ids[0]);
            int b = grade >= table_.binary_threshold ? 1 : -1;
            logprobs[0] = lambda * static_cast<double>(b);
            logprobs[1] = 0.0;
        } else if (request.passage_ids.size() == 1) {
            int grade = table_.grade(request.query_id, request.passage_ids[0]);
            auto peak = static_cast<std::size_t>(
                std::min<int>(grade, static_cast<int>(request.options.size()) - 1));
            for (std::size_t j = 0; j < logprobs.size(); ++j) {
                double dist = static_cast<double>(j > peak ? j - peak : peak - j);
                logprobs[j] = -lambda * dist;
            }
        } else {
            throw ContractError("oracle request needs 1 or 2 passage ids");
        }

        if (noise_amplitude_ > 0.0) {
            std::string pids;
            for (const auto& pid : request.passage_ids) {
                pids += pid;
                pids += '\x1f';
            }
            for (std::size_t j = 0; j < logprobs.size(); ++j)
                logprobs[j] += noise_amplitude_ *
                               detail::hash_noise(noise_seed_, request.query_id, pids, j);
        }
        return logprobs;
    }

    LoglikelihoodResult loglikelihood(const LoglikelihoodRequest& request) override {
        if (request.passage_ids.size() != 1)
            throw ContractError("oracle likelihood request needs exactly 1 passage id");
        int grade = table_.grade(request.query_id, request.passage_ids[0]);
        int tokens = 0;
        std::istringstream words(request.continuation);
        std::string word;
        while (words >> word) ++tokens;
        if (tokens == 0) tokens = 1;
        double mean = -table_.sharpness * static_cast<double>(table_.max_grade - grade);
        return {mean * tokens, tokens};
    }

    std::string identity() const override {
        std::ostringstream id;
        id << "oracle(lambda=" << table_.sharpness << ",noise=" << noise_amplitude_
           << ",seed=" << noise_seed_ << ",grades=" << std::hex << grades_hash_ << ")";
        return id.str();
    }

    int max_parallel_requests() const override { return max_parallel_; }

private:
    OracleRelevanceTable table_;
    double noise_amplitude_;
    std::uint64_t noise_seed_;
    int max_parallel_;
    std::uint64_t grades_hash_ = 0;
};

// ---------------------------------------------------------------------------
// Counting wrapper
// ---------------------------------------------------------------------------

// Instruments another backend with call accounting, split by request kind.
class CountingBackend : public ScorerBackend {
public:
    struct Counts {
        std::size_t pointwise = 0;   // single-passage option requests
        std::size_t pairwise = 0;    // two-passage option requests
        std::size_t likelihood = 0;
    };

    explicit CountingBackend(ScorerBackend& inner) : inner_(inner) {}

    std::vector<double> score_options(const OptionScoreRequest& request) override {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto& counts = per_query_[request.query_id];
            if (request.passage_ids.size() == 2) {
                ++counts.pairwise;
                ++total_.pairwise;
            } else {
                ++counts.pointwise;
                ++total_.pointwise;
            }
        }
        return inner_.score_options(request);
    }

    LoglikelihoodResult loglikelihood(const LoglikelihoodRequest& request) override {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++per_query_[request.query_id].likelihood;
            ++total_.likelihood;
        }
        return inner_.loglikelihood(request);
    }

    std::string identity() const override { return inner_.identity(); }
    int max_parallel_requests() const override { return inner_.max_parallel_requests(); }

    Counts total() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return total_;
    }

    Counts for_query(const std::string& query_id) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = per_query_.find(query_id);
        return it == per_query_.end() ? Counts{} : it->second;
    }

    void reset() {
        std::lock_guard<std::mutex> lock(mutex_);
        total_ = Counts{};
        per_query_.clear();
    }

private:
    ScorerBackend& inner_;
    mutable std::mutex mutex_;
    Counts total_;
    std::map<std::string, Counts> per_query_;
};

// ---------------------------------------------------------------------------
// Scoring operations
// ---------------------------------------------------------------------------

namespace detail {

// 32-hex-char key over the components that determine a score.
inline std::string make_cache_key(const std::string& template_body,
                                  const std::string& backend_identity,
                                  const std::string& query_text,
                                  const std::vector<std::string>& passage_texts,
                                  const std::vector<std::string>& options) {
    std::string blob = template_body;
    blob += '\x1f';
    blob += backend_identity;
    blob += '\x1f';
    blob += query_text;
    for (const auto& t : passage_texts) {
        blob += '\x1f';
        blob += t;
    }
    blob += '\x1e';
    for (const auto& o : options) {
        blob += '\x1f';
        blob += o;
    }
    std::uint64_t h1 = fnv1a(blob);
    std::uint64_t h2 = fnv1a(blob, 0xcbf29ce484222325ULL ^ 0x9e3779b97f4a7c15ULL);
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                  static_cast<unsigned long long>(h1), static_cast<unsigned long long>(h2));
    return buf;
}

}  // namespace detail

// Scores one (query, passage) pair over the scale's option tokens and
// renormalizes into a proper distribution.
inline ScoreDistribution score_pointwise(ScorerBackend& backend, const PromptTemplate& tmpl,
                                         const Query& query, const Passage& passage,
                                         const ScoreScale& scale) {
    validate(scale);
    OptionScoreRequest request;
    request.prompt = render_pointwise_prompt(tmpl, query, passage, scale);
    request.options = scale.tokens;
    request.query_id = query.id;
    request.passage_ids = {passage.id};
    request.cache_key = detail::make_cache_key(tmpl.body, backend.identity(), query.text,
                                               {passage.text}, scale.tokens);
    auto logprobs = backend.score_options(request);
    return normalize_over_options(logprobs, scale);
}

// Probability that `first` is the more relevant of the two passages,
// renormalized over the two presentation labels. Position matters: swapping
// the passages is a different request with an independent answer.
inline double score_pairwise(ScorerBackend& backend, const PromptTemplate& tmpl,
                             const Query& query, const Passage& first,
                             const Passage& second) {
    if (first.id == second.id)
        throw ContractError("pairwise scoring needs two distinct passages, got " + first.id);
    OptionScoreRequest request;
    request.prompt = render_pairwise_prompt(tmpl, query, first, second);
    request.options = pairwise_labels();
    request.query_id = query.id;
    request.passage_ids = {first.id, second.id};
    request.cache_key = detail::make_cache_key(tmpl.body, backend.identity(), query.text,
                                               {first.text, second.text}, request.options);
    auto logprobs = backend.score_options(request);
    if (logprobs.size() != 2)
        throw ProtocolError("pairwise scoring expects 2 log-probabilities");
    double max_lp = std::max(logprobs[0], logprobs[1]);
    if (std::isnan(max_lp) || max_lp == std::numeric_limits<double>::infinity())
        throw ContractError("log-probabilities must not be NaN or +inf");
    if (max_lp == -std::numeric_limits<double>::infinity())
        throw DegenerateInputError("both pairwise labels have -inf log-probability");
    double a = std::exp(logprobs[0] - max_lp);
    double b = std::exp(logprobs[1] - max_lp);
    return a / (a + b);
}

// Renormalized probability of "yes" over {yes, no}.
inline double score_binary(ScorerBackend& backend, const PromptTemplate& tmpl,
                           const Query& query, const Passage& passage) {
    OptionScoreRequest request;
    request.prompt = render_binary_prompt(tmpl, query, passage);
    request.options = binary_labels();
    request.query_id = query.id;
    request.passage_ids = {passage.id};
    request.cache_key = detail::make_cache_key(tmpl.body, backend.identity(), query.text,
                                               {passage.text}, request.options);
    auto logprobs = backend.score_options(request);
    if (logprobs.size() != 2)
        throw ProtocolError("binary scoring expects 2 log-probabilities");
    ScoreScale yn;
    yn.values = {0, 1};
    yn.tokens = binary_labels();
    return normalize_over_options(logprobs, yn).probs[0];
}

// Log-likelihood of generating the query conditioned on the passage. Returns
// the mean per-token value by default; pass length_normalize = false for the
// raw total.
inline double upr_loglikelihood(ScorerBackend& backend, const PromptTemplate& tmpl,
                                const Query& query, const Passage& passage,
                                bool length_normalize = true) {
    if (trim_copy(query.text).empty())
        throw ContractError("query text is empty for query " + query.id);
    LoglikelihoodRequest request;
    request.context = render_upr_context(tmpl, passage);
    request.continuation = query.text;
    request.query_id = query.id;
    request.passage_ids = {passage.id};
    request.cache_key = detail::make_cache_key(tmpl.body, backend.identity(), query.text,
                                               {passage.text}, {"<loglikelihood>"});
    auto result = backend.loglikelihood(request);
    if (result.num_tokens < 1)
        throw ProtocolError("likelihood response reported num_tokens < 1 for query " +
                            query.id);
    if (!std::isfinite(result.total_logprob))
        throw ProtocolError("likelihood response is not finite for query " + query.id);
    return length_normalize ? result.total_logprob / result.num_tokens
                            : result.total_logprob;
}

// Convenience entry for tests mirroring the oracle's pointwise definition.
inline ScoreDistribution oracle_distribution(const OracleRelevanceTable& table,
                                             const ScoreScale& scale,
                                             const std::string& query_id,
                                             const std::string& passage_id) {
    OracleBackend backend(table);
    OptionScoreRequest request;
    request.options = scale.tokens;
    request.query_id = query_id;
    request.passage_ids = {passage_id};
    return normalize_over_options(backend.score_options(request), scale);
}

// ---------------------------------------------------------------------------
// Parallel dispatch
// ---------------------------------------------------------------------------

namespace detail {

// Runs fn(0..n-1) on up to max_parallel threads. Any exception aborts the
// batch: the first one captured is rethrown after all workers finish, so a
// failed batch never yields partial results.
template <typename Fn>
void parallel_for(std::size_t n, int max_parallel, Fn&& fn) {
    if (n == 0) return;
    std::size_t workers = std::min<std::size_t>(n, std::max(1, max_parallel));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (error) return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

}  // namespace llmrank
