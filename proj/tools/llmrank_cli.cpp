// Command-line front end: index, retrieve, rerank, eval, and a combined
// experiment runner. Logs go to stderr; machine-readable output (summaries,
// metric reports) goes to stdout. Exit codes: 0 success, 1 I/O or data
// error, 2 argument/config error, 3 backend error.
//
// Every subcommand accepts --config FILE with `key=value` lines ('#' starts
// a comment); keys are the long option names without the leading dashes.
// Command-line flags override config values, which override built-in
// defaults.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "llmrank/llmrank.hpp"

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config file preloading (applied to option structs before CLI11 parses,
// so flags naturally override config values)
// ---------------------------------------------------------------------------

class ConfigValues {
public:
    static ConfigValues preload(int argc, char** argv) {
        ConfigValues values;
        for (int i = 1; i + 1 < argc; ++i) {
            if (std::string(argv[i]) == "--config") {
                values.load(argv[i + 1]);
                break;
            }
        }
        return values;
    }

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw llmrank::DataError("cannot open config file: " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto trimmed = llmrank::trim_copy(line);
            if (trimmed.empty()) continue;
            auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw llmrank::ContractError("config line " + std::to_string(line_no) +
                                             " is not key=value: " + trimmed);
            auto key = llmrank::trim_copy(trimmed.substr(0, eq));
            auto value = llmrank::trim_copy(trimmed.substr(eq + 1));
            values_[key] = value;
        }
    }

    void apply(const char* key, std::string& out) {
        take(key, [&](const std::string& v) { out = v; });
    }
    void apply(const char* key, double& out) {
        take(key, [&](const std::string& v) { out = std::stod(v); });
    }
    template <typename Integer>
    void apply(const char* key, Integer& out) {
        take(key, [&](const std::string& v) { out = static_cast<Integer>(std::stoll(v)); });
    }
    void apply(const char* key, bool& out) {
        take(key, [&](const std::string& v) {
            if (v == "true" || v == "1") out = true;
            else if (v == "false" || v == "0") out = false;
            else throw llmrank::ContractError("config key " + std::string(key) +
                                              " needs true/false, got: " + v);
        });
    }

    void finish() const {
        if (!values_.empty())
            throw llmrank::ContractError("unknown config key: " + values_.begin()->first);
    }

private:
    template <typename Fn>
    void take(const char* key, Fn&& fn) {
        auto it = values_.find(key);
        if (it == values_.end()) return;
        try {
            fn(it->second);
        } catch (const llmrank::Error&) {
            throw;
        } catch (const std::exception&) {
            throw llmrank::ContractError("config key " + std::string(key) +
                                         " has a malformed value: " + it->second);
        }
        values_.erase(it);
    }

    std::map<std::string, std::string> values_;
};

void require_option(const std::string& value, const char* name) {
    if (value.empty())
        throw llmrank::ContractError(std::string("missing required option --") + name);
}

// ---------------------------------------------------------------------------
// rerank options shared by `rerank` and `experiment`
// ---------------------------------------------------------------------------

struct RerankCliOptions {
    std::string method = "pointwise";  // pointwise | pairwise | pipeline
    std::string mode = "soft";         // soft | hard | binary | upr
    std::size_t candidate_depth = 100;
    std::size_t pairwise_depth = 40;
    int scale_min = 1;
    int scale_max = 5;
    std::size_t max_passage_chars = 2000;
    bool upr_total = false;

    std::string backend_url;
    std::string oracle_qrels;
    double oracle_lambda = 10.0;
    double oracle_noise = 0.0;
    std::uint64_t oracle_seed = 0;
    int parallel = 4;
    int retries = 3;
    int backoff_ms = 100;
    std::string cache_path;

    std::string template_pointwise;
    std::string template_pairwise;
    std::string template_binary;
    std::string template_upr;
};

void apply_config(ConfigValues& config, RerankCliOptions& opts) {
    config.apply("method", opts.method);
    config.apply("mode", opts.mode);
    config.apply("candidate-depth", opts.candidate_depth);
    config.apply("pairwise-depth", opts.pairwise_depth);
    config.apply("scale-min", opts.scale_min);
    config.apply("scale-max", opts.scale_max);
    config.apply("max-passage-chars", opts.max_passage_chars);
    config.apply("upr-total", opts.upr_total);
    config.apply("backend-url", opts.backend_url);
    config.apply("oracle-qrels", opts.oracle_qrels);
    config.apply("oracle-lambda", opts.oracle_lambda);
    config.apply("oracle-noise", opts.oracle_noise);
    config.apply("oracle-seed", opts.oracle_seed);
    config.apply("parallel", opts.parallel);
    config.apply("retries", opts.retries);
    config.apply("backoff-ms", opts.backoff_ms);
    config.apply("cache", opts.cache_path);
    config.apply("template-pointwise", opts.template_pointwise);
    config.apply("template-pairwise", opts.template_pairwise);
    config.apply("template-binary", opts.template_binary);
    config.apply("template-upr", opts.template_upr);
}

void add_rerank_options(CLI::App* cmd, RerankCliOptions& opts) {
    cmd->add_option("--method", opts.method, "Reranking method")
        ->check(CLI::IsMember({"pointwise", "pairwise", "pipeline"}))
        ->capture_default_str();
    cmd->add_option("--mode", opts.mode, "Pointwise scoring mode")
        ->check(CLI::IsMember({"soft", "hard", "binary", "upr"}))
        ->capture_default_str();
    cmd->add_option("--candidate-depth", opts.candidate_depth,
                    "Candidates per query taken from the input run")
        ->capture_default_str();
    cmd->add_option("--pairwise-depth", opts.pairwise_depth,
                    "Head size refined by pairwise scoring")
        ->capture_default_str();
    cmd->add_option("--scale-min", opts.scale_min, "Lowest option value")
        ->capture_default_str();
    cmd->add_option("--scale-max", opts.scale_max, "Highest option value")
        ->capture_default_str();
    cmd->add_option("--max-passage-chars", opts.max_passage_chars,
                    "Passage budget per prompt, whitespace-truncated")
        ->capture_default_str();
    cmd->add_flag("--upr-total", opts.upr_total,
                  "Rank upr mode by total instead of mean log-likelihood");

    cmd->add_option("--backend-url", opts.backend_url,
                    "Scoring server base URL (e.g. http://localhost:8080)")
        ->envname("LLMRANK_BACKEND_URL");
    cmd->add_option("--oracle-qrels", opts.oracle_qrels,
                    "Qrels file driving the deterministic oracle backend");
    cmd->add_option("--oracle-lambda", opts.oracle_lambda, "Oracle sharpness")
        ->capture_default_str();
    cmd->add_option("--oracle-noise", opts.oracle_noise, "Oracle logit noise amplitude")
        ->capture_default_str();
    cmd->add_option("--oracle-seed", opts.oracle_seed, "Oracle noise seed")
        ->capture_default_str();
    cmd->add_option("--parallel", opts.parallel, "Concurrent scoring requests")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--retries", opts.retries, "Transport retries per request")
        ->capture_default_str();
    cmd->add_option("--backoff-ms", opts.backoff_ms, "Initial retry backoff")
        ->capture_default_str();
    cmd->add_option("--cache", opts.cache_path, "On-disk score cache file");

    cmd->add_option("--template-pointwise", opts.template_pointwise,
                    "Pointwise prompt template file");
    cmd->add_option("--template-pairwise", opts.template_pairwise,
                    "Pairwise prompt template file");
    cmd->add_option("--template-binary", opts.template_binary,
                    "Yes/no prompt template file");
    cmd->add_option("--template-upr", opts.template_upr, "UPR context template file");
}

json rerank_options_json(const RerankCliOptions& o) {
    return json{{"method", o.method},
                {"mode", o.mode},
                {"candidate_depth", o.candidate_depth},
                {"pairwise_depth", o.pairwise_depth},
                {"scale", {o.scale_min, o.scale_max}},
                {"max_passage_chars", o.max_passage_chars},
                {"upr_length_normalize", !o.upr_total},
                {"backend_url", o.backend_url},
                {"oracle_qrels", o.oracle_qrels},
                {"oracle_lambda", o.oracle_lambda},
                {"oracle_noise", o.oracle_noise},
                {"oracle_seed", o.oracle_seed},
                {"parallel", o.parallel},
                {"cache", o.cache_path}};
}

llmrank::RerankConfig build_rerank_config(const RerankCliOptions& opts) {
    llmrank::RerankConfig config;
    if (opts.method == "pointwise") config.method = llmrank::RerankMethod::pointwise;
    else if (opts.method == "pairwise") config.method = llmrank::RerankMethod::pairwise;
    else config.method = llmrank::RerankMethod::pointwise_then_pairwise;

    if (opts.mode == "soft") config.pointwise_mode = llmrank::PointwiseMode::soft;
    else if (opts.mode == "hard") config.pointwise_mode = llmrank::PointwiseMode::hard;
    else if (opts.mode == "binary") config.pointwise_mode = llmrank::PointwiseMode::binary;
    else config.pointwise_mode = llmrank::PointwiseMode::upr;

    config.candidate_depth = opts.candidate_depth;
    config.pairwise_depth = opts.pairwise_depth;
    config.scale = llmrank::ScoreScale::integer_range(opts.scale_min, opts.scale_max);
    config.upr_length_normalize = !opts.upr_total;

    using llmrank::TemplateShape;
    if (!opts.template_pointwise.empty())
        config.pointwise_template = llmrank::load_template(
            opts.template_pointwise, TemplateShape::pointwise, opts.max_passage_chars);
    if (!opts.template_pairwise.empty())
        config.pairwise_template = llmrank::load_template(
            opts.template_pairwise, TemplateShape::pairwise, opts.max_passage_chars);
    if (!opts.template_binary.empty())
        config.binary_template = llmrank::load_template(
            opts.template_binary, TemplateShape::pointwise, opts.max_passage_chars);
    if (!opts.template_upr.empty())
        config.upr_template = llmrank::load_template(opts.template_upr, TemplateShape::upr,
                                                     opts.max_passage_chars);
    config.pointwise_template.max_passage_chars = opts.max_passage_chars;
    config.pairwise_template.max_passage_chars = opts.max_passage_chars;
    config.binary_template.max_passage_chars = opts.max_passage_chars;
    config.upr_template.max_passage_chars = opts.max_passage_chars;

    llmrank::validate(config);
    return config;
}

std::unique_ptr<llmrank::ScorerBackend> build_base_backend(const RerankCliOptions& opts) {
    if (!opts.oracle_qrels.empty()) {
        llmrank::OracleRelevanceTable table;
        table.grades = llmrank::load_qrels(opts.oracle_qrels);
        table.sharpness = opts.oracle_lambda;
        table.max_grade = 0;
        for (const auto& [qid, by_passage] : table.grades)
            for (const auto& [pid, grade] : by_passage)
                table.max_grade = std::max(table.max_grade, grade);
        return std::make_unique<llmrank::OracleBackend>(table, opts.oracle_noise,
                                                        opts.oracle_seed, opts.parallel);
    }
    if (!opts.backend_url.empty()) {
        llmrank::HttpBackendConfig config;
        config.base_url = opts.backend_url;
        config.max_parallel_requests = opts.parallel;
        config.max_retries = opts.retries;
        config.backoff_initial_ms = opts.backoff_ms;
        return std::make_unique<llmrank::HttpBackend>(config);
    }
    throw llmrank::ContractError(
        "no scoring backend configured: pass --backend-url (or set "
        "LLMRANK_BACKEND_URL) or --oracle-qrels");
}

// ---------------------------------------------------------------------------
// command implementations
// ---------------------------------------------------------------------------

struct IndexOptions {
    std::string corpus;
    std::string index;
    bool stem = false;
    bool stopwords = false;
};

int run_index(const IndexOptions& opts, json* summary_out = nullptr) {
    require_option(opts.corpus, "corpus");
    require_option(opts.index, "index");

    llmrank::TokenizerOptions tok;
    tok.stem = opts.stem;
    tok.remove_stopwords = opts.stopwords;

    llmrank::IndexBuilder builder(tok);
    llmrank::load_corpus(opts.corpus,
                         [&](llmrank::Passage&& p) { builder.add(std::move(p)); });
    auto index = builder.build();
    index.save(opts.index);

    json summary{{"num_docs", index.num_docs()},
                 {"avgdl", index.avgdl()},
                 {"vocab_size", index.vocab_size()}};
    if (summary_out)
        *summary_out = summary;
    else
        std::cout << summary.dump() << "\n";
    std::cerr << "[index] wrote " << opts.index << " (" << index.num_docs() << " docs)\n";
    return 0;
}

struct RetrieveOptions {
    std::string index;
    std::string queries;
    std::string run_out;
    std::size_t top_k = 100;
    double k1 = 0.9;
    double b = 0.4;
};

int run_retrieve(const RetrieveOptions& opts) {
    require_option(opts.index, "index");
    require_option(opts.queries, "queries");
    require_option(opts.run_out, "run-out");
    if (opts.top_k == 0) throw llmrank::ContractError("--top-k must be positive");

    auto index = llmrank::InvertedIndex::load(opts.index);
    auto queries = llmrank::load_queries(opts.queries);
    llmrank::Bm25Params params{opts.k1, opts.b};
    llmrank::validate(params);

    std::vector<llmrank::Ranking> run;
    for (const auto& query : queries) {
        auto hits = llmrank::search(index, params, query, opts.top_k);
        if (hits.empty()) {
            std::cerr << "[retrieve] " << query.id << ": no matching documents\n";
            continue;
        }
        llmrank::Ranking ranking;
        ranking.query_id = query.id;
        ranking.method_tag = "bm25";
        for (const auto& hit : hits)
            ranking.items.push_back(
                {hit.passage_id, hit.first_stage_score, hit.first_stage_rank});
        run.push_back(std::move(ranking));
    }
    llmrank::write_run(run, "bm25", opts.run_out);
    std::cerr << "[retrieve] wrote " << opts.run_out << " (" << run.size()
              << " queries)\n";
    return 0;
}

struct RerankIoOptions {
    std::string run_in;
    std::string run_out;
    std::string corpus;
    std::string queries;
};

int run_rerank(const RerankIoOptions& io, const RerankCliOptions& opts) {
    require_option(io.run_in, "run-in");
    require_option(io.run_out, "run-out");
    require_option(io.corpus, "corpus");
    require_option(io.queries, "queries");

    auto config = build_rerank_config(opts);
    auto base = build_base_backend(opts);

    std::optional<llmrank::ScoreCache> cache;
    std::unique_ptr<llmrank::ScorerBackend> caching;
    llmrank::ScorerBackend* backend = base.get();
    if (!opts.cache_path.empty()) {
        cache.emplace(opts.cache_path);
        caching = std::make_unique<llmrank::CachingBackend>(*backend, *cache);
        backend = caching.get();
    }
    llmrank::CountingBackend counting(*backend);

    auto corpus = llmrank::load_corpus_map(io.corpus);
    llmrank::PassageStore store(corpus);
    auto query_list = llmrank::load_queries(io.queries);
    std::map<std::string, llmrank::Query> queries;
    for (auto& q : query_list) queries.emplace(q.id, std::move(q));

    auto run_in = llmrank::read_run(io.run_in);
    std::string tag = "llmrank_" + opts.method;
    if (opts.method != "pairwise") tag += "_" + opts.mode;

    std::vector<llmrank::Ranking> run_out;
    for (const auto& input : run_in) {
        auto qit = queries.find(input.query_id);
        if (qit == queries.end())
            throw llmrank::DataError("query id from run not found in queries file: " +
                                     input.query_id);

        std::vector<llmrank::Candidate> candidates;
        std::size_t depth = std::min(config.candidate_depth, input.items.size());
        candidates.reserve(depth);
        for (std::size_t i = 0; i < depth; ++i)
            candidates.push_back({input.items[i].passage_id, input.items[i].score,
                                  input.items[i].rank});

        auto ranking = llmrank::rerank(counting, config, qit->second, candidates, store);
        auto counts = counting.for_query(input.query_id);
        std::cerr << "[rerank] " << input.query_id << ": " << counts.pointwise
                  << " pointwise + " << counts.pairwise << " pairwise + "
                  << counts.likelihood << " likelihood calls\n";
        run_out.push_back(std::move(ranking));
    }

    llmrank::write_run(run_out, tag, io.run_out);
    std::cerr << "[rerank] wrote " << io.run_out << " (" << run_out.size()
              << " queries)\n";
    return 0;
}

struct EvalOptions {
    std::string run;
    std::string qrels;
    std::size_t k = 10;
    std::string gain = "linear";
};

int run_eval(const EvalOptions& opts, json* out_report = nullptr) {
    require_option(opts.run, "run");
    require_option(opts.qrels, "qrels");

    auto run = llmrank::read_run(opts.run);
    std::vector<std::string> warnings;
    auto qrels = llmrank::load_qrels(opts.qrels, &warnings);
    for (const auto& w : warnings) std::cerr << "[eval] warning: " << w << "\n";

    auto gain = opts.gain == "exponential" ? llmrank::GainFunction::exponential
                                           : llmrank::GainFunction::linear;
    auto report = llmrank::evaluate_run(run, qrels, opts.k, gain);
    llmrank::write_text_report(report, std::cerr);
    auto j = llmrank::report_to_json(report);
    if (out_report)
        *out_report = j;
    else
        std::cout << j.dump() << "\n";
    return 0;
}

struct ExperimentOptions {
    IndexOptions index;
    RetrieveOptions retrieve;
    RerankCliOptions rerank;
    EvalOptions eval;
    std::string workdir;
    std::string qrels;
};

int run_experiment(ExperimentOptions opts) {
    namespace fs = std::filesystem;
    require_option(opts.index.corpus, "corpus");
    require_option(opts.retrieve.queries, "queries");
    require_option(opts.qrels, "qrels");
    require_option(opts.workdir, "workdir");
    fs::create_directories(opts.workdir);

    json index_summary;
    opts.index.index = (fs::path(opts.workdir) / "corpus.idx").string();
    if (!fs::exists(opts.index.index)) {
        run_index(opts.index, &index_summary);
    } else {
        std::cerr << "[experiment] reusing index " << opts.index.index << "\n";
    }

    opts.retrieve.index = opts.index.index;
    opts.retrieve.run_out = (fs::path(opts.workdir) / "run.bm25.txt").string();
    opts.retrieve.top_k = opts.rerank.candidate_depth;
    run_retrieve(opts.retrieve);

    RerankIoOptions io;
    io.run_in = opts.retrieve.run_out;
    io.run_out = (fs::path(opts.workdir) / "run.reranked.txt").string();
    io.corpus = opts.index.corpus;
    io.queries = opts.retrieve.queries;
    run_rerank(io, opts.rerank);

    json first_stage, reranked;
    EvalOptions eval = opts.eval;
    eval.qrels = opts.qrels;
    eval.run = opts.retrieve.run_out;
    run_eval(eval, &first_stage);
    eval.run = io.run_out;
    run_eval(eval, &reranked);

    std::cout << json{{"first_stage", first_stage}, {"reranked", reranked}}.dump() << "\n";
    return 0;
}

int to_exit_code(const std::exception& e) {
    if (dynamic_cast<const llmrank::BackendError*>(&e)) return 3;
    if (dynamic_cast<const llmrank::ProtocolError*>(&e)) return 3;
    if (dynamic_cast<const llmrank::DegenerateInputError*>(&e)) return 3;
    if (dynamic_cast<const llmrank::ContractError*>(&e)) return 2;
    if (dynamic_cast<const llmrank::TemplateError*>(&e)) return 2;
    if (dynamic_cast<const llmrank::UnsupportedError*>(&e)) return 2;
    return 1;  // DataError and anything else I/O-shaped
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised LLM passage reranking toolkit"};
    app.require_subcommand(1);

    IndexOptions index_opts;
    RetrieveOptions retrieve_opts;
    RerankIoOptions rerank_io;
    RerankCliOptions rerank_opts;
    EvalOptions eval_opts;
    ExperimentOptions exp_opts;
    std::string config_path;  // consumed by ConfigValues::preload

    try {
        auto config = ConfigValues::preload(argc, argv);
        std::string subcommand = argc > 1 ? argv[1] : "";
        if (subcommand == "index") {
            config.apply("corpus", index_opts.corpus);
            config.apply("index", index_opts.index);
            config.apply("stem", index_opts.stem);
            config.apply("stopwords", index_opts.stopwords);
        } else if (subcommand == "retrieve") {
            config.apply("index", retrieve_opts.index);
            config.apply("queries", retrieve_opts.queries);
            config.apply("run-out", retrieve_opts.run_out);
            config.apply("top-k", retrieve_opts.top_k);
            config.apply("k1", retrieve_opts.k1);
            config.apply("b", retrieve_opts.b);
        } else if (subcommand == "rerank") {
            config.apply("run-in", rerank_io.run_in);
            config.apply("run-out", rerank_io.run_out);
            config.apply("corpus", rerank_io.corpus);
            config.apply("queries", rerank_io.queries);
            apply_config(config, rerank_opts);
        } else if (subcommand == "eval") {
            config.apply("run", eval_opts.run);
            config.apply("qrels", eval_opts.qrels);
            config.apply("k", eval_opts.k);
            config.apply("gain", eval_opts.gain);
        } else if (subcommand == "experiment") {
            config.apply("corpus", exp_opts.index.corpus);
            config.apply("queries", exp_opts.retrieve.queries);
            config.apply("qrels", exp_opts.qrels);
            config.apply("workdir", exp_opts.workdir);
            config.apply("stem", exp_opts.index.stem);
            config.apply("stopwords", exp_opts.index.stopwords);
            config.apply("k1", exp_opts.retrieve.k1);
            config.apply("b", exp_opts.retrieve.b);
            config.apply("k", exp_opts.eval.k);
            config.apply("gain", exp_opts.eval.gain);
            apply_config(config, exp_opts.rerank);
        }
        config.finish();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return to_exit_code(e);
    }

    auto* index_cmd = app.add_subcommand("index", "Build a BM25 index from a JSONL corpus");
    index_cmd->add_option("--config", config_path, "Config file (key=value lines)");
    index_cmd->add_option("--corpus", index_opts.corpus, "Corpus JSONL file");
    index_cmd->add_option("--index", index_opts.index, "Output index file");
    index_cmd->add_flag("--stem", index_opts.stem, "Apply Porter stemming");
    index_cmd->add_flag("--stopwords", index_opts.stopwords, "Remove English stopwords");

    auto* retrieve_cmd =
        app.add_subcommand("retrieve", "BM25 top-k retrieval into a TREC run file");
    retrieve_cmd->add_option("--config", config_path, "Config file (key=value lines)");
    retrieve_cmd->add_option("--index", retrieve_opts.index, "Index file");
    retrieve_cmd->add_option("--queries", retrieve_opts.queries, "Queries JSONL file");
    retrieve_cmd->add_option("--run-out", retrieve_opts.run_out, "Output run file");
    retrieve_cmd->add_option("--top-k", retrieve_opts.top_k, "Candidates per query")
        ->capture_default_str();
    retrieve_cmd->add_option("--k1", retrieve_opts.k1, "BM25 k1")->capture_default_str();
    retrieve_cmd->add_option("--b", retrieve_opts.b, "BM25 b")->capture_default_str();

    auto* rerank_cmd = app.add_subcommand("rerank", "Rerank a run file with an LLM backend");
    rerank_cmd->add_option("--config", config_path, "Config file (key=value lines)");
    rerank_cmd->add_option("--run-in", rerank_io.run_in, "Input run file");
    rerank_cmd->add_option("--run-out", rerank_io.run_out, "Output run file");
    rerank_cmd->add_option("--corpus", rerank_io.corpus, "Corpus JSONL file");
    rerank_cmd->add_option("--queries", rerank_io.queries, "Queries JSONL file");
    add_rerank_options(rerank_cmd, rerank_opts);

    auto* eval_cmd = app.add_subcommand("eval", "NDCG@k evaluation of a run against qrels");
    eval_cmd->add_option("--config", config_path, "Config file (key=value lines)");
    eval_cmd->add_option("--run", eval_opts.run, "Run file");
    eval_cmd->add_option("--qrels", eval_opts.qrels, "Qrels file");
    eval_cmd->add_option("--k", eval_opts.k, "Cutoff")->capture_default_str();
    eval_cmd->add_option("--gain", eval_opts.gain, "Gain function")
        ->check(CLI::IsMember({"linear", "exponential"}))
        ->capture_default_str();

    auto* exp_cmd = app.add_subcommand(
        "experiment", "index -> retrieve -> rerank -> eval in one shot");
    exp_cmd->add_option("--config", config_path, "Config file (key=value lines)");
    exp_cmd->add_option("--corpus", exp_opts.index.corpus, "Corpus JSONL file");
    exp_cmd->add_option("--queries", exp_opts.retrieve.queries, "Queries JSONL file");
    exp_cmd->add_option("--qrels", exp_opts.qrels, "Qrels file for evaluation");
    exp_cmd->add_option("--workdir", exp_opts.workdir, "Directory for index and run files");
    exp_cmd->add_flag("--stem", exp_opts.index.stem, "Apply Porter stemming");
    exp_cmd->add_flag("--stopwords", exp_opts.index.stopwords, "Remove English stopwords");
    exp_cmd->add_option("--k1", exp_opts.retrieve.k1, "BM25 k1")->capture_default_str();
    exp_cmd->add_option("--b", exp_opts.retrieve.b, "BM25 b")->capture_default_str();
    exp_cmd->add_option("--k", exp_opts.eval.k, "NDCG cutoff")->capture_default_str();
    exp_cmd->add_option("--gain", exp_opts.eval.gain, "Gain function")
        ->check(CLI::IsMember({"linear", "exponential"}))
        ->capture_default_str();
    add_rerank_options(exp_cmd, exp_opts.rerank);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (index_cmd->parsed()) {
            std::cerr << "[config] "
                      << json{{"command", "index"},
                              {"corpus", index_opts.corpus},
                              {"index", index_opts.index},
                              {"stem", index_opts.stem},
                              {"stopwords", index_opts.stopwords}}
                             .dump()
                      << "\n";
            return run_index(index_opts);
        }
        if (retrieve_cmd->parsed()) {
            std::cerr << "[config] "
                      << json{{"command", "retrieve"},
                              {"index", retrieve_opts.index},
                              {"queries", retrieve_opts.queries},
                              {"run_out", retrieve_opts.run_out},
                              {"top_k", retrieve_opts.top_k},
                              {"k1", retrieve_opts.k1},
                              {"b", retrieve_opts.b}}
                             .dump()
                      << "\n";
            return run_retrieve(retrieve_opts);
        }
        if (rerank_cmd->parsed()) {
            auto config = rerank_options_json(rerank_opts);
            config["command"] = "rerank";
            config["run_in"] = rerank_io.run_in;
            config["run_out"] = rerank_io.run_out;
            std::cerr << "[config] " << config.dump() << "\n";
            return run_rerank(rerank_io, rerank_opts);
        }
        if (eval_cmd->parsed()) {
            std::cerr << "[config] "
                      << json{{"command", "eval"},
                              {"run", eval_opts.run},
                              {"qrels", eval_opts.qrels},
                              {"k", eval_opts.k},
                              {"gain", eval_opts.gain}}
                             .dump()
                      << "\n";
            return run_eval(eval_opts);
        }
        if (exp_cmd->parsed()) {
            auto config = rerank_options_json(exp_opts.rerank);
            config["command"] = "experiment";
            config["workdir"] = exp_opts.workdir;
            std::cerr << "[config] " << config.dump() << "\n";
            return run_experiment(exp_opts);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return to_exit_code(e);
    }
    return 2;
}
