#pragma once

// First-stage lexical retriever: inverted index construction, BM25 scoring
// and top-k search. Scoring follows the Lucene/Anserini lineage:
//
//   score(q, d) = sum over distinct terms t in q that occur in d of
//                 idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl))
//   idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//
// with k1 = 0.9, b = 0.4 by default. The +1 inside the log keeps idf > 0,
// so a document scores > 0 exactly when it shares a term with the query.
//
// Index file format (little-endian, version 1):
//   magic "LLMRIDX\0" | u32 version | u32 tokenizer flags | u64 N | f64 avgdl
//   N x { u32 id_len, id bytes, u32 doc_length }
//   u64 vocab_size
//   vocab_size x { u32 term_len, term bytes, u64 df, df x { u32 doc, u32 tf } }
// Terms are written in lexicographic order and postings in document order,
// so identical inputs produce byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "llmrank/core.hpp"
#include "llmrank/tokenize.hpp"

namespace llmrank {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

inline void validate(const Bm25Params& params) {
    if (!(params.k1 >= 0.0)) throw ContractError("bm25 k1 must be >= 0");
    if (!(params.b >= 0.0 && params.b <= 1.0)) throw ContractError("bm25 b must be in [0,1]");
}

struct Posting {
    std::uint32_t doc = 0;  // ordinal into doc_ids
    std::uint32_t tf = 0;
};

class InvertedIndex {
public:
    friend class IndexBuilder;

    std::size_t num_docs() const { return doc_ids_.size(); }
    double avgdl() const { return avgdl_; }
    std::size_t vocab_size() const { return postings_.size(); }
    const TokenizerOptions& tokenizer_options() const { return tokenizer_; }
    const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_[ordinal]; }
    std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_lengths_[ordinal]; }

    std::size_t document_frequency(const std::string& term) const {
        auto it = postings_.find(term);
        return it == postings_.end() ? 0 : it->second.size();
    }

    const std::vector<Posting>* postings(const std::string& term) const {
        auto it = postings_.find(term);
        return it == postings_.end() ? nullptr : &it->second;
    }

    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

private:
    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<std::string> doc_ids_;
    double avgdl_ = 0.0;
    TokenizerOptions tokenizer_;
};

// Single-writer builder; the finished index is immutable and safe to search
// from any number of threads.
class IndexBuilder {
public:
    explicit IndexBuilder(TokenizerOptions options = {}) {
        index_.tokenizer_ = options;
    }

    // Title and text are concatenated with a space before tokenization.
    void add(const Passage& passage) {
        if (passage.id.empty())
            throw DataError("passage with empty id");
        if (!seen_ids_.insert(passage.id).second)
            throw DataError("duplicate passage id: " + passage.id);

        std::string body = passage.title.empty() ? passage.text
                                                 : passage.title + " " + passage.text;
        auto terms = tokenize(body, index_.tokenizer_);

        auto ordinal = static_cast<std::uint32_t>(index_.doc_ids_.size());
        index_.doc_ids_.push_back(passage.id);
        index_.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));

        std::unordered_map<std::string, std::uint32_t> tf;
        for (const auto& term : terms) ++tf[term];
        for (const auto& [term, count] : tf)
            index_.postings_[term].push_back({ordinal, count});
    }

    InvertedIndex build() {
        double total = 0.0;
        for (auto len : index_.doc_lengths_) total += len;
        index_.avgdl_ = index_.doc_ids_.empty() ? 0.0 : total / index_.doc_ids_.size();
        // postings arrive in ingestion order, which is document order already
        return std::move(index_);
    }

private:
    InvertedIndex index_;
    std::unordered_set<std::string> seen_ids_;
};

template <typename PassageRange>
InvertedIndex build_index(const PassageRange& corpus, TokenizerOptions options = {}) {
    IndexBuilder builder(options);
    for (const auto& passage : corpus) builder.add(passage);
    return builder.build();
}

inline double bm25_idf(std::size_t num_docs, std::size_t df) {
    double n = static_cast<double>(num_docs);
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

inline double bm25_term_score(const Bm25Params& params, double idf, double tf,
                              double doc_len, double avgdl) {
    double norm = params.k1 * (1.0 - params.b + params.b * doc_len / avgdl);
    return idf * tf * (params.k1 + 1.0) / (tf + norm);
}

// Top-k BM25 search. Results are sorted by score descending, ties broken by
// passage id ascending; only documents sharing at least one query term (and
// thus scoring > 0) are returned. Duplicate query terms count once.
inline std::vector<Candidate> search(const InvertedIndex& index, const Bm25Params& params,
                                     const Query& query, std::size_t top_k) {
    if (top_k == 0) throw ContractError("search top_k must be positive");
    validate(params);
    if (index.num_docs() == 0) return {};

    auto terms = tokenize(query.text, index.tokenizer_options());
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    std::unordered_map<std::uint32_t, double> scores;
    for (const auto& term : terms) {
        const auto* postings = index.postings(term);
        if (!postings) continue;
        double idf = bm25_idf(index.num_docs(), postings->size());
        for (const auto& posting : *postings) {
            scores[posting.doc] += bm25_term_score(params, idf, posting.tf,
                                                   index.doc_length(posting.doc),
                                                   index.avgdl());
        }
    }

    std::vector<std::pair<std::uint32_t, double>> hits(scores.begin(), scores.end());
    std::sort(hits.begin(), hits.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return index.doc_id(a.first) < index.doc_id(b.first);
    });
    if (hits.size() > top_k) hits.resize(top_k);

    std::vector<Candidate> results;
    results.reserve(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i)
        results.push_back({index.doc_id(hits[i].first), hits[i].second,
                           static_cast<int>(i) + 1});
    return results;
}

// --- binary persistence ------------------------------------------------

namespace detail {

constexpr char kIndexMagic[8] = {'L', 'L', 'M', 'R', 'I', 'D', 'X', '\0'};
constexpr std::uint32_t kIndexVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    std::reverse(bytes, bytes + sizeof(T));
#endif
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& path) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) throw DataError("truncated index file: " + path);
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    std::reverse(bytes, bytes + sizeof(T));
#endif
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const std::string& path) {
    auto len = read_le<std::uint32_t>(in, path);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw DataError("truncated index file: " + path);
    return s;
}

}  // namespace detail

inline void InvertedIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open index file for writing: " + path);

    out.write(detail::kIndexMagic, sizeof(detail::kIndexMagic));
    detail::write_le<std::uint32_t>(out, detail::kIndexVersion);
    std::uint32_t flags = (tokenizer_.stem ? 1u : 0u) |
                          (tokenizer_.remove_stopwords ? 2u : 0u);
    detail::write_le<std::uint32_t>(out, flags);
    detail::write_le<std::uint64_t>(out, doc_ids_.size());
    detail::write_le<double>(out, avgdl_);
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        detail::write_string(out, doc_ids_[i]);
        detail::write_le<std::uint32_t>(out, doc_lengths_[i]);
    }
    detail::write_le<std::uint64_t>(out, postings_.size());
    for (const auto& [term, postings] : postings_) {
        detail::write_string(out, term);
        detail::write_le<std::uint64_t>(out, postings.size());
        for (const auto& posting : postings) {
            detail::write_le<std::uint32_t>(out, posting.doc);
            detail::write_le<std::uint32_t>(out, posting.tf);
        }
    }
    if (!out) throw DataError("failed writing index file: " + path);
}

inline InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path);

    char magic[sizeof(detail::kIndexMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kIndexMagic, sizeof(magic)) != 0)
        throw DataError("not an index file: " + path);
    auto version = detail::read_le<std::uint32_t>(in, path);
    if (version != detail::kIndexVersion)
        throw DataError("unsupported index version " + std::to_string(version) + ": " + path);

    InvertedIndex index;
    auto flags = detail::read_le<std::uint32_t>(in, path);
    index.tokenizer_.stem = (flags & 1u) != 0;
    index.tokenizer_.remove_stopwords = (flags & 2u) != 0;
    auto num_docs = detail::read_le<std::uint64_t>(in, path);
    index.avgdl_ = detail::read_le<double>(in, path);
    index.doc_ids_.reserve(num_docs);
    index.doc_lengths_.reserve(num_docs);
    for (std::uint64_t i = 0; i < num_docs; ++i) {
        index.doc_ids_.push_back(detail::read_string(in, path));
        index.doc_lengths_.push_back(detail::read_le<std::uint32_t>(in, path));
    }
    auto vocab = detail::read_le<std::uint64_t>(in, path);
    for (std::uint64_t t = 0; t < vocab; ++t) {
        auto term = detail::read_string(in, path);
        auto df = detail::read_le<std::uint64_t>(in, path);
        std::vector<Posting> postings;
        postings.reserve(df);
        for (std::uint64_t p = 0; p < df; ++p) {
            auto doc = detail::read_le<std::uint32_t>(in, path);
            auto tf = detail::read_le<std::uint32_t>(in, path);
            if (doc >= num_docs)
                throw DataError("corrupt index file (posting out of range): " + path);
            postings.push_back({doc, tf});
        }
        index.postings_.emplace(std::move(term), std::move(postings));
    }
    return index;
}

}  // namespace llmrank
