#pragma once

// Lexical analysis for the BM25 retriever: ASCII tokenization plus optional
// stopword removal and Porter stemming. Both filters default to off so the
// scoring surface stays directly checkable by hand.

#include <array>
#include <cctype>
#include <string>
#include <unordered_set>
#include <vector>

namespace llmrank {

struct TokenizerOptions {
    bool remove_stopwords = false;
    bool stem = false;
};

// Lucene's English stopword list.
inline const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",    "an",   "and",   "are",  "as",    "at",   "be",   "but",
        "by",   "for",  "if",    "in",   "into",  "is",   "it",   "no",
        "not",  "of",   "on",    "or",   "such",  "that", "the",  "their",
        "then", "there", "these", "they", "this",  "to",   "was",  "will",
        "with"};
    return words;
}

namespace detail {

// Porter stemmer (M. F. Porter, "An algorithm for suffix stripping", 1980).
// Operates on lowercase ASCII words; words shorter than 3 chars pass through.
class PorterStemmer {
public:
    std::string stem(const std::string& word) {
        if (word.size() < 3) return word;
        b_ = word;
        k_ = static_cast<int>(b_.size()) - 1;
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        return b_.substr(0, static_cast<std::size_t>(k_) + 1);
    }

private:
    std::string b_;
    int k_ = 0;   // index of last char
    int j_ = 0;   // index of stem end while matching a suffix; -1 = empty stem

    char at(int i) const { return b_[static_cast<std::size_t>(i)]; }

    bool cons(int i) const {
        switch (at(i)) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !cons(i - 1);
            default:
                return true;
        }
    }

    // Number of VC sequences in [0, j_].
    int m() const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j_) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j_) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j_) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j_; ++i)
            if (!cons(i)) return true;
        return false;
    }

    bool double_cons(int i) const {
        if (i < 1) return false;
        if (at(i) != at(i - 1)) return false;
        return cons(i);
    }

    // cvc(i) holds when i-2..i is consonant-vowel-consonant and the final
    // consonant is not w, x or y; used to restore a trailing e (hop -> hope).
    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        char c = at(i);
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(const char* s) {
        int len = static_cast<int>(std::char_traits<char>::length(s));
        if (len > k_ + 1) return false;
        if (b_.compare(static_cast<std::size_t>(k_ + 1 - len), static_cast<std::size_t>(len), s) != 0)
            return false;
        j_ = k_ - len;
        return true;
    }

    void set_to(const char* s) {
        int len = static_cast<int>(std::char_traits<char>::length(s));
        b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s,
                   static_cast<std::size_t>(len));
        k_ = j_ + len;
    }

    void replace_if_m_positive(const char* s) {
        if (m() > 0) set_to(s);
    }

    void step1ab() {
        if (at(k_) == 's') {
            if (ends("sses")) k_ -= 2;
            else if (ends("ies")) set_to("i");
            else if (at(k_ - 1) != 's') --k_;
        }
        if (ends("eed")) {
            if (m() > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            if (ends("at")) set_to("ate");
            else if (ends("bl")) set_to("ble");
            else if (ends("iz")) set_to("ize");
            else if (double_cons(k_)) {
                char c = at(k_);
                if (c != 'l' && c != 's' && c != 'z') --k_;
            } else if (m() == 1 && cvc(k_)) {
                j_ = k_;
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[static_cast<std::size_t>(k_)] = 'i';
    }

    void step2() {
        if (k_ < 1) return;
        switch (at(k_ - 1)) {
            case 'a':
                if (ends("ational")) { replace_if_m_positive("ate"); break; }
                if (ends("tional")) { replace_if_m_positive("tion"); break; }
                break;
            case 'c':
                if (ends("enci")) { replace_if_m_positive("ence"); break; }
                if (ends("anci")) { replace_if_m_positive("ance"); break; }
                break;
            case 'e':
                if (ends("izer")) { replace_if_m_positive("ize"); break; }
                break;
            case 'l':
                if (ends("bli")) { replace_if_m_positive("ble"); break; }
                if (ends("alli")) { replace_if_m_positive("al"); break; }
                if (ends("entli")) { replace_if_m_positive("ent"); break; }
                if (ends("eli")) { replace_if_m_positive("e"); break; }
                if (ends("ousli")) { replace_if_m_positive("ous"); break; }
                break;
            case 'o':
                if (ends("ization")) { replace_if_m_positive("ize"); break; }
                if (ends("ation")) { replace_if_m_positive("ate"); break; }
                if (ends("ator")) { replace_if_m_positive("ate"); break; }
                break;
            case 's':
                if (ends("alism")) { replace_if_m_positive("al"); break; }
                if (ends("iveness")) { replace_if_m_positive("ive"); break; }
                if (ends("fulness")) { replace_if_m_positive("ful"); break; }
                if (ends("ousness")) { replace_if_m_positive("ous"); break; }
                break;
            case 't':
                if (ends("aliti")) { replace_if_m_positive("al"); break; }
                if (ends("iviti")) { replace_if_m_positive("ive"); break; }
                if (ends("biliti")) { replace_if_m_positive("ble"); break; }
                break;
            default:
                break;
        }
    }

    void step3() {
        switch (at(k_)) {
            case 'e':
                if (ends("icate")) { replace_if_m_positive("ic"); break; }
                if (ends("ative")) { replace_if_m_positive(""); break; }
                if (ends("alize")) { replace_if_m_positive("al"); break; }
                break;
            case 'i':
                if (ends("iciti")) { replace_if_m_positive("ic"); break; }
                break;
            case 'l':
                if (ends("ical")) { replace_if_m_positive("ic"); break; }
                if (ends("ful")) { replace_if_m_positive(""); break; }
                break;
            case 's':
                if (ends("ness")) { replace_if_m_positive(""); break; }
                break;
            default:
                break;
        }
    }

    void step4() {
        if (k_ < 1) return;
        switch (at(k_ - 1)) {
            case 'a': if (ends("al")) break; return;
            case 'c': if (ends("ance") || ends("ence")) break; return;
            case 'e': if (ends("er")) break; return;
            case 'i': if (ends("ic")) break; return;
            case 'l': if (ends("able") || ends("ible")) break; return;
            case 'n':
                if (ends("ant") || ends("ement") || ends("ment") || ends("ent")) break;
                return;
            case 'o':
                if (ends("ion") && j_ >= 0 && (at(j_) == 's' || at(j_) == 't')) break;
                if (ends("ou")) break;
                return;
            case 's': if (ends("ism")) break; return;
            case 't': if (ends("ate") || ends("iti")) break; return;
            case 'u': if (ends("ous")) break; return;
            case 'v': if (ends("ive")) break; return;
            case 'z': if (ends("ize")) break; return;
            default: return;
        }
        if (m() > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (at(k_) == 'e') {
            int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (at(k_) == 'l' && double_cons(k_) && m() > 1) --k_;
    }
};

}  // namespace detail

inline std::string porter_stem(const std::string& word) {
    detail::PorterStemmer stemmer;
    return stemmer.stem(word);
}

// Lowercases and splits on non-alphanumeric bytes. Multibyte UTF-8 sequences
// act as separators, so the tokenizer is ASCII-only by construction.
inline std::vector<std::string> tokenize(const std::string& text,
                                         const TokenizerOptions& options = {}) {
    std::vector<std::string> terms;
    std::string current;
    auto flush = [&] {
        if (current.empty()) return;
        if (options.remove_stopwords && english_stopwords().count(current)) {
            current.clear();
            return;
        }
        terms.push_back(options.stem ? porter_stem(current) : current);
        current.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c))
            current.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    return terms;
}

}  // namespace llmrank
