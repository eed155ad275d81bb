#pragma once

// Score aggregation: expected Likert score over an option distribution, the
// hard argmax variant, and summation of pairwise win probabilities into
// per-candidate tournament scores.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "llmrank/core.hpp"

namespace llmrank {

// k x k matrix of ordered-pair win probabilities. entry(i, j) is the
// probability that candidate i beats candidate j when presented in order
// (i, j); entry(i, j) and entry(j, i) are independent values because the
// presentation order affects the outcome. All k^2 - k ordered pairs must be
// present before the matrix is summed.
class PairwiseMatrix {
public:
    explicit PairwiseMatrix(std::size_t k)
        : k_(k), entries_(k * k, std::nan("")) {
        if (k < 2) throw ContractError("pairwise matrix needs k >= 2");
    }

    std::size_t k() const { return k_; }

    void set(std::size_t i, std::size_t j, double p) {
        check_pair(i, j);
        if (!(p >= 0.0 && p <= 1.0))
            throw ContractError("pairwise probability must be in [0,1]");
        entries_[i * k_ + j] = p;
    }

    double at(std::size_t i, std::size_t j) const {
        check_pair(i, j);
        double p = entries_[i * k_ + j];
        if (std::isnan(p))
            throw ContractError("missing ordered pair (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
        return p;
    }

    bool complete() const {
        for (std::size_t i = 0; i < k_; ++i)
            for (std::size_t j = 0; j < k_; ++j)
                if (i != j && std::isnan(entries_[i * k_ + j])) return false;
        return true;
    }

private:
    void check_pair(std::size_t i, std::size_t j) const {
        if (i >= k_ || j >= k_)
            throw ContractError("pairwise index out of range");
        if (i == j)
            throw ContractError("pairwise matrix has no diagonal entries");
    }

    std::size_t k_;
    std::vector<double> entries_;
};

// Expected option value under the distribution: sum_n value(n) * p(n).
// Always lies between the smallest and largest option value.
inline double soft_score(const ScoreDistribution& dist, const ScoreScale& scale) {
    if (dist.probs.size() != scale.size())
        throw ContractError("distribution length does not match scale");
    double s = 0.0;
    for (std::size_t i = 0; i < scale.size(); ++i)
        s += static_cast<double>(scale.values[i]) * dist.probs[i];
    return s;
}

// The option value with maximal probability; ties break toward the lower
// option value.
inline int hard_score(const ScoreDistribution& dist, const ScoreScale& scale) {
    if (dist.probs.size() != scale.size())
        throw ContractError("distribution length does not match scale");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scale.size(); ++i)
        if (dist.probs[i] > dist.probs[best]) best = i;
    return scale.values[best];
}

// Tournament score per candidate: over every ordered pair candidate i takes
// part in, accumulate the probability that i is the one selected --
// entry(i, j) when presented first and 1 - entry(j, i) when presented second.
// Every ordered pair contributes total mass 1, so the scores always sum to
// k^2 - k and each lies in [0, 2(k-1)].
inline std::vector<double> pairwise_scores(const PairwiseMatrix& matrix) {
    const std::size_t k = matrix.k();
    std::vector<double> s2(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            s2[i] += matrix.at(i, j) + (1.0 - matrix.at(j, i));
        }
    }
    return s2;
}

}  // namespace llmrank
