#ifndef CCE_CRF_HPP
#define CCE_CRF_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cce/corpus.hpp"
#include "cce/tensor.hpp"

namespace cce {

// Linear-chain CRF transition scores. One (K+2)x(K+2) matrix carries
// everything: rows/columns 0..K-1 are tags, row K is the virtual START state
// (no incoming transitions used) and column K+1 the virtual STOP state (no
// outgoing).
struct CrfParams {
    Mat transitions;
    std::size_t num_tags = 0;

    static CrfParams zeros(std::size_t k) {
        return {Mat(k + 2, k + 2), k};
    }
    std::size_t start() const { return num_tags; }
    std::size_t stop() const { return num_tags + 1; }
};

// Transition validity used by constrained decoding: a K x K allowed matrix
// plus per-tag validity of the first position (START may not enter I-tags).
struct TransitionMask {
    std::size_t num_tags = 0;
    std::vector<std::uint8_t> allowed;       // K*K, indexed from * K + to
    std::vector<std::uint8_t> start_allowed; // K

    bool transition(std::size_t from, std::size_t to) const {
        return allowed[from * num_tags + to] != 0;
    }
    bool start(std::size_t to) const { return start_allowed[to] != 0; }
};

// IOB2 validity: transitions into I-c are allowed only from B-c or I-c.
TransitionMask iob2_mask(const TagSet& tagset);

// A[START, t1] + sum_t emissions[t, tag_t] + sum_t A[tag_t, tag_{t+1}]
// + A[tag_T, STOP].
double score_sequence(const Mat& emissions, const CrfParams& crf,
                      std::span<const int> tags);

// log sum over all K^T paths of exp(score_sequence), computed in log space.
double log_partition(const Mat& emissions, const CrfParams& crf);

// Per-position tag marginals P(tag_t = k), via forward-backward. Each row
// sums to 1.
Mat crf_marginals(const Mat& emissions, const CrfParams& crf);

struct CrfGradients {
    double loss = 0.0;  // log_partition - score_sequence(gold), always >= 0
    Mat d_emissions;    // T x K: marginal - 1{gold}
    Mat d_transitions;  // (K+2) x (K+2): expected - observed transition counts
};

CrfGradients crf_nll_and_grad(const Mat& emissions, const CrfParams& crf,
                              std::span<const int> gold);

struct DecodedPath {
    std::vector<int> tags;
    double score = 0.0;
};

// Maximum-score path. Ties are broken by preferring the lower tag index at
// every backtrack decision. A mask turns disallowed transitions into -inf
// scores; a mask that eliminates every path is an error.
DecodedPath viterbi(const Mat& emissions, const CrfParams& crf,
                    const TransitionMask* mask = nullptr);

} // namespace cce

#endif
