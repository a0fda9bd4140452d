#include "cce/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cce/errors.hpp"

namespace cce {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> values) {
    double best = kNegInf;
    for (double v : values) best = std::max(best, v);
    if (best == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - best);
    return best + std::log(acc);
}

void check_shapes(const Mat& emissions, const CrfParams& crf) {
    if (crf.transitions.rows != crf.num_tags + 2 ||
        crf.transitions.cols != crf.num_tags + 2)
        throw ValidationError("transition matrix must be (K+2)x(K+2)");
    if (emissions.cols != crf.num_tags)
        throw ValidationError("emission width does not match tag count");
    if (emissions.rows == 0)
        throw ValidationError("emission matrix must cover at least one position");
}

} // namespace

TransitionMask iob2_mask(const TagSet& tagset) {
    const std::size_t k = tagset.size();
    TransitionMask mask;
    mask.num_tags = k;
    mask.allowed.assign(k * k, 1);
    mask.start_allowed.assign(k, 1);
    for (std::size_t to = 0; to < k; ++to) {
        const int tag = static_cast<int>(to);
        if (!tagset.is_inside(tag)) continue;
        const int cls = tagset.class_of(tag);
        mask.start_allowed[to] = 0;
        for (std::size_t from = 0; from < k; ++from) {
            const int f = static_cast<int>(from);
            const bool ok = f == tagset.begin_tag(cls) || f == tagset.inside_tag(cls);
            mask.allowed[from * k + to] = ok ? 1 : 0;
        }
    }
    return mask;
}

double score_sequence(const Mat& emissions, const CrfParams& crf,
                      std::span<const int> tags) {
    check_shapes(emissions, crf);
    if (tags.size() != emissions.rows)
        throw ValidationError("tag sequence length does not match emissions");
    for (int tag : tags)
        if (tag < 0 || tag >= static_cast<int>(crf.num_tags))
            throw ValidationError("tag index out of range");

    const auto& a = crf.transitions;
    double score = a(crf.start(), static_cast<std::size_t>(tags[0])) +
                   emissions(0, static_cast<std::size_t>(tags[0]));
    for (std::size_t t = 1; t < tags.size(); ++t)
        score += a(static_cast<std::size_t>(tags[t - 1]),
                   static_cast<std::size_t>(tags[t])) +
                 emissions(t, static_cast<std::size_t>(tags[t]));
    score += a(static_cast<std::size_t>(tags.back()), crf.stop());
    return score;
}

namespace {

// Forward recursion in log space: alpha(t, k) = log sum of exp-scores of all
// prefixes ending in tag k at position t.
Mat forward_alpha(const Mat& emissions, const CrfParams& crf) {
    const std::size_t t_count = emissions.rows;
    const std::size_t k = crf.num_tags;
    const auto& a = crf.transitions;

    Mat alpha(t_count, k);
    for (std::size_t tag = 0; tag < k; ++tag)
        alpha(0, tag) = a(crf.start(), tag) + emissions(0, tag);

    Vec scores(k);
    for (std::size_t t = 1; t < t_count; ++t) {
        for (std::size_t tag = 0; tag < k; ++tag) {
            for (std::size_t prev = 0; prev < k; ++prev)
                scores[prev] = alpha(t - 1, prev) + a(prev, tag);
            alpha(t, tag) = log_sum_exp(scores) + emissions(t, tag);
        }
    }
    return alpha;
}

// Backward recursion: beta(t, k) = log sum of exp-scores of all suffixes
// (transitions and emissions after position t, plus the STOP transition)
// given tag k at position t.
Mat backward_beta(const Mat& emissions, const CrfParams& crf) {
    const std::size_t t_count = emissions.rows;
    const std::size_t k = crf.num_tags;
    const auto& a = crf.transitions;

    Mat beta(t_count, k);
    for (std::size_t tag = 0; tag < k; ++tag)
        beta(t_count - 1, tag) = a(tag, crf.stop());

    Vec scores(k);
    for (std::size_t n = 1; n < t_count; ++n) {
        const std::size_t t = t_count - 1 - n;
        for (std::size_t tag = 0; tag < k; ++tag) {
            for (std::size_t next = 0; next < k; ++next)
                scores[next] = a(tag, next) + emissions(t + 1, next) + beta(t + 1, next);
            beta(t, tag) = log_sum_exp(scores);
        }
    }
    return beta;
}

double partition_from_alpha(const Mat& alpha, const CrfParams& crf) {
    const std::size_t k = crf.num_tags;
    Vec finals(k);
    for (std::size_t tag = 0; tag < k; ++tag)
        finals[tag] = alpha(alpha.rows - 1, tag) + crf.transitions(tag, crf.stop());
    return log_sum_exp(finals);
}

} // namespace

double log_partition(const Mat& emissions, const CrfParams& crf) {
    check_shapes(emissions, crf);
    return partition_from_alpha(forward_alpha(emissions, crf), crf);
}

Mat crf_marginals(const Mat& emissions, const CrfParams& crf) {
    check_shapes(emissions, crf);
    const Mat alpha = forward_alpha(emissions, crf);
    const Mat beta = backward_beta(emissions, crf);
    const double log_z = partition_from_alpha(alpha, crf);

    Mat marginals(emissions.rows, crf.num_tags);
    for (std::size_t t = 0; t < emissions.rows; ++t)
        for (std::size_t tag = 0; tag < crf.num_tags; ++tag)
            marginals(t, tag) = std::exp(alpha(t, tag) + beta(t, tag) - log_z);
    return marginals;
}

CrfGradients crf_nll_and_grad(const Mat& emissions, const CrfParams& crf,
                              std::span<const int> gold) {
    check_shapes(emissions, crf);
    const std::size_t t_count = emissions.rows;
    const std::size_t k = crf.num_tags;
    const auto& a = crf.transitions;

    const double gold_score = score_sequence(emissions, crf, gold);
    const Mat alpha = forward_alpha(emissions, crf);
    const Mat beta = backward_beta(emissions, crf);
    const double log_z = partition_from_alpha(alpha, crf);

    CrfGradients out;
    out.loss = log_z - gold_score;
    out.d_emissions = Mat(t_count, k);
    out.d_transitions = Mat(k + 2, k + 2);

    // Unary marginals: expected tag occupancy minus the observed one.
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t tag = 0; tag < k; ++tag) {
            const double marginal = std::exp(alpha(t, tag) + beta(t, tag) - log_z);
            out.d_emissions(t, tag) =
                marginal - (gold[t] == static_cast<int>(tag) ? 1.0 : 0.0);
        }
    }

    // START transitions share the position-0 marginals.
    for (std::size_t tag = 0; tag < k; ++tag) {
        const double marginal = std::exp(alpha(0, tag) + beta(0, tag) - log_z);
        out.d_transitions(crf.start(), tag) =
            marginal - (gold[0] == static_cast<int>(tag) ? 1.0 : 0.0);
    }
    // STOP transitions share the final-position marginals.
    for (std::size_t tag = 0; tag < k; ++tag) {
        const double marginal =
            std::exp(alpha(t_count - 1, tag) + beta(t_count - 1, tag) - log_z);
        out.d_transitions(tag, crf.stop()) =
            marginal -
            (gold[t_count - 1] == static_cast<int>(tag) ? 1.0 : 0.0);
    }
    // Pairwise marginals for interior transitions.
    for (std::size_t t = 0; t + 1 < t_count; ++t) {
        for (std::size_t from = 0; from < k; ++from) {
            for (std::size_t to = 0; to < k; ++to) {
                const double pair = std::exp(alpha(t, from) + a(from, to) +
                                             emissions(t + 1, to) +
                                             beta(t + 1, to) - log_z);
                out.d_transitions(from, to) += pair;
            }
        }
        out.d_transitions(static_cast<std::size_t>(gold[t]),
                          static_cast<std::size_t>(gold[t + 1])) -= 1.0;
    }
    return out;
}

DecodedPath viterbi(const Mat& emissions, const CrfParams& crf,
                    const TransitionMask* mask) {
    check_shapes(emissions, crf);
    if (mask && mask->num_tags != crf.num_tags)
        throw ValidationError("mask tag count does not match CRF");
    const std::size_t t_count = emissions.rows;
    const std::size_t k = crf.num_tags;
    const auto& a = crf.transitions;

    Mat delta(t_count, k, kNegInf);
    std::vector<std::vector<std::size_t>> backptr(t_count,
                                                  std::vector<std::size_t>(k, 0));

    for (std::size_t tag = 0; tag < k; ++tag) {
        if (mask && !mask->start(tag)) continue;
        delta(0, tag) = a(crf.start(), tag) + emissions(0, tag);
    }
    for (std::size_t t = 1; t < t_count; ++t) {
        for (std::size_t tag = 0; tag < k; ++tag) {
            double best = kNegInf;
            std::size_t best_prev = 0;
            for (std::size_t prev = 0; prev < k; ++prev) {
                if (mask && !mask->transition(prev, tag)) continue;
                if (delta(t - 1, prev) == kNegInf) continue;
                const double cand = delta(t - 1, prev) + a(prev, tag);
                if (cand > best) { // strict: earlier (lower) index wins ties
                    best = cand;
                    best_prev = prev;
                }
            }
            if (best != kNegInf) {
                delta(t, tag) = best + emissions(t, tag);
                backptr[t][tag] = best_prev;
            }
        }
    }

    double best_final = kNegInf;
    std::size_t best_tag = 0;
    for (std::size_t tag = 0; tag < k; ++tag) {
        if (delta(t_count - 1, tag) == kNegInf) continue;
        const double cand = delta(t_count - 1, tag) + a(tag, crf.stop());
        if (cand > best_final) {
            best_final = cand;
            best_tag = tag;
        }
    }
    if (best_final == kNegInf)
        throw ValidationError("transition mask eliminates every path");

    DecodedPath path;
    path.tags.resize(t_count);
    path.tags[t_count - 1] = static_cast<int>(best_tag);
    for (std::size_t n = 1; n < t_count; ++n) {
        const std::size_t t = t_count - 1 - n;
        best_tag = backptr[t + 1][best_tag];
        path.tags[t] = static_cast<int>(best_tag);
    }
    path.score = score_sequence(emissions, crf, path.tags);
    return path;
}

} // namespace cce
