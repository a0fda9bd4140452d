// Shared test fixtures and independent oracles. Everything here recomputes
// expected values with its own loops; nothing routes through the library code
// paths under test.
#ifndef CCE_TESTS_HELPERS_HPP
#define CCE_TESTS_HELPERS_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cce/corpus.hpp"
#include "cce/crf.hpp"
#include "cce/rng.hpp"
#include "cce/tensor.hpp"
#include "cce/training.hpp"

namespace cce::testing {

// The worked example sentence: two-token test span, two-token treatment span.
inline const char* kFixtureText =
    "His\tB-test\n"
    "HCT\tI-test\n"
    "had\tO\n"
    "dropped\tO\n"
    "from\tO\n"
    "36.7\tO\n"
    "despite\tO\n"
    "2U\tB-treatment\n"
    "PRBC\tI-treatment\n"
    "and\tO\n"
    "3U-FFP\tO\n";

inline std::vector<std::string> fixture_tokens() {
    return {"His", "HCT", "had",  "dropped", "from", "36.7",
            "despite", "2U", "PRBC", "and", "3U-FFP"};
}

inline std::vector<std::string> fixture_labels() {
    return {"B-test", "I-test", "O", "O", "O", "O",
            "O", "B-treatment", "I-treatment", "O", "O"};
}

inline LabeledCorpus fixture_corpus() {
    LabeledCorpus corpus;
    corpus.tagset = TagSet::clinical();
    Sentence sentence;
    sentence.tokens = fixture_tokens();
    for (const auto& label : fixture_labels())
        sentence.tags.push_back(corpus.tagset.tag_index(label));
    corpus.sentences.push_back(std::move(sentence));
    return corpus;
}

// ---------------------------------------------------------------------------
// Exhaustive CRF oracle: walks every one of the K^T paths with its own
// scoring loop, independent of the forward/Viterbi implementations.
// ---------------------------------------------------------------------------

struct EnumResult {
    double log_z = 0.0;
    std::vector<int> best_path;
    double best_score = 0.0;
    Mat marginals; // T x K
};

// Score one path by a fresh left-to-right walk over the raw matrices.
inline double walk_path_score(const Mat& emissions, const Mat& a, std::size_t k,
                              const std::vector<int>& path) {
    const std::size_t start = k;
    const std::size_t stop = k + 1;
    double score = a(start, static_cast<std::size_t>(path[0])) +
                   emissions(0, static_cast<std::size_t>(path[0]));
    for (std::size_t t = 1; t < path.size(); ++t)
        score += a(static_cast<std::size_t>(path[t - 1]),
                   static_cast<std::size_t>(path[t])) +
                 emissions(t, static_cast<std::size_t>(path[t]));
    score += a(static_cast<std::size_t>(path.back()), stop);
    return score;
}

inline bool mask_allows(const TransitionMask* mask, const std::vector<int>& path) {
    if (!mask) return true;
    if (!mask->start(static_cast<std::size_t>(path[0]))) return false;
    for (std::size_t t = 1; t < path.size(); ++t)
        if (!mask->transition(static_cast<std::size_t>(path[t - 1]),
                              static_cast<std::size_t>(path[t])))
            return false;
    return true;
}

// Among equal best scores the backtrack rule selects the path whose reversed
// tag tuple is lexicographically smallest.
inline bool reversed_lex_less(const std::vector<int>& lhs, const std::vector<int>& rhs) {
    for (std::size_t n = 0; n < lhs.size(); ++n) {
        const std::size_t t = lhs.size() - 1 - n;
        if (lhs[t] != rhs[t]) return lhs[t] < rhs[t];
    }
    return false;
}

inline bool next_path(std::vector<int>& path, int k) {
    for (std::size_t n = 0; n < path.size(); ++n) {
        const std::size_t t = path.size() - 1 - n;
        if (path[t] + 1 < k) {
            ++path[t];
            for (std::size_t j = t + 1; j < path.size(); ++j) path[j] = 0;
            return true;
        }
    }
    return false;
}

inline EnumResult enumerate_crf(const Mat& emissions, const Mat& a, std::size_t k,
                                const TransitionMask* mask = nullptr) {
    const std::size_t t_count = emissions.rows;
    EnumResult result;
    result.marginals = Mat(t_count, k);

    // Pass 1: max score and best path under the documented tie-break.
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> path(t_count, 0);
    bool any = false;
    do {
        if (!mask_allows(mask, path)) continue;
        const double score = walk_path_score(emissions, a, k, path);
        if (!any || score > best ||
            (score == best && reversed_lex_less(path, result.best_path))) {
            if (!any || score > best) best = score;
            result.best_path = path;
            any = true;
        }
    } while (next_path(path, static_cast<int>(k)));
    result.best_score = best;

    // Pass 2: partition function and marginals, shifted by the max score.
    double total = 0.0;
    path.assign(t_count, 0);
    do {
        if (!mask_allows(mask, path)) continue;
        const double weight = std::exp(walk_path_score(emissions, a, k, path) - best);
        total += weight;
        for (std::size_t t = 0; t < t_count; ++t)
            result.marginals(t, static_cast<std::size_t>(path[t])) += weight;
    } while (next_path(path, static_cast<int>(k)));

    result.log_z = best + std::log(total);
    for (double& x : result.marginals.data) x /= total;
    return result;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle over every learnable tensor of a model.
// ---------------------------------------------------------------------------

struct ParamView {
    std::string name;
    double* values = nullptr;
    const double* grads = nullptr;
    std::size_t size = 0;
};

inline std::vector<ParamView> cell_views(const std::string& prefix,
                                         LstmCellParams& cell,
                                         const LstmCellParams& grads) {
    return {
        {prefix + ".w_i", cell.w_i.data.data(), grads.w_i.data.data(), cell.w_i.data.size()},
        {prefix + ".w_f", cell.w_f.data.data(), grads.w_f.data.data(), cell.w_f.data.size()},
        {prefix + ".w_o", cell.w_o.data.data(), grads.w_o.data.data(), cell.w_o.data.size()},
        {prefix + ".w_g", cell.w_g.data.data(), grads.w_g.data.data(), cell.w_g.data.size()},
        {prefix + ".u_i", cell.u_i.data.data(), grads.u_i.data.data(), cell.u_i.data.size()},
        {prefix + ".u_f", cell.u_f.data.data(), grads.u_f.data.data(), cell.u_f.data.size()},
        {prefix + ".u_o", cell.u_o.data.data(), grads.u_o.data.data(), cell.u_o.data.size()},
        {prefix + ".u_g", cell.u_g.data.data(), grads.u_g.data.data(), cell.u_g.data.size()},
        {prefix + ".b_i", cell.b_i.data(), grads.b_i.data(), cell.b_i.size()},
        {prefix + ".b_f", cell.b_f.data(), grads.b_f.data(), cell.b_f.size()},
        {prefix + ".b_o", cell.b_o.data(), grads.b_o.data(), cell.b_o.size()},
        {prefix + ".b_g", cell.b_g.data(), grads.b_g.data(), cell.b_g.size()},
    };
}

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t checked = 0;
};

// Central differences, step 1e-5, against the analytic gradients. The
// relative error uses a unit floor so near-zero gradients are compared
// absolutely.
inline GradCheckReport gradient_check(ModelParams& model, const Sentence& sentence,
                                      const Mat* dropout_mask = nullptr,
                                      double keep_prob = 1.0, double step = 1e-5) {
    const SentenceGrads analytic =
        sentence_gradients(model, sentence, dropout_mask, keep_prob);

    std::vector<ParamView> views;
    auto fwd_views = cell_views("fwd", model.net.fwd, analytic.net.fwd);
    auto bwd_views = cell_views("bwd", model.net.bwd, analytic.net.bwd);
    views.insert(views.end(), fwd_views.begin(), fwd_views.end());
    views.insert(views.end(), bwd_views.begin(), bwd_views.end());
    views.push_back({"w_proj", model.net.w_proj.data.data(),
                     analytic.net.w_proj.data.data(), model.net.w_proj.data.size()});
    views.push_back({"b_proj", model.net.b_proj.data(), analytic.net.b_proj.data(),
                     model.net.b_proj.size()});
    views.push_back({"transitions", model.crf.transitions.data.data(),
                     analytic.d_transitions.data.data(),
                     model.crf.transitions.data.size()});
    for (const auto& [row, grad] : analytic.d_embedding_rows)
        views.push_back({"embedding_row_" + std::to_string(row),
                         model.embeddings.matrix.data.data() +
                             row * model.embeddings.matrix.cols,
                         grad.data(), grad.size()});

    GradCheckReport report;
    for (const auto& view : views) {
        for (std::size_t i = 0; i < view.size; ++i) {
            const double saved = view.values[i];
            view.values[i] = saved + step;
            const double up = sentence_loss(model, sentence, dropout_mask, keep_prob);
            view.values[i] = saved - step;
            const double down = sentence_loss(model, sentence, dropout_mask, keep_prob);
            view.values[i] = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double denom =
                std::max({1.0, std::abs(numeric), std::abs(view.grads[i])});
            const double rel = std::abs(numeric - view.grads[i]) / denom;
            ++report.checked;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = view.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Random instance builders.
// ---------------------------------------------------------------------------

inline LabeledCorpus random_corpus(Rng& rng, std::size_t max_sentences = 20) {
    static const std::string charset =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-./+_";
    LabeledCorpus corpus;
    corpus.tagset = TagSet::clinical();
    const std::size_t n_classes = corpus.tagset.num_classes();
    const std::size_t n = 1 + rng.uniform_index(max_sentences);
    for (std::size_t s = 0; s < n; ++s) {
        Sentence sentence;
        const std::size_t len = 1 + rng.uniform_index(12);
        while (sentence.tokens.size() < len) {
            std::string token;
            const std::size_t token_len = 1 + rng.uniform_index(8);
            for (std::size_t c = 0; c < token_len; ++c)
                token += charset[rng.uniform_index(charset.size())];
            sentence.tokens.push_back(token);
        }
        std::size_t t = 0;
        while (t < len) {
            if (rng.uniform01() < 0.5) {
                sentence.tags.push_back(0);
                ++t;
            } else {
                const int cls = static_cast<int>(rng.uniform_index(n_classes));
                std::size_t span_len = 1 + rng.uniform_index(3);
                span_len = std::min(span_len, len - t);
                sentence.tags.push_back(corpus.tagset.begin_tag(cls));
                for (std::size_t j = 1; j < span_len; ++j)
                    sentence.tags.push_back(corpus.tagset.inside_tag(cls));
                t += span_len;
            }
        }
        corpus.sentences.push_back(std::move(sentence));
    }
    return corpus;
}

inline Mat random_mat(Rng& rng, std::size_t rows, std::size_t cols, double lo = -2.0,
                      double hi = 2.0) {
    Mat m(rows, cols);
    for (double& x : m.data) x = rng.uniform(lo, hi);
    return m;
}

inline CrfParams random_crf(Rng& rng, std::size_t k) {
    CrfParams crf = CrfParams::zeros(k);
    for (double& x : crf.transitions.data) x = rng.uniform(-2.0, 2.0);
    return crf;
}

// A small model over a throwaway vocabulary, every tensor randomized.
inline ModelParams random_model(Rng& rng, std::size_t hidden, std::size_t window,
                                std::size_t dim, std::size_t vocab_tokens,
                                const TagSet& tagset) {
    LabeledCorpus seed_corpus;
    seed_corpus.tagset = tagset;
    Sentence all_tokens;
    for (std::size_t i = 0; i < vocab_tokens; ++i) {
        all_tokens.tokens.push_back("tok" + std::to_string(i));
        all_tokens.tags.push_back(0);
    }
    seed_corpus.sentences.push_back(all_tokens);

    HyperParams hp;
    hp.hidden = hidden;
    hp.window = window;
    hp.dim = dim;
    hp.seed = rng.next_u64();
    ModelParams model = init_model(tagset, build_vocab(seed_corpus), hp, {},
                                   InitMode::ScaledUniform);
    for (double& x : model.crf.transitions.data) x = rng.uniform(-0.5, 0.5);
    return model;
}

inline Sentence random_sentence_from_vocab(Rng& rng, const ModelParams& model,
                                           std::size_t length) {
    Sentence sentence;
    const std::size_t usable = model.vocab.size() - 2;
    for (std::size_t t = 0; t < length; ++t) {
        const std::size_t pick = 2 + rng.uniform_index(usable);
        sentence.tokens.push_back(model.vocab.index_to_token[pick]);
    }
    // random but IOB2-valid tags
    std::size_t t = 0;
    while (t < length) {
        if (rng.uniform01() < 0.5) {
            sentence.tags.push_back(0);
            ++t;
        } else {
            const int cls = static_cast<int>(rng.uniform_index(model.tagset.num_classes()));
            std::size_t span_len = std::min<std::size_t>(1 + rng.uniform_index(2), length - t);
            sentence.tags.push_back(model.tagset.begin_tag(cls));
            for (std::size_t j = 1; j < span_len; ++j)
                sentence.tags.push_back(model.tagset.inside_tag(cls));
            t += span_len;
        }
    }
    return sentence;
}

} // namespace cce::testing

#endif
