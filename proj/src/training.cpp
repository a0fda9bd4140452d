#include "cce/training.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

#include "cce/errors.hpp"
#include "cce/evaluation.hpp"

namespace cce {

namespace {

constexpr std::array<std::size_t, 3> kHiddenGrid = {25, 50, 100};
constexpr std::array<std::size_t, 3> kWindowGrid = {1, 3, 5};
constexpr std::array<std::size_t, 5> kDimGrid = {50, 100, 300, 500, 1000};
constexpr double kRateLo = 0.05;
constexpr double kRateHi = 0.1;

// Substream ids for deriving independent RNGs from one run seed.
enum Stream : std::uint64_t {
    kStreamNetwork = 1,
    kStreamEmbeddings = 2,
    kStreamShuffle = 3,
    kStreamDropout = 4,
};

} // namespace

HyperParams sample_hyperparams(std::uint64_t seed) {
    Rng rng(seed);
    HyperParams hp;
    hp.hidden = kHiddenGrid[rng.uniform_index(kHiddenGrid.size())];
    hp.window = kWindowGrid[rng.uniform_index(kWindowGrid.size())];
    hp.dim = kDimGrid[rng.uniform_index(kDimGrid.size())];
    hp.learning_rate = rng.uniform(kRateLo, kRateHi);
    hp.dropout_rate = rng.uniform(kRateLo, kRateHi);
    hp.max_epochs = 100;
    hp.seed = seed;
    return hp;
}

bool is_paper_faithful(const HyperParams& hp) {
    auto in_grid = [](auto value, const auto& grid) {
        return std::find(grid.begin(), grid.end(), value) != grid.end();
    };
    return in_grid(hp.hidden, kHiddenGrid) && in_grid(hp.window, kWindowGrid) &&
           in_grid(hp.dim, kDimGrid) &&
           hp.learning_rate >= kRateLo && hp.learning_rate <= kRateHi &&
           hp.dropout_rate >= kRateLo && hp.dropout_rate <= kRateHi;
}

void validate_hyperparams(const HyperParams& hp, bool paper_faithful) {
    if (hp.hidden == 0) throw ValidationError("hidden size must be positive");
    if (hp.dim == 0) throw ValidationError("embedding dimension must be positive");
    if (hp.window == 0 || hp.window % 2 == 0)
        throw ValidationError("context window size must be odd");
    if (!(hp.learning_rate > 0.0))
        throw ValidationError("learning rate must be positive");
    if (!(hp.dropout_rate >= 0.0 && hp.dropout_rate < 1.0))
        throw ValidationError("dropout rate must be in [0, 1)");
    if (paper_faithful && !is_paper_faithful(hp))
        throw ValidationError(
            "hyperparameters violate the paper-faithful grids: H in {25,50,100}, "
            "s in {1,3,5}, d in {50,100,300,500,1000}, rates in [0.05,0.1]");
}

bool ModelParams::operator==(const ModelParams& other) const {
    return tagset == other.tagset && vocab == other.vocab && hp == other.hp &&
           embeddings.matrix == other.embeddings.matrix &&
           embeddings.origin == other.embeddings.origin &&
           net.fwd.w_i == other.net.fwd.w_i && net.fwd.w_f == other.net.fwd.w_f &&
           net.fwd.w_o == other.net.fwd.w_o && net.fwd.w_g == other.net.fwd.w_g &&
           net.fwd.u_i == other.net.fwd.u_i && net.fwd.u_f == other.net.fwd.u_f &&
           net.fwd.u_o == other.net.fwd.u_o && net.fwd.u_g == other.net.fwd.u_g &&
           net.fwd.b_i == other.net.fwd.b_i && net.fwd.b_f == other.net.fwd.b_f &&
           net.fwd.b_o == other.net.fwd.b_o && net.fwd.b_g == other.net.fwd.b_g &&
           net.bwd.w_i == other.net.bwd.w_i && net.bwd.w_f == other.net.bwd.w_f &&
           net.bwd.w_o == other.net.bwd.w_o && net.bwd.w_g == other.net.bwd.w_g &&
           net.bwd.u_i == other.net.bwd.u_i && net.bwd.u_f == other.net.bwd.u_f &&
           net.bwd.u_o == other.net.bwd.u_o && net.bwd.u_g == other.net.bwd.u_g &&
           net.bwd.b_i == other.net.bwd.b_i && net.bwd.b_f == other.net.bwd.b_f &&
           net.bwd.b_o == other.net.bwd.b_o && net.bwd.b_g == other.net.bwd.b_g &&
           net.w_proj == other.net.w_proj && net.b_proj == other.net.b_proj &&
           crf.transitions == other.crf.transitions && crf.num_tags == other.crf.num_tags;
}

ModelParams init_model(const TagSet& tagset, const Vocabulary& vocab,
                       const HyperParams& hp, const PretrainedMap& pretrained,
                       InitMode mode) {
    validate_hyperparams(hp, false);
    ModelParams model;
    model.tagset = tagset;
    model.vocab = vocab;
    model.hp = hp;

    Rng base(hp.seed);
    Rng net_rng = base.fork(kStreamNetwork);
    Rng emb_rng = base.fork(kStreamEmbeddings);

    model.embeddings =
        assemble_table(vocab, pretrained, hp.dim, emb_rng.next_u64());
    model.net = init_bilstm(hp.hidden, hp.window * hp.dim, tagset.size(), mode,
                            net_rng);
    model.crf = CrfParams::zeros(tagset.size());
    return model;
}

bool TrainHistory::operator==(const TrainHistory& other) const {
    if (best_epoch != other.best_epoch || epochs.size() != other.epochs.size())
        return false;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        // seconds is wall time and deliberately not compared
        if (epochs[i].epoch != other.epochs[i].epoch ||
            epochs[i].train_loss != other.epochs[i].train_loss ||
            epochs[i].valid_f1 != other.epochs[i].valid_f1)
            return false;
    }
    return true;
}

std::string format_history(const TrainHistory& history) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& record : history.epochs)
        out << record.epoch << '\t' << record.train_loss << '\t' << record.valid_f1
            << '\n';
    return out.str();
}

namespace {

struct SentencePass {
    double loss = 0.0;
    InputSequence features;
    BackpropCache cache;
    Mat emissions;
    CrfGradients crf_grads;
};

SentencePass run_sentence(const ModelParams& model, const Sentence& sentence,
                          const Mat* dropout_mask, double keep_prob) {
    SentencePass pass;
    pass.features = window_features(sentence, model.vocab, model.embeddings,
                                    WindowConfig{model.hp.window});
    forward_bilstm(model.net, pass.features.features, pass.cache);
    pass.emissions =
        project(model.net, pass.cache.hidden, dropout_mask, keep_prob, pass.cache);
    pass.crf_grads = crf_nll_and_grad(pass.emissions, model.crf, sentence.tags);
    pass.loss = pass.crf_grads.loss;
    return pass;
}

} // namespace

SentenceGrads sentence_gradients(const ModelParams& model, const Sentence& sentence,
                                 const Mat* dropout_mask, double keep_prob) {
    if (!sentence.labeled())
        throw ValidationError("gradient computation needs a labeled sentence");
    auto pass = run_sentence(model, sentence, dropout_mask, keep_prob);
    SentenceGrads grads;
    grads.loss = pass.loss;
    grads.net = network_backward(model.net, pass.cache, pass.crf_grads.d_emissions);
    grads.d_transitions = std::move(pass.crf_grads.d_transitions);
    grads.d_embedding_rows =
        window_backward(grads.net.d_inputs, pass.features.token_rows,
                        WindowConfig{model.hp.window}, model.hp.dim);
    return grads;
}

double sentence_loss(const ModelParams& model, const Sentence& sentence,
                     const Mat* dropout_mask, double keep_prob) {
    if (!sentence.labeled())
        throw ValidationError("loss computation needs a labeled sentence");
    auto features = window_features(sentence, model.vocab, model.embeddings,
                                    WindowConfig{model.hp.window});
    auto hidden = forward_bilstm(model.net, features.features);
    auto emissions = project(model.net, hidden, dropout_mask, keep_prob);
    return log_partition(emissions, model.crf) -
           score_sequence(emissions, model.crf, sentence.tags);
}

namespace {

double squared_norm(const Mat& m) {
    double acc = 0.0;
    for (double x : m.data) acc += x * x;
    return acc;
}
double squared_norm(const Vec& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}
double squared_norm(const LstmCellParams& cell) {
    return squared_norm(cell.w_i) + squared_norm(cell.w_f) + squared_norm(cell.w_o) +
           squared_norm(cell.w_g) + squared_norm(cell.u_i) + squared_norm(cell.u_f) +
           squared_norm(cell.u_o) + squared_norm(cell.u_g) + squared_norm(cell.b_i) +
           squared_norm(cell.b_f) + squared_norm(cell.b_o) + squared_norm(cell.b_g);
}

void scale(Mat& m, double factor) {
    for (double& x : m.data) x *= factor;
}
void scale(Vec& v, double factor) {
    for (double& x : v) x *= factor;
}
void scale(LstmCellParams& cell, double factor) {
    scale(cell.w_i, factor);
    scale(cell.w_f, factor);
    scale(cell.w_o, factor);
    scale(cell.w_g, factor);
    scale(cell.u_i, factor);
    scale(cell.u_f, factor);
    scale(cell.u_o, factor);
    scale(cell.u_g, factor);
    scale(cell.b_i, factor);
    scale(cell.b_f, factor);
    scale(cell.b_o, factor);
    scale(cell.b_g, factor);
}

// Global L2 clipping across every gradient tensor of the sentence.
void clip_gradients(SentenceGrads& grads, double clip_norm) {
    if (clip_norm <= 0.0) return;
    double total = squared_norm(grads.net.fwd) + squared_norm(grads.net.bwd) +
                   squared_norm(grads.net.w_proj) + squared_norm(grads.net.b_proj) +
                   squared_norm(grads.d_transitions);
    for (const auto& [row, grad] : grads.d_embedding_rows)
        total += squared_norm(grad);
    const double norm = std::sqrt(total);
    if (norm <= clip_norm) return;
    const double factor = clip_norm / norm;
    scale(grads.net.fwd, factor);
    scale(grads.net.bwd, factor);
    scale(grads.net.w_proj, factor);
    scale(grads.net.b_proj, factor);
    scale(grads.d_transitions, factor);
    for (auto& [row, grad] : grads.d_embedding_rows) scale(grad, factor);
}

void axpy(Mat& dest, const Mat& g, double factor) {
    for (std::size_t i = 0; i < dest.data.size(); ++i) dest.data[i] += factor * g.data[i];
}
void axpy(Vec& dest, const Vec& g, double factor) {
    for (std::size_t i = 0; i < dest.size(); ++i) dest[i] += factor * g[i];
}
void axpy(LstmCellParams& dest, const LstmCellParams& g, double factor) {
    axpy(dest.w_i, g.w_i, factor);
    axpy(dest.w_f, g.w_f, factor);
    axpy(dest.w_o, g.w_o, factor);
    axpy(dest.w_g, g.w_g, factor);
    axpy(dest.u_i, g.u_i, factor);
    axpy(dest.u_f, g.u_f, factor);
    axpy(dest.u_o, g.u_o, factor);
    axpy(dest.u_g, g.u_g, factor);
    axpy(dest.b_i, g.b_i, factor);
    axpy(dest.b_f, g.b_f, factor);
    axpy(dest.b_o, g.b_o, factor);
    axpy(dest.b_g, g.b_g, factor);
}

void apply_update(ModelParams& model, const SentenceGrads& grads, double lr,
                  bool freeze_embeddings) {
    axpy(model.net.fwd, grads.net.fwd, -lr);
    axpy(model.net.bwd, grads.net.bwd, -lr);
    axpy(model.net.w_proj, grads.net.w_proj, -lr);
    axpy(model.net.b_proj, grads.net.b_proj, -lr);
    axpy(model.crf.transitions, grads.d_transitions, -lr);
    if (freeze_embeddings) return;
    for (const auto& [row, grad] : grads.d_embedding_rows) {
        auto dest = model.embeddings.matrix.row(row);
        for (std::size_t j = 0; j < dest.size(); ++j) dest[j] -= lr * grad[j];
    }
}

Mat sample_dropout_mask(std::size_t rows, std::size_t cols, double keep_prob,
                        Rng& rng) {
    Mat mask(rows, cols);
    for (double& x : mask.data) x = rng.uniform01() < keep_prob ? 1.0 : 0.0;
    return mask;
}

double validation_f1(const ModelParams& model, const LabeledCorpus& valid) {
    if (valid.sentences.empty()) return 0.0;
    // Decode-time convention: constrained Viterbi, so spans are well-formed.
    const LabeledCorpus pred = tag_corpus(model, valid, /*constrain=*/true);
    return strict_score(valid, pred).overall.f1();
}

} // namespace

TrainResult train(const LabeledCorpus& train_corpus, const LabeledCorpus& valid_corpus,
                  const HyperParams& hp, const PretrainedMap& pretrained,
                  const TrainOptions& options) {
    if (train_corpus.sentences.empty())
        throw ValidationError("training corpus is empty");
    if (train_corpus.tagset != valid_corpus.tagset)
        throw ValidationError("training and validation corpora use different tag sets");
    for (const auto& sentence : train_corpus.sentences)
        if (!sentence.labeled())
            throw ValidationError("training corpus contains unlabeled sentences");
    for (const auto& sentence : valid_corpus.sentences)
        if (!sentence.labeled())
            throw ValidationError("validation corpus contains unlabeled sentences");
    validate_hyperparams(hp, false);

    const Vocabulary vocab = build_vocab(train_corpus, options.vocab_min_count);
    TrainResult result;
    result.model =
        init_model(train_corpus.tagset, vocab, hp, pretrained, options.init);

    if (hp.max_epochs == 0) return result;

    ModelParams current = result.model;
    Rng base(hp.seed);
    Rng shuffle_rng = base.fork(kStreamShuffle);
    Rng dropout_rng = base.fork(kStreamDropout);

    std::vector<std::size_t> order(train_corpus.sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const double keep_prob = 1.0 - hp.dropout_rate;
    double best_f1 = -1.0;
    int stale_epochs = 0;

    for (std::size_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t index : order) {
            const Sentence& sentence = train_corpus.sentences[index];
            Mat mask;
            const Mat* mask_ptr = nullptr;
            if (hp.dropout_rate > 0.0) {
                mask = sample_dropout_mask(sentence.size(), 2 * hp.hidden,
                                           keep_prob, dropout_rng);
                mask_ptr = &mask;
            }
            SentenceGrads grads =
                sentence_gradients(current, sentence, mask_ptr, keep_prob);
            if (!std::isfinite(grads.loss))
                throw NumericError("non-finite training loss at epoch " +
                                   std::to_string(epoch));
            clip_gradients(grads, options.clip_norm);
            apply_update(current, grads, hp.learning_rate, options.freeze_embeddings);
            loss_sum += grads.loss;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(order.size());
        record.valid_f1 = validation_f1(current, valid_corpus);
        record.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();
        result.history.epochs.push_back(record);

        if (record.valid_f1 > best_f1) {
            best_f1 = record.valid_f1;
            result.history.best_epoch = epoch;
            result.model = current;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
            if (options.patience > 0 && stale_epochs >= options.patience) break;
        }
    }
    return result;
}

LabeledCorpus tag_corpus(const ModelParams& model, const LabeledCorpus& input,
                         bool constrain) {
    const TransitionMask mask = iob2_mask(model.tagset);
    LabeledCorpus output;
    output.tagset = model.tagset;
    output.sentences.reserve(input.sentences.size());

    for (const auto& sentence : input.sentences) {
        auto features = window_features(sentence, model.vocab, model.embeddings,
                                        WindowConfig{model.hp.window});
        auto hidden = forward_bilstm(model.net, features.features);
        auto emissions = project(model.net, hidden);
        auto path = viterbi(emissions, model.crf, constrain ? &mask : nullptr);
        output.sentences.push_back(Sentence{sentence.tokens, std::move(path.tags)});
    }
    return output;
}

} // namespace cce
