#ifndef CCE_TRAINING_HPP
#define CCE_TRAINING_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cce/corpus.hpp"
#include "cce/crf.hpp"
#include "cce/embeddings.hpp"
#include "cce/network.hpp"

namespace cce {

// Paper-faithful grids: H in {25, 50, 100}, s in {1, 3, 5},
// d in {50, 100, 300, 500, 1000}, rates uniform in [0.05, 0.1].
struct HyperParams {
    std::size_t hidden = 25;
    std::size_t window = 3;
    std::size_t dim = 50;
    double learning_rate = 0.05;
    double dropout_rate = 0.05;
    std::size_t max_epochs = 100;
    std::uint64_t seed = 1;

    bool operator==(const HyperParams&) const = default;
};

// Uniform draw from the grids above; deterministic given the seed.
HyperParams sample_hyperparams(std::uint64_t seed);

// Grid membership check used by the --paper-faithful gate.
bool is_paper_faithful(const HyperParams& hp);

// Basic sanity (positive sizes, odd window, rates in range); strict mode also
// enforces the paper grids.
void validate_hyperparams(const HyperParams& hp, bool paper_faithful);

struct TrainOptions {
    int patience = 15;      // stop after this many epochs without F1 gain; <=0 off
    double clip_norm = 5.0; // global gradient-norm clip; <=0 off
    bool freeze_embeddings = false;
    // Scaled init trains far better than the verbatim [-1, 1] draw; paper
    // mode switches back to the published initialization.
    InitMode init = InitMode::ScaledUniform;
    std::size_t vocab_min_count = 1;
};

struct ModelParams {
    TagSet tagset;
    Vocabulary vocab;
    HyperParams hp;
    EmbeddingTable embeddings;
    BiLstmParams net;
    CrfParams crf;

    bool operator==(const ModelParams& other) const;
};

// Fresh model: vocabulary-aligned embedding table (pretrained rows copied,
// the rest uniform [-1, 1]), initialized BiLSTM and projection, zero
// transitions. All draws derive from hp.seed.
ModelParams init_model(const TagSet& tagset, const Vocabulary& vocab,
                       const HyperParams& hp, const PretrainedMap& pretrained,
                       InitMode mode);

struct EpochRecord {
    std::size_t epoch = 0;   // 1-based
    double train_loss = 0.0; // mean per-sentence negative log-likelihood
    double valid_f1 = 0.0;   // strict micro-F1 on the validation corpus
    double seconds = 0.0;    // wall time; excluded from comparisons
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0; // 1-based; 0 when no epoch ran

    bool operator==(const TrainHistory& other) const;
};

// "epoch<TAB>loss<TAB>valid_f1" lines.
std::string format_history(const TrainHistory& history);

struct TrainResult {
    ModelParams model;
    TrainHistory history;
};

// Per-sentence SGD on the CRF negative log-likelihood, deterministic epoch
// reshuffling, per-sentence dropout masks, validation after every epoch, and
// best-validation model selection.
TrainResult train(const LabeledCorpus& train_corpus, const LabeledCorpus& valid_corpus,
                  const HyperParams& hp, const PretrainedMap& pretrained = {},
                  const TrainOptions& options = {});

// Training internals exposed for gradient verification: loss and exact
// gradients of one sentence, with an optional fixed dropout mask.
struct SentenceGrads {
    double loss = 0.0;
    NetworkGrads net;
    Mat d_transitions;
    std::map<std::size_t, Vec> d_embedding_rows;
};
SentenceGrads sentence_gradients(const ModelParams& model, const Sentence& sentence,
                                 const Mat* dropout_mask = nullptr,
                                 double keep_prob = 1.0);
double sentence_loss(const ModelParams& model, const Sentence& sentence,
                     const Mat* dropout_mask = nullptr, double keep_prob = 1.0);

// Model container: magic, format version, payload checksum, then tag set,
// vocabulary, hyperparameters and tensors with dimensions, all little-endian
// with 64-bit floats. load(save(m)) is bit-exact.
void save_model(const ModelParams& model, std::ostream& out);
void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(std::istream& in);
ModelParams load_model(const std::filesystem::path& path);

// Decode: window features, BiLSTM, projection without dropout, Viterbi
// (IOB2-constrained when constrain is set). Input tags, if any, are ignored.
LabeledCorpus tag_corpus(const ModelParams& model, const LabeledCorpus& input,
                         bool constrain);

} // namespace cce

#endif
