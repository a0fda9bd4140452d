#ifndef CCE_EMBEDDINGS_HPP
#define CCE_EMBEDDINGS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cce/corpus.hpp"
#include "cce/tensor.hpp"

namespace cce {

// Token identities behind the input features. Indices 0 and 1 are reserved
// for the padding and unknown-word rows; corpus tokens follow, contiguous,
// ordered by (frequency desc, token lexicographic).
struct Vocabulary {
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kUnk = 1;
    static constexpr std::string_view kPadToken = "<PAD>";
    static constexpr std::string_view kUnkToken = "<UNK>";

    std::vector<std::string> index_to_token;
    std::unordered_map<std::string, std::size_t> token_to_index;

    std::size_t size() const { return index_to_token.size(); }

    // Total: unseen tokens resolve to the UNK index.
    std::size_t lookup(std::string_view token) const;

    bool operator==(const Vocabulary& other) const {
        return index_to_token == other.index_to_token;
    }
};

Vocabulary build_vocab(const LabeledCorpus& corpus, std::size_t min_count = 1);

using PretrainedMap = std::unordered_map<std::string, Vec>;

// Reads "token v1 v2 ... vd" lines (GloVe text layout); a leading
// "count dim" line (word2vec text layout) is detected and skipped.
PretrainedMap load_pretrained(std::istream& in,
                              std::optional<std::size_t> expected_d = std::nullopt);

enum class RowOrigin : std::uint8_t {
    Pretrained = 0,
    Random = 1, // uniform draw from [-1, 1]
    Zero = 2,   // the frozen PAD row
};

struct EmbeddingTable {
    Mat matrix; // |V| x d
    std::vector<RowOrigin> origin;

    std::size_t dim() const { return matrix.cols; }
    std::size_t rows() const { return matrix.rows; }
    // Fraction of non-reserved rows backed by pretrained vectors.
    double pretrained_coverage() const;
};

// Rows for covered tokens copy pretrained values (falling back from the exact
// form to its lowercased form); everything else, UNK included, draws uniform
// [-1, 1] components deterministically from the seed. The PAD row stays zero.
EmbeddingTable assemble_table(const Vocabulary& vocab, const PretrainedMap& pretrained,
                              std::size_t d, std::uint64_t seed);

struct WindowConfig {
    std::size_t s = 3; // odd context-window size
};

// Per-position concatenated context-window features plus the embedding row
// read at each position (needed to route gradients back to the table).
struct InputSequence {
    Mat features;                       // T x (s * d)
    std::vector<std::size_t> token_rows; // T
};

InputSequence window_features(const Sentence& sentence, const Vocabulary& vocab,
                              const EmbeddingTable& table, const WindowConfig& cfg);

// Adjoint of window_features: accumulates feature gradients onto the embedding
// rows they were gathered from. The PAD row receives nothing. Keys are row
// indices; the map is ordered so downstream updates are deterministic.
std::map<std::size_t, Vec> window_backward(const Mat& d_features,
                                           std::span<const std::size_t> token_rows,
                                           const WindowConfig& cfg, std::size_t d);

} // namespace cce

#endif
