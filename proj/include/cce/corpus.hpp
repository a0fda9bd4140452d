#ifndef CCE_CORPUS_HPP
#define CCE_CORPUS_HPP

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cce {

// Ordered concept classes plus the IOB2 tag labels derived from them:
// tag 0 is "O", then "B-c", "I-c" for each class c in order. Tag indices are
// stable and deterministic given the class order.
struct TagSet {
    std::vector<std::string> classes;
    std::vector<std::string> tags;

    static TagSet for_classes(std::vector<std::string> classes);
    // The clinical task: problem / test / treatment, K = 7.
    static TagSet clinical();

    std::size_t size() const { return tags.size(); }
    std::size_t num_classes() const { return classes.size(); }

    // -1 when the label is not part of this tag set.
    int tag_index(std::string_view label) const;

    bool is_outside(int tag) const { return tag == 0; }
    bool is_begin(int tag) const { return tag > 0 && (tag - 1) % 2 == 0; }
    bool is_inside(int tag) const { return tag > 0 && (tag - 1) % 2 == 1; }
    // -1 for O.
    int class_of(int tag) const { return tag == 0 ? -1 : (tag - 1) / 2; }
    int begin_tag(int cls) const { return 1 + 2 * cls; }
    int inside_tag(int cls) const { return 2 + 2 * cls; }

    bool operator==(const TagSet&) const = default;
};

// One sentence: surface tokens plus (optionally) one tag index per token.
struct Sentence {
    std::vector<std::string> tokens;
    std::vector<int> tags; // empty for unlabeled sentences

    bool labeled() const { return !tags.empty(); }
    std::size_t size() const { return tokens.size(); }
    bool operator==(const Sentence&) const = default;
};

struct LabeledCorpus {
    std::vector<Sentence> sentences;
    TagSet tagset;

    std::size_t size() const { return sentences.size(); }
    bool operator==(const LabeledCorpus&) const = default;
};

// A typed concept mention: tokens [start, end] inclusive.
struct Span {
    int cls = 0;
    std::size_t start = 0;
    std::size_t end = 0;
    auto operator<=>(const Span&) const = default;
};

// Throws ValidationError unless the sequence is IOB2-valid (I-c only directly
// after B-c or I-c of the same class). sentence_index is used in messages.
void validate_iob2(std::span<const int> tags, const TagSet& tagset,
                   std::size_t sentence_index = 0);

// Rewrites IOB1-style leading I- tags to B-, making any tag sequence valid.
std::vector<int> repair_iob1(std::vector<int> tags, const TagSet& tagset);

// Reads tab-separated "token<TAB>tag" records, one blank line between
// sentences; a single column throughout means unlabeled data. When repair is
// true, IOB1-style sequences are rewritten instead of rejected.
LabeledCorpus parse_iob(std::istream& in, const TagSet& tagset, bool repair = false);

// Inverse of parse_iob: every sentence is followed by one blank line.
void write_iob(const LabeledCorpus& corpus, std::ostream& out);
std::string write_iob(const LabeledCorpus& corpus);

// Maximal B-initiated runs as spans, sorted by start. Requires a valid
// sequence; throws ValidationError otherwise.
std::vector<Span> extract_spans(std::span<const int> tags, const TagSet& tagset);

// Inverse of extract_spans: encode non-overlapping sorted spans over a
// sentence of the given length.
std::vector<int> spans_to_tags(std::span<const Span> spans, std::size_t length,
                               const TagSet& tagset);

// Deterministic sentence-level shuffled split; train part has ceil(n * f)
// sentences. Corpora with fewer than 2 sentences are rejected.
std::pair<LabeledCorpus, LabeledCorpus> split_corpus(const LabeledCorpus& corpus,
                                                     double train_fraction,
                                                     std::uint64_t seed);

// Parameters of the synthetic corpus generator. Each concept class draws its
// tokens from a vocabulary disjoint from every other class and from the
// filler vocabulary, so the labeling task is learnable; entities are always
// separated by at least one filler token.
struct GenSpec {
    std::size_t sentences = 200;
    std::size_t min_len = 5;
    std::size_t max_len = 15;
    std::vector<std::string> classes = {"problem", "test", "treatment"};
    std::size_t class_vocab_size = 12;
    std::size_t filler_vocab_size = 30;
    std::vector<double> entity_priors = {0.10, 0.10, 0.10}; // per class; rest is O
    std::size_t max_entity_len = 3;
};

LabeledCorpus synth_corpus(const GenSpec& spec, std::uint64_t seed);

} // namespace cce

#endif
