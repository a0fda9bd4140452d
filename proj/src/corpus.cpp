#include "cce/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "cce/errors.hpp"
#include "cce/rng.hpp"

namespace cce {

TagSet TagSet::for_classes(std::vector<std::string> classes) {
    TagSet ts;
    ts.tags.reserve(1 + 2 * classes.size());
    ts.tags.push_back("O");
    for (const auto& cls : classes) {
        ts.tags.push_back("B-" + cls);
        ts.tags.push_back("I-" + cls);
    }
    ts.classes = std::move(classes);
    return ts;
}

TagSet TagSet::clinical() {
    return for_classes({"problem", "test", "treatment"});
}

int TagSet::tag_index(std::string_view label) const {
    for (std::size_t i = 0; i < tags.size(); ++i)
        if (tags[i] == label) return static_cast<int>(i);
    return -1;
}

void validate_iob2(std::span<const int> tags, const TagSet& tagset,
                   std::size_t sentence_index) {
    const int k = static_cast<int>(tagset.size());
    for (std::size_t t = 0; t < tags.size(); ++t) {
        if (tags[t] < 0 || tags[t] >= k)
            throw ValidationError("tag index " + std::to_string(tags[t]) +
                                  " out of range at sentence " +
                                  std::to_string(sentence_index) + ", token " +
                                  std::to_string(t));
        if (!tagset.is_inside(tags[t])) continue;
        const int cls = tagset.class_of(tags[t]);
        const bool ok = t > 0 &&
                        (tags[t - 1] == tagset.begin_tag(cls) ||
                         tags[t - 1] == tagset.inside_tag(cls));
        if (!ok)
            throw ValidationError("invalid IOB2 sequence: " + tagset.tags[tags[t]] +
                                  " without preceding B-/I- of the same class at sentence " +
                                  std::to_string(sentence_index) + ", token " +
                                  std::to_string(t));
    }
}

std::vector<int> repair_iob1(std::vector<int> tags, const TagSet& tagset) {
    for (std::size_t t = 0; t < tags.size(); ++t) {
        if (!tagset.is_inside(tags[t])) continue;
        const int cls = tagset.class_of(tags[t]);
        const bool continues = t > 0 &&
                               (tags[t - 1] == tagset.begin_tag(cls) ||
                                tags[t - 1] == tagset.inside_tag(cls));
        if (!continues) tags[t] = tagset.begin_tag(cls);
    }
    return tags;
}

namespace {

// Strips one trailing '\r' plus trailing spaces/tabs; separators inside the
// line are left alone.
void strip_trailing_ws(std::string& line) {
    while (!line.empty() &&
           (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
        line.pop_back();
}

} // namespace

LabeledCorpus parse_iob(std::istream& in, const TagSet& tagset, bool repair) {
    LabeledCorpus corpus;
    corpus.tagset = tagset;

    Sentence current;
    std::size_t line_no = 0;
    // -1 unknown, 0 unlabeled file, 1 labeled file
    int labeled_mode = -1;

    auto flush_sentence = [&] {
        if (current.tokens.empty()) return;
        if (!current.tags.empty()) {
            if (repair) current.tags = repair_iob1(std::move(current.tags), tagset);
            validate_iob2(current.tags, tagset, corpus.sentences.size());
        }
        corpus.sentences.push_back(std::move(current));
        current = Sentence{};
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        strip_trailing_ws(line);
        if (line.empty()) {
            flush_sentence();
            continue;
        }

        const auto tab = line.find('\t');
        std::string token;
        std::string label;
        bool has_label = false;
        if (tab == std::string::npos) {
            token = line;
        } else {
            if (line.find('\t', tab + 1) != std::string::npos)
                throw ParseError("expected 1 or 2 tab-separated columns", line_no);
            token = line.substr(0, tab);
            label = line.substr(tab + 1);
            has_label = true;
        }
        if (token.empty())
            throw ParseError("empty token column", line_no);
        if (has_label && label.empty())
            throw ParseError("empty tag column", line_no);

        if (labeled_mode == -1) {
            labeled_mode = has_label ? 1 : 0;
        } else if (labeled_mode != (has_label ? 1 : 0)) {
            throw ParseError(has_label ? "unexpected tag column in unlabeled data"
                                       : "missing tag column in labeled data",
                             line_no);
        }

        current.tokens.push_back(std::move(token));
        if (has_label) {
            const int tag = tagset.tag_index(label);
            if (tag < 0)
                throw TagError("unknown tag label '" + label + "'", line_no);
            current.tags.push_back(tag);
        }
    }
    flush_sentence();
    return corpus;
}

void write_iob(const LabeledCorpus& corpus, std::ostream& out) {
    for (const auto& sentence : corpus.sentences) {
        for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
            out << sentence.tokens[t];
            if (sentence.labeled())
                out << '\t' << corpus.tagset.tags[sentence.tags[t]];
            out << '\n';
        }
        out << '\n';
    }
}

std::string write_iob(const LabeledCorpus& corpus) {
    std::ostringstream out;
    write_iob(corpus, out);
    return out.str();
}

std::vector<Span> extract_spans(std::span<const int> tags, const TagSet& tagset) {
    validate_iob2(tags, tagset);
    std::vector<Span> spans;
    for (std::size_t t = 0; t < tags.size(); ++t) {
        if (!tagset.is_begin(tags[t])) continue;
        const int cls = tagset.class_of(tags[t]);
        std::size_t end = t;
        while (end + 1 < tags.size() && tags[end + 1] == tagset.inside_tag(cls))
            ++end;
        spans.push_back({cls, t, end});
        t = end;
    }
    return spans;
}

std::vector<int> spans_to_tags(std::span<const Span> spans, std::size_t length,
                               const TagSet& tagset) {
    std::vector<int> tags(length, 0);
    for (const auto& span : spans) {
        if (span.start > span.end || span.end >= length)
            throw ValidationError("span out of range");
        if (span.cls < 0 || span.cls >= static_cast<int>(tagset.num_classes()))
            throw ValidationError("span class out of range");
        for (std::size_t t = span.start; t <= span.end; ++t)
            if (tags[t] != 0) throw ValidationError("overlapping spans");
        tags[span.start] = tagset.begin_tag(span.cls);
        for (std::size_t t = span.start + 1; t <= span.end; ++t)
            tags[t] = tagset.inside_tag(span.cls);
    }
    return tags;
}

std::pair<LabeledCorpus, LabeledCorpus> split_corpus(const LabeledCorpus& corpus,
                                                     double train_fraction,
                                                     std::uint64_t seed) {
    if (corpus.sentences.size() < 2)
        throw ValidationError("cannot split a corpus with fewer than 2 sentences");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("train fraction must be in (0, 1)");

    const std::size_t n = corpus.sentences.size();
    const auto train_size = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * train_fraction));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    LabeledCorpus train;
    LabeledCorpus valid;
    train.tagset = corpus.tagset;
    valid.tagset = corpus.tagset;
    for (std::size_t i = 0; i < n; ++i) {
        auto& part = i < train_size ? train : valid;
        part.sentences.push_back(corpus.sentences[order[i]]);
    }
    return {std::move(train), std::move(valid)};
}

LabeledCorpus synth_corpus(const GenSpec& spec, std::uint64_t seed) {
    if (spec.sentences == 0)
        throw ValidationError("generator needs a positive sentence count");
    if (spec.min_len == 0 || spec.min_len > spec.max_len)
        throw ValidationError("generator needs 0 < min_len <= max_len");
    if (spec.entity_priors.size() != spec.classes.size())
        throw ValidationError("one entity prior per class required");
    if (spec.max_entity_len == 0)
        throw ValidationError("max_entity_len must be positive");
    double prior_sum = 0.0;
    for (double p : spec.entity_priors) {
        if (p < 0.0) throw ValidationError("entity priors must be non-negative");
        prior_sum += p;
    }
    if (prior_sum > 1.0)
        throw ValidationError("entity priors must sum to at most 1");
    if (spec.class_vocab_size == 0 && prior_sum > 0.0)
        throw ValidationError("class vocabulary must be non-empty when priors are positive");
    if (spec.filler_vocab_size == 0)
        throw ValidationError("filler vocabulary must be non-empty");

    LabeledCorpus corpus;
    corpus.tagset = TagSet::for_classes(spec.classes);

    Rng rng(seed);
    auto class_token = [&](std::size_t cls, std::size_t id) {
        return spec.classes[cls] + "_" + std::to_string(id);
    };

    for (std::size_t s = 0; s < spec.sentences; ++s) {
        const std::size_t len =
            spec.min_len + rng.uniform_index(spec.max_len - spec.min_len + 1);
        Sentence sentence;
        bool entity_just_closed = false;
        while (sentence.tokens.size() < len) {
            const std::size_t remaining = len - sentence.tokens.size();
            int cls = -1;
            // Entities never touch: force one filler token after each span.
            if (!entity_just_closed) {
                double u = rng.uniform01();
                for (std::size_t c = 0; c < spec.entity_priors.size(); ++c) {
                    if (u < spec.entity_priors[c]) {
                        cls = static_cast<int>(c);
                        break;
                    }
                    u -= spec.entity_priors[c];
                }
            }
            if (cls >= 0) {
                std::size_t span_len =
                    1 + rng.uniform_index(std::min(spec.max_entity_len, remaining));
                for (std::size_t t = 0; t < span_len; ++t) {
                    sentence.tokens.push_back(class_token(
                        static_cast<std::size_t>(cls),
                        rng.uniform_index(spec.class_vocab_size)));
                    sentence.tags.push_back(t == 0
                                                ? corpus.tagset.begin_tag(cls)
                                                : corpus.tagset.inside_tag(cls));
                }
                entity_just_closed = true;
            } else {
                sentence.tokens.push_back(
                    "filler_" + std::to_string(rng.uniform_index(spec.filler_vocab_size)));
                sentence.tags.push_back(0);
                entity_just_closed = false;
            }
        }
        corpus.sentences.push_back(std::move(sentence));
    }
    return corpus;
}

} // namespace cce
