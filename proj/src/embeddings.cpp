#include "cce/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <sstream>

#include "cce/errors.hpp"
#include "cce/rng.hpp"

namespace cce {

std::size_t Vocabulary::lookup(std::string_view token) const {
    auto it = token_to_index.find(std::string(token));
    return it == token_to_index.end() ? kUnk : it->second;
}

Vocabulary build_vocab(const LabeledCorpus& corpus, std::size_t min_count) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& sentence : corpus.sentences)
        for (const auto& token : sentence.tokens) ++counts[token];

    std::vector<std::pair<std::string, std::size_t>> kept;
    kept.reserve(counts.size());
    for (auto& [token, count] : counts)
        if (count >= min_count && token != Vocabulary::kPadToken &&
            token != Vocabulary::kUnkToken)
            kept.emplace_back(token, count);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.index_to_token.reserve(kept.size() + 2);
    vocab.index_to_token.emplace_back(Vocabulary::kPadToken);
    vocab.index_to_token.emplace_back(Vocabulary::kUnkToken);
    for (auto& [token, count] : kept) vocab.index_to_token.push_back(std::move(token));
    for (std::size_t i = 0; i < vocab.index_to_token.size(); ++i)
        vocab.token_to_index[vocab.index_to_token[i]] = i;
    return vocab;
}

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

PretrainedMap load_pretrained(std::istream& in, std::optional<std::size_t> expected_d) {
    PretrainedMap map;
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = expected_d.value_or(0);
    bool first_content_line = true;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::istringstream fields(line);
        std::string token;
        fields >> token;

        if (first_content_line) {
            first_content_line = false;
            // word2vec text files start with "count dim"; skip that header.
            std::string second;
            if (all_digits(token) && fields >> second && all_digits(second)) {
                std::string extra;
                if (!(fields >> extra)) continue;
            }
            fields = std::istringstream(line);
            fields >> token;
        }

        Vec vector;
        std::string field;
        while (fields >> field) {
            std::size_t consumed = 0;
            double value = 0.0;
            try {
                value = std::stod(field, &consumed);
            } catch (const std::exception&) {
                throw ParseError("non-numeric vector component '" + field + "'", line_no);
            }
            if (consumed != field.size())
                throw ParseError("non-numeric vector component '" + field + "'", line_no);
            vector.push_back(value);
        }
        if (vector.empty())
            throw FormatError("vector row with no components (line " +
                              std::to_string(line_no) + ")");
        if (dim == 0) dim = vector.size();
        if (vector.size() != dim)
            throw FormatError("expected " + std::to_string(dim) +
                              " vector components, got " + std::to_string(vector.size()) +
                              " (line " + std::to_string(line_no) + ")");
        map[token] = std::move(vector);
    }
    return map;
}

double EmbeddingTable::pretrained_coverage() const {
    if (rows() <= 2) return 0.0;
    std::size_t covered = 0;
    for (std::size_t i = 2; i < origin.size(); ++i)
        if (origin[i] == RowOrigin::Pretrained) ++covered;
    return static_cast<double>(covered) / static_cast<double>(rows() - 2);
}

EmbeddingTable assemble_table(const Vocabulary& vocab, const PretrainedMap& pretrained,
                              std::size_t d, std::uint64_t seed) {
    if (d == 0) throw ValidationError("embedding dimension must be positive");
    for (const auto& [token, vector] : pretrained)
        if (vector.size() != d)
            throw ValidationError("pretrained vector for '" + token +
                                  "' has dimension " + std::to_string(vector.size()) +
                                  ", expected " + std::to_string(d));

    EmbeddingTable table;
    table.matrix = Mat(vocab.size(), d);
    table.origin.assign(vocab.size(), RowOrigin::Random);
    table.origin[Vocabulary::kPad] = RowOrigin::Zero;

    Rng rng(seed);
    for (std::size_t row = 0; row < vocab.size(); ++row) {
        if (row == Vocabulary::kPad) continue; // stays zero, never trained
        const Vec* source = nullptr;
        if (row != Vocabulary::kUnk) {
            const std::string& token = vocab.index_to_token[row];
            auto hit = pretrained.find(token);
            if (hit == pretrained.end()) hit = pretrained.find(ascii_lower(token));
            if (hit != pretrained.end()) source = &hit->second;
        }
        auto dest = table.matrix.row(row);
        if (source) {
            std::copy(source->begin(), source->end(), dest.begin());
            table.origin[row] = RowOrigin::Pretrained;
        } else {
            for (double& x : dest) x = rng.uniform(-1.0, 1.0);
        }
    }
    return table;
}

InputSequence window_features(const Sentence& sentence, const Vocabulary& vocab,
                              const EmbeddingTable& table, const WindowConfig& cfg) {
    if (cfg.s == 0 || cfg.s % 2 == 0)
        throw ValidationError("context window size must be odd");
    const std::size_t d = table.dim();
    const std::size_t t_count = sentence.size();
    const auto half = static_cast<std::ptrdiff_t>(cfg.s / 2);

    InputSequence seq;
    seq.features = Mat(t_count, cfg.s * d);
    seq.token_rows.resize(t_count);
    for (std::size_t t = 0; t < t_count; ++t)
        seq.token_rows[t] = vocab.lookup(sentence.tokens[t]);

    for (std::size_t t = 0; t < t_count; ++t) {
        auto out = seq.features.row(t);
        for (std::ptrdiff_t offset = -half; offset <= half; ++offset) {
            const auto pos = static_cast<std::ptrdiff_t>(t) + offset;
            const std::size_t row =
                (pos < 0 || pos >= static_cast<std::ptrdiff_t>(t_count))
                    ? Vocabulary::kPad
                    : seq.token_rows[static_cast<std::size_t>(pos)];
            auto src = table.matrix.row(row);
            const std::size_t slot = static_cast<std::size_t>(offset + half) * d;
            std::copy(src.begin(), src.end(), out.begin() + slot);
        }
    }
    return seq;
}

std::map<std::size_t, Vec> window_backward(const Mat& d_features,
                                           std::span<const std::size_t> token_rows,
                                           const WindowConfig& cfg, std::size_t d) {
    if (d_features.cols != cfg.s * d)
        throw ValidationError("feature gradient width does not match window config");
    if (d_features.rows != token_rows.size())
        throw ValidationError("feature gradient rows do not match sentence length");

    const auto t_count = static_cast<std::ptrdiff_t>(token_rows.size());
    const auto half = static_cast<std::ptrdiff_t>(cfg.s / 2);
    std::map<std::size_t, Vec> grads;

    for (std::ptrdiff_t t = 0; t < t_count; ++t) {
        auto in = d_features.row(static_cast<std::size_t>(t));
        for (std::ptrdiff_t offset = -half; offset <= half; ++offset) {
            const auto pos = t + offset;
            if (pos < 0 || pos >= t_count) continue; // PAD slot, frozen
            const std::size_t row = token_rows[static_cast<std::size_t>(pos)];
            if (row == Vocabulary::kPad) continue;
            auto [it, inserted] = grads.try_emplace(row, Vec(d, 0.0));
            const std::size_t slot = static_cast<std::size_t>(offset + half) * d;
            for (std::size_t j = 0; j < d; ++j) it->second[j] += in[slot + j];
        }
    }
    return grads;
}

} // namespace cce
