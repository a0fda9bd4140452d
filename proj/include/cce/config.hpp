#ifndef CCE_CONFIG_HPP
#define CCE_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "cce/corpus.hpp"
#include "cce/training.hpp"

namespace cce {

// Flat "key=value" lines; '#' starts a comment, blank lines are skipped,
// whitespace around keys and values is trimmed.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_kv(std::istream& in);
KeyValues read_kv_file(const std::filesystem::path& path);

// Apply recognized keys onto defaults; unknown keys are rejected.
// Keys: hidden, window, dim, learning_rate, dropout_rate, max_epochs, seed.
HyperParams hyperparams_from_kv(const KeyValues& kv, HyperParams defaults = {});

// Keys: sentences, min_len, max_len, classes (comma-separated),
// class_vocab_size, filler_vocab_size, entity_priors (comma-separated),
// max_entity_len.
GenSpec genspec_from_kv(const KeyValues& kv, GenSpec defaults = {});

std::vector<std::string> split_csv(const std::string& value);

} // namespace cce

#endif
