#include "cce/config.hpp"

#include <fstream>
#include <sstream>

#include "cce/errors.hpp"

namespace cce {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        // stoull silently wraps negative input, so reject it up front
        if (value.empty() || value[0] == '-') throw std::invalid_argument(value);
        std::size_t consumed = 0;
        const auto parsed = std::stoull(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "' needs an unsigned integer, got '" +
                          value + "'");
    }
}

double parse_f64(const std::string& key, const std::string& value) {
    try {
        std::size_t consumed = 0;
        const double parsed = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "' needs a number, got '" + value +
                          "'");
    }
}

} // namespace

KeyValues parse_kv(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key=value", line_no);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("empty config key", line_no);
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    return parse_kv(in);
}

std::vector<std::string> split_csv(const std::string& value) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(value);
    while (std::getline(in, part, ',')) {
        part = trim(part);
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

HyperParams hyperparams_from_kv(const KeyValues& kv, HyperParams defaults) {
    HyperParams hp = defaults;
    for (const auto& [key, value] : kv) {
        if (key == "hidden") hp.hidden = parse_u64(key, value);
        else if (key == "window") hp.window = parse_u64(key, value);
        else if (key == "dim") hp.dim = parse_u64(key, value);
        else if (key == "learning_rate") hp.learning_rate = parse_f64(key, value);
        else if (key == "dropout_rate") hp.dropout_rate = parse_f64(key, value);
        else if (key == "max_epochs") hp.max_epochs = parse_u64(key, value);
        else if (key == "seed") hp.seed = parse_u64(key, value);
        else throw FormatError("unknown hyperparameter key '" + key + "'");
    }
    return hp;
}

GenSpec genspec_from_kv(const KeyValues& kv, GenSpec defaults) {
    GenSpec spec = defaults;
    for (const auto& [key, value] : kv) {
        if (key == "sentences") spec.sentences = parse_u64(key, value);
        else if (key == "min_len") spec.min_len = parse_u64(key, value);
        else if (key == "max_len") spec.max_len = parse_u64(key, value);
        else if (key == "classes") spec.classes = split_csv(value);
        else if (key == "class_vocab_size") spec.class_vocab_size = parse_u64(key, value);
        else if (key == "filler_vocab_size") spec.filler_vocab_size = parse_u64(key, value);
        else if (key == "max_entity_len") spec.max_entity_len = parse_u64(key, value);
        else if (key == "entity_priors") {
            spec.entity_priors.clear();
            for (const auto& field : split_csv(value))
                spec.entity_priors.push_back(parse_f64(key, field));
        } else {
            throw FormatError("unknown generator key '" + key + "'");
        }
    }
    return spec;
}

} // namespace cce
