#ifndef CCE_EVALUATION_HPP
#define CCE_EVALUATION_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "cce/corpus.hpp"

namespace cce {

struct ClassCounts {
    std::size_t tp = 0;   // predicted spans that exactly match a gold span
    std::size_t gold = 0; // gold spans
    std::size_t pred = 0; // predicted spans

    // Zero-denominator convention follows the CoNLL scorer: empty side -> 0.
    double precision() const {
        return pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred);
    }
    double recall() const {
        return gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
    }
    double f1() const {
        const double p = precision();
        const double r = recall();
        return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    }
};

// Strict span-level scores: micro-averaged overall counts pool the per-class
// counts. Token accuracy is a supplementary diagnostic only.
struct EvalReport {
    std::vector<std::string> classes;
    std::vector<ClassCounts> per_class;
    ClassCounts overall;
    double token_accuracy = 0.0;
};

// A predicted span counts as a true positive iff a gold span of the same
// sentence matches it exactly in class, start and end.
EvalReport strict_score(const LabeledCorpus& gold, const LabeledCorpus& pred);

// Fixed-width table, one row per class plus an overall row, scores rendered
// on a 0-100 scale with 2 decimals.
std::string format_report(const EvalReport& report);

// Machine-readable key=value lines for CI.
std::string format_report_kv(const EvalReport& report);

} // namespace cce

#endif
