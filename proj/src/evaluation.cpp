#include "cce/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cce/errors.hpp"

namespace cce {

EvalReport strict_score(const LabeledCorpus& gold, const LabeledCorpus& pred) {
    if (gold.tagset != pred.tagset)
        throw ValidationError("gold and prediction use different tag sets");
    if (gold.sentences.size() != pred.sentences.size())
        throw ValidationError("sentence count mismatch: gold has " +
                              std::to_string(gold.sentences.size()) +
                              ", prediction has " +
                              std::to_string(pred.sentences.size()));

    EvalReport report;
    report.classes = gold.tagset.classes;
    report.per_class.assign(report.classes.size(), ClassCounts{});

    std::size_t correct_tokens = 0;
    std::size_t total_tokens = 0;

    for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
        const auto& g = gold.sentences[i];
        const auto& p = pred.sentences[i];
        if (g.size() != p.size())
            throw ValidationError("token count mismatch at sentence " +
                                  std::to_string(i) + ": gold has " +
                                  std::to_string(g.size()) + " tokens, prediction has " +
                                  std::to_string(p.size()));
        if (!g.labeled() || !p.labeled())
            throw ValidationError("sentence " + std::to_string(i) +
                                  " is missing tags");

        const auto gold_spans = extract_spans(g.tags, gold.tagset);
        const auto pred_spans = extract_spans(p.tags, pred.tagset);

        for (const auto& span : gold_spans)
            ++report.per_class[static_cast<std::size_t>(span.cls)].gold;
        for (const auto& span : pred_spans) {
            auto& counts = report.per_class[static_cast<std::size_t>(span.cls)];
            ++counts.pred;
            if (std::find(gold_spans.begin(), gold_spans.end(), span) !=
                gold_spans.end())
                ++counts.tp;
        }

        total_tokens += g.size();
        for (std::size_t t = 0; t < g.size(); ++t)
            if (g.tags[t] == p.tags[t]) ++correct_tokens;
    }

    for (const auto& counts : report.per_class) {
        report.overall.tp += counts.tp;
        report.overall.gold += counts.gold;
        report.overall.pred += counts.pred;
    }
    report.token_accuracy =
        total_tokens == 0 ? 0.0
                          : static_cast<double>(correct_tokens) /
                                static_cast<double>(total_tokens);
    return report;
}

namespace {

std::string pct(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value * 100.0);
    return buf;
}

void row(std::ostringstream& out, const std::string& name, const ClassCounts& c) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-12s %7zu %7zu %7zu %10s %10s %10s\n",
                  name.c_str(), c.gold, c.pred, c.tp, pct(c.precision()).c_str(),
                  pct(c.recall()).c_str(), pct(c.f1()).c_str());
    out << buf;
}

} // namespace

std::string format_report(const EvalReport& report) {
    std::ostringstream out;
    char header[160];
    std::snprintf(header, sizeof(header), "%-12s %7s %7s %7s %10s %10s %10s\n",
                  "class", "gold", "pred", "tp", "precision", "recall", "f1");
    out << header;
    for (std::size_t i = 0; i < report.classes.size(); ++i)
        row(out, report.classes[i], report.per_class[i]);
    row(out, "overall", report.overall);
    out << "token accuracy: " << pct(report.token_accuracy) << "\n";
    return out.str();
}

std::string format_report_kv(const EvalReport& report) {
    std::ostringstream out;
    auto emit = [&](const std::string& name, const ClassCounts& c) {
        out << name << "_gold=" << c.gold << "\n";
        out << name << "_pred=" << c.pred << "\n";
        out << name << "_tp=" << c.tp << "\n";
        out << name << "_precision=" << pct(c.precision()) << "\n";
        out << name << "_recall=" << pct(c.recall()) << "\n";
        out << name << "_f1=" << pct(c.f1()) << "\n";
    };
    for (std::size_t i = 0; i < report.classes.size(); ++i)
        emit(report.classes[i], report.per_class[i]);
    emit("overall", report.overall);
    out << "token_accuracy=" << pct(report.token_accuracy) << "\n";
    return out.str();
}

} // namespace cce
