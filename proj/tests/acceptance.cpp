// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Oracles are independent reimplementations (exhaustive
// path enumeration, central finite differences); see helpers.hpp.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cce/corpus.hpp"
#include "cce/crf.hpp"
#include "cce/embeddings.hpp"
#include "cce/evaluation.hpp"
#include "cce/training.hpp"
#include "helpers.hpp"

using namespace cce;
using namespace cce::testing;

namespace {

struct Criterion {
    std::string name;
    double time_limit_seconds;
    std::function<bool(std::string&)> body;
};

struct OracleInstance {
    Mat emissions;
    CrfParams crf;
};

std::vector<OracleInstance> oracle_instances() {
    std::vector<OracleInstance> instances;
    Rng rng(20160807);
    // 80 continuous instances: ties have probability zero.
    for (int i = 0; i < 80; ++i) {
        const std::size_t t_count = 1 + rng.uniform_index(6); // T <= 6
        const std::size_t k = 2 + rng.uniform_index(6);       // K <= 7
        instances.push_back({random_mat(rng, t_count, k, -4.0, 4.0),
                             random_crf(rng, k)});
    }
    // 30 integer-valued instances: exact ties exercise the tie-break rule.
    for (int i = 0; i < 30; ++i) {
        const std::size_t t_count = 1 + rng.uniform_index(6);
        const std::size_t k = 2 + rng.uniform_index(6);
        Mat emissions(t_count, k);
        for (double& x : emissions.data)
            x = static_cast<double>(rng.uniform_index(3));
        CrfParams crf = CrfParams::zeros(k);
        for (double& x : crf.transitions.data)
            x = static_cast<double>(rng.uniform_index(2));
        instances.push_back({std::move(emissions), std::move(crf)});
    }
    return instances;
}

bool criterion_crf_oracle(const std::vector<OracleInstance>& instances,
                          std::string& detail) {
    std::size_t checked = 0;
    for (const auto& [emissions, crf] : instances) {
        const EnumResult oracle =
            enumerate_crf(emissions, crf.transitions, crf.num_tags);

        const double log_z = log_partition(emissions, crf);
        if (std::abs(log_z - oracle.log_z) > 1e-8) {
            detail = "log partition off by " + std::to_string(log_z - oracle.log_z);
            return false;
        }
        const DecodedPath path = viterbi(emissions, crf);
        if (path.tags != oracle.best_path) {
            detail = "viterbi path differs from enumeration argmax";
            return false;
        }
        if (std::abs(path.score - oracle.best_score) > 1e-8) {
            detail = "viterbi score off by " +
                     std::to_string(path.score - oracle.best_score);
            return false;
        }
        ++checked;
    }
    detail = std::to_string(checked) + " instances";
    return checked >= 100;
}

bool criterion_gradients(std::string& detail) {
    Rng rng(424242);
    const TagSet tagset = TagSet::clinical(); // K = 7
    double worst = 0.0;
    std::string worst_param;
    std::size_t instances = 0;
    std::size_t parameters = 0;

    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t hidden = 1 + rng.uniform_index(4); // H <= 4
        const std::size_t dim = 1 + rng.uniform_index(3);    // d <= 3
        const std::size_t t_count = 1 + rng.uniform_index(5); // T <= 5
        ModelParams model =
            random_model(rng, hidden, /*window=*/3, dim, 6 + rng.uniform_index(6),
                         tagset);
        const Sentence sentence = random_sentence_from_vocab(rng, model, t_count);

        const GradCheckReport report = gradient_check(model, sentence);
        parameters += report.checked;
        if (report.max_rel_error > worst) {
            worst = report.max_rel_error;
            worst_param = report.worst_param;
        }
        ++instances;
    }
    std::ostringstream out;
    out << instances << " instances, " << parameters
        << " parameters, max rel err " << worst;
    if (worst >= 1e-4) out << " at " << worst_param;
    detail = out.str();
    return instances >= 20 && worst < 1e-4;
}

bool criterion_marginals(const std::vector<OracleInstance>& instances,
                         std::string& detail) {
    double worst = 0.0;
    for (const auto& [emissions, crf] : instances) {
        const Mat marginals = crf_marginals(emissions, crf);
        for (std::size_t t = 0; t < marginals.rows; ++t) {
            double row_sum = 0.0;
            for (std::size_t k = 0; k < marginals.cols; ++k)
                row_sum += marginals(t, k);
            worst = std::max(worst, std::abs(row_sum - 1.0));
        }
    }
    detail = "max |row sum - 1| = " + std::to_string(worst);
    return worst < 1e-10;
}

bool criterion_convergence(std::string& detail) {
    const GenSpec spec; // 200 sentences, lengths 5-15, 3 classes, disjoint vocab
    const LabeledCorpus corpus = synth_corpus(spec, 7);
    const auto [train_part, valid_part] = split_corpus(corpus, 0.7, 1);

    HyperParams hp;
    hp.hidden = 25;
    hp.window = 3;
    hp.dim = 50;
    hp.learning_rate = 0.05;
    hp.dropout_rate = 0.05;
    hp.max_epochs = 30;
    hp.seed = 7;
    TrainOptions options;
    options.patience = 0; // run the full 30-epoch budget

    const TrainResult first = train(train_part, valid_part, hp, {}, options);
    const TrainResult second = train(train_part, valid_part, hp, {}, options);
    if (!(first.history == second.history) || !(first.model == second.model)) {
        detail = "two identically seeded runs diverged";
        return false;
    }

    double best = 0.0;
    std::size_t best_epoch = 0;
    for (const auto& record : first.history.epochs) {
        if (record.valid_f1 > best) {
            best = record.valid_f1;
            best_epoch = record.epoch;
        }
    }
    std::ostringstream out;
    out << "best validation F1 " << best << " at epoch " << best_epoch;
    detail = out.str();
    return best >= 0.95;
}

std::string two_decimals(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

bool criterion_scorer(std::string& detail) {
    const LabeledCorpus gold = fixture_corpus();

    // perfect prediction
    {
        const EvalReport report = strict_score(gold, gold);
        if (two_decimals(report.overall.precision()) != "100.00" ||
            two_decimals(report.overall.recall()) != "100.00" ||
            two_decimals(report.overall.f1()) != "100.00") {
            detail = "perfect fixture did not render 100.00";
            return false;
        }
    }
    // one of two spans found
    {
        LabeledCorpus pred = gold;
        pred.sentences[0].tags[7] = 0;
        pred.sentences[0].tags[8] = 0;
        const EvalReport report = strict_score(gold, pred);
        if (two_decimals(report.overall.precision()) != "100.00" ||
            two_decimals(report.overall.recall()) != "50.00" ||
            two_decimals(report.overall.f1()) != "66.67") {
            detail = "half-recall fixture rendered P=" +
                     two_decimals(report.overall.precision()) +
                     " R=" + two_decimals(report.overall.recall()) +
                     " F1=" + two_decimals(report.overall.f1());
            return false;
        }
    }
    // boundary off by one: that span scores zero
    {
        LabeledCorpus pred = gold;
        pred.sentences[0].tags[2] = gold.tagset.tag_index("I-test");
        const EvalReport report = strict_score(gold, pred);
        const ClassCounts& test_counts = report.per_class[1];
        if (test_counts.tp != 0 || two_decimals(test_counts.f1()) != "0.00") {
            detail = "boundary-off-by-one span scored nonzero";
            return false;
        }
    }
    detail = "three fixtures exact at 2-decimal rendering";
    return true;
}

bool criterion_round_trips(std::string& detail) {
    Rng rng(5150);
    // 100 random corpora through parse(write(c))
    for (int i = 0; i < 100; ++i) {
        const LabeledCorpus corpus = random_corpus(rng);
        std::istringstream in(write_iob(corpus));
        if (!(parse_iob(in, corpus.tagset) == corpus)) {
            detail = "IOB2 round trip failed at corpus " + std::to_string(i);
            return false;
        }
    }
    // 100 random models through load(save(m))
    for (int i = 0; i < 100; ++i) {
        const std::size_t hidden = 1 + rng.uniform_index(3);
        const std::size_t window = 1 + 2 * rng.uniform_index(2);
        const std::size_t dim = 1 + rng.uniform_index(3);
        ModelParams model = random_model(rng, hidden, window, dim,
                                         3 + rng.uniform_index(9), TagSet::clinical());
        std::ostringstream out;
        save_model(model, out);
        std::istringstream in(out.str());
        if (!(load_model(in) == model)) {
            detail = "model container round trip failed at model " + std::to_string(i);
            return false;
        }
    }
    detail = "100 corpora + 100 models";
    return true;
}

bool criterion_paper_faithful(std::string& detail) {
    std::size_t checks = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const HyperParams hp = sample_hyperparams(seed);
        if (!is_paper_faithful(hp)) {
            detail = "sample at seed " + std::to_string(seed) + " left the grids";
            return false;
        }
        ++checks;
    }

    // paper-faithful initialization: every random draw within [-1, 1]
    LabeledCorpus corpus = fixture_corpus();
    const Vocabulary vocab = build_vocab(corpus);
    std::size_t components = 0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        HyperParams hp;
        hp.hidden = 5;
        hp.window = 3;
        hp.dim = 4;
        hp.seed = seed;
        const ModelParams model =
            init_model(corpus.tagset, vocab, hp, {}, InitMode::PaperUniform);
        auto in_range = [&](const Mat& m) {
            for (double x : m.data)
                if (x < -1.0 || x > 1.0) return false;
            return true;
        };
        for (const Mat* m :
             {&model.net.fwd.w_i, &model.net.fwd.w_f, &model.net.fwd.w_o,
              &model.net.fwd.w_g, &model.net.fwd.u_i, &model.net.fwd.u_f,
              &model.net.fwd.u_o, &model.net.fwd.u_g, &model.net.bwd.w_i,
              &model.net.bwd.w_f, &model.net.bwd.w_o, &model.net.bwd.w_g,
              &model.net.bwd.u_i, &model.net.bwd.u_f, &model.net.bwd.u_o,
              &model.net.bwd.u_g, &model.net.w_proj, &model.embeddings.matrix}) {
            if (!in_range(*m)) {
                detail = "initialization left [-1, 1] at seed " + std::to_string(seed);
                return false;
            }
            components += m->data.size();
        }
    }
    detail = std::to_string(checks) + " hyperparameter samples, " +
             std::to_string(components) + " initialized components";
    return checks >= 1000 && components >= 1000;
}

bool criterion_window_shapes(std::string& detail) {
    const LabeledCorpus corpus = fixture_corpus();
    const Vocabulary vocab = build_vocab(corpus);
    const Sentence& sentence = corpus.sentences[0];

    std::size_t combos = 0;
    for (std::size_t s : {std::size_t{1}, std::size_t{3}, std::size_t{5}}) {
        for (std::size_t d : {std::size_t{50}, std::size_t{300}}) {
            const EmbeddingTable table = assemble_table(vocab, {}, d, 99);
            const InputSequence seq =
                window_features(sentence, vocab, table, WindowConfig{s});
            if (seq.features.rows != sentence.size() || seq.features.cols != s * d) {
                detail = "shape mismatch at s=" + std::to_string(s) +
                         ", d=" + std::to_string(d);
                return false;
            }
            // PAD blocks at both boundaries are exactly zero
            const std::size_t half = s / 2;
            for (std::size_t block = 0; block < half; ++block) {
                for (std::size_t j = 0; j < d; ++j) {
                    if (seq.features(0, block * d + j) != 0.0 ||
                        seq.features(sentence.size() - 1,
                                     (s - 1 - block) * d + j) != 0.0) {
                        detail = "nonzero PAD block at s=" + std::to_string(s) +
                                 ", d=" + std::to_string(d);
                        return false;
                    }
                }
            }
            ++combos;
        }
    }
    detail = std::to_string(combos) + " (s, d) combinations";
    return combos == 6;
}

} // namespace

int main() {
    const auto instances = oracle_instances();

    const std::vector<Criterion> criteria = {
        {"1. CRF oracle suite: partition and Viterbi vs exhaustive enumeration",
         60.0,
         [&](std::string& d) { return criterion_crf_oracle(instances, d); }},
        {"2. Gradient suite: full pipeline vs central finite differences", 120.0,
         criterion_gradients},
        {"3. CRF marginals normalize to 1 within 1e-10", 60.0,
         [&](std::string& d) { return criterion_marginals(instances, d); }},
        {"4. Synthetic convergence: strict micro-F1 >= 0.95 within 30 epochs",
         300.0, criterion_convergence},
        {"5. Strict scorer fixtures at 2-decimal rendering", 60.0,
         criterion_scorer},
        {"6. Format round trips: IOB2 and model container", 60.0,
         criterion_round_trips},
        {"7. Paper-faithful grids and [-1, 1] initialization", 60.0,
         criterion_paper_faithful},
        {"8. Window feature shapes s*d with zero PAD blocks", 60.0,
         criterion_window_shapes},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto started = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = criterion.body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();
        if (seconds > criterion.time_limit_seconds) {
            ok = false;
            detail += " [exceeded " + std::to_string(criterion.time_limit_seconds) +
                      "s limit]";
        }
        std::printf("%s  %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL",
                    criterion.name.c_str(), seconds, detail.empty() ? "" : " - ",
                    detail.c_str());
        if (!ok) ++failures;
    }
    if (failures == 0)
        std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    else
        std::printf("acceptance: %d of %zu criteria FAILED\n", failures,
                    criteria.size());
    return failures;
}
