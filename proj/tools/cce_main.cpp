// cce: bidirectional LSTM-CRF sequence labeler for clinical concept
// extraction over IOB2 corpora. Subcommands: train, tag, eval, gen.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cce/config.hpp"
#include "cce/corpus.hpp"
#include "cce/embeddings.hpp"
#include "cce/errors.hpp"
#include "cce/evaluation.hpp"
#include "cce/training.hpp"

namespace {

// Exit code classes: 0 success, 1 usage, 2 I/O, 3 format or validation,
// 4 numeric failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;

using KV = std::vector<std::pair<std::string, std::string>>;

// Every subcommand echoes its fully resolved configuration before acting, so
// a run can be reconstructed from its log.
void echo_config(const std::string& subcommand, const KV& settings) {
    std::cerr << "# cce " << subcommand << "\n";
    for (const auto& [key, value] : settings)
        std::cerr << "# " << key << " = " << value << "\n";
}

cce::LabeledCorpus read_corpus(const std::string& path, const cce::TagSet& tagset,
                               bool repair) {
    std::ifstream in(path);
    if (!in) throw cce::IoError("cannot open corpus file '" + path + "'");
    return cce::parse_iob(in, tagset, repair);
}

void write_corpus(const cce::LabeledCorpus& corpus, const std::string& path) {
    if (path == "-") {
        cce::write_iob(corpus, std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw cce::IoError("cannot open '" + path + "' for writing");
    cce::write_iob(corpus, out);
    if (!out) throw cce::IoError("failed writing '" + path + "'");
}

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw cce::IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw cce::IoError("failed writing '" + path + "'");
}

std::string fmt(double value) {
    std::ostringstream out;
    out.precision(17);
    out << value;
    return out.str();
}

struct TrainArgs {
    std::string train_path;
    std::string valid_path;
    double train_fraction = 0.7;
    std::uint64_t split_seed = 1;
    std::string model_path;
    std::string history_path;
    std::string embeddings_path;
    std::string config_path;
    std::string classes = "problem,test,treatment";
    std::uint64_t hidden = 25;
    std::uint64_t window = 3;
    std::uint64_t dim = 50;
    double learning_rate = 0.05;
    double dropout_rate = 0.05;
    std::uint64_t epochs = 100;
    std::uint64_t seed = 1;
    int patience = 15;
    double clip = 5.0;
    bool no_clip = false;
    std::string init = "scaled";
    bool freeze_embeddings = false;
    bool paper_faithful = false;
    bool repair = false;
    std::uint64_t hyper_search = 0;
    std::string search_log_path;
};

double best_valid_f1(const cce::TrainHistory& history) {
    if (history.best_epoch == 0) return 0.0;
    return history.epochs[history.best_epoch - 1].valid_f1;
}

int cmd_train(const TrainArgs& args, const CLI::App& cmd) {
    cce::HyperParams hp;
    if (!args.config_path.empty())
        hp = cce::hyperparams_from_kv(cce::read_kv_file(args.config_path), hp);
    // Command-line overrides win over the config file.
    if (cmd.count("--hidden")) hp.hidden = args.hidden;
    if (cmd.count("--window")) hp.window = args.window;
    if (cmd.count("--dim")) hp.dim = args.dim;
    if (cmd.count("--lr")) hp.learning_rate = args.learning_rate;
    if (cmd.count("--dropout")) hp.dropout_rate = args.dropout_rate;
    if (cmd.count("--epochs")) hp.max_epochs = args.epochs;
    if (cmd.count("--seed")) hp.seed = args.seed;

    cce::TrainOptions options;
    options.patience = args.patience;
    options.clip_norm = args.no_clip ? 0.0 : args.clip;
    options.freeze_embeddings = args.freeze_embeddings;
    std::string init_name = args.init;
    // paper-faithful mode implies the published [-1, 1] initialization
    if (args.paper_faithful && !cmd.count("--init")) init_name = "paper";
    if (init_name == "paper") options.init = cce::InitMode::PaperUniform;
    else if (init_name == "scaled") options.init = cce::InitMode::ScaledUniform;
    else throw cce::ValidationError("--init must be 'paper' or 'scaled'");
    if (args.paper_faithful && options.init != cce::InitMode::PaperUniform)
        throw cce::ValidationError("--paper-faithful requires uniform [-1,1] init");

    const std::string history_path =
        args.history_path.empty() ? args.model_path + ".history" : args.history_path;
    const std::string search_log_path = args.search_log_path.empty()
                                            ? args.model_path + ".search"
                                            : args.search_log_path;

    cce::PretrainedMap pretrained;
    std::size_t pretrained_dim = 0;
    if (!args.embeddings_path.empty()) {
        std::ifstream in(args.embeddings_path);
        if (!in)
            throw cce::IoError("cannot open embedding file '" + args.embeddings_path + "'");
        pretrained = cce::load_pretrained(in);
        if (!pretrained.empty()) pretrained_dim = pretrained.begin()->second.size();
    }
    if (pretrained_dim != 0 && pretrained_dim != hp.dim) {
        if (cmd.count("--dim"))
            throw cce::ValidationError(
                "--dim " + std::to_string(hp.dim) + " does not match embedding file dimension " +
                std::to_string(pretrained_dim));
        hp.dim = pretrained_dim;
    }

    echo_config("train",
                {{"train", args.train_path},
                 {"valid", args.valid_path.empty() ? "(split)" : args.valid_path},
                 {"train_fraction", fmt(args.train_fraction)},
                 {"split_seed", std::to_string(args.split_seed)},
                 {"model", args.model_path},
                 {"history", history_path},
                 {"embeddings",
                  args.embeddings_path.empty() ? "(none)" : args.embeddings_path},
                 {"classes", args.classes},
                 {"hidden", std::to_string(hp.hidden)},
                 {"window", std::to_string(hp.window)},
                 {"dim", std::to_string(hp.dim)},
                 {"learning_rate", fmt(hp.learning_rate)},
                 {"dropout_rate", fmt(hp.dropout_rate)},
                 {"max_epochs", std::to_string(hp.max_epochs)},
                 {"seed", std::to_string(hp.seed)},
                 {"patience", std::to_string(options.patience)},
                 {"clip_norm", fmt(options.clip_norm)},
                 {"init", init_name},
                 {"freeze_embeddings", args.freeze_embeddings ? "true" : "false"},
                 {"paper_faithful", args.paper_faithful ? "true" : "false"},
                 {"repair", args.repair ? "true" : "false"},
                 {"hyper_search", std::to_string(args.hyper_search)},
                 {"search_log",
                  args.hyper_search > 0 ? search_log_path : "(none)"}});

    const cce::TagSet tagset = cce::TagSet::for_classes(cce::split_csv(args.classes));
    const cce::LabeledCorpus full = read_corpus(args.train_path, tagset, args.repair);

    cce::LabeledCorpus train_corpus;
    cce::LabeledCorpus valid_corpus;
    if (!args.valid_path.empty()) {
        train_corpus = full;
        valid_corpus = read_corpus(args.valid_path, tagset, args.repair);
    } else {
        std::tie(train_corpus, valid_corpus) =
            cce::split_corpus(full, args.train_fraction, args.split_seed);
        std::cerr << "# split: " << train_corpus.size() << " train / "
                  << valid_corpus.size() << " valid sentences\n";
    }

    cce::TrainResult result;
    if (args.hyper_search > 0) {
        std::ostringstream log;
        std::optional<cce::TrainResult> best;
        double best_f1 = -1.0;
        cce::Rng seeder(hp.seed);
        for (std::uint64_t trial = 1; trial <= args.hyper_search; ++trial) {
            cce::HyperParams sampled =
                cce::sample_hyperparams(seeder.fork(trial).next_u64());
            sampled.max_epochs = hp.max_epochs;
            if (pretrained_dim != 0) sampled.dim = pretrained_dim;
            cce::validate_hyperparams(sampled, args.paper_faithful);
            cce::TrainResult trial_result =
                cce::train(train_corpus, valid_corpus, sampled, pretrained, options);
            const double f1 = best_valid_f1(trial_result.history);
            log << "trial=" << trial << " seed=" << sampled.seed
                << " hidden=" << sampled.hidden << " window=" << sampled.window
                << " dim=" << sampled.dim << " learning_rate=" << fmt(sampled.learning_rate)
                << " dropout_rate=" << fmt(sampled.dropout_rate)
                << " best_epoch=" << trial_result.history.best_epoch
                << " best_f1=" << fmt(f1) << "\n";
            std::cerr << "# trial " << trial << "/" << args.hyper_search
                      << ": best_f1=" << f1 << "\n";
            if (f1 > best_f1) {
                best_f1 = f1;
                best = std::move(trial_result);
            }
        }
        write_text(log.str(), search_log_path);
        result = std::move(*best);
    } else {
        cce::validate_hyperparams(hp, args.paper_faithful);
        result = cce::train(train_corpus, valid_corpus, hp, pretrained, options);
    }

    cce::save_model(result.model, std::filesystem::path(args.model_path));
    write_text(cce::format_history(result.history), history_path);

    std::cout << "trained " << result.history.epochs.size() << " epoch(s); best epoch "
              << result.history.best_epoch << " with validation F1 "
              << best_valid_f1(result.history) << "\n";
    std::cout << "model written to " << args.model_path << "\n";
    return kExitOk;
}

struct TagArgs {
    std::string model_path;
    std::string input_path;
    std::string output_path;
    bool constrain = true;
    bool repair = false;
};

int cmd_tag(const TagArgs& args) {
    echo_config("tag", {{"model", args.model_path},
                        {"input", args.input_path},
                        {"output", args.output_path},
                        {"constrain_decode", args.constrain ? "true" : "false"},
                        {"repair", args.repair ? "true" : "false"}});
    const cce::ModelParams model =
        cce::load_model(std::filesystem::path(args.model_path));
    const cce::LabeledCorpus input =
        read_corpus(args.input_path, model.tagset, args.repair);
    const cce::LabeledCorpus output = cce::tag_corpus(model, input, args.constrain);
    write_corpus(output, args.output_path);
    return kExitOk;
}

struct EvalArgs {
    std::string gold_path;
    std::string pred_path;
    std::string classes = "problem,test,treatment";
    bool repair = false;
    bool kv = false;
};

int cmd_eval(const EvalArgs& args) {
    echo_config("eval", {{"gold", args.gold_path},
                         {"pred", args.pred_path},
                         {"classes", args.classes},
                         {"repair", args.repair ? "true" : "false"},
                         {"kv", args.kv ? "true" : "false"}});
    const cce::TagSet tagset = cce::TagSet::for_classes(cce::split_csv(args.classes));
    const cce::LabeledCorpus gold = read_corpus(args.gold_path, tagset, args.repair);
    const cce::LabeledCorpus pred = read_corpus(args.pred_path, tagset, args.repair);
    const cce::EvalReport report = cce::strict_score(gold, pred);
    std::cout << cce::format_report(report);
    if (args.kv) std::cout << cce::format_report_kv(report);
    return kExitOk; // low scores are results, not failures
}

struct GenArgs {
    std::string out_path;
    std::string config_path;
    std::uint64_t seed = 7;
    std::uint64_t sentences = 0;
    std::uint64_t min_len = 0;
    std::uint64_t max_len = 0;
    std::string classes;
    std::uint64_t class_vocab = 0;
    std::uint64_t filler_vocab = 0;
    std::string priors;
    std::uint64_t max_entity_len = 0;
};

int cmd_gen(const GenArgs& args, const CLI::App& cmd) {
    cce::GenSpec spec;
    if (!args.config_path.empty())
        spec = cce::genspec_from_kv(cce::read_kv_file(args.config_path), spec);
    if (cmd.count("--sentences")) spec.sentences = args.sentences;
    if (cmd.count("--min-len")) spec.min_len = args.min_len;
    if (cmd.count("--max-len")) spec.max_len = args.max_len;
    if (cmd.count("--classes")) spec.classes = cce::split_csv(args.classes);
    if (cmd.count("--class-vocab")) spec.class_vocab_size = args.class_vocab;
    if (cmd.count("--filler-vocab")) spec.filler_vocab_size = args.filler_vocab;
    if (cmd.count("--max-entity-len")) spec.max_entity_len = args.max_entity_len;
    if (cmd.count("--priors")) {
        spec.entity_priors.clear();
        for (const auto& field : cce::split_csv(args.priors))
            spec.entity_priors.push_back(std::stod(field));
    }

    std::string classes_echo;
    for (const auto& cls : spec.classes)
        classes_echo += (classes_echo.empty() ? "" : ",") + cls;
    std::string priors_echo;
    for (double p : spec.entity_priors)
        priors_echo += (priors_echo.empty() ? "" : ",") + fmt(p);
    echo_config("gen", {{"out", args.out_path},
                        {"seed", std::to_string(args.seed)},
                        {"sentences", std::to_string(spec.sentences)},
                        {"min_len", std::to_string(spec.min_len)},
                        {"max_len", std::to_string(spec.max_len)},
                        {"classes", classes_echo},
                        {"class_vocab_size", std::to_string(spec.class_vocab_size)},
                        {"filler_vocab_size", std::to_string(spec.filler_vocab_size)},
                        {"entity_priors", priors_echo},
                        {"max_entity_len", std::to_string(spec.max_entity_len)}});

    const cce::LabeledCorpus corpus = cce::synth_corpus(spec, args.seed);
    write_corpus(corpus, args.out_path);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bidirectional LSTM-CRF clinical concept extraction"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a model on an IOB2 corpus");
    train->add_option("--train", train_args.train_path, "labeled training corpus")
        ->required();
    train->add_option("--valid", train_args.valid_path,
                      "pre-split validation corpus (default: split --train)");
    train->add_option("--train-fraction", train_args.train_fraction,
                      "sentence fraction kept for training when splitting");
    train->add_option("--split-seed", train_args.split_seed, "seed for the split shuffle");
    train->add_option("--model", train_args.model_path, "output model container path")
        ->required();
    train->add_option("--history", train_args.history_path,
                      "epoch history output (default: <model>.history)");
    train->add_option("--embeddings", train_args.embeddings_path,
                      "pretrained word-vector text file");
    train->add_option("--config", train_args.config_path, "key=value hyperparameter file");
    train->add_option("--classes", train_args.classes, "comma-separated concept classes");
    train->add_option("--hidden", train_args.hidden, "LSTM hidden size H");
    train->add_option("--window", train_args.window, "context window size s (odd)");
    train->add_option("--dim", train_args.dim, "embedding dimension d");
    train->add_option("--lr", train_args.learning_rate, "SGD learning rate");
    train->add_option("--dropout", train_args.dropout_rate, "dropout rate on h(t)");
    train->add_option("--epochs", train_args.epochs, "epoch cap");
    train->add_option("--seed", train_args.seed, "run seed (init, shuffle, dropout)");
    train->add_option("--patience", train_args.patience,
                      "early-stop patience in epochs, <=0 disables");
    train->add_option("--clip", train_args.clip, "global gradient-norm clip");
    train->add_flag("--no-clip", train_args.no_clip, "disable gradient clipping");
    train->add_option("--init", train_args.init, "weight init: paper | scaled");
    train->add_flag("--freeze-embeddings", train_args.freeze_embeddings,
                    "do not update embedding rows");
    train->add_flag("--paper-faithful", train_args.paper_faithful,
                    "enforce the published hyperparameter grids and [-1,1] init");
    train->add_flag("--repair", train_args.repair, "rewrite IOB1-style leading I- to B-");
    train->add_option("--hyper-search", train_args.hyper_search,
                      "train N random configurations, keep the best by validation F1");
    train->add_option("--search-log", train_args.search_log_path,
                      "search log output (default: <model>.search)");

    TagArgs tag_args;
    CLI::App* tag = app.add_subcommand("tag", "tag a corpus with a saved model");
    tag->add_option("--model", tag_args.model_path, "model container")->required();
    tag->add_option("--input", tag_args.input_path, "corpus to tag (1 or 2 columns)")
        ->required();
    tag->add_option("--output", tag_args.output_path, "tagged IOB2 output, '-' for stdout")
        ->required();
    tag->add_flag("--constrain-decode,!--no-constrain-decode", tag_args.constrain,
                  "restrict Viterbi to IOB2-valid transitions (default on)");
    tag->add_flag("--repair", tag_args.repair, "repair IOB1-style tags in labeled input");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "strict span-level scoring");
    eval->add_option("--gold", eval_args.gold_path, "gold IOB2 corpus")->required();
    eval->add_option("--pred", eval_args.pred_path, "predicted IOB2 corpus")->required();
    eval->add_option("--classes", eval_args.classes, "comma-separated concept classes");
    eval->add_flag("--repair", eval_args.repair, "repair IOB1-style tags first");
    eval->add_flag("--kv", eval_args.kv, "also print machine-readable key=value lines");

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic IOB2 corpus");
    gen->add_option("--out", gen_args.out_path, "output path, '-' for stdout")->required();
    gen->add_option("--seed", gen_args.seed, "generator seed");
    gen->add_option("--config", gen_args.config_path, "key=value generator spec");
    gen->add_option("--sentences", gen_args.sentences, "sentence count");
    gen->add_option("--min-len", gen_args.min_len, "minimum sentence length");
    gen->add_option("--max-len", gen_args.max_len, "maximum sentence length");
    gen->add_option("--classes", gen_args.classes, "comma-separated concept classes");
    gen->add_option("--class-vocab", gen_args.class_vocab, "tokens per concept class");
    gen->add_option("--filler-vocab", gen_args.filler_vocab, "filler (O) token count");
    gen->add_option("--priors", gen_args.priors,
                    "comma-separated per-class entity start probabilities");
    gen->add_option("--max-entity-len", gen_args.max_entity_len, "longest entity span");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed()) return cmd_train(train_args, *train);
        if (tag->parsed()) return cmd_tag(tag_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (gen->parsed()) return cmd_gen(gen_args, *gen);
    } catch (const cce::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const cce::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const cce::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    }
    return kExitUsage;
}
