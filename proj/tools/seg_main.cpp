// Command-line front end for the segmentation pipeline. Subcommands wrap the
// library operations; every artifact-producing command writes a manifest with
// the full config echo, its hash and the seeds, so runs can be reproduced.
//
// Exit codes: 0 success, 1 pipeline error, 2 configuration/usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seg/config_json.hpp"
#include "seg/corpus.hpp"
#include "seg/corpus_io.hpp"
#include "seg/embedding.hpp"
#include "seg/errors.hpp"
#include "seg/eval.hpp"
#include "seg/experiment.hpp"
#include "seg/model.hpp"
#include "seg/utf8.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunSetup {
    seg::PipelineConfig pipe;
    std::vector<std::pair<std::string, std::string>> corpora;  // (name, path)
    fs::path out = "out";
};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash(const json& echo) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(echo.dump())));
    return buf;
}

// Flag holders; only values the user actually passed are applied, so the
// precedence is defaults < config file < --seed < specific flags.
struct Flags {
    std::string config_path;
    std::vector<std::string> corpus_args;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;

    std::string delimiters, ignorables, sentence_final, extra_delimiters, boundary_marks;
    double train_fraction = 0.7;
    std::uint64_t split_seed = 0;
    std::string split_unit;

    int dim = 300, window = 12, min_count = 1, iter = 50, batch_words = 8000, negatives = 5;
    double alpha = 0.025, subsample = 0.0;
    std::uint64_t embed_seed = 0;
    bool full_corpus = false;
    bool text_export = false;

    int layers = 5, output_dim = 400, context = 6, context_offset = 2, batch_size = 64,
        epochs = 10;
    double lr = 1e-3;
    std::uint64_t model_seed = 0;
    bool head_at_last_step = false;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file (flags override file keys)");
    cmd->add_option("--seed", f.seed, "Master seed applied to split, embedding and model");
    cmd->add_option("--threads", f.threads, "Worker threads for the parallel kernels");
    cmd->add_option("--out", f.out_dir, "Output directory");
}

void add_corpus_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--corpus", f.corpus_args,
                    "Corpus as NAME=PATH (directory of *.txt, manifest JSON, or one file); "
                    "repeatable");
}

void add_chars_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--delimiters", f.delimiters, "Delimiter characters (replaces the default)");
    cmd->add_option("--extra-delimiters", f.extra_delimiters, "Characters added to the delimiter set");
    cmd->add_option("--ignorables", f.ignorables, "Ignorable characters (replaces the default)");
    cmd->add_option("--sentence-final", f.sentence_final, "Sentence-final delimiter subset");
    cmd->add_option("--boundary-marks", f.boundary_marks,
                    "Which delimiters induce boundaries: all | sentence_final");
}

void add_split_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--train-fraction", f.train_fraction, "Train share of the split, in (0,1)");
    cmd->add_option("--split-seed", f.split_seed, "Seed for the split shuffle");
    cmd->add_option("--split-unit", f.split_unit, "Split unit: document | sequence");
}

void add_embed_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--dim", f.dim, "Embedding dimensions");
    cmd->add_option("--window", f.window, "Skip-gram window size");
    cmd->add_option("--min-count", f.min_count, "Minimum character count kept in the vocabulary");
    cmd->add_option("--iter", f.iter, "Embedding training epochs");
    cmd->add_option("--batch-words", f.batch_words, "Learning-rate decay chunk, in words");
    cmd->add_option("--negatives", f.negatives, "Negative samples per pair");
    cmd->add_option("--alpha", f.alpha, "Initial skip-gram learning rate");
    cmd->add_option("--subsample", f.subsample, "Frequent-character subsampling threshold, 0=off");
    cmd->add_option("--embed-seed", f.embed_seed, "Seed for embedding training");
    cmd->add_flag("--full-corpus", f.full_corpus,
                  "Train embeddings on full corpora instead of train portions");
}

void add_model_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--layers", f.layers, "Number of stacked bidirectional layers");
    cmd->add_option("--output-dim", f.output_dim, "Concatenated layer output dimensions");
    cmd->add_option("--context", f.context, "Context window length in characters");
    cmd->add_option("--context-offset", f.context_offset,
                    "Characters before the target inside the window");
    cmd->add_option("--batch-size", f.batch_size, "Minibatch size");
    cmd->add_option("--epochs", f.epochs, "Classifier training epochs");
    cmd->add_option("--lr", f.lr, "Adam learning rate");
    cmd->add_option("--model-seed", f.model_seed, "Seed for classifier init and shuffling");
    cmd->add_flag("--head-at-last-step", f.head_at_last_step,
                  "Read the head from the window's last step instead of the target position");
}

bool passed(const CLI::App* cmd, const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

RunSetup assemble(const CLI::App* cmd, const Flags& f) {
    RunSetup setup;

    json file;
    if (!f.config_path.empty()) {
        try {
            file = json::parse(seg::read_file(f.config_path));
        } catch (const json::exception& e) {
            throw seg::ConfigError("malformed config file " + f.config_path + ": " + e.what());
        }
    }
    if (file.contains("chars")) setup.pipe.chars = seg::chars_from_json(file["chars"]);
    if (file.contains("split")) setup.pipe.split = seg::split_from_json(file["split"]);
    if (file.contains("embedding"))
        setup.pipe.embedding = seg::embedding_from_json(file["embedding"]);
    if (file.contains("model")) setup.pipe.model = seg::model_from_json(file["model"]);
    if (file.contains("embed_full_corpora"))
        setup.pipe.embed_full_corpora = file["embed_full_corpora"].get<bool>();
    if (file.contains("threads")) setup.pipe.threads = file["threads"].get<int>();
    if (file.contains("out")) setup.out = file["out"].get<std::string>();
    if (file.contains("corpora"))
        for (const auto& c : file["corpora"])
            setup.corpora.emplace_back(c.at("name").get<std::string>(),
                                       c.at("path").get<std::string>());

    if (passed(cmd, "--seed")) {
        setup.pipe.split.seed = f.seed;
        setup.pipe.embedding.seed = f.seed;
        setup.pipe.model.seed = f.seed;
    }

    json chars_patch = json::object();
    if (passed(cmd, "--delimiters")) chars_patch["delimiters"] = f.delimiters;
    if (passed(cmd, "--extra-delimiters")) chars_patch["extra_delimiters"] = f.extra_delimiters;
    if (passed(cmd, "--ignorables")) chars_patch["ignorables"] = f.ignorables;
    if (passed(cmd, "--sentence-final")) chars_patch["sentence_final"] = f.sentence_final;
    if (passed(cmd, "--boundary-marks")) chars_patch["boundary_marks"] = f.boundary_marks;
    if (!chars_patch.empty()) {
        json merged = seg::chars_to_json(setup.pipe.chars);
        merged.update(chars_patch);
        setup.pipe.chars = seg::chars_from_json(merged);
    }

    if (passed(cmd, "--train-fraction")) setup.pipe.split.train_fraction = f.train_fraction;
    if (passed(cmd, "--split-seed")) setup.pipe.split.seed = f.split_seed;
    if (passed(cmd, "--split-unit")) {
        if (f.split_unit == "document")
            setup.pipe.split.unit = seg::SplitUnit::Document;
        else if (f.split_unit == "sequence")
            setup.pipe.split.unit = seg::SplitUnit::Sequence;
        else
            throw seg::ConfigError("--split-unit must be document or sequence");
    }

    if (passed(cmd, "--dim")) setup.pipe.embedding.dim = f.dim;
    if (passed(cmd, "--window")) setup.pipe.embedding.window = f.window;
    if (passed(cmd, "--min-count")) setup.pipe.embedding.min_count = f.min_count;
    if (passed(cmd, "--iter")) setup.pipe.embedding.epochs = f.iter;
    if (passed(cmd, "--batch-words")) setup.pipe.embedding.batch_words = f.batch_words;
    if (passed(cmd, "--negatives")) setup.pipe.embedding.negatives = f.negatives;
    if (passed(cmd, "--alpha")) setup.pipe.embedding.alpha = f.alpha;
    if (passed(cmd, "--subsample")) setup.pipe.embedding.subsample = f.subsample;
    if (passed(cmd, "--embed-seed")) setup.pipe.embedding.seed = f.embed_seed;
    if (passed(cmd, "--full-corpus")) setup.pipe.embed_full_corpora = true;

    if (passed(cmd, "--layers")) setup.pipe.model.num_layers = f.layers;
    if (passed(cmd, "--output-dim")) setup.pipe.model.layer_output_dim = f.output_dim;
    if (passed(cmd, "--context")) setup.pipe.model.context_len = f.context;
    if (passed(cmd, "--context-offset")) setup.pipe.model.context_offset = f.context_offset;
    if (passed(cmd, "--batch-size")) setup.pipe.model.batch_size = f.batch_size;
    if (passed(cmd, "--epochs")) setup.pipe.model.epochs = f.epochs;
    if (passed(cmd, "--lr")) setup.pipe.model.learning_rate = f.lr;
    if (passed(cmd, "--model-seed")) setup.pipe.model.seed = f.model_seed;
    if (passed(cmd, "--head-at-last-step")) setup.pipe.model.head_at_last_step = true;

    if (passed(cmd, "--threads")) setup.pipe.threads = f.threads;
    if (passed(cmd, "--out")) setup.out = f.out_dir;

    for (const std::string& arg : f.corpus_args) {
        const std::size_t eq = arg.find('=');
        if (eq == std::string::npos)
            setup.corpora.emplace_back(fs::path(arg).stem().string(), arg);
        else
            setup.corpora.emplace_back(arg.substr(0, eq), arg.substr(eq + 1));
    }
    return setup;
}

std::vector<seg::Corpus> load_corpora(const RunSetup& setup) {
    if (setup.corpora.empty())
        throw seg::ConfigError("no corpora given; pass --corpus NAME=PATH or a config file");
    std::vector<seg::Corpus> out;
    for (const auto& [name, path] : setup.corpora) {
        seg::Corpus c = seg::load_corpus(name, path);
        if (c.documents.empty())
            std::cerr << "warning: corpus '" << name << "' has no documents\n";
        out.push_back(std::move(c));
    }
    return out;
}

void write_manifest(const RunSetup& setup, const std::string& command,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["config"] = seg::pipeline_config_json(setup.pipe);
    m["config_hash"] = config_hash(m["config"]);
    m["seeds"] = {{"split", setup.pipe.split.seed},
                  {"embedding", setup.pipe.embedding.seed},
                  {"model", setup.pipe.model.seed}};
    json inputs = json::array();
    for (const auto& [name, path] : setup.corpora) inputs.push_back({{"name", name}, {"path", path}});
    m["inputs"] = std::move(inputs);
    m["outputs"] = outputs;
    seg::write_file(setup.out / (command + "_manifest.json"), m.dump(2) + "\n");
}

// ---------------------------------------------------------------------- stats

int cmd_stats(const RunSetup& setup) {
    const auto corpora = load_corpora(setup);
    json out;
    if (corpora.size() == 1) {
        out = seg::stats_json(corpora[0].name,
                              seg::compute_stats(corpora[0], setup.pipe.chars,
                                                 setup.pipe.threads));
    } else {
        out = json::array();
        for (const auto& c : corpora)
            out.push_back(
                seg::stats_json(c.name, seg::compute_stats(c, setup.pipe.chars,
                                                           setup.pipe.threads)));
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

// -------------------------------------------------------------------- prepare

int cmd_prepare(const RunSetup& setup, bool do_split) {
    const auto corpora = load_corpora(setup);
    fs::create_directories(setup.out);
    std::vector<std::string> outputs;
    for (const auto& corpus : corpora) {
        if (do_split) {
            const auto sr = seg::split(corpus, setup.pipe.split, setup.pipe.chars);
            if (sr.train_empty)
                std::cerr << "warning: corpus '" << corpus.name
                          << "' yields an empty train portion\n";
            std::cerr << "corpus " << corpus.name << ": train character share "
                      << sr.train_char_fraction << "\n";
            for (const auto& [portion, suffix] :
                 {std::pair{&sr.train, ".train.tsv"}, std::pair{&sr.test, ".test.tsv"}}) {
                const auto seqs = seg::strip_corpus(*portion, setup.pipe.chars,
                                                    setup.pipe.threads);
                const fs::path p = setup.out / (corpus.name + suffix);
                seg::write_file(p, seg::to_labeled_tsv(seqs));
                outputs.push_back(p.string());
            }
        } else {
            const auto seqs = seg::strip_corpus(corpus, setup.pipe.chars, setup.pipe.threads);
            const fs::path p = setup.out / (corpus.name + ".tsv");
            seg::write_file(p, seg::to_labeled_tsv(seqs));
            outputs.push_back(p.string());
        }
    }
    write_manifest(setup, "prepare", outputs);
    return 0;
}

// ---------------------------------------------------------------------- embed

std::vector<seg::LabeledSequence> training_sequences(const RunSetup& setup,
                                                     const std::vector<seg::Corpus>& corpora,
                                                     bool full) {
    std::vector<seg::LabeledSequence> seqs;
    for (const auto& corpus : corpora) {
        if (full) {
            auto s = seg::strip_corpus(corpus, setup.pipe.chars, setup.pipe.threads);
            seqs.insert(seqs.end(), s.begin(), s.end());
        } else {
            const auto sr = seg::split(corpus, setup.pipe.split, setup.pipe.chars);
            if (sr.train_empty)
                std::cerr << "warning: corpus '" << corpus.name
                          << "' yields an empty train portion\n";
            auto s = seg::strip_corpus(sr.train, setup.pipe.chars, setup.pipe.threads);
            seqs.insert(seqs.end(), s.begin(), s.end());
        }
    }
    return seqs;
}

int cmd_embed(const RunSetup& setup, bool text_export) {
    const auto corpora = load_corpora(setup);
    const auto seqs = training_sequences(setup, corpora, setup.pipe.embed_full_corpora);
    const auto result =
        seg::train_embeddings(seqs, setup.pipe.embedding, setup.pipe.embedding_threads);

    fs::create_directories(setup.out);
    const fs::path emb_path = setup.out / "embeddings.emb";
    seg::save_embeddings(result.matrix, setup.pipe.embedding, emb_path);
    std::vector<std::string> outputs{emb_path.string()};
    if (text_export) {
        const fs::path txt_path = setup.out / "embeddings.txt";
        std::ofstream txt(txt_path, std::ios::binary | std::ios::trunc);
        seg::export_embeddings_text(result.matrix, txt);
        outputs.push_back(txt_path.string());
    }
    write_manifest(setup, "embed", outputs);
    std::cerr << "vocabulary " << result.matrix.vocab.size() << ", first-epoch loss "
              << result.epoch_mean_loss.front() << ", last-epoch loss "
              << result.epoch_mean_loss.back() << "\n";
    return 0;
}

// ---------------------------------------------------------------------- train

int cmd_train(const RunSetup& setup, const std::string& embeddings_path) {
    if (embeddings_path.empty()) throw seg::ConfigError("--embeddings is required");
    const auto corpora = load_corpora(setup);
    const auto matrix = seg::load_embeddings(embeddings_path);
    const auto seqs = training_sequences(setup, corpora, false);
    const auto result = seg::train_model(seqs, matrix, setup.pipe.model, setup.pipe.threads);

    fs::create_directories(setup.out);
    const fs::path ckpt = setup.out / "model.ckpt";
    seg::save_checkpoint(result.stack, result.loss_curve, ckpt);
    write_manifest(setup, "train", {ckpt.string()});
    if (!result.loss_curve.empty())
        std::cerr << "epochs " << result.loss_curve.size() << ", final mean loss "
                  << result.loss_curve.back() << "\n";
    return 0;
}

// -------------------------------------------------------------------- segment

int cmd_segment(const RunSetup& setup, const std::string& model_path,
                const std::string& embeddings_path, const std::string& in_path,
                const std::string& out_path) {
    if (model_path.empty() || embeddings_path.empty() || in_path.empty())
        throw seg::ConfigError("--model, --embeddings and --in are required");
    const auto matrix = seg::load_embeddings(embeddings_path);
    const auto stack = seg::load_checkpoint(model_path);

    const seg::RawDocument doc{fs::path(in_path).stem().string(),
                               seg::utf8::decode(seg::read_file(in_path), in_path)};
    // Any existing punctuation is stripped first; the classifier sees content
    // characters only.
    const auto seq = seg::strip_and_label(doc, setup.pipe.chars);
    const auto labels =
        seg::predict_boundaries(seq.chars, matrix, stack, setup.pipe.threads);

    std::u32string out_text;
    for (std::size_t i = 0; i < seq.chars.size(); ++i) {
        out_text.push_back(seq.chars[i]);
        if (labels[i] == seg::Label::Boundary) out_text.push_back(U'。');
    }
    const std::string bytes = seg::utf8::encode(out_text) + "\n";
    if (out_path.empty()) {
        std::cout << bytes;
    } else {
        fs::create_directories(fs::path(out_path).parent_path().empty()
                                   ? fs::path(".")
                                   : fs::path(out_path).parent_path());
        seg::write_file(out_path, bytes);
    }
    return 0;
}

// ----------------------------------------------------------------------- eval

int cmd_eval(const std::string& gold_path, const std::string& pred_path) {
    if (gold_path.empty() || pred_path.empty())
        throw seg::ConfigError("--gold and --pred are required");
    const auto gold = seg::from_labeled_tsv(seg::read_file(gold_path), gold_path);
    const auto pred = seg::from_labeled_tsv(seg::read_file(pred_path), pred_path);
    if (gold.size() != pred.size())
        throw seg::EvalError("document count mismatch: " + gold_path + " has " +
                             std::to_string(gold.size()) + " documents, " + pred_path + " has " +
                             std::to_string(pred.size()));
    seg::ConfusionCounts counts;
    for (std::size_t d = 0; d < gold.size(); ++d) {
        if (gold[d].size() != pred[d].size())
            throw seg::EvalError("length mismatch in document " + std::to_string(d) + ": gold " +
                                 std::to_string(gold[d].size()) + " labels, predicted " +
                                 std::to_string(pred[d].size()));
        const auto part = seg::score(gold[d].labels, pred[d].labels);
        counts.tp += part.counts.tp;
        counts.fp += part.counts.fp;
        counts.fn += part.counts.fn;
        counts.tn += part.counts.tn;
    }
    const auto report = seg::report_from_counts(counts);
    json j;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f1"] = report.f1;
    j["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn}, {"tn", counts.tn}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

// --------------------------------------------------------------------- matrix

int cmd_matrix(const RunSetup& setup, const std::string& manifest_path,
               const std::string& registry_path) {
    if (manifest_path.empty()) throw seg::ConfigError("--manifest is required");
    const auto specs = seg::load_manifest(manifest_path);

    seg::CorpusRegistry registry;
    RunSetup reg_setup = setup;
    if (!registry_path.empty()) {
        json reg;
        try {
            reg = json::parse(seg::read_file(registry_path));
        } catch (const json::exception& e) {
            throw seg::ConfigError("malformed registry " + registry_path + ": " + e.what());
        }
        if (!reg.contains("corpora"))
            throw seg::ConfigError("registry " + registry_path + " lacks a \"corpora\" list");
        reg_setup.corpora.clear();
        const fs::path base = fs::path(registry_path).parent_path();
        for (const auto& c : reg["corpora"]) {
            fs::path p = c.at("path").get<std::string>();
            if (p.is_relative()) p = base / p;
            reg_setup.corpora.emplace_back(c.at("name").get<std::string>(), p.string());
        }
    }
    for (auto& corpus : load_corpora(reg_setup)) registry.add(std::move(corpus));

    const auto result = seg::run_matrix(specs, registry, setup.pipe);

    fs::create_directories(setup.out);
    const fs::path csv_path = setup.out / "matrix.csv";
    const fs::path json_path = setup.out / "matrix.json";
    {
        std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
        seg::export_matrix_csv(result, csv);
        std::ofstream js(json_path, std::ios::binary | std::ios::trunc);
        seg::export_matrix_json(result, js);
    }
    write_manifest(setup, "matrix", {csv_path.string(), json_path.string()});

    int failed = 0;
    for (const auto& row : result.rows) {
        if (row.report)
            std::cerr << "experiment " << row.spec.id << ": F1 " << row.report->f1 << "\n";
        else {
            std::cerr << "experiment " << row.spec.id << ": error: " << row.error << "\n";
            ++failed;
        }
    }
    std::cerr << result.rows.size() - failed << "/" << result.rows.size() << " rows completed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classical-Chinese sentence segmentation toolkit"};
    app.require_subcommand(1);

    Flags f;
    bool do_split = false, text_export = false;
    std::string embeddings_path, model_path, in_path, out_file, gold_path, pred_path,
        manifest_path, registry_path;

    CLI::App* stats = app.add_subcommand("stats", "Corpus statistics (noc, nop, ratio) as JSON");
    add_common_flags(stats, f);
    add_corpus_flags(stats, f);
    add_chars_flags(stats, f);

    CLI::App* prepare =
        app.add_subcommand("prepare", "Strip punctuation and write labeled sequences");
    add_common_flags(prepare, f);
    add_corpus_flags(prepare, f);
    add_chars_flags(prepare, f);
    add_split_flags(prepare, f);
    prepare->add_flag("--split", do_split, "Write train/test portions instead of full corpora");

    CLI::App* embed = app.add_subcommand("embed", "Train skip-gram character embeddings");
    add_common_flags(embed, f);
    add_corpus_flags(embed, f);
    add_chars_flags(embed, f);
    add_split_flags(embed, f);
    add_embed_flags(embed, f);
    embed->add_flag("--text-export", text_export, "Also write the plain-text vector format");

    CLI::App* train = app.add_subcommand("train", "Train the boundary classifier");
    add_common_flags(train, f);
    add_corpus_flags(train, f);
    add_chars_flags(train, f);
    add_split_flags(train, f);
    add_model_flags(train, f);
    train->add_option("--embeddings", embeddings_path, "Embedding file from `embed`");

    CLI::App* segment = app.add_subcommand("segment", "Insert boundaries into plain text");
    add_common_flags(segment, f);
    add_chars_flags(segment, f);
    segment->add_option("--model", model_path, "Model checkpoint");
    segment->add_option("--embeddings", embeddings_path, "Embedding file");
    segment->add_option("--in", in_path, "Input text file");
    segment->add_option("--out-file", out_file, "Output file (stdout when absent)");

    CLI::App* eval = app.add_subcommand("eval", "Score predicted labels against gold labels");
    eval->add_option("--gold", gold_path, "Gold labeled TSV");
    eval->add_option("--pred", pred_path, "Predicted labeled TSV");

    CLI::App* matrix = app.add_subcommand("matrix", "Run an experiment manifest");
    add_common_flags(matrix, f);
    add_corpus_flags(matrix, f);
    add_chars_flags(matrix, f);
    add_split_flags(matrix, f);
    add_embed_flags(matrix, f);
    add_model_flags(matrix, f);
    matrix->add_option("--manifest", manifest_path, "Experiment manifest JSON");
    matrix->add_option("--registry", registry_path, "Corpus registry JSON");
    matrix->add_flag("--no-cache", "Disable embedding/model reuse across rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion")
            return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        RunSetup setup = assemble(cmd, f);
        if (cmd == stats) return cmd_stats(setup);
        if (cmd == prepare) return cmd_prepare(setup, do_split);
        if (cmd == embed) {
            // `embed --threads` shards embedding training; determinism is
            // forfeited in that mode by contract.
            setup.pipe.embedding_threads = setup.pipe.threads;
            return cmd_embed(setup, text_export);
        }
        if (cmd == train) return cmd_train(setup, embeddings_path);
        if (cmd == segment) return cmd_segment(setup, model_path, embeddings_path, in_path, out_file);
        if (cmd == eval) return cmd_eval(gold_path, pred_path);
        if (cmd == matrix) {
            if (cmd->count("--no-cache")) setup.pipe.cache = false;
            return cmd_matrix(setup, manifest_path, registry_path);
        }
        return 2;
    } catch (const seg::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
