#include "seg/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "seg/config_json.hpp"
#include "seg/corpus_io.hpp"
#include "seg/errors.hpp"

namespace seg {

namespace {

std::string now_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string join(std::span<const std::string> names, char sep) {
    std::string out;
    for (const std::string& n : names) {
        if (!out.empty()) out.push_back(sep);
        out += n;
    }
    return out;
}

// Per-corpus split, computed once per run and shared by every role the
// corpus plays.
struct PreparedCorpus {
    std::vector<LabeledSequence> train;
    std::vector<LabeledSequence> test;
    std::vector<LabeledSequence> full;
};

struct RunStore {
    std::map<std::string, PreparedCorpus> prepared;
    std::map<std::string, std::shared_ptr<EmbeddingMatrix>> embeddings;
    std::map<std::string, std::shared_ptr<BiLstmStack>> models;
};

const PreparedCorpus& prepare(const std::string& name, const CorpusRegistry& registry,
                              const PipelineConfig& config, RunStore& store) {
    auto it = store.prepared.find(name);
    if (it != store.prepared.end()) return it->second;
    const Corpus& corpus = registry.get(name);
    const SplitResult sr = split(corpus, config.split, config.chars);
    PreparedCorpus pc;
    pc.train = strip_corpus(sr.train, config.chars, config.threads);
    pc.test = strip_corpus(sr.test, config.chars, config.threads);
    pc.full = strip_corpus(corpus, config.chars, config.threads);
    return store.prepared.emplace(name, std::move(pc)).first->second;
}

// Registry-order canonicalization: validates every name and returns the set
// ordered as registered, deduplicated.
std::vector<std::string> canonical_set(std::span<const std::string> names,
                                       const CorpusRegistry& registry, const char* role) {
    if (names.empty())
        throw ConfigError(std::string(role) + " corpus set must not be empty");
    for (const std::string& n : names)
        if (!registry.has(n))
            throw ConfigError("unknown corpus '" + n + "' in " + role + " set");
    std::vector<std::string> out;
    for (const std::string& reg : registry.names())
        if (std::find(names.begin(), names.end(), reg) != names.end()) out.push_back(reg);
    return out;
}

std::shared_ptr<EmbeddingMatrix> embeddings_for(const std::vector<std::string>& embed_set,
                                                const CorpusRegistry& registry,
                                                const PipelineConfig& config, RunStore& store,
                                                ExperimentTrace* trace) {
    const std::string key = join(embed_set, '\x1f');
    if (config.cache) {
        auto it = store.embeddings.find(key);
        if (it != store.embeddings.end()) {
            if (trace) {
                for (const std::string& name : embed_set) {
                    const PreparedCorpus& pc = prepare(name, registry, config, store);
                    const auto& seqs = config.embed_full_corpora ? pc.full : pc.train;
                    for (const auto& s : seqs) trace->embed_docs.push_back(s.id);
                }
            }
            return it->second;
        }
    }
    std::vector<LabeledSequence> seqs;
    for (const std::string& name : embed_set) {
        const PreparedCorpus& pc = prepare(name, registry, config, store);
        const auto& src = config.embed_full_corpora ? pc.full : pc.train;
        seqs.insert(seqs.end(), src.begin(), src.end());
    }
    if (trace)
        for (const auto& s : seqs) trace->embed_docs.push_back(s.id);
    auto result = std::make_shared<EmbeddingMatrix>(
        train_embeddings(seqs, config.embedding, config.embedding_threads).matrix);
    if (config.cache) store.embeddings.emplace(key, result);
    return result;
}

std::shared_ptr<BiLstmStack> model_for(const std::vector<std::string>& embed_set,
                                       const std::vector<std::string>& train_set,
                                       const EmbeddingMatrix& matrix,
                                       const CorpusRegistry& registry,
                                       const PipelineConfig& config, RunStore& store,
                                       ExperimentTrace* trace) {
    const std::string key = join(embed_set, '\x1f') + '\x1e' + join(train_set, '\x1f');
    if (config.cache) {
        auto it = store.models.find(key);
        if (it != store.models.end()) {
            if (trace) {
                for (const std::string& name : train_set) {
                    const PreparedCorpus& pc = prepare(name, registry, config, store);
                    for (const auto& s : pc.train) trace->train_docs.push_back(s.id);
                }
            }
            return it->second;
        }
    }
    std::vector<LabeledSequence> seqs;
    for (const std::string& name : train_set) {
        const PreparedCorpus& pc = prepare(name, registry, config, store);
        seqs.insert(seqs.end(), pc.train.begin(), pc.train.end());
    }
    if (trace)
        for (const auto& s : seqs) trace->train_docs.push_back(s.id);
    auto result = std::make_shared<BiLstmStack>(
        train_model(seqs, matrix, config.model, config.threads).stack);
    if (config.cache) store.models.emplace(key, result);
    return result;
}

EvalReport run_one(const ExperimentSpec& spec, const CorpusRegistry& registry,
                   const PipelineConfig& config, RunStore& store, ExperimentTrace* trace) {
    const auto embed_set = canonical_set(spec.embed_set, registry, "embed");
    const auto train_set = canonical_set(spec.train_set, registry, "train");
    if (!registry.has(spec.test))
        throw ConfigError("unknown test corpus '" + spec.test + "'");

    const auto matrix = embeddings_for(embed_set, registry, config, store, trace);
    const auto stack =
        model_for(embed_set, train_set, *matrix, registry, config, store, trace);

    const PreparedCorpus& pc = prepare(spec.test, registry, config, store);
    ConfusionCounts counts;
    for (const LabeledSequence& seq : pc.test) {
        if (trace) trace->test_docs.push_back(seq.id);
        const std::vector<Label> predicted =
            predict_boundaries(seq.chars, *matrix, *stack, config.threads);
        const EvalReport part = score(seq.labels, predicted);
        counts.tp += part.counts.tp;
        counts.fp += part.counts.fp;
        counts.fn += part.counts.fn;
        counts.tn += part.counts.tn;
    }
    EvalReport report = report_from_counts(counts);
    report.experiment_id = spec.id;
    return report;
}

}  // namespace

void CorpusRegistry::add(Corpus corpus) {
    if (corpora_.count(corpus.name))
        throw ConfigError("corpus '" + corpus.name + "' registered twice");
    names_.push_back(corpus.name);
    corpora_.emplace(corpus.name, std::move(corpus));
}

const Corpus& CorpusRegistry::get(const std::string& name) const {
    auto it = corpora_.find(name);
    if (it == corpora_.end()) throw ConfigError("unknown corpus '" + name + "'");
    return it->second;
}

bool CorpusRegistry::has(const std::string& name) const { return corpora_.count(name) > 0; }

EvalReport run_experiment(const ExperimentSpec& spec, const CorpusRegistry& registry,
                          const PipelineConfig& config, ExperimentTrace* trace) {
    RunStore store;
    return run_one(spec, registry, config, store, trace);
}

MatrixResult run_matrix(std::span<const ExperimentSpec> specs, const CorpusRegistry& registry,
                        const PipelineConfig& config) {
    if (specs.empty()) throw ConfigError("experiment matrix needs at least one spec");
    MatrixResult result;
    result.provenance.config_echo = pipeline_config_json(config);
    result.provenance.started_at = now_utc();
    RunStore store;
    for (const ExperimentSpec& spec : specs) {
        MatrixRow row;
        row.spec = spec;
        try {
            row.report = run_one(spec, registry, config, store, nullptr);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        result.rows.push_back(std::move(row));
    }
    result.provenance.finished_at = now_utc();
    return result;
}

std::vector<ExperimentSpec> load_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw IoError("manifest " + path.string() + " must be a JSON list");
    std::vector<ExperimentSpec> specs;
    for (const auto& row : j) {
        ExperimentSpec spec;
        spec.id = row.at("id").get<int>();
        spec.embed_set = row.at("embed").get<std::vector<std::string>>();
        spec.train_set = row.at("train").get<std::vector<std::string>>();
        spec.test = row.at("test").get<std::string>();
        specs.push_back(std::move(spec));
    }
    return specs;
}

void export_matrix_csv(const MatrixResult& result, std::ostream& out) {
    out << "id,embed_set,train_set,test,precision,recall,f1\n";
    char buf[64];
    for (const MatrixRow& row : result.rows) {
        out << row.spec.id << ',' << join(row.spec.embed_set, '+') << ','
            << join(row.spec.train_set, '+') << ',' << row.spec.test << ',';
        if (row.report) {
            std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f", row.report->precision,
                          row.report->recall, row.report->f1);
            out << buf;
        } else {
            out << ",,";  // error row, numeric fields empty
        }
        out << '\n';
    }
}

namespace {

nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn},
                   {"tn", r.counts.tn}};
    if (r.experiment_id) j["experiment_id"] = *r.experiment_id;
    return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.counts.tp = j.at("counts").at("tp").get<std::uint64_t>();
    r.counts.fp = j.at("counts").at("fp").get<std::uint64_t>();
    r.counts.fn = j.at("counts").at("fn").get<std::uint64_t>();
    r.counts.tn = j.at("counts").at("tn").get<std::uint64_t>();
    if (j.contains("experiment_id")) r.experiment_id = j.at("experiment_id").get<int>();
    return r;
}

}  // namespace

void export_matrix_json(const MatrixResult& result, std::ostream& out) {
    nlohmann::json j;
    j["provenance"] = {{"config", result.provenance.config_echo},
                       {"started_at", result.provenance.started_at},
                       {"finished_at", result.provenance.finished_at}};
    nlohmann::json rows = nlohmann::json::array();
    for (const MatrixRow& row : result.rows) {
        nlohmann::json rj;
        rj["id"] = row.spec.id;
        rj["embed"] = row.spec.embed_set;
        rj["train"] = row.spec.train_set;
        rj["test"] = row.spec.test;
        if (row.report) rj["report"] = report_json(*row.report);
        if (!row.error.empty()) rj["error"] = row.error;
        rows.push_back(std::move(rj));
    }
    j["rows"] = std::move(rows);
    out << j.dump(2) << '\n';
}

MatrixResult import_matrix_json(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed matrix JSON: ") + e.what());
    }
    MatrixResult result;
    result.provenance.config_echo = j.at("provenance").at("config");
    result.provenance.started_at = j.at("provenance").at("started_at").get<std::string>();
    result.provenance.finished_at = j.at("provenance").at("finished_at").get<std::string>();
    for (const auto& rj : j.at("rows")) {
        MatrixRow row;
        row.spec.id = rj.at("id").get<int>();
        row.spec.embed_set = rj.at("embed").get<std::vector<std::string>>();
        row.spec.train_set = rj.at("train").get<std::vector<std::string>>();
        row.spec.test = rj.at("test").get<std::string>();
        if (rj.contains("report")) row.report = report_from_json(rj.at("report"));
        if (rj.contains("error")) row.error = rj.at("error").get<std::string>();
        result.rows.push_back(std::move(row));
    }
    return result;
}

nlohmann::json pipeline_config_json(const PipelineConfig& config) {
    return {
        {"chars", chars_to_json(config.chars)},
        {"split", split_to_json(config.split)},
        {"embedding", embedding_to_json(config.embedding)},
        {"model", model_to_json(config.model)},
        {"embed_full_corpora", config.embed_full_corpora},
        {"threads", config.threads},
        {"embedding_threads", config.embedding_threads},
        {"cache", config.cache},
    };
}

}  // namespace seg
