#ifndef SEG_EXPERIMENT_HPP
#define SEG_EXPERIMENT_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "seg/corpus.hpp"
#include "seg/embedding.hpp"
#include "seg/eval.hpp"
#include "seg/model.hpp"

namespace seg {

// One experiment row: which corpora feed the embeddings, which feed the
// classifier, and which single corpus is tested.
struct ExperimentSpec {
    int id = 0;
    std::vector<std::string> embed_set;  // nonempty
    std::vector<std::string> train_set;  // nonempty
    std::string test;
};

// Everything a run needs besides the corpora themselves. One SplitSpec is
// shared by all corpora of a run, so a corpus appearing in several roles
// keeps one consistent partition.
struct PipelineConfig {
    CharClassConfig chars = CharClassConfig::defaults();
    SplitSpec split;
    EmbeddingConfig embedding;
    ModelConfig model;
    // Default trains embeddings on train portions only, keeping test
    // characters' contexts unseen; true uses the full corpora.
    bool embed_full_corpora = false;
    // Deterministic parallelism (corpus prep, batch gradients, inference).
    int threads = 1;
    // Sharded embedding training; > 1 forfeits determinism, so it stays off
    // for reproducible runs.
    int embedding_threads = 1;
    bool cache = true;  // reuse embeddings/models across matrix rows
};

class CorpusRegistry {
public:
    void add(Corpus corpus);  // throws ConfigError on duplicate name
    const Corpus& get(const std::string& name) const;  // throws ConfigError when missing
    bool has(const std::string& name) const;
    // Registration order; also the canonical processing order for corpus
    // sets, so {M,O} and {O,M} mean the same experiment.
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::map<std::string, Corpus> corpora_;
};

// Document ids consumed by each stage, for test-isolation checks.
struct ExperimentTrace {
    std::vector<std::string> embed_docs;
    std::vector<std::string> train_docs;
    std::vector<std::string> test_docs;
};

EvalReport run_experiment(const ExperimentSpec& spec, const CorpusRegistry& registry,
                          const PipelineConfig& config, ExperimentTrace* trace = nullptr);

struct MatrixRow {
    ExperimentSpec spec;
    std::optional<EvalReport> report;  // empty on error
    std::string error;                 // error marker for failed rows
};

struct MatrixProvenance {
    nlohmann::json config_echo;
    std::string started_at;
    std::string finished_at;
};

struct MatrixResult {
    std::vector<MatrixRow> rows;  // one per spec, input order
    MatrixProvenance provenance;
};

// Runs every spec; a failing spec becomes an error row and the rest continue.
// Embeddings are cached per embed_set and models per (embed_set, train_set)
// when config.cache is on; caching never changes any report.
MatrixResult run_matrix(std::span<const ExperimentSpec> specs, const CorpusRegistry& registry,
                        const PipelineConfig& config);

// Manifest: JSON list of {id, embed: [names], train: [names], test: name}.
std::vector<ExperimentSpec> load_manifest(const std::filesystem::path& path);

// CSV columns: id, embed_set, train_set, test, precision, recall, f1.
void export_matrix_csv(const MatrixResult& result, std::ostream& out);

// JSON variant with full provenance; import reproduces the result exactly.
void export_matrix_json(const MatrixResult& result, std::ostream& out);
MatrixResult import_matrix_json(std::istream& in);

nlohmann::json pipeline_config_json(const PipelineConfig& config);

}  // namespace seg

#endif  // SEG_EXPERIMENT_HPP
