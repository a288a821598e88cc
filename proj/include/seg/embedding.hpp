#ifndef SEG_EMBEDDING_HPP
#define SEG_EMBEDDING_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "seg/corpus.hpp"
#include "seg/rng.hpp"

namespace seg {

struct Vocab {
    std::vector<char32_t> chars;         // id -> character, ids dense in [0, |V|)
    std::vector<std::uint64_t> counts;   // id -> occurrence count
    std::unordered_map<char32_t, std::int32_t> ids;
    std::uint64_t total = 0;             // sum of kept counts
    int min_count = 1;

    std::size_t size() const { return chars.size(); }
    // -1 when absent.
    std::int32_t id_of(char32_t c) const {
        auto it = ids.find(c);
        return it == ids.end() ? -1 : it->second;
    }
};

// Counts characters across sequences (labels ignored) and keeps those with
// count >= min_count. Ids are assigned by descending count, ties by
// codepoint, so the numbering is deterministic.
Vocab build_vocab(std::span<const LabeledSequence> seqs, int min_count = 1);

struct EmbeddingConfig {
    int dim = 300;
    int window = 12;          // maximum one-sided context width
    int min_count = 1;
    int epochs = 50;
    int batch_words = 8000;   // learning-rate decay granularity
    int negatives = 5;
    double alpha = 0.025;     // initial learning rate, decays linearly
    double min_alpha_factor = 1e-4;  // floor = alpha * this
    double subsample = 0.0;   // frequent-character subsampling threshold, 0 = off
    std::uint64_t seed = 42;

    void validate() const;  // throws ConfigError
};

struct EmbeddingMatrix {
    int dim = 0;
    Vocab vocab;
    std::vector<double> input;   // |V| x dim row-major; the published vectors
    std::vector<double> output;  // |V| x dim; negative-sampling context weights
    std::vector<double> unk;     // mean input row, fixed at freeze time

    std::span<const double> row(std::int32_t id) const {
        return {input.data() + static_cast<std::size_t>(id) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> row(std::int32_t id) {
        return {input.data() + static_cast<std::size_t>(id) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> out_row(std::int32_t id) const {
        return {output.data() + static_cast<std::size_t>(id) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> out_row(std::int32_t id) {
        return {output.data() + static_cast<std::size_t>(id) * dim, static_cast<std::size_t>(dim)};
    }

    // In-vocab character -> its input vector; anything else -> the UNK mean
    // vector. Throws PipelineError on an empty vocabulary.
    std::span<const double> lookup(char32_t c) const;

    // Computes the UNK fallback (mean of all input rows). Called once when
    // training finishes.
    void freeze_unk();
};

struct TrainingPair {
    std::int32_t center;
    std::int32_t context;
    bool operator==(const TrainingPair&) const = default;
};

// Pairs for center position i under an already-drawn shrunk window b:
// (ids[i], ids[j]) for all j != i with |i - j| <= b, in ascending j.
std::vector<TrainingPair> pairs_for_center(std::span<const std::int32_t> ids, std::size_t i,
                                           int b);

// Full skip-gram pair stream for one sequence: per center, b is drawn
// uniformly from [1, window]. Never crosses sequence (document) boundaries by
// construction.
std::vector<TrainingPair> generate_pairs(std::span<const std::int32_t> ids, int window, Rng& rng);

// Noise distribution for negative sampling: unigram counts raised to 0.75.
class NoiseSampler {
public:
    explicit NoiseSampler(const Vocab& vocab);
    // Draws one id, redrawing to exclude `exclude`. Returns -1 when the
    // distribution has no other id to offer.
    std::int32_t draw(std::int32_t exclude, Rng& rng) const;

private:
    std::vector<double> cumulative_;
};

// One SGD step on the SGNS objective
//   L = -log sigmoid(u_o . v_c) - sum_n log sigmoid(-u_n . v_c)
// updating v_c, u_o and every u_n in place with step size alpha. Returns the
// pre-update loss. Throws TrainingError on a non-finite intermediate.
double sgns_step(EmbeddingMatrix& matrix, TrainingPair pair,
                 std::span<const std::int32_t> negatives, double alpha);

struct EmbeddingTrainResult {
    EmbeddingMatrix matrix;
    std::vector<double> epoch_mean_loss;  // one entry per epoch
};

// Trains over the given sequences (typically the train portions of one or
// more corpora). Single-threaded runs are bit-reproducible for a fixed seed.
// threads > 1 shards sequences across workers with unsynchronized updates;
// that mode is faster but explicitly nondeterministic.
EmbeddingTrainResult train_embeddings(std::span<const LabeledSequence> seqs,
                                      const EmbeddingConfig& config, int threads = 1);

// Binary container: magic, JSON header {dim, vocab in id order, config echo,
// seed}, then float64 little-endian input and output blocks, row-major.
void save_embeddings(const EmbeddingMatrix& matrix, const EmbeddingConfig& config,
                     const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                EmbeddingConfig* config_out = nullptr);

// Plain-text interchange format: first line "|V| dim", then one
// "char v1 v2 ..." line per vocabulary entry in id order.
void export_embeddings_text(const EmbeddingMatrix& matrix, std::ostream& out);

}  // namespace seg

#endif  // SEG_EMBEDDING_HPP
