#include "seg/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "binio.hpp"
#include "json.hpp"
#include "seg/config_json.hpp"
#include "seg/errors.hpp"
#include "seg/utf8.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace seg {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'G', 'E', 'M', 'B', '1', '\n'};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

void pairs_for_center_into(std::span<const std::int32_t> ids, std::size_t i, int b,
                           std::vector<TrainingPair>& out) {
    const std::size_t lo = i >= static_cast<std::size_t>(b) ? i - static_cast<std::size_t>(b) : 0;
    const std::size_t hi = std::min(ids.size() - 1, i + static_cast<std::size_t>(b));
    for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        out.push_back(TrainingPair{ids[i], ids[j]});
    }
}

}  // namespace

void EmbeddingConfig::validate() const {
    if (dim <= 0) throw ConfigError("embedding dim must be positive");
    if (window < 1) throw ConfigError("embedding window must be >= 1");
    if (epochs < 1) throw ConfigError("embedding epochs must be >= 1");
    if (min_count < 1) throw ConfigError("embedding min_count must be >= 1");
    if (negatives < 0) throw ConfigError("embedding negatives must be >= 0");
    if (batch_words < 1) throw ConfigError("embedding batch_words must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("embedding alpha must be positive");
}

Vocab build_vocab(std::span<const LabeledSequence> seqs, int min_count) {
    std::unordered_map<char32_t, std::uint64_t> counts;
    for (const LabeledSequence& seq : seqs)
        for (char32_t c : seq.chars) ++counts[c];

    std::vector<std::pair<char32_t, std::uint64_t>> kept;
    kept.reserve(counts.size());
    for (const auto& [c, n] : counts)
        if (n >= static_cast<std::uint64_t>(min_count)) kept.emplace_back(c, n);
    // Descending count, ties by codepoint: deterministic id assignment.
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocab v;
    v.min_count = min_count;
    v.chars.reserve(kept.size());
    v.counts.reserve(kept.size());
    for (const auto& [c, n] : kept) {
        v.ids.emplace(c, static_cast<std::int32_t>(v.chars.size()));
        v.chars.push_back(c);
        v.counts.push_back(n);
        v.total += n;
    }
    return v;
}

std::span<const double> EmbeddingMatrix::lookup(char32_t c) const {
    if (vocab.size() == 0) throw PipelineError("lookup on empty-vocabulary embedding matrix");
    const std::int32_t id = vocab.id_of(c);
    if (id >= 0) return row(id);
    if (unk.size() != static_cast<std::size_t>(dim))
        throw PipelineError("embedding matrix was never frozen (missing UNK vector)");
    return {unk.data(), static_cast<std::size_t>(dim)};
}

void EmbeddingMatrix::freeze_unk() {
    unk.assign(static_cast<std::size_t>(dim), 0.0);
    const std::size_t n = vocab.size();
    if (n == 0) return;
    for (std::size_t r = 0; r < n; ++r) {
        const double* src = input.data() + r * static_cast<std::size_t>(dim);
        for (int d = 0; d < dim; ++d) unk[static_cast<std::size_t>(d)] += src[d];
    }
    for (double& x : unk) x /= static_cast<double>(n);
}

std::vector<TrainingPair> pairs_for_center(std::span<const std::int32_t> ids, std::size_t i,
                                           int b) {
    std::vector<TrainingPair> out;
    pairs_for_center_into(ids, i, b, out);
    return out;
}

std::vector<TrainingPair> generate_pairs(std::span<const std::int32_t> ids, int window, Rng& rng) {
    std::vector<TrainingPair> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int b = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(window)));
        pairs_for_center_into(ids, i, b, out);
    }
    return out;
}

NoiseSampler::NoiseSampler(const Vocab& vocab) {
    cumulative_.reserve(vocab.size());
    double acc = 0.0;
    for (std::uint64_t n : vocab.counts) {
        acc += std::pow(static_cast<double>(n), 0.75);
        cumulative_.push_back(acc);
    }
}

std::int32_t NoiseSampler::draw(std::int32_t exclude, Rng& rng) const {
    if (cumulative_.size() < 2) return -1;  // nothing to draw besides the excluded id
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double u = rng.uniform() * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const auto id = static_cast<std::int32_t>(it - cumulative_.begin());
        if (id != exclude && id < static_cast<std::int32_t>(cumulative_.size())) return id;
    }
    return -1;
}

double sgns_step(EmbeddingMatrix& matrix, TrainingPair pair,
                 std::span<const std::int32_t> negatives, double alpha) {
    const int dim = matrix.dim;
    double* vc = matrix.row(pair.center).data();
    // Accumulates dL/dv_c so the center row is updated once, after every
    // context row has seen the pre-update v_c.
    thread_local std::vector<double> dvc;
    dvc.assign(static_cast<std::size_t>(dim), 0.0);

    double loss = 0.0;
    auto one_side = [&](std::int32_t ctx_id, bool positive) {
        double* u = matrix.out_row(ctx_id).data();
        double dot = 0.0;
        for (int d = 0; d < dim; ++d) dot += vc[d] * u[d];
        if (!std::isfinite(dot)) throw TrainingError("non-finite dot product in sgns step");
        loss += positive ? -log_sigmoid(dot) : -log_sigmoid(-dot);
        const double g = positive ? sigmoid(dot) - 1.0 : sigmoid(dot);  // dL/d(dot)
        for (int d = 0; d < dim; ++d) {
            dvc[static_cast<std::size_t>(d)] += g * u[d];
            u[d] -= alpha * g * vc[d];
        }
    };

    one_side(pair.context, true);
    for (std::int32_t n : negatives) one_side(n, false);
    for (int d = 0; d < dim; ++d) vc[d] -= alpha * dvc[static_cast<std::size_t>(d)];
    if (!std::isfinite(loss)) throw TrainingError("non-finite loss in sgns step");
    return loss;
}

namespace {

struct TrainState {
    const EmbeddingConfig& cfg;
    EmbeddingMatrix& matrix;
    const NoiseSampler& sampler;
    std::uint64_t total_positions;  // pre-subsample positions across all epochs
};

double decayed_alpha(const EmbeddingConfig& cfg, std::uint64_t processed, std::uint64_t total) {
    // Chunked linear decay: the rate changes once per batch_words positions.
    const std::uint64_t chunk_start =
        processed - processed % static_cast<std::uint64_t>(cfg.batch_words);
    const double progress = total == 0
                                ? 0.0
                                : static_cast<double>(chunk_start) / static_cast<double>(total);
    return std::max(cfg.alpha * (1.0 - progress), cfg.alpha * cfg.min_alpha_factor);
}

// Runs one epoch pass over one id stream. `processed` is the global position
// counter used for the learning-rate schedule.
void train_stream(TrainState& st, std::span<const std::int32_t> ids, Rng& rng,
                  std::atomic<std::uint64_t>& processed, double& loss_sum,
                  std::uint64_t& steps) {
    thread_local std::vector<std::int32_t> subsampled;
    thread_local std::vector<std::int32_t> negbuf;
    thread_local std::vector<TrainingPair> pairbuf;

    std::span<const std::int32_t> seq = ids;
    if (st.cfg.subsample > 0.0) {
        subsampled.clear();
        for (std::int32_t id : ids) {
            const double f = static_cast<double>(st.matrix.vocab.counts[static_cast<std::size_t>(id)]) /
                             static_cast<double>(st.matrix.vocab.total);
            const double keep =
                std::min(1.0, (std::sqrt(f / st.cfg.subsample) + 1.0) * st.cfg.subsample / f);
            if (rng.uniform() < keep) subsampled.push_back(id);
        }
        seq = subsampled;
    }

    for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::uint64_t p = processed.fetch_add(1, std::memory_order_relaxed);
        const double alpha = decayed_alpha(st.cfg, p, st.total_positions);
        const int b = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(st.cfg.window)));
        pairbuf.clear();
        pairs_for_center_into(seq, i, b, pairbuf);
        for (const TrainingPair& pair : pairbuf) {
            negbuf.clear();
            for (int k = 0; k < st.cfg.negatives; ++k) {
                const std::int32_t neg = st.sampler.draw(pair.context, rng);
                if (neg >= 0) negbuf.push_back(neg);
            }
            try {
                loss_sum += sgns_step(st.matrix, pair, negbuf, alpha);
            } catch (const TrainingError& e) {
                throw TrainingError(std::string(e.what()) + " (position " + std::to_string(i) +
                                    ")");
            }
            ++steps;
        }
    }
}

}  // namespace

EmbeddingTrainResult train_embeddings(std::span<const LabeledSequence> seqs,
                                      const EmbeddingConfig& config, int threads) {
    config.validate();
    EmbeddingTrainResult result;
    EmbeddingMatrix& matrix = result.matrix;
    matrix.dim = config.dim;
    matrix.vocab = build_vocab(seqs, config.min_count);
    const std::size_t vsize = matrix.vocab.size();
    if (vsize == 0)
        throw ConfigError("embedding training produced an empty vocabulary "
                          "(no characters reach min_count)");

    // word2vec-style init: input rows uniform in [-0.5/dim, 0.5/dim], output
    // rows zero.
    Rng rng(config.seed);
    matrix.input.resize(vsize * static_cast<std::size_t>(config.dim));
    matrix.output.assign(vsize * static_cast<std::size_t>(config.dim), 0.0);
    const double r = 0.5 / config.dim;
    for (double& x : matrix.input) x = rng.uniform(-r, r);

    std::vector<std::vector<std::int32_t>> streams;
    streams.reserve(seqs.size());
    std::uint64_t positions = 0;
    for (const LabeledSequence& seq : seqs) {
        std::vector<std::int32_t> ids;
        ids.reserve(seq.size());
        for (char32_t c : seq.chars) {
            const std::int32_t id = matrix.vocab.id_of(c);
            if (id >= 0) ids.push_back(id);
        }
        positions += ids.size();
        streams.push_back(std::move(ids));
    }

    const NoiseSampler sampler(matrix.vocab);
    TrainState st{config, matrix, sampler,
                  positions * static_cast<std::uint64_t>(config.epochs)};
    std::atomic<std::uint64_t> processed{0};

    if (threads <= 1) {
        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            double loss_sum = 0.0;
            std::uint64_t steps = 0;
            for (const auto& ids : streams)
                train_stream(st, ids, rng, processed, loss_sum, steps);
            result.epoch_mean_loss.push_back(steps ? loss_sum / static_cast<double>(steps) : 0.0);
        }
    } else {
        // Sharded mode: unsynchronized updates on the shared matrix, one RNG
        // per worker. Deterministic reproduction is forfeited by contract.
        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            double loss_sum = 0.0;
            std::uint64_t steps = 0;
            std::string error;
#ifdef _OPENMP
#pragma omp parallel num_threads(threads) reduction(+ : loss_sum, steps)
#endif
            {
#ifdef _OPENMP
                const int tid = omp_get_thread_num();
                const int nth = omp_get_num_threads();
#else
                const int tid = 0;
                const int nth = 1;
#endif
                Rng trng(splitmix64(config.seed + 0x9e37 * static_cast<std::uint64_t>(epoch) +
                                    static_cast<std::uint64_t>(tid) + 1));
                try {
                    for (std::size_t si = static_cast<std::size_t>(tid); si < streams.size();
                         si += static_cast<std::size_t>(nth))
                        train_stream(st, streams[si], trng, processed, loss_sum, steps);
                } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
                    if (error.empty()) error = e.what();
                }
            }
            if (!error.empty()) throw TrainingError(error);
            result.epoch_mean_loss.push_back(steps ? loss_sum / static_cast<double>(steps) : 0.0);
        }
    }

    matrix.freeze_unk();
    return result;
}

void save_embeddings(const EmbeddingMatrix& matrix, const EmbeddingConfig& config,
                     const std::filesystem::path& path) {
    nlohmann::json header;
    header["dim"] = matrix.dim;
    header["seed"] = config.seed;
    header["config"] = embedding_to_json(config);
    nlohmann::json vocab = nlohmann::json::array();
    for (std::size_t i = 0; i < matrix.vocab.size(); ++i) {
        std::string c;
        utf8::append(c, matrix.vocab.chars[i]);
        vocab.push_back({{"c", c}, {"n", matrix.vocab.counts[i]}});
    }
    header["vocab"] = std::move(vocab);
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof(kMagic));
    binio::write_u64(out, header_str.size());
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    binio::write_f64_block(out, matrix.input);
    binio::write_f64_block(out, matrix.output);
    if (!out) throw IoError("write failed for " + path.string());
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingConfig* config_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError(path.string() + " is not an embedding file");
    const std::uint64_t header_len = binio::read_u64(in);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw IoError("truncated embedding header in " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed embedding header in " + path.string() + ": " + e.what());
    }

    EmbeddingMatrix matrix;
    matrix.dim = header.at("dim").get<int>();
    if (config_out) *config_out = embedding_from_json(header.at("config"));
    for (const auto& entry : header.at("vocab")) {
        const std::u32string c = utf8::decode(entry.at("c").get<std::string>(), path.string());
        if (c.size() != 1) throw IoError("bad vocab entry in " + path.string());
        matrix.vocab.ids.emplace(c[0], static_cast<std::int32_t>(matrix.vocab.chars.size()));
        matrix.vocab.chars.push_back(c[0]);
        matrix.vocab.counts.push_back(entry.at("n").get<std::uint64_t>());
        matrix.vocab.total += matrix.vocab.counts.back();
    }
    const std::size_t n = matrix.vocab.size() * static_cast<std::size_t>(matrix.dim);
    matrix.input.resize(n);
    matrix.output.resize(n);
    binio::read_f64_block(in, matrix.input);
    binio::read_f64_block(in, matrix.output);
    matrix.freeze_unk();
    return matrix;
}

void export_embeddings_text(const EmbeddingMatrix& matrix, std::ostream& out) {
    out << matrix.vocab.size() << ' ' << matrix.dim << '\n';
    std::ostringstream line;
    line.precision(9);
    for (std::size_t i = 0; i < matrix.vocab.size(); ++i) {
        line.str("");
        std::string c;
        utf8::append(c, matrix.vocab.chars[i]);
        line << c;
        const auto row = matrix.row(static_cast<std::int32_t>(i));
        for (double x : row) line << ' ' << x;
        out << line.str() << '\n';
    }
}

}  // namespace seg
