#ifndef SEG_MODEL_HPP
#define SEG_MODEL_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seg/corpus.hpp"
#include "seg/embedding.hpp"
#include "seg/rng.hpp"

namespace seg {

struct ModelConfig {
    int num_layers = 5;
    int layer_output_dim = 400;  // concatenated bidirectional output; half per direction
    int context_len = 6;
    int context_offset = 2;      // characters before the target inside the window
    int num_classes = 2;
    int input_dim = 300;         // set from the embedding matrix at training time
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 64;
    int epochs = 10;
    std::uint64_t seed = 42;
    // Head consumes the top layer at the target position by default; this
    // switches it to the final step of the window.
    bool head_at_last_step = false;

    int hidden() const { return layer_output_dim / 2; }
    int layer_input_dim(int layer) const { return layer == 0 ? input_dim : layer_output_dim; }
    int head_position() const { return head_at_last_step ? context_len - 1 : context_offset; }
    void validate() const;  // throws ConfigError
};

// Flat parameter block layout, also the checkpoint order:
//   layer 0 forward W,U,b; layer 0 backward W,U,b; layer 1 forward ...;
//   head W; head b.
// Within a direction, W is 4H x D, U is 4H x H, b is 4H, with gate rows
// ordered input, forget, cell, output.
struct ParamLayout {
    int layers = 0;
    int hidden = 0;
    int out_dim = 0;
    int classes = 0;
    int input_dim = 0;

    explicit ParamLayout(const ModelConfig& cfg)
        : layers(cfg.num_layers), hidden(cfg.hidden()), out_dim(cfg.layer_output_dim),
          classes(cfg.num_classes), input_dim(cfg.input_dim) {}

    std::size_t dir_size(int layer) const {
        const std::size_t h4 = 4 * static_cast<std::size_t>(hidden);
        const std::size_t d = static_cast<std::size_t>(layer == 0 ? input_dim : out_dim);
        return h4 * d + h4 * static_cast<std::size_t>(hidden) + h4;
    }
    std::size_t layer_base(int layer) const {
        std::size_t off = 0;
        for (int l = 0; l < layer; ++l) off += 2 * dir_size(l);
        return off;
    }
    std::size_t w_offset(int layer, int dir) const {
        return layer_base(layer) + static_cast<std::size_t>(dir) * dir_size(layer);
    }
    std::size_t u_offset(int layer, int dir) const {
        const std::size_t d = static_cast<std::size_t>(layer == 0 ? input_dim : out_dim);
        return w_offset(layer, dir) + 4 * static_cast<std::size_t>(hidden) * d;
    }
    std::size_t b_offset(int layer, int dir) const {
        return u_offset(layer, dir) +
               4 * static_cast<std::size_t>(hidden) * static_cast<std::size_t>(hidden);
    }
    std::size_t head_w_offset() const { return layer_base(layers); }
    std::size_t head_b_offset() const {
        return head_w_offset() + static_cast<std::size_t>(classes) * out_dim;
    }
    std::size_t total() const { return head_b_offset() + static_cast<std::size_t>(classes); }
};

struct BiLstmStack {
    ModelConfig cfg;
    std::vector<double> params;

    ParamLayout layout() const { return ParamLayout(cfg); }
    std::size_t param_count() const { return params.size(); }

    std::span<const double> w(int layer, int dir) const;
    std::span<const double> u(int layer, int dir) const;
    std::span<const double> b(int layer, int dir) const;
    std::span<const double> head_w() const;
    std::span<const double> head_b() const;

    // Seeded init: W and U uniform in +-1/sqrt(fan_in), biases zero except the
    // forget gates, which start at 1.
    static BiLstmStack init(const ModelConfig& cfg, Rng& rng);
};

// One classifier input: context_len embedding rows (zero PAD rows where the
// window overruns the sequence) and the center character's label.
struct WindowExample {
    std::vector<double> window;  // context_len * input_dim, row-major
    Label label = Label::NonBoundary;
};

// Writes the window for position `pos` into `out` (context_len * input_dim).
void fill_window(std::u32string_view chars, std::size_t pos, const EmbeddingMatrix& matrix,
                 const ModelConfig& cfg, std::span<double> out);

// One example per character position.
std::vector<WindowExample> make_windows(const LabeledSequence& seq, const EmbeddingMatrix& matrix,
                                        const ModelConfig& cfg);

// Softmax probabilities (NonBoundary, Boundary) for one window. Throws
// InferenceError identifying layer and step on a non-finite activation.
std::array<double, 2> forward(std::span<const double> window, const BiLstmStack& stack);

// Categorical cross entropy -ln p[label]; p clamped at 1e-12.
double example_loss(const std::array<double, 2>& probs, Label label);

struct BatchStats {
    double mean_loss = 0.0;
};

// Gradient of the mean batch loss w.r.t. every stack parameter, written to
// `grads` (param_count doubles). The batch is reduced in fixed blocks of
// kGradBlock examples, blocks combined in index order, so the result is
// bit-identical for every thread count, including the serial reference.
inline constexpr std::size_t kGradBlock = 8;

BatchStats batch_gradients(const BiLstmStack& stack, std::span<const double> windows,
                           std::span<const Label> labels, std::span<double> grads,
                           int threads = 1);

// Serial reference implementation, kept for tests and the kernel benchmark.
BatchStats batch_gradients_serial(const BiLstmStack& stack, std::span<const double> windows,
                                  std::span<const Label> labels, std::span<double> grads);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
};

// Standard Adam with bias correction.
void adam_update(BiLstmStack& stack, std::span<const double> grads, AdamState& state,
                 const ModelConfig& cfg);

struct ModelTrainResult {
    BiLstmStack stack;
    std::vector<double> loss_curve;  // mean loss per epoch
};

// Trains on windows from all sequences, shuffled by seed and minibatched.
// Embeddings are read-only throughout. Deterministic for a fixed seed at any
// thread count.
ModelTrainResult train_model(std::span<const LabeledSequence> seqs,
                             const EmbeddingMatrix& matrix, const ModelConfig& cfg,
                             int threads = 1);

// Per-character argmax labels; ties resolve to NonBoundary. threads > 1 runs
// positions in parallel (pure, result identical to serial).
std::vector<Label> predict_boundaries(std::u32string_view chars, const EmbeddingMatrix& matrix,
                                      const BiLstmStack& stack, int threads = 1);

// Checkpoint container: magic, JSON header {config, epoch, loss_curve}, then
// one float64 little-endian block with the parameters in layout order.
void save_checkpoint(const BiLstmStack& stack, std::span<const double> loss_curve,
                     const std::filesystem::path& path);
BiLstmStack load_checkpoint(const std::filesystem::path& path,
                            std::vector<double>* loss_curve_out = nullptr);

}  // namespace seg

#endif  // SEG_MODEL_HPP
