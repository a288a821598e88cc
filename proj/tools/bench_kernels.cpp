// Benchmark for the parallel kernels against their serial references:
// per-document corpus preparation, within-batch gradient computation, and
// per-position inference. Each kernel is also checked for bit-identical
// output before timing, since the parallel paths are contractually
// deterministic.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seg/corpus.hpp"
#include "seg/embedding.hpp"
#include "seg/model.hpp"
#include "seg/rng.hpp"

using namespace seg;

namespace {

double time_ms(const std::function<void()>& fn, int repeat) {
    // One warm-up pass, then the best of `repeat` timed passes.
    fn();
    double best = 1e300;
    for (int i = 0; i < repeat; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void print_row(const char* kernel, double serial_ms, double par_ms, int threads, bool identical) {
    std::printf("%-18s %10.2f ms %10.2f ms (%d threads) %7.2fx   %s\n", kernel, serial_ms,
                par_ms, threads, serial_ms / par_ms, identical ? "bit-identical" : "DIFFERS");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel benchmark: serial reference vs parallel path"};
    int threads = 4;
    int layers = 2;
    int hidden = 64;
    int batch = 64;
    int repeat = 3;
    int docs = 200;
    int doc_len = 2000;
    app.add_option("--threads", threads, "Parallel thread count");
    app.add_option("--layers", layers, "Stack layers");
    app.add_option("--hidden", hidden, "Per-direction hidden size");
    app.add_option("--batch", batch, "Gradient batch size");
    app.add_option("--repeat", repeat, "Timed repetitions (best is reported)");
    app.add_option("--docs", docs, "Documents for the corpus kernel");
    app.add_option("--doc-len", doc_len, "Characters per document");
    CLI11_PARSE(app, argc, argv);

    Rng rng(12345);

    // Corpus preparation kernel.
    const auto chars_cfg = CharClassConfig::defaults();
    Corpus corpus{"bench", {}};
    for (int d = 0; d < docs; ++d) {
        RawDocument doc;
        doc.id = "d" + std::to_string(d);
        for (int i = 0; i < doc_len; ++i) {
            doc.text.push_back(static_cast<char32_t>(0x4E00 + rng.below(500)));
            if (rng.below(6) == 0) doc.text.push_back(U'。');
        }
        corpus.documents.push_back(std::move(doc));
    }
    std::vector<LabeledSequence> strip_serial, strip_par;
    const double strip_s = time_ms([&] { strip_serial = strip_corpus(corpus, chars_cfg, 1); }, repeat);
    const double strip_p =
        time_ms([&] { strip_par = strip_corpus(corpus, chars_cfg, threads); }, repeat);

    // Batch gradient kernel.
    ModelConfig cfg;
    cfg.num_layers = layers;
    cfg.layer_output_dim = 2 * hidden;
    cfg.input_dim = 64;
    cfg.seed = 7;
    Rng init_rng(cfg.seed);
    const BiLstmStack stack = BiLstmStack::init(cfg, init_rng);
    const std::size_t wstride =
        static_cast<std::size_t>(cfg.context_len) * static_cast<std::size_t>(cfg.input_dim);
    std::vector<double> windows(static_cast<std::size_t>(batch) * wstride);
    for (double& x : windows) x = rng.uniform(-1.0, 1.0);
    std::vector<Label> labels;
    for (int i = 0; i < batch; ++i)
        labels.push_back(rng.below(5) == 0 ? Label::Boundary : Label::NonBoundary);
    std::vector<double> grads_serial(stack.param_count()), grads_par(stack.param_count());
    const double grad_s = time_ms(
        [&] { batch_gradients_serial(stack, windows, labels, grads_serial); }, repeat);
    const double grad_p = time_ms(
        [&] { batch_gradients(stack, windows, labels, grads_par, threads); }, repeat);

    // Inference kernel.
    EmbeddingMatrix matrix;
    matrix.dim = cfg.input_dim;
    for (int i = 0; i < 500; ++i) {
        matrix.vocab.ids.emplace(static_cast<char32_t>(0x4E00 + i), i);
        matrix.vocab.chars.push_back(static_cast<char32_t>(0x4E00 + i));
        matrix.vocab.counts.push_back(1);
        for (int d = 0; d < matrix.dim; ++d) matrix.input.push_back(rng.uniform(-0.5, 0.5));
    }
    matrix.vocab.total = 500;
    matrix.output.assign(matrix.input.size(), 0.0);
    matrix.freeze_unk();
    std::u32string text;
    for (int i = 0; i < 2000; ++i)
        text.push_back(static_cast<char32_t>(0x4E00 + rng.below(500)));
    std::vector<Label> pred_serial, pred_par;
    const double inf_s =
        time_ms([&] { pred_serial = predict_boundaries(text, matrix, stack, 1); }, repeat);
    const double inf_p =
        time_ms([&] { pred_par = predict_boundaries(text, matrix, stack, threads); }, repeat);

    std::printf("%-18s %13s %13s %21s\n", "kernel", "serial", "parallel", "output");
    print_row("strip_corpus", strip_s, strip_p, threads, strip_serial == strip_par);
    print_row("batch_gradients", grad_s, grad_p, threads, bits_equal(grads_serial, grads_par));
    print_row("predict", inf_s, inf_p, threads, pred_serial == pred_par);
    return 0;
}
