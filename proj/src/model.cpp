#include "seg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "binio.hpp"
#include "json.hpp"
#include "seg/config_json.hpp"
#include "seg/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace seg {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'G', 'C', 'K', 'P', '1', '\n'};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Per-direction forward caches for one example, indexed [t * H + j].
struct DirCache {
    std::vector<double> i, f, g, o, c, tc, h;

    void resize(int T, int H) {
        const std::size_t n = static_cast<std::size_t>(T) * static_cast<std::size_t>(H);
        for (auto* v : {&i, &f, &g, &o, &c, &tc, &h}) v->assign(n, 0.0);
    }
};

struct Workspace {
    std::vector<std::vector<double>> out;        // per layer, T x 2H
    std::vector<std::array<DirCache, 2>> cache;  // per layer
    std::vector<double> z;                       // 4H pre-activation scratch
    std::vector<double> d_above;                 // T x 2H
    std::vector<double> d_below;                 // T x 2H
    std::vector<double> dh_rec, dc_rec;          // H
    std::vector<double> dz;                      // 4H

    void init(const ModelConfig& cfg) {
        const int T = cfg.context_len;
        const int H = cfg.hidden();
        out.resize(static_cast<std::size_t>(cfg.num_layers));
        cache.resize(static_cast<std::size_t>(cfg.num_layers));
        for (int l = 0; l < cfg.num_layers; ++l) {
            out[static_cast<std::size_t>(l)].assign(
                static_cast<std::size_t>(T) * static_cast<std::size_t>(2 * H), 0.0);
            cache[static_cast<std::size_t>(l)][0].resize(T, H);
            cache[static_cast<std::size_t>(l)][1].resize(T, H);
        }
        z.assign(static_cast<std::size_t>(4 * H), 0.0);
        d_above.assign(static_cast<std::size_t>(T) * static_cast<std::size_t>(2 * H), 0.0);
        d_below.assign(static_cast<std::size_t>(T) * static_cast<std::size_t>(2 * H), 0.0);
        dh_rec.assign(static_cast<std::size_t>(H), 0.0);
        dc_rec.assign(static_cast<std::size_t>(H), 0.0);
        dz.assign(static_cast<std::size_t>(4 * H), 0.0);
    }
};

// One direction of one layer over the whole window. dir 0 walks left to
// right, dir 1 right to left.
void lstm_dir_forward(const BiLstmStack& stack, const ParamLayout& lay, int l, int dir,
                      const double* X, int T, int D, int H, Workspace& ws) {
    const double* W = stack.params.data() + lay.w_offset(l, dir);
    const double* U = stack.params.data() + lay.u_offset(l, dir);
    const double* B = stack.params.data() + lay.b_offset(l, dir);
    DirCache& cc = ws.cache[static_cast<std::size_t>(l)][static_cast<std::size_t>(dir)];
    double* z = ws.z.data();
    const int H4 = 4 * H;

    for (int k = 0; k < T; ++k) {
        const int t = dir == 0 ? k : T - 1 - k;
        const int tprev = dir == 0 ? t - 1 : t + 1;
        const double* x = X + static_cast<std::size_t>(t) * D;

        std::memcpy(z, B, static_cast<std::size_t>(H4) * sizeof(double));
        for (int r = 0; r < H4; ++r) {
            const double* wr = W + static_cast<std::size_t>(r) * D;
            double acc = 0.0;
            for (int d = 0; d < D; ++d) acc += wr[d] * x[d];
            z[r] += acc;
        }
        if (k > 0) {
            const double* hp = cc.h.data() + static_cast<std::size_t>(tprev) * H;
            for (int r = 0; r < H4; ++r) {
                const double* ur = U + static_cast<std::size_t>(r) * H;
                double acc = 0.0;
                for (int j = 0; j < H; ++j) acc += ur[j] * hp[j];
                z[r] += acc;
            }
        }

        const std::size_t base = static_cast<std::size_t>(t) * H;
        const double* cprev = k > 0 ? cc.c.data() + static_cast<std::size_t>(tprev) * H : nullptr;
        for (int j = 0; j < H; ++j) {
            const double gi = sigmoid(z[j]);
            const double gf = sigmoid(z[H + j]);
            const double gg = std::tanh(z[2 * H + j]);
            const double go = sigmoid(z[3 * H + j]);
            const double cv = gf * (cprev ? cprev[j] : 0.0) + gi * gg;
            const double tv = std::tanh(cv);
            cc.i[base + j] = gi;
            cc.f[base + j] = gf;
            cc.g[base + j] = gg;
            cc.o[base + j] = go;
            cc.c[base + j] = cv;
            cc.tc[base + j] = tv;
            cc.h[base + j] = go * tv;
        }
        for (int j = 0; j < H; ++j) {
            if (!std::isfinite(cc.h[base + j]))
                throw InferenceError("non-finite activation at layer " + std::to_string(l) +
                                     ", direction " + std::to_string(dir) + ", step " +
                                     std::to_string(t));
        }
    }
}

std::array<double, 2> forward_example(const BiLstmStack& stack, const double* window,
                                      Workspace& ws) {
    const ModelConfig& cfg = stack.cfg;
    const ParamLayout lay = stack.layout();
    const int T = cfg.context_len;
    const int H = cfg.hidden();

    const double* X = window;
    for (int l = 0; l < cfg.num_layers; ++l) {
        const int D = cfg.layer_input_dim(l);
        lstm_dir_forward(stack, lay, l, 0, X, T, D, H, ws);
        lstm_dir_forward(stack, lay, l, 1, X, T, D, H, ws);
        auto& out = ws.out[static_cast<std::size_t>(l)];
        const auto& hf = ws.cache[static_cast<std::size_t>(l)][0].h;
        const auto& hb = ws.cache[static_cast<std::size_t>(l)][1].h;
        for (int t = 0; t < T; ++t) {
            std::memcpy(out.data() + static_cast<std::size_t>(t) * 2 * H,
                        hf.data() + static_cast<std::size_t>(t) * H,
                        static_cast<std::size_t>(H) * sizeof(double));
            std::memcpy(out.data() + static_cast<std::size_t>(t) * 2 * H + H,
                        hb.data() + static_cast<std::size_t>(t) * H,
                        static_cast<std::size_t>(H) * sizeof(double));
        }
        X = out.data();
    }

    const int od = cfg.layer_output_dim;
    const double* htop = X + static_cast<std::size_t>(cfg.head_position()) * od;
    const double* hw = stack.params.data() + lay.head_w_offset();
    const double* hb = stack.params.data() + lay.head_b_offset();
    double logits[2];
    for (int c = 0; c < 2; ++c) {
        const double* row = hw + static_cast<std::size_t>(c) * od;
        double acc = hb[c];
        for (int j = 0; j < od; ++j) acc += row[j] * htop[j];
        logits[c] = acc;
    }
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double s = e0 + e1;
    std::array<double, 2> probs{e0 / s, e1 / s};
    if (!std::isfinite(probs[0]) || !std::isfinite(probs[1]))
        throw InferenceError("non-finite softmax output at the head");
    return probs;
}

// Accumulates parameter gradients for one example into gacc (unscaled; the
// caller divides by the batch size). ws must hold the forward caches of the
// same window.
void lstm_dir_backward(const BiLstmStack& stack, const ParamLayout& lay, int l, int dir,
                       const double* X, int T, int D, int H, Workspace& ws, const double* dOut,
                       double* gacc, double* dX) {
    const double* W = stack.params.data() + lay.w_offset(l, dir);
    const double* U = stack.params.data() + lay.u_offset(l, dir);
    double* gW = gacc + lay.w_offset(l, dir);
    double* gU = gacc + lay.u_offset(l, dir);
    double* gB = gacc + lay.b_offset(l, dir);
    const DirCache& cc = ws.cache[static_cast<std::size_t>(l)][static_cast<std::size_t>(dir)];
    const int H4 = 4 * H;
    double* dz = ws.dz.data();
    std::fill(ws.dh_rec.begin(), ws.dh_rec.end(), 0.0);
    std::fill(ws.dc_rec.begin(), ws.dc_rec.end(), 0.0);

    for (int k = T - 1; k >= 0; --k) {
        const int t = dir == 0 ? k : T - 1 - k;
        const int tprev = dir == 0 ? t - 1 : t + 1;
        const std::size_t base = static_cast<std::size_t>(t) * H;
        const double* cprev = k > 0 ? cc.c.data() + static_cast<std::size_t>(tprev) * H : nullptr;
        const double* hprev = k > 0 ? cc.h.data() + static_cast<std::size_t>(tprev) * H : nullptr;

        for (int j = 0; j < H; ++j) {
            const double gi = cc.i[base + j];
            const double gf = cc.f[base + j];
            const double gg = cc.g[base + j];
            const double go = cc.o[base + j];
            const double tv = cc.tc[base + j];
            const double dh = dOut[static_cast<std::size_t>(t) * 2 * H + dir * H + j] +
                              ws.dh_rec[j];
            const double dc = ws.dc_rec[j] + dh * go * (1.0 - tv * tv);
            dz[3 * H + j] = dh * tv * go * (1.0 - go);                       // output gate
            dz[H + j] = (cprev ? dc * cprev[j] : 0.0) * gf * (1.0 - gf);     // forget gate
            dz[j] = dc * gg * gi * (1.0 - gi);                               // input gate
            dz[2 * H + j] = dc * gi * (1.0 - gg * gg);                       // cell candidate
            ws.dc_rec[j] = dc * gf;
        }

        const double* x = X + static_cast<std::size_t>(t) * D;
        for (int r = 0; r < H4; ++r) {
            const double dzr = dz[r];
            double* gwr = gW + static_cast<std::size_t>(r) * D;
            for (int d = 0; d < D; ++d) gwr[d] += dzr * x[d];
            gB[r] += dzr;
        }
        if (hprev) {
            for (int r = 0; r < H4; ++r) {
                const double dzr = dz[r];
                double* gur = gU + static_cast<std::size_t>(r) * H;
                for (int j = 0; j < H; ++j) gur[j] += dzr * hprev[j];
            }
        }
        if (dX) {
            double* dxrow = dX + static_cast<std::size_t>(t) * D;
            for (int r = 0; r < H4; ++r) {
                const double dzr = dz[r];
                const double* wr = W + static_cast<std::size_t>(r) * D;
                for (int d = 0; d < D; ++d) dxrow[d] += dzr * wr[d];
            }
        }
        std::fill(ws.dh_rec.begin(), ws.dh_rec.end(), 0.0);
        for (int r = 0; r < H4; ++r) {
            const double dzr = dz[r];
            const double* ur = U + static_cast<std::size_t>(r) * H;
            for (int j = 0; j < H; ++j) ws.dh_rec[j] += dzr * ur[j];
        }
    }
}

void backward_example(const BiLstmStack& stack, const double* window, Workspace& ws,
                      const double* dlogits, double* gacc) {
    const ModelConfig& cfg = stack.cfg;
    const ParamLayout lay = stack.layout();
    const int T = cfg.context_len;
    const int H = cfg.hidden();
    const int od = cfg.layer_output_dim;
    const int L = cfg.num_layers;

    const double* htop =
        ws.out[static_cast<std::size_t>(L - 1)].data() +
        static_cast<std::size_t>(cfg.head_position()) * od;
    const double* hw = stack.params.data() + lay.head_w_offset();
    double* ghw = gacc + lay.head_w_offset();
    double* ghb = gacc + lay.head_b_offset();

    std::fill(ws.d_above.begin(), ws.d_above.end(), 0.0);
    double* dtop = ws.d_above.data() + static_cast<std::size_t>(cfg.head_position()) * od;
    for (int c = 0; c < 2; ++c) {
        const double dl = dlogits[c];
        ghb[c] += dl;
        const double* hwrow = hw + static_cast<std::size_t>(c) * od;
        double* ghwrow = ghw + static_cast<std::size_t>(c) * od;
        for (int j = 0; j < od; ++j) {
            ghwrow[j] += dl * htop[j];
            dtop[j] += dl * hwrow[j];
        }
    }

    for (int l = L - 1; l >= 0; --l) {
        const int D = cfg.layer_input_dim(l);
        const double* X = l == 0 ? window : ws.out[static_cast<std::size_t>(l - 1)].data();
        const bool want_dx = l > 0;  // embeddings are frozen: no gradient below layer 0
        if (want_dx)
            std::fill(ws.d_below.begin(),
                      ws.d_below.begin() + static_cast<std::size_t>(T) * D, 0.0);
        lstm_dir_backward(stack, lay, l, 0, X, T, D, H, ws, ws.d_above.data(), gacc,
                          want_dx ? ws.d_below.data() : nullptr);
        lstm_dir_backward(stack, lay, l, 1, X, T, D, H, ws, ws.d_above.data(), gacc,
                          want_dx ? ws.d_below.data() : nullptr);
        if (want_dx) std::swap(ws.d_above, ws.d_below);
    }
}

void check_batch_shapes(const BiLstmStack& stack, std::span<const double> windows,
                        std::span<const Label> labels, std::span<double> grads) {
    const std::size_t wstride = static_cast<std::size_t>(stack.cfg.context_len) *
                                static_cast<std::size_t>(stack.cfg.input_dim);
    if (labels.empty()) throw TrainingError("batch_gradients needs a nonempty batch");
    if (windows.size() != labels.size() * wstride)
        throw TrainingError("window buffer does not match batch size");
    if (grads.size() != stack.param_count())
        throw TrainingError("gradient buffer does not match parameter count");
}

// Reduces per-block accumulators into grads in block order and scales by 1/N.
BatchStats combine_blocks(std::span<double> grads, std::vector<std::vector<double>>& blocks,
                          std::span<const double> block_loss, std::size_t n) {
    std::fill(grads.begin(), grads.end(), 0.0);
    double loss = 0.0;
    for (std::size_t blk = 0; blk < blocks.size(); ++blk) {
        const auto& acc = blocks[blk];
        for (std::size_t p = 0; p < grads.size(); ++p) grads[p] += acc[p];
        loss += block_loss[blk];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (double& g : grads) g *= inv;
    return BatchStats{loss * inv};
}

void run_block(const BiLstmStack& stack, std::span<const double> windows,
               std::span<const Label> labels, std::size_t blk, std::vector<double>& acc,
               double& loss_out, Workspace& ws) {
    const std::size_t wstride = static_cast<std::size_t>(stack.cfg.context_len) *
                                static_cast<std::size_t>(stack.cfg.input_dim);
    const std::size_t lo = blk * kGradBlock;
    const std::size_t hi = std::min(labels.size(), lo + kGradBlock);
    for (std::size_t e = lo; e < hi; ++e) {
        const double* win = windows.data() + e * wstride;
        const auto probs = forward_example(stack, win, ws);
        loss_out += example_loss(probs, labels[e]);
        double dlogits[2] = {probs[0], probs[1]};
        dlogits[labels[e] == Label::Boundary ? 1 : 0] -= 1.0;
        backward_example(stack, win, ws, dlogits, acc.data());
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (num_layers < 1) throw ConfigError("model needs at least one layer");
    if (layer_output_dim < 2 || layer_output_dim % 2 != 0)
        throw ConfigError("layer_output_dim must be even and positive");
    if (context_len < 1) throw ConfigError("context_len must be >= 1");
    if (context_offset < 0 || context_offset >= context_len)
        throw ConfigError("context_offset must lie in [0, context_len)");
    if (num_classes != 2) throw ConfigError("only two-class boundary output is supported");
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

std::span<const double> BiLstmStack::w(int layer, int dir) const {
    const ParamLayout lay = layout();
    const std::size_t n = 4 * static_cast<std::size_t>(lay.hidden) *
                          static_cast<std::size_t>(cfg.layer_input_dim(layer));
    return {params.data() + lay.w_offset(layer, dir), n};
}

std::span<const double> BiLstmStack::u(int layer, int dir) const {
    const ParamLayout lay = layout();
    const std::size_t n =
        4 * static_cast<std::size_t>(lay.hidden) * static_cast<std::size_t>(lay.hidden);
    return {params.data() + lay.u_offset(layer, dir), n};
}

std::span<const double> BiLstmStack::b(int layer, int dir) const {
    const ParamLayout lay = layout();
    return {params.data() + lay.b_offset(layer, dir), 4 * static_cast<std::size_t>(lay.hidden)};
}

std::span<const double> BiLstmStack::head_w() const {
    const ParamLayout lay = layout();
    return {params.data() + lay.head_w_offset(),
            static_cast<std::size_t>(lay.classes) * static_cast<std::size_t>(lay.out_dim)};
}

std::span<const double> BiLstmStack::head_b() const {
    const ParamLayout lay = layout();
    return {params.data() + lay.head_b_offset(), static_cast<std::size_t>(lay.classes)};
}

BiLstmStack BiLstmStack::init(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    BiLstmStack stack;
    stack.cfg = cfg;
    const ParamLayout lay(cfg);
    stack.params.assign(lay.total(), 0.0);
    const int H = cfg.hidden();

    for (int l = 0; l < cfg.num_layers; ++l) {
        const int D = cfg.layer_input_dim(l);
        const double ws = 1.0 / std::sqrt(static_cast<double>(D));
        const double us = 1.0 / std::sqrt(static_cast<double>(H));
        for (int dir = 0; dir < 2; ++dir) {
            double* w = stack.params.data() + lay.w_offset(l, dir);
            for (std::size_t k = 0; k < 4 * static_cast<std::size_t>(H) * D; ++k)
                w[k] = rng.uniform(-ws, ws);
            double* u = stack.params.data() + lay.u_offset(l, dir);
            for (std::size_t k = 0; k < 4 * static_cast<std::size_t>(H) * H; ++k)
                u[k] = rng.uniform(-us, us);
            double* b = stack.params.data() + lay.b_offset(l, dir);
            for (int j = 0; j < H; ++j) b[H + j] = 1.0;  // forget-gate bias
        }
    }
    const double hs = 1.0 / std::sqrt(static_cast<double>(cfg.layer_output_dim));
    double* hw = stack.params.data() + lay.head_w_offset();
    for (std::size_t k = 0;
         k < static_cast<std::size_t>(cfg.num_classes) * cfg.layer_output_dim; ++k)
        hw[k] = rng.uniform(-hs, hs);
    return stack;
}

void fill_window(std::u32string_view chars, std::size_t pos, const EmbeddingMatrix& matrix,
                 const ModelConfig& cfg, std::span<double> out) {
    const int dim = cfg.input_dim;
    for (int k = 0; k < cfg.context_len; ++k) {
        double* row = out.data() + static_cast<std::size_t>(k) * dim;
        const std::ptrdiff_t src =
            static_cast<std::ptrdiff_t>(pos) - cfg.context_offset + k;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(chars.size())) {
            std::fill(row, row + dim, 0.0);  // PAD
        } else {
            const auto emb = matrix.lookup(chars[static_cast<std::size_t>(src)]);
            std::memcpy(row, emb.data(), static_cast<std::size_t>(dim) * sizeof(double));
        }
    }
}

std::vector<WindowExample> make_windows(const LabeledSequence& seq, const EmbeddingMatrix& matrix,
                                        const ModelConfig& cfg) {
    if (cfg.input_dim != matrix.dim)
        throw ConfigError("model input_dim does not match embedding dim");
    const std::size_t wstride =
        static_cast<std::size_t>(cfg.context_len) * static_cast<std::size_t>(cfg.input_dim);
    std::vector<WindowExample> out;
    out.reserve(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        WindowExample ex;
        ex.window.resize(wstride);
        fill_window(seq.chars, i, matrix, cfg, ex.window);
        ex.label = seq.labels[i];
        out.push_back(std::move(ex));
    }
    return out;
}

std::array<double, 2> forward(std::span<const double> window, const BiLstmStack& stack) {
    const std::size_t wstride = static_cast<std::size_t>(stack.cfg.context_len) *
                                static_cast<std::size_t>(stack.cfg.input_dim);
    if (window.size() != wstride) throw InferenceError("window size does not match model config");
    Workspace ws;
    ws.init(stack.cfg);
    return forward_example(stack, window.data(), ws);
}

double example_loss(const std::array<double, 2>& probs, Label label) {
    const double p = std::max(probs[label == Label::Boundary ? 1 : 0], 1e-12);
    return -std::log(p);
}

BatchStats batch_gradients(const BiLstmStack& stack, std::span<const double> windows,
                           std::span<const Label> labels, std::span<double> grads, int threads) {
    check_batch_shapes(stack, windows, labels, grads);
    const std::size_t n = labels.size();
    const std::size_t nblocks = (n + kGradBlock - 1) / kGradBlock;
    std::vector<std::vector<double>> block_grads(nblocks);
    std::vector<double> block_loss(nblocks, 0.0);
    std::string error;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : 1) \
    if (threads > 1)
#endif
    for (std::int64_t blk = 0; blk < static_cast<std::int64_t>(nblocks); ++blk) {
        try {
            auto& acc = block_grads[static_cast<std::size_t>(blk)];
            acc.assign(stack.param_count(), 0.0);
            Workspace ws;
            ws.init(stack.cfg);
            run_block(stack, windows, labels, static_cast<std::size_t>(blk), acc,
                      block_loss[static_cast<std::size_t>(blk)], ws);
        } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (error.empty()) error = e.what();
        }
    }
    if (!error.empty()) throw TrainingError(error);
    return combine_blocks(grads, block_grads, block_loss, n);
}

BatchStats batch_gradients_serial(const BiLstmStack& stack, std::span<const double> windows,
                                  std::span<const Label> labels, std::span<double> grads) {
    check_batch_shapes(stack, windows, labels, grads);
    const std::size_t n = labels.size();
    const std::size_t nblocks = (n + kGradBlock - 1) / kGradBlock;
    std::vector<std::vector<double>> block_grads(nblocks);
    std::vector<double> block_loss(nblocks, 0.0);
    Workspace ws;
    ws.init(stack.cfg);
    for (std::size_t blk = 0; blk < nblocks; ++blk) {
        block_grads[blk].assign(stack.param_count(), 0.0);
        run_block(stack, windows, labels, blk, block_grads[blk], block_loss[blk], ws);
    }
    return combine_blocks(grads, block_grads, block_loss, n);
}

void adam_update(BiLstmStack& stack, std::span<const double> grads, AdamState& state,
                 const ModelConfig& cfg) {
    const std::size_t p = stack.param_count();
    if (grads.size() != p) throw TrainingError("gradient size does not match parameters");
    if (state.m.size() != p) {
        state.m.assign(p, 0.0);
        state.v.assign(p, 0.0);
        state.t = 0;
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < p; ++k) {
        const double g = grads[k];
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
        const double mhat = state.m[k] / bc1;
        const double vhat = state.v[k] / bc2;
        stack.params[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

ModelTrainResult train_model(std::span<const LabeledSequence> seqs,
                             const EmbeddingMatrix& matrix, const ModelConfig& cfg_in,
                             int threads) {
    ModelConfig cfg = cfg_in;
    cfg.input_dim = matrix.dim;
    cfg.validate();
    if (matrix.vocab.size() == 0) throw ConfigError("cannot train on an empty embedding matrix");

    struct Ref {
        std::uint32_t seq;
        std::uint32_t pos;
    };
    std::vector<Ref> refs;
    for (std::size_t s = 0; s < seqs.size(); ++s)
        for (std::size_t p = 0; p < seqs[s].size(); ++p)
            refs.push_back(Ref{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(p)});
    if (refs.empty()) throw ConfigError("no training windows (all sequences are empty)");

    Rng rng(cfg.seed);
    ModelTrainResult result;
    result.stack = BiLstmStack::init(cfg, rng);
    BiLstmStack& stack = result.stack;

    AdamState adam;
    const std::size_t wstride =
        static_cast<std::size_t>(cfg.context_len) * static_cast<std::size_t>(cfg.input_dim);
    std::vector<double> batch_windows(static_cast<std::size_t>(cfg.batch_size) * wstride);
    std::vector<Label> batch_labels(static_cast<std::size_t>(cfg.batch_size));
    std::vector<double> grads(stack.param_count());
    std::vector<std::size_t> order(refs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t bn =
                std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            for (std::size_t k = 0; k < bn; ++k) {
                const Ref& ref = refs[order[start + k]];
                const LabeledSequence& seq = seqs[ref.seq];
                fill_window(seq.chars, ref.pos, matrix, cfg,
                            {batch_windows.data() + k * wstride, wstride});
                batch_labels[k] = seq.labels[ref.pos];
            }
            const BatchStats stats =
                batch_gradients(stack, {batch_windows.data(), bn * wstride},
                                {batch_labels.data(), bn}, grads, threads);
            adam_update(stack, grads, adam, cfg);
            loss_sum += stats.mean_loss * static_cast<double>(bn);
        }
        result.loss_curve.push_back(loss_sum / static_cast<double>(order.size()));
    }
    return result;
}

std::vector<Label> predict_boundaries(std::u32string_view chars, const EmbeddingMatrix& matrix,
                                      const BiLstmStack& stack, int threads) {
    if (stack.cfg.input_dim != matrix.dim)
        throw InferenceError("model input_dim does not match embedding dim");
    const std::size_t n = chars.size();
    std::vector<Label> out(n, Label::NonBoundary);
    const std::size_t wstride = static_cast<std::size_t>(stack.cfg.context_len) *
                                static_cast<std::size_t>(stack.cfg.input_dim);
    std::string error;

#ifdef _OPENMP
#pragma omp parallel num_threads(threads > 0 ? threads : 1) if (threads > 1)
#endif
    {
        Workspace ws;
        ws.init(stack.cfg);
        std::vector<double> window(wstride);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            try {
                fill_window(chars, static_cast<std::size_t>(i), matrix, stack.cfg, window);
                const auto probs = forward_example(stack, window.data(), ws);
                // Ties resolve to NonBoundary.
                if (probs[1] > probs[0]) out[static_cast<std::size_t>(i)] = Label::Boundary;
            } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
                if (error.empty()) error = e.what();
            }
        }
    }
    if (!error.empty()) throw InferenceError(error);
    return out;
}

void save_checkpoint(const BiLstmStack& stack, std::span<const double> loss_curve,
                     const std::filesystem::path& path) {
    nlohmann::json header;
    header["config"] = model_to_json(stack.cfg);
    header["seed"] = stack.cfg.seed;
    header["epoch"] = loss_curve.size();
    header["loss_curve"] = std::vector<double>(loss_curve.begin(), loss_curve.end());
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof(kMagic));
    binio::write_u64(out, header_str.size());
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    binio::write_f64_block(out, stack.params);
    if (!out) throw IoError("write failed for " + path.string());
}

BiLstmStack load_checkpoint(const std::filesystem::path& path,
                            std::vector<double>* loss_curve_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError(path.string() + " is not a model checkpoint");
    const std::uint64_t header_len = binio::read_u64(in);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw IoError("truncated checkpoint header in " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint header in " + path.string() + ": " + e.what());
    }

    BiLstmStack stack;
    stack.cfg = model_from_json(header.at("config"));
    stack.cfg.validate();
    stack.params.resize(ParamLayout(stack.cfg).total());
    binio::read_f64_block(in, stack.params);
    if (loss_curve_out) *loss_curve_out = header.at("loss_curve").get<std::vector<double>>();
    return stack;
}

}  // namespace seg
