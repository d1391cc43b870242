#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "saelab/matrix.hpp"
#include "saelab/rng.hpp"

namespace saelab {

enum class Activation { Tanh, Swish, Identity };  // Identity: linear test hook
enum class OutputMode { Regression1, Binary2, Ternary3 };

inline int output_width(OutputMode m) {
    switch (m) {
        case OutputMode::Regression1: return 1;
        case OutputMode::Binary2: return 2;
        case OutputMode::Ternary3: return 3;
    }
    return 0;
}

// Supervised-autoencoder configuration. Hidden sizes left empty default to
// the input width (encoder/decoder) and to the classifier's own input width
// (bottleneck + input). Loss mix alpha weights reconstruction against the
// task: total = alpha * recon + (1 - alpha) * task.
struct SAEConfig {
    int input_dim = 0;
    double bottleneck_fraction = 0.4;  // bottleneck = max(1, round(fraction * input_dim))
    int encoder_hidden_layers = 1;
    std::vector<int> encoder_hidden_sizes;
    int decoder_hidden_layers = 1;
    std::vector<int> decoder_hidden_sizes;
    int classifier_hidden_layers = 1;
    std::vector<int> classifier_hidden_sizes;
    Activation activation = Activation::Tanh;
    double noise_rate = 0.0;   // gaussian noise std as a fraction of per-feature train std
    double loss_mix = 0.5;     // alpha
    int epochs = 50;
    double learning_rate = 0.01;
    double momentum = 0.0;     // 0 = plain SGD
    int batch_size = 32;
    std::uint64_t seed = 0;
    OutputMode output_mode = OutputMode::Ternary3;

    int bottleneck_size() const {
        const int b = static_cast<int>(std::lround(bottleneck_fraction * input_dim));
        return std::max(1, b);
    }

    void validate() const {
        if (input_dim < 1) throw std::invalid_argument("SAEConfig: input_dim must be >= 1");
        if (!(bottleneck_fraction > 0.0) || bottleneck_fraction > 1.0)
            throw std::invalid_argument("SAEConfig: bottleneck_fraction must be in (0,1]");
        if (encoder_hidden_layers < 0 || decoder_hidden_layers < 0 || classifier_hidden_layers < 0)
            throw std::invalid_argument("SAEConfig: hidden layer counts must be >= 0");
        for (const auto* sizes : {&encoder_hidden_sizes, &decoder_hidden_sizes, &classifier_hidden_sizes})
            for (int s : *sizes)
                if (s < 1) throw std::invalid_argument("SAEConfig: layer sizes must be >= 1");
        if (noise_rate < 0.0) throw std::invalid_argument("SAEConfig: noise_rate must be >= 0");
        if (loss_mix < 0.0 || loss_mix > 1.0)
            throw std::invalid_argument("SAEConfig: loss_mix must be in [0,1]");
        if (epochs < 1) throw std::invalid_argument("SAEConfig: epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("SAEConfig: learning_rate must be positive");
        if (batch_size < 1) throw std::invalid_argument("SAEConfig: batch_size must be >= 1");
        if (momentum < 0.0 || momentum >= 1.0)
            throw std::invalid_argument("SAEConfig: momentum must be in [0,1)");
    }

    std::vector<int> resolved_hidden(const std::vector<int>& sizes, int count, int fallback) const {
        if (!sizes.empty()) return sizes;
        return std::vector<int>(static_cast<std::size_t>(count), fallback);
    }
};

// Per-column standardization fitted on training data.
struct Standardizer {
    std::vector<double> mean, std;

    static Standardizer fit(const Matrix& x) {
        Standardizer s;
        s.mean.assign(x.cols, 0.0);
        s.std.assign(x.cols, 1.0);
        if (x.rows == 0) return s;
        for (std::size_t c = 0; c < x.cols; ++c) {
            double m = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) m += x(r, c);
            m /= static_cast<double>(x.rows);
            double ss = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) ss += (x(r, c) - m) * (x(r, c) - m);
            double sd = x.rows > 1 ? std::sqrt(ss / static_cast<double>(x.rows - 1)) : 0.0;
            s.mean[c] = m;
            s.std[c] = sd > 0.0 ? sd : 1.0;  // constant column: pass through centered
        }
        return s;
    }

    Matrix transform(const Matrix& x) const {
        if (x.cols != mean.size()) throw std::invalid_argument("Standardizer: width mismatch");
        Matrix out = x;
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t c = 0; c < x.cols; ++c) out(r, c) = (x(r, c) - mean[c]) / std[c];
        return out;
    }
};

struct DenseLayer {
    Matrix w;                // out x in
    std::vector<double> b;   // out
};

struct EpochStats {
    int epoch = 0;
    double total = 0.0;
    double recon = 0.0;
    double task = 0.0;
};

struct SAEModel {
    SAEConfig config;
    Standardizer scaler;               // identity until train() fits it
    std::vector<DenseLayer> encoder;   // last layer emits the bottleneck code
    std::vector<DenseLayer> decoder;   // last layer linear, width = input_dim
    std::vector<DenseLayer> classifier;// input = concat(code, x); last layer linear
    std::vector<EpochStats> training_log;
};

namespace detail {

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::Tanh: return std::tanh(x);
        case Activation::Swish: return x / (1.0 + std::exp(-x));
        case Activation::Identity: return x;
    }
    return x;
}

inline double activate_grad(Activation a, double x) {
    switch (a) {
        case Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::Swish: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

// z = x * w^T + b
inline Matrix affine(const Matrix& x, const DenseLayer& layer) {
    const std::size_t out = layer.b.size();
    Matrix z(x.rows, out);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double* zr = z.row(r);
        for (std::size_t o = 0; o < out; ++o) {
            const double* wo = layer.w.row(o);
            double acc = layer.b[o];
            for (std::size_t i = 0; i < x.cols; ++i) acc += wo[i] * xr[i];
            zr[o] = acc;
        }
    }
    return z;
}

inline Matrix apply_activation(const Matrix& z, Activation a) {
    Matrix out = z;
    for (double& v : out.data) v = activate(a, v);
    return out;
}

struct StackCache {
    std::vector<Matrix> z;  // pre-activations per layer
    std::vector<Matrix> a;  // activations per layer
};

// Runs a stack; the final layer is linear when `linear_head` is set.
inline Matrix run_stack(const std::vector<DenseLayer>& stack, const Matrix& input, Activation act,
                        bool linear_head, StackCache* cache) {
    Matrix cur = input;
    for (std::size_t l = 0; l < stack.size(); ++l) {
        Matrix z = affine(cur, stack[l]);
        const bool linear = linear_head && l + 1 == stack.size();
        Matrix a = linear ? z : apply_activation(z, act);
        if (cache) {
            cache->z.push_back(z);
            cache->a.push_back(a);
        }
        cur = std::move(a);
    }
    return cur;
}

inline Matrix softmax_rows(const Matrix& scores) {
    Matrix p = scores;
    for (std::size_t r = 0; r < p.rows; ++r) {
        double* row = p.row(r);
        double mx = row[0];
        for (std::size_t c = 1; c < p.cols; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < p.cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < p.cols; ++c) row[c] /= sum;
    }
    return p;
}

inline std::size_t class_index(OutputMode mode, double label) {
    if (mode == OutputMode::Binary2) {
        if (label == -1.0) return 0;
        if (label == 1.0) return 1;
        throw std::invalid_argument("binary label outside {-1,+1}");
    }
    if (label == -1.0) return 0;
    if (label == 0.0) return 1;
    if (label == 1.0) return 2;
    throw std::invalid_argument("ternary label outside {-1,0,+1}");
}

}  // namespace detail

struct ForwardResult {
    Matrix reconstruction;  // batch x input_dim
    Matrix scores;          // batch x output_width, pre-softmax
    Matrix probabilities;   // softmax(scores) for classification modes, == scores otherwise
    Matrix code;            // batch x bottleneck
};

// Network pass on an already-standardized batch. The classifier consumes the
// bottleneck code concatenated with the original input.
inline ForwardResult sae_forward(const SAEModel& model, const Matrix& batch) {
    if (batch.cols != static_cast<std::size_t>(model.config.input_dim))
        throw std::invalid_argument("sae_forward: batch width " + std::to_string(batch.cols) +
                                    " != input_dim " + std::to_string(model.config.input_dim));
    const Activation act = model.config.activation;
    ForwardResult out;
    out.code = detail::run_stack(model.encoder, batch, act, /*linear_head=*/false, nullptr);
    out.reconstruction = detail::run_stack(model.decoder, out.code, act, /*linear_head=*/true, nullptr);

    Matrix clf_in(batch.rows, out.code.cols + batch.cols);
    for (std::size_t r = 0; r < batch.rows; ++r) {
        double* dst = clf_in.row(r);
        const double* c = out.code.row(r);
        const double* x = batch.row(r);
        std::copy(c, c + out.code.cols, dst);
        std::copy(x, x + batch.cols, dst + out.code.cols);
    }
    out.scores = detail::run_stack(model.classifier, clf_in, act, /*linear_head=*/true, nullptr);
    out.probabilities = model.config.output_mode == OutputMode::Regression1
                            ? out.scores
                            : detail::softmax_rows(out.scores);
    return out;
}

struct LossParts {
    double total = 0.0;
    double recon = 0.0;
    double task = 0.0;
};

// Joint loss: alpha * MSE(reconstruction, clean) + (1-alpha) * task loss.
// The reconstruction target is the un-noised input; the task loss is MSE in
// regression mode and cross-entropy (probabilities clamped at 1e-12, never an
// error) in the classification modes.
inline LossParts sae_loss(const SAEModel& model, const Matrix& input, const Matrix& clean,
                          const std::vector<double>& targets) {
    if (!input.same_shape(clean)) throw std::invalid_argument("sae_loss: input/clean shape mismatch");
    if (targets.size() != input.rows) throw std::invalid_argument("sae_loss: target count mismatch");
    if (input.rows == 0) return {};
    const auto fwd = sae_forward(model, input);
    const double m = static_cast<double>(input.rows);
    const OutputMode mode = model.config.output_mode;

    LossParts parts;
    for (std::size_t i = 0; i < clean.data.size(); ++i) {
        const double e = fwd.reconstruction.data[i] - clean.data[i];
        parts.recon += e * e;
    }
    parts.recon /= m * static_cast<double>(input.cols);

    if (mode == OutputMode::Regression1) {
        for (std::size_t r = 0; r < input.rows; ++r) {
            const double e = fwd.scores(r, 0) - targets[r];
            parts.task += e * e;
        }
    } else {
        for (std::size_t r = 0; r < input.rows; ++r) {
            const std::size_t k = detail::class_index(mode, targets[r]);
            parts.task += -std::log(std::max(fwd.probabilities(r, k), 1e-12));
        }
    }
    parts.task /= m;
    const double alpha = model.config.loss_mix;
    parts.total = alpha * parts.recon + (1.0 - alpha) * parts.task;
    return parts;
}

struct StackGradients {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;
};

struct SAEGradients {
    StackGradients encoder, decoder, classifier;
};

namespace detail {

inline StackGradients zero_like(const std::vector<DenseLayer>& stack) {
    StackGradients g;
    for (const auto& l : stack) {
        g.dw.emplace_back(l.w.rows, l.w.cols);
        g.db.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

// Backward through one stack. `delta` arrives w.r.t. the stack output;
// returns the gradient w.r.t. the stack input.
inline Matrix stack_backward(const std::vector<DenseLayer>& stack, const StackCache& cache,
                             const Matrix& input, Activation act, bool linear_head, Matrix delta,
                             StackGradients& grads) {
    for (std::size_t li = stack.size(); li-- > 0;) {
        const Matrix& z = cache.z[li];
        const Matrix& below = li == 0 ? input : cache.a[li - 1];
        const bool linear = linear_head && li + 1 == stack.size();
        if (!linear)
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                delta.data[i] *= activate_grad(act, z.data[i]);
        // dW += delta^T * below; db += colsum(delta); new delta = delta * W
        Matrix& dw = grads.dw[li];
        auto& db = grads.db[li];
        const DenseLayer& layer = stack[li];
        Matrix next(delta.rows, layer.w.cols);
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* dr = delta.row(r);
            const double* br = below.row(r);
            double* nr = next.row(r);
            for (std::size_t o = 0; o < delta.cols; ++o) {
                const double d = dr[o];
                db[o] += d;
                double* dwo = dw.row(o);
                const double* wo = layer.w.row(o);
                for (std::size_t i = 0; i < layer.w.cols; ++i) {
                    dwo[i] += d * br[i];
                    nr[i] += d * wo[i];
                }
            }
        }
        delta = std::move(next);
    }
    return delta;
}

}  // namespace detail

// Analytic gradients of sae_loss w.r.t. every parameter, averaged over the
// batch exactly as the loss is.
inline SAEGradients sae_gradients(const SAEModel& model, const Matrix& input, const Matrix& clean,
                                  const std::vector<double>& targets, LossParts* parts_out = nullptr) {
    if (!input.same_shape(clean)) throw std::invalid_argument("sae_gradients: shape mismatch");
    if (targets.size() != input.rows) throw std::invalid_argument("sae_gradients: target count mismatch");
    const Activation act = model.config.activation;
    const OutputMode mode = model.config.output_mode;
    const double m = static_cast<double>(input.rows);
    const double alpha = model.config.loss_mix;

    // forward with caches
    detail::StackCache enc_cache, dec_cache, clf_cache;
    const Matrix code = detail::run_stack(model.encoder, input, act, false, &enc_cache);
    const Matrix recon = detail::run_stack(model.decoder, code, act, true, &dec_cache);
    Matrix clf_in(input.rows, code.cols + input.cols);
    for (std::size_t r = 0; r < input.rows; ++r) {
        double* dst = clf_in.row(r);
        std::copy(code.row(r), code.row(r) + code.cols, dst);
        std::copy(input.row(r), input.row(r) + input.cols, dst + code.cols);
    }
    const Matrix scores = detail::run_stack(model.classifier, clf_in, act, true, &clf_cache);

    LossParts parts;
    Matrix d_recon(recon.rows, recon.cols);
    for (std::size_t i = 0; i < recon.data.size(); ++i) {
        const double e = recon.data[i] - clean.data[i];
        parts.recon += e * e;
        d_recon.data[i] = alpha * 2.0 * e / (m * static_cast<double>(input.cols));
    }
    parts.recon /= m * static_cast<double>(input.cols);

    Matrix d_scores(scores.rows, scores.cols);
    if (mode == OutputMode::Regression1) {
        for (std::size_t r = 0; r < input.rows; ++r) {
            const double e = scores(r, 0) - targets[r];
            parts.task += e * e;
            d_scores(r, 0) = (1.0 - alpha) * 2.0 * e / m;
        }
    } else {
        const Matrix probs = detail::softmax_rows(scores);
        for (std::size_t r = 0; r < input.rows; ++r) {
            const std::size_t k = detail::class_index(mode, targets[r]);
            parts.task += -std::log(std::max(probs(r, k), 1e-12));
            for (std::size_t c = 0; c < probs.cols; ++c) {
                const double y = c == k ? 1.0 : 0.0;
                d_scores(r, c) = (1.0 - alpha) * (probs(r, c) - y) / m;
            }
        }
    }
    parts.task /= m;
    parts.total = alpha * parts.recon + (1.0 - alpha) * parts.task;
    if (parts_out) *parts_out = parts;

    SAEGradients grads;
    grads.encoder = detail::zero_like(model.encoder);
    grads.decoder = detail::zero_like(model.decoder);
    grads.classifier = detail::zero_like(model.classifier);

    // decoder and classifier both feed gradient into the code
    Matrix d_code = detail::stack_backward(model.decoder, dec_cache, code, act, true,
                                           std::move(d_recon), grads.decoder);
    const Matrix d_clf_in = detail::stack_backward(model.classifier, clf_cache, clf_in, act, true,
                                                   std::move(d_scores), grads.classifier);
    for (std::size_t r = 0; r < d_code.rows; ++r)
        for (std::size_t c = 0; c < d_code.cols; ++c) d_code(r, c) += d_clf_in(r, c);

    detail::stack_backward(model.encoder, enc_cache, input, act, false, std::move(d_code),
                           grads.encoder);
    return grads;
}

// Adds seeded gaussian noise scaled per feature: out[r][j] ~ in[r][j] +
// N(0, (rate * stds[j])^2). A zero rate returns the input unchanged.
inline Matrix add_noise(const Matrix& features, double rate, const std::vector<double>& stds,
                        Rng& rng) {
    if (rate < 0.0) throw std::invalid_argument("add_noise: rate must be >= 0");
    if (stds.size() != features.cols) throw std::invalid_argument("add_noise: stds length mismatch");
    for (double s : stds)
        if (s < 0.0) throw std::invalid_argument("add_noise: stds must be >= 0");
    if (rate == 0.0) return features;
    Matrix out = features;
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += rng.normal(0.0, rate * stds[c]);
    return out;
}

inline Matrix add_noise(const Matrix& features, double rate, const std::vector<double>& stds,
                        std::uint64_t seed) {
    Rng rng(seed);
    return add_noise(features, rate, stds, rng);
}

namespace detail {

inline DenseLayer glorot_layer(int out, int in, Rng& rng) {
    DenseLayer l;
    l.w = Matrix(static_cast<std::size_t>(out), static_cast<std::size_t>(in));
    l.b.assign(static_cast<std::size_t>(out), 0.0);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& v : l.w.data) v = rng.uniform(-bound, bound);
    return l;
}

inline std::vector<DenseLayer> build_stack(int in, const std::vector<int>& hidden, int out, Rng& rng) {
    std::vector<DenseLayer> stack;
    int cur = in;
    for (int h : hidden) {
        stack.push_back(glorot_layer(h, cur, rng));
        cur = h;
    }
    stack.push_back(glorot_layer(out, cur, rng));
    return stack;
}

}  // namespace detail

// Fresh model with symmetric uniform (Glorot) weights from the config seed.
inline SAEModel init_model(const SAEConfig& config) {
    config.validate();
    SAEModel model;
    model.config = config;
    model.scaler.mean.assign(static_cast<std::size_t>(config.input_dim), 0.0);
    model.scaler.std.assign(static_cast<std::size_t>(config.input_dim), 1.0);
    Rng rng(derive_seed(config.seed, 0x696e6974));
    const int d = config.input_dim;
    const int b = config.bottleneck_size();
    const auto enc_sizes = config.resolved_hidden(config.encoder_hidden_sizes,
                                                  config.encoder_hidden_layers, d);
    const auto dec_sizes = config.resolved_hidden(config.decoder_hidden_sizes,
                                                  config.decoder_hidden_layers, d);
    const auto clf_sizes = config.resolved_hidden(config.classifier_hidden_sizes,
                                                  config.classifier_hidden_layers, b + d);
    model.encoder = detail::build_stack(d, enc_sizes, b, rng);
    model.decoder = detail::build_stack(b, dec_sizes, d, rng);
    model.classifier = detail::build_stack(b + d, clf_sizes, output_width(config.output_mode), rng);
    return model;
}

namespace detail {

inline void sgd_step(std::vector<DenseLayer>& stack, const StackGradients& g, double lr,
                     double momentum, StackGradients* velocity) {
    for (std::size_t l = 0; l < stack.size(); ++l) {
        if (momentum > 0.0 && velocity) {
            Matrix& vw = velocity->dw[l];
            auto& vb = velocity->db[l];
            for (std::size_t i = 0; i < vw.data.size(); ++i) {
                vw.data[i] = momentum * vw.data[i] - lr * g.dw[l].data[i];
                stack[l].w.data[i] += vw.data[i];
            }
            for (std::size_t i = 0; i < vb.size(); ++i) {
                vb[i] = momentum * vb[i] - lr * g.db[l][i];
                stack[l].b[i] += vb[i];
            }
        } else {
            for (std::size_t i = 0; i < stack[l].w.data.size(); ++i)
                stack[l].w.data[i] -= lr * g.dw[l].data[i];
            for (std::size_t i = 0; i < stack[l].b.size(); ++i) stack[l].b[i] -= lr * g.db[l][i];
        }
    }
}

inline void check_targets(OutputMode mode, const std::vector<double>& targets) {
    if (mode == OutputMode::Regression1) return;
    for (double t : targets) class_index(mode, t);  // throws on bad label
}

}  // namespace detail

// Mini-batch gradient descent on the joint loss. Features are standardized
// with statistics from this training set (stored on the model); noise is
// re-sampled each epoch from a stream derived from the config seed, so a
// fixed (config, data) pair trains bit-identically. The per-epoch log holds
// the loss over the clean training set after that epoch's updates.
inline SAEModel train(const SAEConfig& config, const Matrix& features,
                      const std::vector<double>& targets) {
    config.validate();
    if (features.rows == 0) throw std::invalid_argument("train: empty feature matrix");
    if (features.cols != static_cast<std::size_t>(config.input_dim))
        throw std::invalid_argument("train: feature width != input_dim");
    if (targets.size() != features.rows)
        throw std::invalid_argument("train: feature row count != target count");
    detail::check_targets(config.output_mode, targets);

    SAEModel model = init_model(config);
    model.scaler = Standardizer::fit(features);
    const Matrix clean = model.scaler.transform(features);
    // after standardization every column has unit scale, so the noise std is
    // the rate itself
    const std::vector<double> unit_std(clean.cols, 1.0);

    SAEGradients velocity;
    if (config.momentum > 0.0) {
        velocity.encoder = detail::zero_like(model.encoder);
        velocity.decoder = detail::zero_like(model.decoder);
        velocity.classifier = detail::zero_like(model.classifier);
    }

    const std::size_t n = clean.rows;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng noise_rng(derive_seed(config.seed, 0x6e6f6973, static_cast<std::uint64_t>(epoch)));
        const Matrix noisy = add_noise(clean, config.noise_rate, unit_std, noise_rng);
        Rng shuffle_rng(derive_seed(config.seed, 0x73687566, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        const std::size_t bs = static_cast<std::size_t>(config.batch_size);
        for (std::size_t start = 0, batch_idx = 0; start < n; start += bs, ++batch_idx) {
            const std::size_t stop = std::min(start + bs, n);
            Matrix xb(stop - start, clean.cols), cb(stop - start, clean.cols);
            std::vector<double> yb(stop - start);
            for (std::size_t r = start; r < stop; ++r) {
                const std::size_t src = order[r];
                std::copy(noisy.row(src), noisy.row(src) + clean.cols, xb.row(r - start));
                std::copy(clean.row(src), clean.row(src) + clean.cols, cb.row(r - start));
                yb[r - start] = targets[src];
            }
            LossParts parts;
            const SAEGradients grads = sae_gradients(model, xb, cb, yb, &parts);
            if (!std::isfinite(parts.total))
                throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch_idx));
            detail::sgd_step(model.encoder, grads.encoder, config.learning_rate, config.momentum,
                             config.momentum > 0.0 ? &velocity.encoder : nullptr);
            detail::sgd_step(model.decoder, grads.decoder, config.learning_rate, config.momentum,
                             config.momentum > 0.0 ? &velocity.decoder : nullptr);
            detail::sgd_step(model.classifier, grads.classifier, config.learning_rate, config.momentum,
                             config.momentum > 0.0 ? &velocity.classifier : nullptr);
        }

        const LossParts epoch_loss = sae_loss(model, clean, clean, targets);
        model.training_log.push_back({epoch, epoch_loss.total, epoch_loss.recon, epoch_loss.task});
    }
    return model;
}

// Inference on raw (unstandardized) features. Classification modes return
// labels; exact 0.5 in binary mode resolves to +1, ternary argmax ties to the
// lowest class index.
inline std::vector<double> predict(const SAEModel& model, const Matrix& features) {
    if (features.cols != static_cast<std::size_t>(model.config.input_dim) && features.rows > 0)
        throw std::invalid_argument("predict: feature width mismatch");
    if (features.rows == 0) return {};
    const Matrix x = model.scaler.transform(features);
    const auto fwd = sae_forward(model, x);
    std::vector<double> out(features.rows);
    switch (model.config.output_mode) {
        case OutputMode::Regression1:
            for (std::size_t r = 0; r < x.rows; ++r) out[r] = fwd.scores(r, 0);
            break;
        case OutputMode::Binary2:
            for (std::size_t r = 0; r < x.rows; ++r)
                out[r] = fwd.probabilities(r, 1) >= 0.5 ? 1.0 : -1.0;
            break;
        case OutputMode::Ternary3:
            for (std::size_t r = 0; r < x.rows; ++r) {
                std::size_t best = 0;
                for (std::size_t c = 1; c < 3; ++c)
                    if (fwd.probabilities(r, c) > fwd.probabilities(r, best)) best = c;
                out[r] = static_cast<double>(best) - 1.0;
            }
            break;
    }
    return out;
}

// ---- model persistence -----------------------------------------------------

namespace detail {

inline std::string hexd(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline void write_stack(std::ostream& os, const char* name, const std::vector<DenseLayer>& stack) {
    os << "stack " << name << " " << stack.size() << "\n";
    for (const auto& l : stack) {
        os << "layer " << l.w.rows << " " << l.w.cols << "\n";
        os << "b";
        for (double v : l.b) os << " " << hexd(v);
        os << "\n";
        for (std::size_t r = 0; r < l.w.rows; ++r) {
            os << "w";
            for (std::size_t c = 0; c < l.w.cols; ++c) os << " " << hexd(l.w(r, c));
            os << "\n";
        }
    }
}

inline void write_doubles(std::ostream& os, const char* key, const std::vector<double>& v) {
    os << key;
    for (double x : v) os << " " << hexd(x);
    os << "\n";
}

inline std::vector<double> parse_doubles(std::istream& is, const std::string& expect_key) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("model file: unexpected end near " + expect_key);
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key != expect_key) throw std::runtime_error("model file: expected '" + expect_key + "', got '" + key + "'");
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(std::strtod(tok.c_str(), nullptr));
    return out;
}

inline std::vector<DenseLayer> read_stack(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("model file: missing stack " + name);
    std::istringstream ss(line);
    std::string word, got;
    std::size_t count = 0;
    ss >> word >> got >> count;
    if (word != "stack" || got != name) throw std::runtime_error("model file: bad stack header for " + name);
    std::vector<DenseLayer> stack(count);
    for (auto& l : stack) {
        if (!std::getline(is, line)) throw std::runtime_error("model file: truncated stack " + name);
        std::istringstream ls(line);
        std::size_t rows = 0, cols = 0;
        ls >> word >> rows >> cols;
        if (word != "layer") throw std::runtime_error("model file: bad layer header");
        l.b = parse_doubles(is, "b");
        if (l.b.size() != rows) throw std::runtime_error("model file: bias size mismatch");
        l.w = Matrix(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            const auto wr = parse_doubles(is, "w");
            if (wr.size() != cols) throw std::runtime_error("model file: weight row size mismatch");
            std::copy(wr.begin(), wr.end(), l.w.row(r));
        }
    }
    return stack;
}

inline void write_int_list(std::ostream& os, const char* key, const std::vector<int>& v) {
    os << key;
    for (int x : v) os << " " << x;
    os << "\n";
}

inline std::string strip_ws(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

inline std::vector<int> parse_int_list(const std::string& s) {
    std::istringstream ss(s);
    std::vector<int> out;
    int x;
    while (ss >> x) out.push_back(x);
    return out;
}

}  // namespace detail

// Versioned text format; weights serialize as hex floats, so a save/load
// round trip is lossless at double precision.
inline void save_model(const SAEModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_model: cannot write " + path);
    const SAEConfig& c = model.config;
    os << "saelab-model v1\n";
    os << "input_dim " << c.input_dim << "\n";
    os << "bottleneck_fraction " << detail::hexd(c.bottleneck_fraction) << "\n";
    os << "encoder_hidden_layers " << c.encoder_hidden_layers << "\n";
    detail::write_int_list(os, "encoder_hidden_sizes", c.encoder_hidden_sizes);
    os << "decoder_hidden_layers " << c.decoder_hidden_layers << "\n";
    detail::write_int_list(os, "decoder_hidden_sizes", c.decoder_hidden_sizes);
    os << "classifier_hidden_layers " << c.classifier_hidden_layers << "\n";
    detail::write_int_list(os, "classifier_hidden_sizes", c.classifier_hidden_sizes);
    os << "activation " << static_cast<int>(c.activation) << "\n";
    os << "noise_rate " << detail::hexd(c.noise_rate) << "\n";
    os << "loss_mix " << detail::hexd(c.loss_mix) << "\n";
    os << "epochs " << c.epochs << "\n";
    os << "learning_rate " << detail::hexd(c.learning_rate) << "\n";
    os << "momentum " << detail::hexd(c.momentum) << "\n";
    os << "batch_size " << c.batch_size << "\n";
    os << "seed " << c.seed << "\n";
    os << "output_mode " << static_cast<int>(c.output_mode) << "\n";
    detail::write_doubles(os, "scaler_mean", model.scaler.mean);
    detail::write_doubles(os, "scaler_std", model.scaler.std);
    detail::write_stack(os, "encoder", model.encoder);
    detail::write_stack(os, "decoder", model.decoder);
    detail::write_stack(os, "classifier", model.classifier);
    os << "end\n";
}

inline SAEModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_model: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != "saelab-model v1")
        throw std::runtime_error("load_model: bad magic in " + path);

    SAEModel model;
    SAEConfig& c = model.config;
    auto read_kv = [&](const std::string& expect) -> std::string {
        if (!std::getline(is, line)) throw std::runtime_error("load_model: truncated at " + expect);
        std::istringstream ss(line);
        std::string key, rest;
        ss >> key;
        if (key != expect) throw std::runtime_error("load_model: expected " + expect + ", got " + key);
        std::getline(ss, rest);
        return detail::strip_ws(rest);
    };
    c.input_dim = std::stoi(read_kv("input_dim"));
    c.bottleneck_fraction = std::strtod(read_kv("bottleneck_fraction").c_str(), nullptr);
    c.encoder_hidden_layers = std::stoi(read_kv("encoder_hidden_layers"));
    c.encoder_hidden_sizes = detail::parse_int_list(read_kv("encoder_hidden_sizes"));
    c.decoder_hidden_layers = std::stoi(read_kv("decoder_hidden_layers"));
    c.decoder_hidden_sizes = detail::parse_int_list(read_kv("decoder_hidden_sizes"));
    c.classifier_hidden_layers = std::stoi(read_kv("classifier_hidden_layers"));
    c.classifier_hidden_sizes = detail::parse_int_list(read_kv("classifier_hidden_sizes"));
    c.activation = static_cast<Activation>(std::stoi(read_kv("activation")));
    c.noise_rate = std::strtod(read_kv("noise_rate").c_str(), nullptr);
    c.loss_mix = std::strtod(read_kv("loss_mix").c_str(), nullptr);
    c.epochs = std::stoi(read_kv("epochs"));
    c.learning_rate = std::strtod(read_kv("learning_rate").c_str(), nullptr);
    c.momentum = std::strtod(read_kv("momentum").c_str(), nullptr);
    c.batch_size = std::stoi(read_kv("batch_size"));
    c.seed = std::stoull(read_kv("seed"));
    c.output_mode = static_cast<OutputMode>(std::stoi(read_kv("output_mode")));
    model.scaler.mean = detail::parse_doubles(is, "scaler_mean");
    model.scaler.std = detail::parse_doubles(is, "scaler_std");
    model.encoder = detail::read_stack(is, "encoder");
    model.decoder = detail::read_stack(is, "decoder");
    model.classifier = detail::read_stack(is, "classifier");
    return model;
}

}  // namespace saelab
