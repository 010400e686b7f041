#pragma once

// Conditional flow matching for a toy vector-field network that carries one
// ScanPE attention layer. Backpropagation is written out by hand for the fixed
// architecture:
//
//   h0  = z W_in + b_in + phi(tau) W_time + c W_cond        (tokens x D)
//   h1  = h0 + softmax(rot(h0 Wq) rot(h0 Wk)^T / sqrt(D)) (h0 Wv)
//   out = tanh(h1 W1 + b1) W2 + b2                           (tokens x C)

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "scrollscape/error.hpp"
#include "scrollscape/matrix.hpp"
#include "scrollscape/scanpe.hpp"

namespace scrollscape {

/// One point on the linear path between data z0 and noise z1.
struct FlowSample {
    Matrix z0;  // tokens x channels
    Matrix z1;
    double tau = 0.0;
};

/// Stand-in for the text prompt embedding.
struct Condition {
    std::vector<double> embedding;
};

struct BatchItem {
    FlowSample sample;
    Condition condition;
};

using Batch = std::vector<BatchItem>;

/// (1 - tau) z0 + tau z1, elementwise.
inline Matrix interpolate(const FlowSample& s) {
    linalg::require_same_shape(s.z0, s.z1, "interpolate");
    if (!(s.tau >= 0.0 && s.tau <= 1.0)) throw UsageError("tau must lie in [0, 1]");
    Matrix out(s.z0.rows(), s.z0.cols());
    auto a = s.z0.data();
    auto b = s.z1.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (1.0 - s.tau) * a[i] + s.tau * b[i];
    return out;
}

/// z1 - z0, the regression target along the path.
inline Matrix flow_target(const FlowSample& s) {
    linalg::require_same_shape(s.z0, s.z1, "flow_target");
    Matrix out(s.z0.rows(), s.z0.cols());
    auto a = s.z0.data();
    auto b = s.z1.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = b[i] - a[i];
    return out;
}

struct NetShape {
    std::size_t channels = 2;       // latent channels per token
    std::size_t model_dim = 32;     // token width D; also the rotary head dim
    std::size_t hidden = 64;        // feedforward width
    std::size_t cond_dim = 4;
    std::size_t time_features = 4;  // sin/cos pairs of tau
    RopeParams rope{10000.0, 32, {10, 10, 12}};

    void validate() const {
        if (channels == 0 || model_dim == 0 || hidden == 0) throw ConfigError("network dims must be positive", "net");
        if (time_features == 0 || time_features % 2 != 0) {
            throw ConfigError("must be even and positive", "net.time_features");
        }
        if (rope.head_dim != model_dim) throw ConfigError("head_dim must equal model_dim", "rope.head_dim,net.model_dim");
        rope.validate();
    }
};

/// Fixed sinusoidal features of tau: sin/cos at frequencies pi/2 * 2^k.
inline std::vector<double> time_features(double tau, std::size_t count) {
    std::vector<double> f(count);
    for (std::size_t k = 0; k < count / 2; ++k) {
        const double omega = std::numbers::pi / 2.0 * static_cast<double>(1u << k);
        f[2 * k] = std::sin(omega * tau);
        f[2 * k + 1] = std::cos(omega * tau);
    }
    return f;
}

/// Named parameter array inside the flat parameter vector.
struct ParamSlot {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    std::size_t size() const { return rows * cols; }
};

/// Intermediate activations of one forward pass.
struct ForwardCache {
    Matrix z;
    std::vector<double> phi;
    std::vector<double> cond;
    std::vector<RotaryPhase> phases;
    Matrix h0, qr, kr, v, attn, h1, g, out;
};

class VectorFieldNet {
public:
    VectorFieldNet() = default;

    explicit VectorFieldNet(NetShape shape) : shape_(std::move(shape)), table_(shape_.rope) {
        shape_.validate();
        const std::size_t C = shape_.channels, D = shape_.model_dim, F = shape_.hidden;
        add("in_proj.weight", C, D);
        add("in_proj.bias", 1, D);
        add("time_proj.weight", shape_.time_features, D);
        add("cond_proj.weight", shape_.cond_dim, D);
        add("attn.q", D, D);
        add("attn.k", D, D);
        add("attn.v", D, D);
        add("ff1.weight", D, F);
        add("ff1.bias", 1, F);
        add("ff2.weight", F, C);
        add("ff2.bias", 1, C);
        params_.assign(total_, 0.0);
    }

    /// Gaussian init with 1/sqrt(fan_in) scale; biases start at zero.
    static VectorFieldNet initialized(const NetShape& shape, std::uint64_t seed) {
        VectorFieldNet net(shape);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (const ParamSlot& s : net.slots_) {
            const bool bias = s.name.ends_with(".bias");
            const double scale = bias ? 0.0 : 1.0 / std::sqrt(static_cast<double>(s.rows));
            for (std::size_t i = 0; i < s.size(); ++i) net.params_[s.offset + i] = scale * normal(rng);
        }
        return net;
    }

    const NetShape& shape() const { return shape_; }
    const std::vector<ParamSlot>& slots() const { return slots_; }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    const ParamSlot& slot(const std::string& name) const {
        for (const ParamSlot& s : slots_) {
            if (s.name == name) return s;
        }
        throw UsageError("no parameter named " + name);
    }

    Matrix param(const std::string& name) const {
        const ParamSlot& s = slot(name);
        Matrix m(s.rows, s.cols);
        std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(s.offset), s.size(), m.data().begin());
        return m;
    }

    /// v_theta(z_tau, tau, c, R).
    Matrix operator()(const Matrix& z, double tau, const Condition& cond,
                      const std::vector<GlobalCoord>& coords) const {
        return forward(z, tau, cond, coords).out;
    }

    ForwardCache forward(const Matrix& z, double tau, const Condition& cond,
                  const std::vector<GlobalCoord>& coords) const;
    /// Adds d(loss)/d(params) for one sample into `grad`, given d(loss)/d(out).
    void backward(const ForwardCache& cache, const Matrix& d_out, std::vector<double>& grad) const;

private:
    void add(std::string name, std::size_t rows, std::size_t cols) {
        slots_.push_back({std::move(name), rows, cols, total_});
        total_ += rows * cols;
    }

    void accumulate(std::vector<double>& grad, const std::string& name, const Matrix& g) const {
        const ParamSlot& s = slot(name);
        auto d = g.data();
        for (std::size_t i = 0; i < s.size(); ++i) grad[s.offset + i] += d[i];
    }

    NetShape shape_;
    RotaryTable table_{RopeParams{}};
    std::vector<ParamSlot> slots_;
    std::size_t total_ = 0;
    std::vector<double> params_;
};

inline ForwardCache VectorFieldNet::forward(const Matrix& z, double tau, const Condition& cond,
                                                     const std::vector<GlobalCoord>& coords) const {
    const std::size_t n = z.rows();
    const std::size_t D = shape_.model_dim;
    if (z.cols() != shape_.channels) throw DimensionError("latent channels do not match the network");
    if (coords.size() != n) throw DimensionError("one coordinate per token required");
    if (cond.embedding.size() != shape_.cond_dim) throw DimensionError("condition width does not match the network");

    ForwardCache c;
    c.z = z;
    c.phi = time_features(tau, shape_.time_features);
    c.cond = cond.embedding;

    // Token-independent embedding: bias + time + condition.
    std::vector<double> shared(D, 0.0);
    {
        const Matrix b = param("in_proj.bias");
        const Matrix wt = param("time_proj.weight");
        const Matrix wc = param("cond_proj.weight");
        for (std::size_t j = 0; j < D; ++j) {
            double s = b(0, j);
            for (std::size_t k = 0; k < c.phi.size(); ++k) s += c.phi[k] * wt(k, j);
            for (std::size_t k = 0; k < c.cond.size(); ++k) s += c.cond[k] * wc(k, j);
            shared[j] = s;
        }
    }
    c.h0 = linalg::matmul(z, param("in_proj.weight"));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < D; ++j) c.h0(i, j) += shared[j];
    }

    c.phases = phases_for(coords, table_);
    c.qr = rotate_rows(linalg::matmul(c.h0, param("attn.q")), c.phases);
    c.kr = rotate_rows(linalg::matmul(c.h0, param("attn.k")), c.phases);
    c.v = linalg::matmul(c.h0, param("attn.v"));
    c.attn = linalg::matmul_nt(c.qr, c.kr);
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    for (double& x : c.attn.data()) x *= scale;
    softmax_rows(c.attn);

    c.h1 = linalg::matmul(c.attn, c.v);
    linalg::add_inplace(c.h1, c.h0);

    c.g = linalg::matmul(c.h1, param("ff1.weight"));
    const Matrix b1 = param("ff1.bias");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < shape_.hidden; ++j) c.g(i, j) = std::tanh(c.g(i, j) + b1(0, j));
    }
    c.out = linalg::matmul(c.g, param("ff2.weight"));
    const Matrix b2 = param("ff2.bias");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < shape_.channels; ++j) c.out(i, j) += b2(0, j);
    }
    return c;
}

inline void VectorFieldNet::backward(const ForwardCache& c, const Matrix& d_out, std::vector<double>& grad) const {
    const std::size_t n = c.z.rows();
    const std::size_t D = shape_.model_dim;
    const std::size_t F = shape_.hidden;
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);

    // out = g W2 + b2
    accumulate(grad, "ff2.weight", linalg::matmul_tn(c.g, d_out));
    Matrix db2(1, shape_.channels);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < shape_.channels; ++j) db2(0, j) += d_out(i, j);
    }
    accumulate(grad, "ff2.bias", db2);
    Matrix d_pre = linalg::matmul_nt(d_out, param("ff2.weight"));

    // g = tanh(h1 W1 + b1)
    Matrix db1(1, F);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < F; ++j) {
            d_pre(i, j) *= 1.0 - c.g(i, j) * c.g(i, j);
            db1(0, j) += d_pre(i, j);
        }
    }
    accumulate(grad, "ff1.weight", linalg::matmul_tn(c.h1, d_pre));
    accumulate(grad, "ff1.bias", db1);
    const Matrix d_h1 = linalg::matmul_nt(d_pre, param("ff1.weight"));

    // h1 = h0 + A V
    Matrix d_h0 = d_h1;
    const Matrix d_a = linalg::matmul_nt(d_h1, c.v);
    const Matrix d_v = linalg::matmul_tn(c.attn, d_h1);

    // Softmax backward, then the 1/sqrt(D) scale.
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    Matrix d_s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += d_a(i, j) * c.attn(i, j);
        for (std::size_t j = 0; j < n; ++j) d_s(i, j) = c.attn(i, j) * (d_a(i, j) - dot) * scale;
    }
    const Matrix d_q = rotate_rows(linalg::matmul(d_s, c.kr), c.phases, true);
    const Matrix d_k = rotate_rows(linalg::matmul_tn(d_s, c.qr), c.phases, true);

    accumulate(grad, "attn.q", linalg::matmul_tn(c.h0, d_q));
    accumulate(grad, "attn.k", linalg::matmul_tn(c.h0, d_k));
    accumulate(grad, "attn.v", linalg::matmul_tn(c.h0, d_v));
    linalg::add_inplace(d_h0, linalg::matmul_nt(d_q, param("attn.q")));
    linalg::add_inplace(d_h0, linalg::matmul_nt(d_k, param("attn.k")));
    linalg::add_inplace(d_h0, linalg::matmul_nt(d_v, param("attn.v")));

    // h0 = z W_in + shared
    accumulate(grad, "in_proj.weight", linalg::matmul_tn(c.z, d_h0));
    Matrix d_shared(1, D);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < D; ++j) d_shared(0, j) += d_h0(i, j);
    }
    accumulate(grad, "in_proj.bias", d_shared);
    Matrix d_wt(c.phi.size(), D);
    for (std::size_t k = 0; k < c.phi.size(); ++k) {
        for (std::size_t j = 0; j < D; ++j) d_wt(k, j) = c.phi[k] * d_shared(0, j);
    }
    accumulate(grad, "time_proj.weight", d_wt);
    Matrix d_wc(c.cond.size(), D);
    for (std::size_t k = 0; k < c.cond.size(); ++k) {
        for (std::size_t j = 0; j < D; ++j) d_wc(k, j) = c.cond[k] * d_shared(0, j);
    }
    accumulate(grad, "cond_proj.weight", d_wc);
}

/// Mean over all elements and batch entries of (v(z_tau) - (z1 - z0))^2.
/// `predictor` is any callable (z_tau, tau, condition, coords) -> Matrix.
template <typename Predictor>
double fm_loss(const Predictor& predictor, const Batch& batch, const std::vector<GlobalCoord>& coords) {
    if (batch.empty()) throw UsageError("fm_loss: empty batch");
    double sum = 0.0;
    std::size_t count = 0;
    for (const BatchItem& item : batch) {
        const Matrix pred = predictor(interpolate(item.sample), item.sample.tau, item.condition, coords);
        const Matrix target = flow_target(item.sample);
        linalg::require_same_shape(pred, target, "fm_loss");
        auto p = pred.data();
        auto t = target.data();
        for (std::size_t i = 0; i < p.size(); ++i) sum += (p[i] - t[i]) * (p[i] - t[i]);
        count += p.size();
    }
    return sum / static_cast<double>(count);
}

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// fm_loss together with its exact parameter gradient.
inline LossAndGrad fm_loss_and_grad(const VectorFieldNet& net, const Batch& batch,
                                    const std::vector<GlobalCoord>& coords) {
    if (batch.empty()) throw UsageError("fm_loss: empty batch");
    LossAndGrad res;
    res.grad.assign(net.parameter_count(), 0.0);
    std::size_t count = 0;
    for (const BatchItem& item : batch) count += item.sample.z0.size();
    const double norm = 1.0 / static_cast<double>(count);
    double sum = 0.0;
    for (const BatchItem& item : batch) {
        const auto cache = net.forward(interpolate(item.sample), item.sample.tau, item.condition, coords);
        const Matrix target = flow_target(item.sample);
        linalg::require_same_shape(cache.out, target, "fm_loss");
        Matrix d_out(target.rows(), target.cols());
        auto p = cache.out.data();
        auto t = target.data();
        auto d = d_out.data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double r = p[i] - t[i];
            sum += r * r;
            d[i] = 2.0 * r * norm;
        }
        net.backward(cache, d_out, res.grad);
    }
    res.loss = sum * norm;
    return res;
}

enum class Optimizer { sgd, adam };

/// Toy-scale defaults; the full-scale run used far smaller rates and many
/// more iterations.
struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t batch_size = 16;
    std::size_t iterations = 500;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::adam;

    void validate() const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw ConfigError("must be non-negative and finite", "train.learning_rate");
        }
        if (batch_size == 0) throw ConfigError("must be positive", "train.batch_size");
        if (iterations == 0) throw ConfigError("must be positive", "train.iterations");
    }
};

/// Optimizer state carried across steps.
struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
};

/// One gradient update of `net` on `batch`. Returns the pre-update loss.
/// Throws DivergenceError if the loss is not finite.
inline double train_step(VectorFieldNet& net, const Batch& batch, const std::vector<GlobalCoord>& coords,
                         const TrainConfig& config, OptimizerState& state) {
    LossAndGrad lg = fm_loss_and_grad(net, batch, coords);
    if (!std::isfinite(lg.loss)) throw DivergenceError("training diverged: non-finite loss", state.step);
    auto& p = net.parameters();
    const double lr = config.learning_rate;
    ++state.step;
    if (config.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * lg.grad[i];
        return lg.loss;
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (state.m.size() != p.size()) {
        state.m.assign(p.size(), 0.0);
        state.v.assign(p.size(), 0.0);
    }
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = lg.grad[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        p[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + eps);
    }
    return lg.loss;
}

/// Integrates dz/dtau = v from tau = 1 to 0 with `steps` uniform explicit
/// Euler steps, starting at the noise z1.
template <typename Field>
Matrix sample(const Field& field, Matrix z1, const Condition& cond, std::size_t steps,
              const std::vector<GlobalCoord>& coords) {
    if (steps == 0) throw UsageError("sample: steps must be >= 1");
    Matrix z = std::move(z1);
    const double dt = 1.0 / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double tau = static_cast<double>(steps - k) / static_cast<double>(steps);
        const Matrix v = field(z, tau, cond, coords);
        linalg::require_same_shape(v, z, "sample");
        auto zd = z.data();
        auto vd = v.data();
        for (std::size_t i = 0; i < zd.size(); ++i) {
            zd[i] -= dt * vd[i];
            if (!std::isfinite(zd[i])) throw DivergenceError("sampling diverged: non-finite state", k);
        }
    }
    return z;
}

// ---------------------------------------------------------------------------
// Toy data

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = normal(rng);
    return m;
}

/// Data distribution over tokens x channels latents.
struct ToyData {
    enum class Kind { mixture, point_mass };
    Kind kind = Kind::mixture;
    Matrix mean;          // component mean (mixture: +mean and -mean)
    double spread = 0.1;  // within-component standard deviation

    /// Channel-alternating +-1 pattern, unit mean square.
    static ToyData mixture(std::size_t tokens, std::size_t channels, double spread = 0.1) {
        ToyData d;
        d.kind = Kind::mixture;
        d.spread = spread;
        d.mean = pattern(tokens, channels);
        return d;
    }

    static ToyData point_mass(std::size_t tokens, std::size_t channels) {
        ToyData d;
        d.kind = Kind::point_mass;
        d.spread = 0.0;
        d.mean = pattern(tokens, channels);
        return d;
    }

    static Matrix pattern(std::size_t tokens, std::size_t channels) {
        Matrix m(tokens, channels);
        for (std::size_t i = 0; i < tokens; ++i) {
            for (std::size_t c = 0; c < channels; ++c) m(i, c) = (c % 2 == 0) ? 1.0 : -1.0;
        }
        return m;
    }

    Matrix draw(std::mt19937_64& rng) const {
        Matrix z = mean;
        if (kind == Kind::mixture) {
            std::bernoulli_distribution coin(0.5);
            if (coin(rng)) {
                for (double& x : z.data()) x = -x;
            }
        }
        if (spread > 0.0) {
            std::normal_distribution<double> normal(0.0, spread);
            for (double& x : z.data()) x += normal(rng);
        }
        return z;
    }
};

inline Batch draw_batch(const ToyData& data, std::size_t batch_size, const Condition& cond,
                        std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Batch batch;
    batch.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        BatchItem item;
        item.sample.z0 = data.draw(rng);
        item.sample.z1 = gaussian_matrix(data.mean.rows(), data.mean.cols(), rng);
        item.sample.tau = uniform(rng);
        item.condition = cond;
        batch.push_back(std::move(item));
    }
    return batch;
}

struct TrainResult {
    std::vector<double> losses;  // loss before each update
};

/// Full training loop; the seed fixes data order, noise and tau draws.
inline TrainResult train(VectorFieldNet& net, const ToyData& data, const Condition& cond,
                         const std::vector<GlobalCoord>& coords, const TrainConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed ^ 0x5ca9e5ca9eULL);
    OptimizerState state;
    TrainResult res;
    res.losses.reserve(config.iterations);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        const Batch batch = draw_batch(data, config.batch_size, cond, rng);
        res.losses.push_back(train_step(net, batch, coords, config, state));
    }
    return res;
}

}  // namespace scrollscape
