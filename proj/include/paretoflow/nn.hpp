#pragma once

// Minimal dense-network engine: batched forward, exact parameter and input
// gradients, Adam updates, and an MSE training loop. Everything is double
// precision and deterministic given (config, seed).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "paretoflow/rng.hpp"

namespace paretoflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { relu, selu, identity };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::selu: return "selu";
        case Activation::identity: return "identity";
    }
    throw std::logic_error("bad activation enum");
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "selu") return Activation::selu;
    if (s == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation: " + s);
}

// Published SeLU constants.
inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::selu:
            return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
        case Activation::identity: return x;
    }
    return x;
}

inline double activate_deriv(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::selu:
            return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

struct DenseNetwork {
    std::vector<int> layer_sizes;   // input dim, hidden dims..., output dim
    Activation activation = Activation::relu;  // hidden layers; output is identity
    std::uint64_t rng_seed = 0;
    std::vector<Matrix> weights;    // weights[l] is out_l x in_l
    std::vector<Vector> biases;

    int num_layers() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }

    // Kaiming-uniform fan-in for ReLU nets, LeCun-normal for SeLU/identity.
    static DenseNetwork make(std::vector<int> sizes, Activation act, std::uint64_t seed) {
        if (sizes.size() < 2) throw std::invalid_argument("need at least input and output dims");
        for (int s : sizes)
            if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
        DenseNetwork net;
        net.layer_sizes = std::move(sizes);
        net.activation = act;
        net.rng_seed = seed;
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
            const int in = net.layer_sizes[l];
            const int out = net.layer_sizes[l + 1];
            Matrix w(out, in);
            if (act == Activation::relu) {
                const double bound = std::sqrt(6.0 / in);
                std::uniform_real_distribution<double> u(-bound, bound);
                for (int r = 0; r < out; ++r)
                    for (int c = 0; c < in; ++c) w(r, c) = u(rng);
            } else {
                const double stddev = std::sqrt(1.0 / in);
                std::normal_distribution<double> n(0.0, stddev);
                for (int r = 0; r < out; ++r)
                    for (int c = 0; c < in; ++c) w(r, c) = n(rng);
            }
            net.weights.push_back(std::move(w));
            net.biases.push_back(Vector::Zero(out));
        }
        return net;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (int l = 0; l < num_layers(); ++l)
            n += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
        return n;
    }

    // Activations cached per layer for backprop. post[0] holds the input batch.
    struct ForwardCache {
        std::vector<Matrix> pre;    // pre[l]: batch x out_l, pre-activation of layer l
        std::vector<Matrix> post;   // post[l]: batch x in of layer l (post[0] = X)
    };

    // X is batch x input_dim, rows are samples.
    Matrix forward(const Matrix& X, ForwardCache* cache = nullptr) const {
        if (X.cols() != input_dim())
            throw std::invalid_argument("forward: input has " + std::to_string(X.cols()) +
                                        " columns, expected " + std::to_string(input_dim()));
        if (cache) {
            cache->pre.clear();
            cache->post.clear();
            cache->post.push_back(X);
        }
        Matrix h = X;
        const int L = num_layers();
        for (int l = 0; l < L; ++l) {
            Matrix z = (h * weights[l].transpose()).rowwise() + biases[l].transpose();
            if (cache) cache->pre.push_back(z);
            const bool last = (l == L - 1);
            if (last || activation == Activation::identity) {
                h = std::move(z);
            } else {
                h = z.unaryExpr([&](double v) { return activate(activation, v); });
            }
            if (cache && !last) cache->post.push_back(h);
        }
        return h;
    }

    Vector forward_one(const Vector& x) const {
        Matrix X = x.transpose();
        return forward(X).row(0).transpose();
    }

    struct Gradients {
        std::vector<Matrix> dW;
        std::vector<Vector> db;

        Gradients() = default;
        explicit Gradients(const DenseNetwork& net) {
            for (int l = 0; l < net.num_layers(); ++l) {
                dW.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
                db.push_back(Vector::Zero(net.biases[l].size()));
            }
        }

        Gradients& operator+=(const Gradients& o) {
            for (std::size_t l = 0; l < dW.size(); ++l) {
                dW[l] += o.dW[l];
                db[l] += o.db[l];
            }
            return *this;
        }

        void scale(double s) {
            for (std::size_t l = 0; l < dW.size(); ++l) {
                dW[l] *= s;
                db[l] *= s;
            }
        }

        double max_abs() const {
            double m = 0.0;
            for (std::size_t l = 0; l < dW.size(); ++l) {
                m = std::max(m, dW[l].cwiseAbs().maxCoeff());
                m = std::max(m, db[l].cwiseAbs().maxCoeff());
            }
            return m;
        }
    };

    // dY is batch x output_dim, the cotangent of the forward output.
    Gradients backward_params(const ForwardCache& cache, const Matrix& dY) const {
        Gradients g(*this);
        Matrix delta = dY;
        const int L = num_layers();
        for (int l = L - 1; l >= 0; --l) {
            if (l != L - 1 && activation != Activation::identity) {
                delta = delta.cwiseProduct(cache.pre[l].unaryExpr(
                    [&](double v) { return activate_deriv(activation, v); }));
            }
            g.dW[l] = delta.transpose() * cache.post[l];
            g.db[l] = delta.colwise().sum().transpose();
            if (l > 0) delta = delta * weights[l];
        }
        return g;
    }

    // Gradient of <dY, output> with respect to the input batch; batch x input_dim.
    Matrix backward_input(const ForwardCache& cache, const Matrix& dY) const {
        Matrix delta = dY;
        const int L = num_layers();
        for (int l = L - 1; l >= 0; --l) {
            if (l != L - 1 && activation != Activation::identity) {
                delta = delta.cwiseProduct(cache.pre[l].unaryExpr(
                    [&](double v) { return activate_deriv(activation, v); }));
            }
            delta = delta * weights[l];
        }
        return delta;
    }
};

// Mean over rows of the squared error summed across output dims.
inline double mse_loss(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mse: shape mismatch");
    if (pred.rows() == 0) throw std::invalid_argument("mse: empty batch");
    return (pred - target).squaredNorm() / static_cast<double>(pred.rows());
}

// Batch MSE and exact gradients w.r.t. every parameter.
inline double param_gradients(const DenseNetwork& net, const Matrix& X, const Matrix& Y,
                              DenseNetwork::Gradients& grads) {
    if (X.rows() == 0) throw std::invalid_argument("param_gradients: empty batch");
    if (Y.rows() != X.rows() || Y.cols() != net.output_dim())
        throw std::invalid_argument("param_gradients: target shape mismatch");
    DenseNetwork::ForwardCache cache;
    Matrix pred = net.forward(X, &cache);
    const double loss = mse_loss(pred, Y);
    Matrix dY = 2.0 * (pred - Y) / static_cast<double>(X.rows());
    grads = net.backward_params(cache, dY);
    return loss;
}

// d(coeffs . output)/d(input) for a single input vector. For scalar-output
// networks pass coeffs = (1).
inline Vector input_gradient(const DenseNetwork& net, const Vector& x, const Vector& coeffs) {
    if (coeffs.size() != net.output_dim())
        throw std::invalid_argument("input_gradient: reduction coefficients must match output dim");
    DenseNetwork::ForwardCache cache;
    Matrix X = x.transpose();
    net.forward(X, &cache);
    Matrix dY = coeffs.transpose();
    return net.backward_input(cache, dY).row(0).transpose();
}

inline Vector input_gradient(const DenseNetwork& net, const Vector& x) {
    if (net.output_dim() != 1)
        throw std::invalid_argument(
            "input_gradient: non-scalar output requires reduction coefficients");
    return input_gradient(net, x, Vector::Ones(1));
}

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double lr_decay = 0.98;  // multiplicative, applied once per epoch boundary
};

struct AdamState {
    AdamConfig config;
    double learning_rate = 1e-3;   // current, after decay
    std::int64_t step_count = 0;
    std::vector<Matrix> mW, vW;
    std::vector<Vector> mb, vb;

    static AdamState make(const DenseNetwork& net, const AdamConfig& cfg) {
        AdamState s;
        s.config = cfg;
        s.learning_rate = cfg.learning_rate;
        for (int l = 0; l < net.num_layers(); ++l) {
            s.mW.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
            s.vW.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
            s.mb.push_back(Vector::Zero(net.biases[l].size()));
            s.vb.push_back(Vector::Zero(net.biases[l].size()));
        }
        return s;
    }

    void end_epoch() { learning_rate *= config.lr_decay; }
};

inline void adam_step(DenseNetwork& net, const DenseNetwork::Gradients& grads, AdamState& state) {
    if (grads.dW.size() != net.weights.size())
        throw std::invalid_argument("adam_step: gradient layer count mismatch");
    state.step_count += 1;
    const double b1 = state.config.beta1;
    const double b2 = state.config.beta2;
    const double eps = state.config.epsilon;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    const double lr = state.learning_rate;
    for (int l = 0; l < net.num_layers(); ++l) {
        if (grads.dW[l].rows() != net.weights[l].rows() ||
            grads.dW[l].cols() != net.weights[l].cols())
            throw std::invalid_argument("adam_step: gradient shape mismatch");
        state.mW[l] = b1 * state.mW[l] + (1.0 - b1) * grads.dW[l];
        state.vW[l] = b2 * state.vW[l] + (1.0 - b2) * grads.dW[l].cwiseProduct(grads.dW[l]);
        state.mb[l] = b1 * state.mb[l] + (1.0 - b1) * grads.db[l];
        state.vb[l] = b2 * state.vb[l] + (1.0 - b2) * grads.db[l].cwiseProduct(grads.db[l]);
        net.weights[l] -= lr * (state.mW[l] / bc1)
                              .cwiseQuotient(((state.vW[l] / bc2).cwiseSqrt().array() + eps).matrix());
        net.biases[l] -= lr * (state.mb[l] / bc1)
                             .cwiseQuotient(((state.vb[l] / bc2).cwiseSqrt().array() + eps).matrix());
    }
}

struct TrainResult {
    std::vector<double> loss_history;  // one entry per epoch
};

// Shuffled mini-batch MSE training, reproducible from rng_seed.
inline TrainResult train_regressor(DenseNetwork& net, const Matrix& X, const Matrix& Y, int epochs,
                                   int batch_size, const AdamConfig& adam_cfg,
                                   std::uint64_t rng_seed) {
    if (X.rows() == 0) throw std::invalid_argument("train_regressor: empty dataset");
    if (batch_size <= 0) throw std::invalid_argument("train_regressor: batch_size must be > 0");
    TrainResult result;
    if (epochs <= 0) return result;
    AdamState state = AdamState::make(net, adam_cfg);
    Rng rng(rng_seed);
    const Eigen::Index n = X.rows();
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < n; start += batch_size) {
            const Eigen::Index bs = std::min<Eigen::Index>(batch_size, n - start);
            Matrix bx(bs, X.cols()), by(bs, Y.cols());
            for (Eigen::Index i = 0; i < bs; ++i) {
                bx.row(i) = X.row(order[start + i]);
                by.row(i) = Y.row(order[start + i]);
            }
            DenseNetwork::Gradients grads;
            const double loss = param_gradients(net, bx, by, grads);
            adam_step(net, grads, state);
            epoch_loss += loss * static_cast<double>(bs);
            seen += bs;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(seen));
        state.end_epoch();
    }
    return result;
}

}  // namespace paretoflow
