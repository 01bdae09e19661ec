#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "paretoflow/checkpoint.hpp"
#include "paretoflow/nn.hpp"

#include <cstdio>
#include <filesystem>

using namespace paretoflow;

namespace {

// Independent forward pass: plain loops, no Eigen products.
Vector oracle_forward(const DenseNetwork& net, const Vector& x) {
    std::vector<double> h(x.data(), x.data() + x.size());
    for (int l = 0; l < net.num_layers(); ++l) {
        const Matrix& W = net.weights[l];
        std::vector<double> z(W.rows());
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
            double acc = net.biases[l](r);
            for (Eigen::Index c = 0; c < W.cols(); ++c) acc += W(r, c) * h[c];
            z[r] = acc;
        }
        const bool last = (l == net.num_layers() - 1);
        for (std::size_t i = 0; i < z.size(); ++i)
            if (!last) z[i] = activate(net.activation, z[i]);
        h = std::move(z);
    }
    Vector out(static_cast<Eigen::Index>(h.size()));
    for (std::size_t i = 0; i < h.size(); ++i) out(static_cast<Eigen::Index>(i)) = h[i];
    return out;
}

// Central finite differences of the batch MSE w.r.t. one parameter.
double fd_param(DenseNetwork net, int layer, int r, int c, bool bias, const Matrix& X,
                const Matrix& Y, double h = 1e-5) {
    auto eval = [&](double delta) {
        if (bias)
            net.biases[layer](r) += delta;
        else
            net.weights[layer](r, c) += delta;
        const double loss = mse_loss(net.forward(X), Y);
        if (bias)
            net.biases[layer](r) -= delta;
        else
            net.weights[layer](r, c) -= delta;
        return loss;
    };
    return (eval(h) - eval(-h)) / (2.0 * h);
}

DenseNetwork random_net(std::uint64_t seed, Activation act = Activation::selu) {
    Rng rng(seed);
    std::uniform_int_distribution<int> layers(1, 3), width(2, 32);
    std::vector<int> sizes;
    const int L = layers(rng);
    sizes.push_back(width(rng));
    for (int l = 0; l < L; ++l) sizes.push_back(width(rng));
    return DenseNetwork::make(sizes, act, seed);
}

}  // namespace

TEST_CASE("identity network passes input through") {
    DenseNetwork net = DenseNetwork::make({2, 2}, Activation::identity, 0);
    net.weights[0] = Matrix::Identity(2, 2);
    net.biases[0].setZero();
    Vector out = net.forward_one((Vector(2) << 1.0, 2.0).finished());
    CHECK(out(0) == doctest::Approx(1.0));
    CHECK(out(1) == doctest::Approx(2.0));
}

TEST_CASE("relu clamps negatives") {
    // single layer nets apply no hidden activation; use two layers with -I first
    DenseNetwork net = DenseNetwork::make({2, 2, 2}, Activation::relu, 0);
    net.weights[0] = -Matrix::Identity(2, 2);
    net.weights[1] = Matrix::Identity(2, 2);
    net.biases[0].setZero();
    net.biases[1].setZero();
    Vector out = net.forward_one((Vector(2) << 1.0, 2.0).finished());
    CHECK(out(0) == 0.0);
    CHECK(out(1) == 0.0);
}

TEST_CASE("forward matches the loop oracle") {
    for (std::uint64_t seed : {11u, 22u, 33u, 44u}) {
        DenseNetwork net = random_net(seed);
        Rng rng(seed + 100);
        Vector x(net.input_dim());
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal_draw(rng);
        Vector got = net.forward_one(x);
        Vector want = oracle_forward(net, x);
        for (Eigen::Index i = 0; i < got.size(); ++i)
            CHECK(got(i) == doctest::Approx(want(i)).epsilon(1e-12));
    }
}

TEST_CASE("forward rejects dimension mismatch") {
    DenseNetwork net = DenseNetwork::make({3, 2}, Activation::relu, 0);
    Matrix bad(1, 4);
    bad.setZero();
    CHECK_THROWS_AS(net.forward(bad), std::invalid_argument);
}

TEST_CASE("activation closed forms at probe points") {
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        CHECK(activate(Activation::relu, x) == (x > 0 ? x : 0.0));
        const double selu_expected =
            x > 0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
        CHECK(activate(Activation::selu, x) == selu_expected);
        CHECK(activate(Activation::identity, x) == x);
    }
    CHECK(kSeluAlpha == doctest::Approx(1.6733).epsilon(1e-4));
    CHECK(kSeluLambda == doctest::Approx(1.0507).epsilon(1e-4));
}

TEST_CASE("perfect fit gives zero loss and gradients") {
    DenseNetwork net = random_net(5);
    Rng rng(99);
    Matrix X(4, net.input_dim());
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal_draw(rng);
    Matrix Y = net.forward(X);
    DenseNetwork::Gradients grads;
    const double loss = param_gradients(net, X, Y, grads);
    CHECK(loss == 0.0);
    CHECK(grads.max_abs() == 0.0);
}

TEST_CASE("hand-differentiated 1-parameter linear net") {
    // y = w x, data {(1, 2)}, w = 1: loss (w x - y)^2 = 1, dL/dw = -2
    DenseNetwork net = DenseNetwork::make({1, 1}, Activation::identity, 0);
    net.weights[0](0, 0) = 1.0;
    net.biases[0](0) = 0.0;
    Matrix X(1, 1), Y(1, 1);
    X << 1.0;
    Y << 2.0;
    DenseNetwork::Gradients grads;
    const double loss = param_gradients(net, X, Y, grads);
    CHECK(loss == doctest::Approx(1.0));
    CHECK(grads.dW[0](0, 0) == doctest::Approx(-2.0));
}

TEST_CASE("empty batch rejected") {
    DenseNetwork net = DenseNetwork::make({2, 1}, Activation::relu, 0);
    Matrix X(0, 2), Y(0, 1);
    DenseNetwork::Gradients grads;
    CHECK_THROWS_AS(param_gradients(net, X, Y, grads), std::invalid_argument);
}

TEST_CASE("param gradients match central finite differences") {
    int trials = 0;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        for (Activation act : {Activation::relu, Activation::selu}) {
            DenseNetwork net = random_net(seed * 7 + (act == Activation::relu), act);
            Rng rng(seed * 31);
            Matrix X(3, net.input_dim()), Y(3, net.output_dim());
            for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal_draw(rng);
            for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = normal_draw(rng);
            // Skip configurations with a relu/selu kink too close to a
            // pre-activation zero; central differences straddle it.
            DenseNetwork::ForwardCache cache;
            net.forward(X, &cache);
            bool near_kink = false;
            for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l)
                if (cache.pre[l].cwiseAbs().minCoeff() < 1e-3) near_kink = true;
            if (near_kink) continue;
            DenseNetwork::Gradients grads;
            param_gradients(net, X, Y, grads);
            Rng pick(seed);
            for (int probes = 0; probes < 4; ++probes) {
                const int l = static_cast<int>(pick() % net.num_layers());
                const int r = static_cast<int>(pick() % net.weights[l].rows());
                const int c = static_cast<int>(pick() % net.weights[l].cols());
                const double fd = fd_param(net, l, r, c, false, X, Y);
                const double an = grads.dW[l](r, c);
                const double denom = std::max(std::abs(fd), 1e-6);
                CHECK(std::abs(an - fd) / denom < 1e-4);
                const double fdb = fd_param(net, l, r, 0, true, X, Y);
                CHECK(std::abs(grads.db[l](r) - fdb) / std::max(std::abs(fdb), 1e-6) < 1e-4);
                ++trials;
            }
        }
    }
    CHECK(trials >= 100);
}

TEST_CASE("input gradient: identity network returns the coefficients") {
    DenseNetwork net = DenseNetwork::make({3, 3}, Activation::identity, 0);
    net.weights[0] = Matrix::Identity(3, 3);
    net.biases[0].setZero();
    Vector c(3);
    c << 0.5, -1.0, 2.0;
    Vector g = input_gradient(net, Vector::Zero(3), c);
    for (int i = 0; i < 3; ++i) CHECK(g(i) == doctest::Approx(c(i)));
}

TEST_CASE("input gradient: analytic chain rule on an all-positive relu net") {
    DenseNetwork net = DenseNetwork::make({2, 2, 2}, Activation::relu, 0);
    net.weights[0] << 1.0, 0.5, 0.25, 2.0;
    net.weights[1] << 0.5, 1.0, 2.0, 0.5;
    net.biases[0] << 1.0, 1.0;  // keeps pre-activations strictly positive at x
    net.biases[1].setZero();
    Vector x(2);
    x << 1.0, 1.0;
    Vector c(2);
    c << 1.0, -0.5;
    // gradient = W0^T W1^T c when all relu units are active
    Vector want = net.weights[0].transpose() * (net.weights[1].transpose() * c);
    Vector got = input_gradient(net, x, c);
    for (int i = 0; i < 2; ++i) CHECK(got(i) == doctest::Approx(want(i)).epsilon(1e-12));
}

TEST_CASE("input gradient requires a reduction for non-scalar outputs") {
    DenseNetwork net = DenseNetwork::make({2, 3}, Activation::relu, 0);
    CHECK_THROWS_AS(input_gradient(net, Vector::Zero(2)), std::invalid_argument);
}

TEST_CASE("input gradients match central finite differences") {
    int trials = 0;
    for (std::uint64_t seed = 200; seed < 250; ++seed) {
        DenseNetwork net = random_net(seed, seed % 2 ? Activation::selu : Activation::relu);
        Rng rng(seed + 5);
        Vector x(net.input_dim()), c(net.output_dim());
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal_draw(rng);
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = normal_draw(rng);
        DenseNetwork::ForwardCache cache;
        net.forward(Matrix(x.transpose()), &cache);
        bool near_kink = false;
        for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l)
            if (cache.pre[l].cwiseAbs().minCoeff() < 1e-3) near_kink = true;
        if (near_kink) continue;
        Vector g = input_gradient(net, x, c);
        const double h = 1e-5;
        for (Eigen::Index i = 0; i < std::min<Eigen::Index>(x.size(), 3); ++i) {
            Vector xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            const double fd = (c.dot(net.forward_one(xp)) - c.dot(net.forward_one(xm))) / (2 * h);
            CHECK(std::abs(g(i) - fd) / std::max(std::abs(fd), 1e-6) < 1e-4);
            ++trials;
        }
    }
    CHECK(trials >= 100);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    DenseNetwork net = DenseNetwork::make({2, 2}, Activation::relu, 1);
    DenseNetwork before = net;
    AdamState state = AdamState::make(net, AdamConfig{});
    DenseNetwork::Gradients zeros(net);
    adam_step(net, zeros, state);
    CHECK(state.step_count == 1);
    CHECK((net.weights[0] - before.weights[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.mW[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam: first step with unit gradient") {
    // bias-corrected first step moves by ~lr regardless of moments
    DenseNetwork net = DenseNetwork::make({1, 1}, Activation::identity, 0);
    net.weights[0](0, 0) = 0.0;
    AdamConfig cfg;
    AdamState state = AdamState::make(net, cfg);
    DenseNetwork::Gradients g(net);
    g.dW[0](0, 0) = 1.0;
    adam_step(net, g, state);
    // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps) ~= 0.001
    CHECK(net.weights[0](0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("adam: lr decays geometrically per epoch") {
    DenseNetwork net = DenseNetwork::make({1, 1}, Activation::identity, 0);
    AdamConfig cfg;
    AdamState state = AdamState::make(net, cfg);
    for (int e = 0; e < 10; ++e) state.end_epoch();
    CHECK(state.learning_rate == doctest::Approx(0.001 * std::pow(0.98, 10)).epsilon(1e-12));
}

TEST_CASE("train_regressor learns a linear target") {
    Rng rng(7);
    Matrix X(100, 1), Y(100, 1);
    for (int i = 0; i < 100; ++i) {
        X(i, 0) = uniform_draw(rng);
        Y(i, 0) = 2.0 * X(i, 0);
    }
    DenseNetwork net = DenseNetwork::make({1, 16, 1}, Activation::relu, 3);
    AdamConfig adam;
    adam.learning_rate = 0.01;
    adam.lr_decay = 1.0;
    TrainResult tr = train_regressor(net, X, Y, 200, 16, adam, 42);
    REQUIRE(tr.loss_history.size() == 200);
    CHECK(tr.loss_history.back() < 1e-3);
    CHECK(tr.loss_history.back() < tr.loss_history.front());
}

TEST_CASE("train_regressor: zero epochs is a no-op") {
    DenseNetwork net = DenseNetwork::make({1, 4, 1}, Activation::relu, 3);
    DenseNetwork before = net;
    Matrix X(2, 1), Y(2, 1);
    X << 0.0, 1.0;
    Y << 0.0, 2.0;
    TrainResult tr = train_regressor(net, X, Y, 0, 2, AdamConfig{}, 1);
    CHECK(tr.loss_history.empty());
    CHECK((net.weights[0] - before.weights[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train_regressor: invalid batch size rejected") {
    DenseNetwork net = DenseNetwork::make({1, 1}, Activation::identity, 0);
    Matrix X(1, 1), Y(1, 1);
    X << 1.0;
    Y << 1.0;
    CHECK_THROWS_AS(train_regressor(net, X, Y, 1, 0, AdamConfig{}, 1), std::invalid_argument);
}

TEST_CASE("training is bit-identical across replays with equal seeds") {
    Rng rng(7);
    Matrix X(50, 2), Y(50, 1);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal_draw(rng);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = normal_draw(rng);
    auto run = [&] {
        DenseNetwork net = DenseNetwork::make({2, 8, 1}, Activation::selu, 9);
        train_regressor(net, X, Y, 20, 8, AdamConfig{}, 123);
        return net;
    };
    DenseNetwork a = run(), b = run();
    for (int l = 0; l < a.num_layers(); ++l) {
        CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.biases[l] - b.biases[l]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    DenseNetwork net = random_net(77);
    Checkpoint ckpt;
    ckpt.net = net;
    ckpt.embedding = TimeEmbedding{TimeEmbeddingMode::scalar_append, 0};
    ckpt.meta = {{"note", "unit test"}, {"seed", 77}};
    const std::string path =
        (std::filesystem::temp_directory_path() / "pf_test_ckpt.bin").string();
    save_checkpoint(path, ckpt);
    Checkpoint loaded = load_checkpoint(path);
    REQUIRE(loaded.net.layer_sizes == net.layer_sizes);
    CHECK(loaded.net.activation == net.activation);
    for (int l = 0; l < net.num_layers(); ++l) {
        CHECK((loaded.net.weights[l] - net.weights[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((loaded.net.biases[l] - net.biases[l]).cwiseAbs().maxCoeff() == 0.0);
    }
    Rng rng(3);
    Vector x(net.input_dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal_draw(rng);
    Vector a = net.forward_one(x), b = loaded.net.forward_one(x);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}
