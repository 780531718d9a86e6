#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bijepa/autodiff.hpp"
#include "support/gradcheck.hpp"

using namespace bijepa;
using bijepa::testing::grad_check;
using bijepa::testing::primitive_cases;
using bijepa::testing::random_tensor;

namespace {

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }
std::vector<double> grad(const Tensor& t) { return {t.grad().begin(), t.grad().end()}; }

} // namespace

TEST_CASE("tensor shape and grad slot") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK(shape_str(t.shape()) == "(2,3)");
    CHECK_FALSE(t.has_grad());
    CHECK(t.grad().empty());
    t.grad_buffer()[1] = 2.0;
    CHECK(t.has_grad());
    CHECK(t.grad().size() == t.numel());
    t.clear_grad();
    CHECK_FALSE(t.has_grad());
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("tensor handles share storage, clone does not") {
    Tensor a({2}, {1, 2});
    Tensor b = a;
    b[0] = 5;
    CHECK(a[0] == 5);
    Tensor c = a.clone();
    c[0] = 7;
    CHECK(a[0] == 5);
    CHECK_FALSE(c.same_storage(a));
}

TEST_CASE("linear") {
    Graph g;
    Tensor x({2, 2}, {1, 0, 0, 1});
    Tensor eye({2, 2}, {1, 0, 0, 1});
    CHECK(vec(linear(g, x, eye, Tensor::zeros({2}))) == std::vector<double>{1, 0, 0, 1});
    CHECK(vec(linear(g, Tensor({1, 2}, {1, 2}), eye, Tensor({2}, {3, 4}))) == std::vector<double>{4, 6});
    CHECK_THROWS_AS(linear(g, Tensor({1, 3}), eye, Tensor::zeros({2})), std::invalid_argument);
    CHECK_THROWS_AS(linear(g, x, eye, Tensor::zeros({3})), std::invalid_argument);

    Tensor x1({1, 1}, std::vector<double>{2.0});
    Tensor w1({1, 1}, std::vector<double>{5.0}, true);
    Graph g2;
    g2.backward(sum(g2, linear(g2, x1, w1, Tensor::zeros({1}))));
    CHECK(w1.grad()[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("relu") {
    Graph g;
    CHECK(vec(relu(g, Tensor({3}, {-1, 0, 2}))) == std::vector<double>{0, 0, 2});
    CHECK(vec(relu(g, Tensor({2}, {0.5, 3}))) == std::vector<double>{0.5, 3});
    Tensor x({2}, {-3, 4}, true);
    Graph g2;
    g2.backward(sum(g2, relu(g2, x)));
    CHECK(grad(x) == std::vector<double>{0, 1});
}

TEST_CASE("layer_norm") {
    Graph g;
    Tensor ones = Tensor::full({3}, 1.0), zeros = Tensor::zeros({3});
    const Tensor flat = layer_norm(g, Tensor({1, 3}, {4, 4, 4}), ones, zeros);
    for (double v : flat.values()) CHECK(v == 0.0);

    const Tensor y = layer_norm(g, Tensor({1, 2}, {1, 3}), Tensor::full({2}, 1.0), Tensor::zeros({2}), 0.0);
    CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-15));

    const Tensor beta({3}, {0.1, 0.2, 0.3});
    CHECK(vec(layer_norm(g, Tensor({1, 3}, {1, 5, 2}), Tensor::zeros({3}), beta)) == vec(beta));
    CHECK_THROWS_AS(layer_norm(g, Tensor({1, 3}), Tensor::full({2}, 1.0), Tensor::zeros({2})), std::invalid_argument);
}

TEST_CASE("layer_norm rows are standardised") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t b = 1 + rng.index(6), d = 2 + rng.index(30);
        Graph g = Graph::inference();
        const Tensor y = layer_norm(g, random_tensor({b, d}, rng, -5, 5), Tensor::full({d}, 1.0), Tensor::zeros({d}));
        for (std::size_t r = 0; r < b; ++r) {
            double mean = 0, var = 0;
            for (std::size_t c = 0; c < d; ++c) mean += y[r * d + c];
            mean /= static_cast<double>(d);
            for (std::size_t c = 0; c < d; ++c) var += (y[r * d + c] - mean) * (y[r * d + c] - mean);
            var /= static_cast<double>(d);
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(var - 1.0) < 1e-3); // eps=1e-5 biases the variance slightly
        }
    }
}

TEST_CASE("layer_norm variance with negligible eps") {
    Rng rng(12);
    Graph g = Graph::inference();
    const std::size_t d = 16;
    const Tensor y = layer_norm(g, random_tensor({4, d}, rng, -5, 5), Tensor::full({d}, 1.0), Tensor::zeros({d}), 1e-14);
    for (std::size_t r = 0; r < 4; ++r) {
        double var = 0;
        for (std::size_t c = 0; c < d; ++c) var += y[r * d + c] * y[r * d + c];
        CHECK(std::abs(var / d - 1.0) < 1e-6);
    }
}

TEST_CASE("conv2d") {
    Graph g;
    CHECK(conv_out_extent(28) == 14);
    CHECK(conv_out_extent(14) == 7);
    CHECK(conv_out_extent(7) == 4);
    const Tensor y = conv2d(g, Tensor({1, 1, 28, 14}), Tensor({32, 1, 3, 3}), Tensor::zeros({32}));
    CHECK(y.shape() == Shape{1, 32, 14, 7});
    const Tensor z = conv2d(g, y, Tensor({64, 32, 3, 3}), Tensor::zeros({64}));
    CHECK(z.shape() == Shape{1, 64, 7, 4});
    CHECK(64 * 7 * 4 == 1792);

    Rng rng(3);
    const Tensor dead = conv2d(g, random_tensor({2, 2, 5, 5}, rng), Tensor::zeros({3, 2, 3, 3}), Tensor::zeros({3}));
    for (double v : dead.values()) CHECK(v == 0.0);

    // Pixel at (2,4) sits under the centre tap of output (1,2) (stride 2, pad 1).
    Tensor x = Tensor::zeros({1, 1, 5, 5});
    x[2 * 5 + 4] = 3.0;
    Tensor k = Tensor::zeros({1, 1, 3, 3});
    k[4] = 0.7;
    const Tensor out = conv2d(g, x, k, Tensor::zeros({1}));
    CHECK(out.shape() == Shape{1, 1, 3, 3});
    for (std::size_t i = 0; i < 9; ++i) CHECK(out[i] == doctest::Approx(i == 1 * 3 + 2 ? 2.1 : 0.0));

    CHECK_THROWS_AS(conv2d(g, Tensor({1, 28, 14}), Tensor({32, 1, 3, 3}), Tensor::zeros({32})), std::invalid_argument);
    CHECK_THROWS_AS(conv2d(g, Tensor({1, 2, 8, 8}), Tensor({4, 1, 3, 3}), Tensor::zeros({4})), std::invalid_argument);
}

TEST_CASE("batch_norm2d") {
    Graph g;
    Tensor ones = Tensor::full({1}, 1.0), zeros = Tensor::zeros({1});
    BatchNormStats stats(1);
    const Tensor flat = batch_norm2d(g, Tensor::full({3, 1, 2, 2}, 4.0), ones, zeros, stats, NormMode::Train);
    for (double v : flat.values()) CHECK(v == 0.0);
    BatchNormStats fresh(1);
    const Tensor two = batch_norm2d(g, Tensor({2, 1, 1, 1}, {0, 2}), ones, zeros, fresh, NormMode::Train, 0.0);
    CHECK(two[0] == doctest::Approx(-1.0));
    CHECK(two[1] == doctest::Approx(1.0));
    // Running stats after one update: mean 0.1*1, var 0.9*1 + 0.1*2 (unbiased).
    CHECK(fresh.running_mean[0] == doctest::Approx(0.1));
    CHECK(fresh.running_var[0] == doctest::Approx(1.1));

    Rng rng(5);
    BatchNormStats identity(2);
    const Tensor x = random_tensor({3, 2, 2, 2}, rng);
    const Tensor y = batch_norm2d(g, x, Tensor::full({2}, 1.0), Tensor::zeros({2}), identity, NormMode::Eval);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-5));

    BatchNormStats s(1);
    CHECK_THROWS_AS(batch_norm2d(g, Tensor({1, 1, 2, 2}), ones, zeros, s, NormMode::Train), std::invalid_argument);
    CHECK_NOTHROW(batch_norm2d(g, Tensor({1, 1, 2, 2}), ones, zeros, s, NormMode::Eval));
}

TEST_CASE("mse_loss") {
    Graph g;
    CHECK(mse_loss(g, Tensor({2}, {1, 1}), Tensor({2}, {1, 1})).item() == 0.0);
    CHECK(mse_loss(g, Tensor({2}, {0, 0}), Tensor({2}, {1, 1})).item() == 1.0);
    Tensor p({1}, std::vector<double>{3}, true);
    Graph g2;
    g2.backward(mse_loss(g2, p, Tensor({1}, std::vector<double>{1})));
    CHECK(p.grad()[0] == 4.0);
    CHECK_THROWS_AS(mse_loss(g, Tensor({2}), Tensor({3})), std::invalid_argument);
}

TEST_CASE("softmax_cross_entropy") {
    Graph g;
    const std::vector<int> label{3};
    // ln(10), computed independently of the kernel.
    CHECK(softmax_cross_entropy(g, Tensor::zeros({1, 10}), label).item() == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(std::log(10.0) == doctest::Approx(2.302585).epsilon(1e-6));
    Tensor logits = Tensor::zeros({1, 10});
    logits[3] = 800.0;
    CHECK(softmax_cross_entropy(g, logits, label).item() == doctest::Approx(0.0));
    CHECK(std::isfinite(softmax_cross_entropy(g, logits, std::vector<int>{4}).item()));
    CHECK_THROWS_AS(softmax_cross_entropy(g, Tensor::zeros({1, 10}), std::vector<int>{10}), std::out_of_range);
    CHECK_THROWS_AS(softmax_cross_entropy(g, Tensor::zeros({1, 10}), std::vector<int>{-1}), std::out_of_range);
    CHECK_THROWS_AS(softmax_cross_entropy(g, Tensor::zeros({2, 10}), label), std::invalid_argument);
}

TEST_CASE("graph backward basics") {
    Tensor x({1}, std::vector<double>{3}, true);
    Graph g;
    g.backward(sum(g, mul(g, x, x)));
    CHECK(x.grad()[0] == 6.0);

    Tensor a({1}, std::vector<double>{1.5}, true);
    Tensor off({1}, std::vector<double>{2.0}, true);
    Graph g2;
    Tensor unused = mul(g2, off, off);
    (void)unused;
    Graph g3;
    g3.backward(sum(g3, add(g3, a, a)));
    CHECK(a.grad()[0] == 2.0);
    CHECK_FALSE(off.has_grad());

    CHECK_THROWS_AS(g3.backward(sum(g3, a)), std::logic_error);

    Graph g4;
    CHECK_THROWS_AS(g4.backward(add(g4, Tensor({2}, {1, 2}, true), Tensor({2}, {3, 4}))), std::invalid_argument);
    Graph g5;
    CHECK_THROWS_AS(g5.backward(sum(g5, Tensor({2}, {1, 2}))), std::logic_error);
}

TEST_CASE("nodes are taped in execution order") {
    Tensor x({1, 2}, {1, -2}, true);
    Graph g;
    Tensor h = relu(g, x);
    Tensor s = scale(g, h, 2.0);
    Tensor l = sum(g, s);
    REQUIRE(g.size() == 3);
    CHECK(g.nodes()[0].op == "relu");
    CHECK(g.nodes()[1].op == "scale");
    CHECK(g.nodes()[2].op == "sum");
    g.backward(l);
    CHECK(g.size() == 0);
    CHECK(g.consumed());
}

TEST_CASE("inference graph records nothing") {
    Tensor w({2, 2}, {1, 2, 3, 4}, true);
    Graph g = Graph::inference();
    const Tensor y = linear(g, Tensor({1, 2}, {1, 1}), w, Tensor::zeros({2}));
    CHECK(g.size() == 0);
    CHECK_FALSE(y.requires_grad());
}

TEST_CASE("accumulation over k uses") {
    Rng rng(8);
    for (int k = 1; k <= 5; ++k) {
        Tensor x = random_tensor({3}, rng);
        x.set_requires_grad(true);
        Tensor r = random_tensor({3}, rng);
        Graph g;
        Tensor acc = mul(g, x, r);
        for (int i = 1; i < k; ++i) acc = add(g, acc, mul(g, x, r));
        g.backward(sum(g, acc));
        for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(k * r[i]).epsilon(1e-14));
    }
}

TEST_CASE("stop_gradient is opaque") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = random_tensor({2, 3}, rng);
        Tensor w = random_tensor({2, 3}, rng);
        x.set_requires_grad(true);
        w.set_requires_grad(true);
        Graph g;
        g.backward(sum(g, mul(g, stop_gradient(x), w)));
        CHECK_FALSE(x.has_grad());
        for (std::size_t i = 0; i < 6; ++i) CHECK(w.grad()[i] == x[i]);
    }
    Tensor x = Tensor({1}, std::vector<double>{4}, true);
    CHECK_FALSE(stop_gradient(x).requires_grad());
    CHECK_FALSE(stop_gradient(x).same_storage(x));
}

TEST_CASE("row_normalize") {
    Graph g;
    const Tensor y = row_normalize(g, Tensor({1, 2}, {3, 4}));
    CHECK(y[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(row_normalize(g, Tensor({2, 2}, {1, 0, 0, 0})), std::domain_error);
}

TEST_CASE("every primitive matches central differences") {
    Rng rng(2024);
    for (const auto& c : primitive_cases()) {
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) worst = std::max(worst, c.trial(rng).max_rel_error);
        INFO(c.name);
        CHECK(worst < 1e-4);
    }
}
