#include <cmath>

#include <doctest.h>

#include "core/tensor.hpp"
#include "gradcheck.hpp"

using namespace dira;

TEST_CASE("matmul identity and zero cases") {
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor v = Tensor::from_data({2, 1}, {3, 4});
    Tensor r = matmul(eye, v);
    CHECK(r.shape() == Shape{2, 1});
    CHECK(r.data() == std::vector<float>{3, 4});

    Tensor a = Tensor::from_data({1, 2}, {1, 2});
    Tensor z = Tensor::from_data({2, 1}, {0, 0});
    CHECK(matmul(a, z).data() == std::vector<float>{0});
}

TEST_CASE("matmul empty batch") {
    Tensor a = Tensor::zeros({0, 3});
    Tensor b = Tensor::zeros({3, 2});
    Tensor r = matmul(a, b);
    CHECK(r.shape() == Shape{0, 2});
    CHECK(r.numel() == 0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 2});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("(2,3)"), ConfigError);
    try {
        matmul(a, b);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("(4,2)") != std::string::npos);
    }
}

TEST_CASE("matmul gradient matches finite differences") {
    Rng rng(7);
    Tensor a = gradcheck::random_tensor({3, 4}, rng);
    Tensor b = gradcheck::random_tensor({4, 2}, rng);
    Tensor coeffs = gradcheck::random_tensor({3, 2}, rng);
    const double err =
        gradcheck::max_rel_err([&] { return gradcheck::project(matmul(a, b), coeffs); }, {a, b});
    CHECK(err < 1e-3);
}

TEST_CASE("conv2d scalar kernel doubles a ones image") {
    Tensor img = Tensor::full({1, 3, 3}, 1.0f);
    Tensor k = Tensor::from_data({1, 1, 1, 1}, {2.0f});
    Tensor out = conv2d(img, k, 1, 0);
    CHECK(out.shape() == Shape{1, 3, 3});
    for (float v : out.data()) CHECK(v == 2.0f);
}

TEST_CASE("conv2d zero kernel gives zero output") {
    Rng rng(3);
    Tensor img = gradcheck::random_tensor({2, 4, 4}, rng);
    Tensor k = Tensor::zeros({3, 2, 3, 3});
    Tensor out = conv2d(img, k, 1, 1);
    CHECK(out.shape() == Shape{3, 4, 4});
    for (float v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("conv2d output extents and oversized kernel error") {
    Tensor img = Tensor::zeros({1, 5, 5});
    Tensor k = Tensor::zeros({2, 1, 3, 3});
    CHECK(conv2d(img, k, 2, 0).shape() == Shape{2, 2, 2});
    CHECK(conv2d(img, k, 1, 1).shape() == Shape{2, 5, 5});
    Tensor big = Tensor::zeros({1, 1, 7, 7});
    CHECK_THROWS_AS(conv2d(img, big, 1, 0), ConfigError);
}

TEST_CASE("conv2d gradient matches finite differences") {
    Rng rng(11);
    Tensor img = gradcheck::random_tensor({2, 5, 5}, rng);
    Tensor k = gradcheck::random_tensor({3, 2, 3, 3}, rng);
    Tensor coeffs = gradcheck::random_tensor({3, 3, 3}, rng);
    const double err = gradcheck::max_rel_err(
        [&] { return gradcheck::project(conv2d(img, k, 1, 0), coeffs); }, {img, k});
    CHECK(err < 1e-3);
}

TEST_CASE("conv2d batched matches per-image") {
    Rng rng(5);
    Tensor a = gradcheck::random_tensor({2, 4, 4}, rng);
    Tensor b = gradcheck::random_tensor({2, 4, 4}, rng);
    std::vector<float> both = a.data();
    both.insert(both.end(), b.data().begin(), b.data().end());
    Tensor batch = Tensor::from_data({2, 2, 4, 4}, both);
    Tensor k = gradcheck::random_tensor({3, 2, 3, 3}, rng);
    Tensor ra = conv2d(a, k, 1, 1);
    Tensor rb = conv2d(b, k, 1, 1);
    Tensor rbatch = conv2d(batch, k, 1, 1);
    for (int64_t i = 0; i < ra.numel(); ++i) {
        CHECK(rbatch.data()[static_cast<size_t>(i)] == ra.data()[static_cast<size_t>(i)]);
        CHECK(rbatch.data()[static_cast<size_t>(ra.numel() + i)] == rb.data()[static_cast<size_t>(i)]);
    }
}

TEST_CASE("cross entropy on uniform and saturated logits") {
    Tensor uniform = Tensor::from_data({1, 2}, {0, 0});
    CHECK(softmax_cross_entropy(uniform, {0}).item() == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    Tensor saturated = Tensor::from_data({1, 2}, {100, 0});
    CHECK(softmax_cross_entropy(saturated, {0}).item() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("cross entropy gradient is softmax minus one-hot") {
    Rng rng(13);
    Tensor logits = gradcheck::random_tensor({4, 3}, rng);
    std::vector<int> labels{0, 2, 1, 1};
    logits.set_requires_grad(true);
    {
        Tape tape;
        Tensor loss = softmax_cross_entropy(logits, labels);
        tape.backward(loss);
    }
    for (int64_t i = 0; i < 4; ++i) {
        const float* row = logits.data().data() + i * 3;
        float mx = std::max({row[0], row[1], row[2]});
        float denom = std::exp(row[0] - mx) + std::exp(row[1] - mx) + std::exp(row[2] - mx);
        for (int64_t j = 0; j < 3; ++j) {
            float p = std::exp(row[j] - mx) / denom;
            float expect = (p - (labels[static_cast<size_t>(i)] == j ? 1.0f : 0.0f)) / 4.0f;
            CHECK(logits.grad()[static_cast<size_t>(i * 3 + j)] == doctest::Approx(expect).epsilon(1e-4));
        }
    }

    const double err = gradcheck::max_rel_err([&] { return softmax_cross_entropy(logits, labels); }, {logits});
    CHECK(err < 1e-3);
}

TEST_CASE("cross entropy label out of range") {
    Tensor logits = Tensor::zeros({2, 3});
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 3}), ConfigError);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1, 0}), ConfigError);
}

TEST_CASE("backward of sum is all ones; scaled-to-zero loss gives zero grads") {
    Rng rng(17);
    Tensor x = gradcheck::random_tensor({3, 4}, rng);
    x.set_requires_grad(true);
    CHECK_THROWS_AS(backward(sum(x)), ConfigError);  // no active tape
    {
        Tape tape;
        backward(sum(x));
    }
    for (float g : x.grad()) CHECK(g == 1.0f);

    x.zero_grad();
    {
        Tape tape;
        tape.backward(sum(scale(x, 0.0f)));
    }
    for (float g : x.grad()) CHECK(g == 0.0f);
}

TEST_CASE("backward requires a scalar") {
    Tensor x = Tensor::zeros({2, 2}, true);
    Tape tape;
    Tensor y = relu(x);
    CHECK_THROWS_AS(tape.backward(y), ConfigError);
}

TEST_CASE("repeated backward accumulates") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    Tape tape;
    Tensor loss = sum(mul(x, x));
    tape.backward(loss);
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(4.0f));
    CHECK(x.grad()[1] == doctest::Approx(8.0f));
}

TEST_CASE("composite mlp-style graph matches finite differences") {
    Rng rng(23);
    Tensor x = gradcheck::random_tensor({3, 5}, rng);
    Tensor w1 = gradcheck::random_tensor({5, 4}, rng);
    Tensor b1 = gradcheck::random_tensor({4}, rng);
    Tensor w2 = gradcheck::random_tensor({4, 2}, rng);
    Tensor b2 = gradcheck::random_tensor({2}, rng);
    std::vector<int> labels{0, 1, 0};
    auto loss = [&] {
        Tensor h = relu(add_rowvec(matmul(x, w1), b1));
        Tensor logits = add_rowvec(matmul(h, w2), b2);
        return softmax_cross_entropy(logits, labels);
    };
    const double err = gradcheck::max_rel_err(loss, {x, w1, b1, w2, b2});
    CHECK(err < 1e-3);
}

TEST_CASE("elementwise and pooling ops match finite differences") {
    Rng rng(29);
    Tensor a = gradcheck::random_tensor({2, 3}, rng);
    Tensor b = gradcheck::random_tensor({2, 3}, rng);
    Tensor c2 = gradcheck::random_tensor({2, 3}, rng);
    CHECK(gradcheck::max_rel_err([&] { return gradcheck::project(add(a, b), c2); }, {a, b}) < 1e-3);
    CHECK(gradcheck::max_rel_err([&] { return gradcheck::project(sub(a, b), c2); }, {a, b}) < 1e-3);
    CHECK(gradcheck::max_rel_err([&] { return gradcheck::project(mul(a, b), c2); }, {a, b}) < 1e-3);
    CHECK(gradcheck::max_rel_err([&] { return gradcheck::project(scale(a, -1.7f), c2); }, {a}) < 1e-3);
    Tensor akink = gradcheck::random_tensor_off_kink({2, 3}, rng);
    CHECK(gradcheck::max_rel_err([&] { return gradcheck::project(relu(akink), c2); }, {akink}) < 1e-3);

    Tensor img = gradcheck::random_tensor({2, 3, 4, 4}, rng);
    Tensor bias = gradcheck::random_tensor({3}, rng);
    Tensor cim = gradcheck::random_tensor({2, 3, 4, 4}, rng);
    Tensor cpool = gradcheck::random_tensor({2, 3}, rng);
    CHECK(gradcheck::max_rel_err([&] { return gradcheck::project(add_channel_bias(img, bias), cim); },
                                 {img, bias}) < 1e-3);
    CHECK(gradcheck::max_rel_err([&] { return gradcheck::project(global_avg_pool(img), cpool); }, {img}) <
          1e-3);
    Tensor cflat = gradcheck::random_tensor({2, 48}, rng);
    CHECK(gradcheck::max_rel_err([&] { return gradcheck::project(reshape(img, {2, 48}), cflat); }, {img}) <
          1e-3);
}

TEST_CASE("backward is linear in the loss") {
    Rng rng(31);
    Tensor x = gradcheck::random_tensor({4}, rng);
    x.set_requires_grad(true);

    auto grads_of = [&](float af, float bf) {
        x.zero_grad();
        Tape tape;
        Tensor f = sum(mul(x, x));
        Tensor g = sum(x);
        Tensor loss = add(scale(f, af), scale(g, bf));
        tape.backward(loss);
        return x.grad();
    };

    auto gf = grads_of(1.0f, 0.0f);
    auto gg = grads_of(0.0f, 1.0f);
    auto gboth = grads_of(2.5f, -1.25f);
    for (size_t i = 0; i < 4; ++i)
        CHECK(gboth[i] == doctest::Approx(2.5f * gf[i] - 1.25f * gg[i]).epsilon(1e-5));
}

TEST_CASE("ops outside a tape do not record") {
    Tensor x = Tensor::from_data({2}, {1, -1}, true);
    Tensor y = relu(x);
    CHECK_FALSE(y.requires_grad());
    CHECK(Tape::active() == nullptr);
}

TEST_CASE("no NaN or Inf appears in op outputs on finite inputs") {
    Rng rng(37);
    Tensor logits = gradcheck::random_tensor({8, 10}, rng, -200.0f, 200.0f);
    Tensor loss = softmax_cross_entropy(logits, std::vector<int>(8, 0));
    CHECK(std::isfinite(loss.item()));
    Tensor a = gradcheck::random_tensor({16}, rng, -1e4f, 1e4f);
    for (float v : mul(a, a).data()) CHECK(std::isfinite(v));
}
