#include <cmath>
#include <sstream>
#include <vector>

#include "cfs/nn.hpp"
#include "cfs/rng.hpp"
#include "doctest.h"

using namespace cfs;
using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 0.5) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-scale, scale);
    return t;
}

// Keeps leaky-ReLU inputs away from the kink so finite differences are valid.
Tensor random_away_from_zero(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data) {
        v = rng.uniform(0.1, 1.0);
        if (rng.bernoulli(0.5)) v = -v;
    }
    return t;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("linear identity and hand-computed case") {
    Tape t;
    const std::vector<double> xv{1.0, 2.0};
    Var x = t.leaf(Tensor::row(xv));

    Tensor identity({2, 2});
    identity.at(0, 0) = identity.at(1, 1) = 1.0;
    Var y = nn::linear(t, x, t.leaf(identity), t.leaf(Tensor({2})));
    CHECK(t.value(y).data == std::vector<double>{1.0, 2.0});

    Tensor w({2, 2});
    w.at(0, 0) = 1.0;
    w.at(0, 1) = 1.0;
    w.at(1, 0) = 0.0;
    w.at(1, 1) = 1.0;
    Var y2 = nn::linear(t, x, t.leaf(w), t.leaf(Tensor({2})));
    CHECK(t.value(y2).data == std::vector<double>{3.0, 2.0});
}

TEST_CASE("linear gradients match finite differences to 1e-6") {
    Rng rng(17);
    const Tensor x0 = random_tensor({2, 3}, rng);
    const Tensor w0 = random_tensor({2, 3}, rng);
    const Tensor b0 = random_tensor({2}, rng);
    const Tensor target({2, 2}, 0.1);
    const double err = nn::grad_check(
        [&](Tape& t, const std::vector<Var>& p) {
            return nn::huber_loss(t, nn::linear(t, p[0], p[1], p[2]), t.leaf(target), 1.0);
        },
        {x0, w0, b0});
    CHECK(err < 1e-6);
}

TEST_CASE("leaky relu values and gradient") {
    Tape t;
    Var x = t.leaf(Tensor::row(std::vector<double>{5.0, -2.0}));
    Var y = nn::leaky_relu(t, x, 0.01);
    CHECK(t.value(y).data[0] == 5.0);
    CHECK(t.value(y).data[1] == doctest::Approx(-0.02));

    Rng rng(19);
    const Tensor x0 = random_away_from_zero({3, 4}, rng);
    const Tensor target({3, 4}, 0.0);
    const double err = nn::grad_check(
        [&](Tape& tp, const std::vector<Var>& p) {
            return nn::huber_loss(tp, nn::leaky_relu(tp, p[0], 0.01), tp.leaf(target), 1.0);
        },
        {x0});
    CHECK(err < 1e-6);
}

TEST_CASE("gru with all-zero parameters halves the previous state") {
    Tape t;
    Rng rng(23);
    const std::size_t hidden = 6;
    Var x = t.leaf(random_tensor({2, 4}, rng));
    const Tensor h0 = random_tensor({2, hidden}, rng);
    Var h_prev = t.leaf(h0);
    nn::GruWeights w{t.leaf(Tensor({3 * hidden, 4})), t.leaf(Tensor({3 * hidden, hidden})),
                     t.leaf(Tensor({3 * hidden})), t.leaf(Tensor({3 * hidden}))};
    Var h = nn::gru_cell(t, x, h_prev, w);
    for (std::size_t i = 0; i < h0.numel(); ++i)
        CHECK(t.value(h).data[i] == 0.5 * h0.data[i]);
}

TEST_CASE("gru BPTT gradients over a length-5 sequence match finite differences") {
    Rng rng(29);
    const std::size_t in = 3, hidden = 4, steps = 5;
    std::vector<Tensor> params{random_tensor({3 * hidden, in}, rng),
                               random_tensor({3 * hidden, hidden}, rng),
                               random_tensor({3 * hidden}, rng),
                               random_tensor({3 * hidden}, rng)};
    std::vector<Tensor> inputs;
    for (std::size_t s = 0; s < steps; ++s) inputs.push_back(random_tensor({2, in}, rng));
    const Tensor target({2, hidden}, 0.0);

    const double err = nn::grad_check(
        [&](Tape& t, const std::vector<Var>& p) {
            nn::GruWeights w{p[0], p[1], p[2], p[3]};
            Var h = t.leaf(Tensor({2, hidden}));
            Var loss{-1};
            for (std::size_t s = 0; s < steps; ++s) {
                h = nn::gru_cell(t, t.leaf(inputs[s]), h, w);
                Var l = nn::huber_loss(t, h, t.leaf(target), 1.0);
                loss = loss.id < 0 ? l : nn::add(t, loss, l);
            }
            return nn::scale(t, loss, 1.0 / static_cast<double>(steps));
        },
        params);
    CHECK(err < 1e-5);
}

TEST_CASE("attention on a length-1 sequence returns the value row") {
    Tape t;
    Rng rng(31);
    const Tensor v0 = random_tensor({1, 6}, rng);
    Var y = nn::causal_attention(t, t.leaf(random_tensor({1, 6}, rng)),
                                 t.leaf(random_tensor({1, 6}, rng)), t.leaf(v0), 2);
    for (std::size_t i = 0; i < v0.numel(); ++i) CHECK(t.value(y).data[i] == v0.data[i]);
}

TEST_CASE("attention rows are convex weights: ones propagate exactly") {
    Tape t;
    Rng rng(37);
    const std::size_t seq = 7, dim = 8;
    Var y = nn::causal_attention(t, t.leaf(random_tensor({seq, dim}, rng)),
                                 t.leaf(random_tensor({seq, dim}, rng)),
                                 t.leaf(Tensor({seq, dim}, 1.0)), 4);
    for (double v : t.value(y).data) CHECK(std::abs(v - 1.0) <= 1e-12);
}

TEST_CASE("attention prefixes are bitwise invariant to suffix edits") {
    Rng rng(41);
    const std::size_t seq = 6, dim = 8;
    const Tensor q = random_tensor({seq, dim}, rng);
    const Tensor k = random_tensor({seq, dim}, rng);
    const Tensor v = random_tensor({seq, dim}, rng);

    auto run = [&](const Tensor& qq, const Tensor& kk, const Tensor& vv) {
        Tape t;
        return t.value(nn::causal_attention(t, t.leaf(qq), t.leaf(kk), t.leaf(vv), 2));
    };
    const Tensor base = run(q, k, v);
    Tensor q2 = q, k2 = k, v2 = v;
    for (std::size_t c = 0; c < dim; ++c) {
        q2.at(4, c) += 3.0;
        k2.at(4, c) -= 2.0;
        v2.at(4, c) += 1.0;
    }
    const Tensor poked = run(q2, k2, v2);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < dim; ++c) CHECK(base.at(i, c) == poked.at(i, c));
}

TEST_CASE("attention gradients match finite differences") {
    Rng rng(43);
    const Tensor q = random_tensor({4, 6}, rng);
    const Tensor k = random_tensor({4, 6}, rng);
    const Tensor v = random_tensor({4, 6}, rng);
    const Tensor target({4, 6}, 0.2);
    const double err = nn::grad_check(
        [&](Tape& t, const std::vector<Var>& p) {
            return nn::huber_loss(t, nn::causal_attention(t, p[0], p[1], p[2], 2),
                                  t.leaf(target), 1.0);
        },
        {q, k, v});
    CHECK(err < 1e-5);
}

TEST_CASE("attention rejects non-dividing head counts") {
    Tape t;
    Rng rng(47);
    const Tensor q = random_tensor({2, 6}, rng);
    try {
        nn::causal_attention(t, t.leaf(q), t.leaf(q), t.leaf(q), 4);
        FAIL("expected HeadDivisibility");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::HeadDivisibility);
    }
}

TEST_CASE("huber hand values") {
    auto huber_of = [](double pred, double target, double delta) {
        Tape t;
        Var loss = nn::huber_loss(t, t.leaf(Tensor::row(std::vector<double>{pred})),
                                  t.leaf(Tensor::row(std::vector<double>{target})), delta);
        return t.value(loss).data[0];
    };
    CHECK(huber_of(3.0, 3.0, 1.0) == 0.0);
    CHECK(huber_of(2.0, 0.0, 1.0) == 1.5);
    CHECK(huber_of(0.5, 0.0, 1.0) == 0.125);
}

TEST_CASE("huber is C1 at the delta joint") {
    auto loss_and_grad = [](double r) {
        Tape t;
        Var pred = t.leaf(Tensor::row(std::vector<double>{r}));
        Var loss = nn::huber_loss(t, pred, t.leaf(Tensor::row(std::vector<double>{0.0})), 1.0);
        const double value = t.value(loss).data[0];
        t.backward(loss);
        return std::pair<double, double>(value, t.grad(pred).data[0]);
    };
    const auto below = loss_and_grad(1.0 - 1e-9);
    const auto above = loss_and_grad(1.0 + 1e-9);
    CHECK(std::abs(below.first - above.first) < 1e-8);
    CHECK(std::abs(below.second - above.second) < 1e-8);
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
    std::vector<Tensor> params{Tensor({3}, 1.5)};
    std::vector<Tensor> grads{Tensor({3})};
    nn::AdamState state;
    nn::adam_step(params, grads, state);
    nn::adam_step(params, grads, state);
    for (double v : params[0].data) CHECK(v == 1.5);
}

TEST_CASE("one adam step matches the hand-computed bias-corrected update") {
    std::vector<Tensor> params{Tensor({1}, 1.0)};
    std::vector<Tensor> grads{Tensor({1}, 1.0)};
    nn::AdamState state;
    state.lr = 1e-3;
    nn::adam_step(params, grads, state);

    const double m_hat = (0.1 * 1.0) / (1.0 - 0.9);
    const double v_hat = (0.001 * 1.0) / (1.0 - 0.999);
    const double expected = 1.0 - 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(std::abs(params[0].data[0] - expected) < 1e-12);
}

TEST_CASE("adam trajectories are deterministic") {
    auto run = [] {
        Rng rng(53);
        std::vector<Tensor> params{random_tensor({4}, rng)};
        nn::AdamState state;
        for (int i = 0; i < 25; ++i) {
            std::vector<Tensor> grads{Tensor({4})};
            for (std::size_t j = 0; j < 4; ++j)
                grads[0].data[j] = std::sin(0.1 * i + static_cast<double>(j)) * params[0].data[j];
            nn::adam_step(params, grads, state);
        }
        return params[0].data;
    };
    CHECK(run() == run());
}

TEST_CASE("grad_check sanity on f(x) = x^2") {
    const Tensor x0({1}, 3.0);
    const double err = nn::grad_check(
        [](Tape& t, const std::vector<Var>& p) { return nn::mul(t, p[0], p[0]); }, {x0}, 1e-5);
    CHECK(err < 1e-9);
}

TEST_CASE("named tensor serialization round-trips") {
    Rng rng(59);
    std::vector<std::pair<std::string, Tensor>> tensors{
        {"a.w", random_tensor({3, 4}, rng)},
        {"a.b", random_tensor({3}, rng)},
        {"deep.block.bias", random_tensor({1, 1, 2}, rng)}};
    std::stringstream buf;
    nn::write_tensors(buf, tensors);
    const auto loaded = nn::read_tensors(buf);
    REQUIRE(loaded.size() == tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        CHECK(loaded[i].first == tensors[i].first);
        CHECK(loaded[i].second.shape == tensors[i].second.shape);
        CHECK(loaded[i].second.data == tensors[i].second.data);
    }
    std::stringstream bad("not a tensor stream at all");
    CHECK_THROWS_AS(nn::read_tensors(bad), Error);
}

TEST_CASE("shape mismatches are rejected") {
    Tape t;
    Rng rng(61);
    Var a = t.leaf(random_tensor({2, 3}, rng));
    Var b = t.leaf(random_tensor({3, 2}, rng));
    CHECK_THROWS_AS(nn::add(t, a, b), Error);
    CHECK_THROWS_AS(nn::huber_loss(t, a, b, 1.0), Error);
    CHECK_THROWS_AS(nn::linear(t, a, b, t.leaf(Tensor({5}))), Error);
}

}  // TEST_SUITE
