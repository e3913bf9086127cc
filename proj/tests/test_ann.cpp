#include <cmath>
#include <random>

#include "doctest.h"
#include "qinv/ann.hpp"

using namespace qinv::ann;

namespace {

// Plain-loop evaluation that does not go through Eigen.
double hand_forward(const NeuralNet& net, std::vector<double> x) {
    if (!net.scaling.empty())
        for (size_t i = 0; i < x.size(); ++i) {
            double lo = net.scaling[i].first, hi = net.scaling[i].second;
            x[i] = hi > lo ? (x[i] - lo) / (hi - lo) : x[i] - lo;
        }
    for (int l = 0; l < net.num_layers(); ++l) {
        std::vector<double> y(net.W[l].rows());
        for (int r = 0; r < net.W[l].rows(); ++r) {
            double s = net.b[l][r];
            for (int c = 0; c < net.W[l].cols(); ++c) s += net.W[l](r, c) * x[c];
            y[r] = (l + 1 < net.num_layers() && s < 0) ? 0.0 : s;
        }
        x = y;
    }
    return x[0];
}

std::vector<double> random_x(std::mt19937_64& rng, int k, double lo = -1, double hi = 1) {
    std::uniform_real_distribution<double> U(lo, hi);
    std::vector<double> x(k);
    for (auto& v : x) v = U(rng);
    return x;
}

}  // namespace

TEST_CASE("forward fixtures") {
    auto zero = make_net({3, 2, 1});
    zero.b.back()[0] = 1.75;
    CHECK(forward(zero, {4, -2, 9}) == 1.75);

    auto id = make_net({1, 1});
    id.W[0](0, 0) = 1.0;
    CHECK(forward(id, {3.25}) == 3.25);
    CHECK(forward(id, {-8.0}) == -8.0);

    std::mt19937_64 rng(1);
    auto net = random_net({3, 4, 1}, 99);
    for (auto& bb : net.b)
        for (int i = 0; i < bb.size(); ++i) bb[i] = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    for (int t = 0; t < 50; ++t) {
        auto x = random_x(rng, 3);
        CHECK(forward(net, x) == doctest::Approx(hand_forward(net, x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(forward(net, {1.0}), ShapeError);
}

TEST_CASE("r_squared") {
    CHECK(r_squared({1, 2, 3}, {1, 2, 3}) == 1.0);
    CHECK(r_squared({1, 2, 3}, {2, 2, 2}) == 0.0);
    CHECK(r_squared({1, 2, 3}, {1, 2, 4}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(r_squared({2, 2, 2}, {1, 2, 3}), std::domain_error);
    CHECK_THROWS(r_squared({1, 2}, {1}));
}

TEST_CASE("training on a linear target") {
    PropertyDataset d;
    for (int i = 0; i < 40; ++i) {
        double x = -2.0 + 4.0 * i / 39.0;
        d.X.push_back({x});
        d.y.push_back(2 * x + 1);
    }
    d.refresh_range();
    Hyper h;
    h.lr = 0.05;
    h.epochs = 1500;
    h.batch = 8;
    h.seed = 0;
    auto res = train(d, {2}, h, 1);
    CHECK(res.fold_r2_train[0] >= 0.999);
    std::vector<double> o, p;
    for (int i = 0; i < d.size(); ++i) {
        o.push_back(d.y[i]);
        p.push_back(forward(res.net, d.X[i]));
    }
    CHECK(r_squared(o, p) >= 0.999);

    auto res2 = train(d, {2}, h, 1);
    CHECK(save_weights(res.net) == save_weights(res2.net));

    auto cv = train(d, {2}, h, 5);
    CHECK(cv.fold_r2_test.size() == 5);
    CHECK(cv.best_fold >= 0);
    CHECK(cv.fold_r2_test[cv.best_fold] == *std::max_element(cv.fold_r2_test.begin(), cv.fold_r2_test.end()));

    PropertyDataset c = d;
    for (auto& y : c.y) y = 3.0;
    CHECK_THROWS_AS(train(c, {2}, h, 1), std::domain_error);
}

TEST_CASE("divergence is reported with its epoch") {
    PropertyDataset d;
    for (int i = 0; i < 10; ++i) {
        d.X.push_back({double(i), double(i * i)});
        d.y.push_back(i * 3.0);
    }
    Hyper h;
    h.lr = 1e6;
    h.epochs = 50;
    h.batch = 10;
    try {
        fit(d, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {4}, h);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch >= 1);
        CHECK(e.epoch <= 50);
    }
}

TEST_CASE("loss is non-increasing for full-batch descent on a linear net") {
    std::mt19937_64 rng(4);
    PropertyDataset d;
    for (int i = 0; i < 30; ++i) {
        auto x = random_x(rng, 3, 0, 5);
        d.X.push_back(x);
        d.y.push_back(x[0] - 2 * x[1] + 0.5 * x[2] + std::normal_distribution<double>(0, 0.3)(rng));
    }
    Hyper h;
    h.lr = 0.01;
    h.epochs = 300;
    h.batch = 1000;
    std::vector<int> rows(30);
    std::iota(rows.begin(), rows.end(), 0);
    auto fr = fit(d, rows, {}, h);
    for (size_t i = 1; i < fr.loss_history.size(); ++i) CHECK(fr.loss_history[i] <= fr.loss_history[i - 1] + 1e-12);
}

TEST_CASE("analytic gradients agree with central differences") {
    std::mt19937_64 rng(17);
    int points = 0, resampled = 0;
    double worst = 0.0;
    while (points < 100) {
        int k = std::uniform_int_distribution<int>(1, 5)(rng);
        int h = std::uniform_int_distribution<int>(1, 6)(rng);
        auto net = random_net({k, h, 1}, rng());
        for (auto& bb : net.b)
            for (int i = 0; i < bb.size(); ++i) bb[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
        auto x = random_x(rng, k);
        auto tr = forward_trace(net, x);
        bool near_kink = false;
        for (size_t l = 0; l + 1 < tr.z.size(); ++l)
            for (int i = 0; i < tr.z[l].size(); ++i)
                if (std::abs(tr.z[l][i]) < 1e-3) near_kink = true;
        if (near_kink) {
            ++resampled;
            continue;
        }
        auto g = output_gradient(net, x);
        auto th = flatten(net);
        for (size_t p = 0; p < th.size(); ++p) {
            auto hi = th, lo = th;
            hi[p] += 1e-5;
            lo[p] -= 1e-5;
            NeuralNet a = net, b = net;
            unflatten(a, hi);
            unflatten(b, lo);
            double num = (forward(a, x) - forward(b, x)) / 2e-5;
            double den = std::max(std::abs(num), std::abs(g[p]));
            double rel = den < 1e-12 ? 0.0 : std::abs(num - g[p]) / den;
            worst = std::max(worst, rel);
            CHECK(rel <= 1e-4);
        }
        ++points;
    }
    CHECK(points == 100);
    MESSAGE("worst relative error " << worst << ", resampled " << resampled);
}

TEST_CASE("forward is linear along a direction between activation changes") {
    std::mt19937_64 rng(23);
    for (int it = 0; it < 100; ++it) {
        auto net = random_net({4, 5, 3, 1}, rng());
        auto x = random_x(rng, 4), dir = random_x(rng, 4);
        auto pattern = [&](double t) {
            std::vector<double> xt(4);
            for (int i = 0; i < 4; ++i) xt[i] = x[i] + t * dir[i];
            auto tr = forward_trace(net, xt);
            std::vector<bool> s;
            for (size_t l = 0; l + 1 < tr.z.size(); ++l)
                for (int i = 0; i < tr.z[l].size(); ++i) s.push_back(tr.z[l][i] > 0);
            return std::make_pair(s, tr.output);
        };
        auto [s0, f0] = pattern(0.0);
        auto [s1, f1] = pattern(1e-3);
        auto [s2, f2] = pattern(2e-3);
        if (s0 != s1 || s1 != s2) continue;
        CHECK(f2 - f1 == doctest::Approx(f1 - f0).epsilon(1e-6));
    }
}

TEST_CASE("weight files") {
    auto net = random_net({3, 4, 1}, 5);
    net.b[0][2] = -0.125;
    net.scaling = {{0, 1}, {-2, 3}, {5, 5}};
    auto text = save_weights(net);
    CHECK(text.rfind("ANNv1\n3 4 1\n", 0) == 0);
    auto back = load_weights(text);
    CHECK(save_weights(back) == text);
    CHECK(flatten(back) == flatten(net));
    CHECK(back.scaling == net.scaling);

    CHECK_THROWS_AS(load_weights(text.substr(0, text.size() / 2)), WeightFileError);
    CHECK_THROWS_AS(load_weights("ANNv2\n1 1\n1\n0\n"), WeightFileError);
    CHECK_THROWS_AS(load_weights("ANNv1\n1 1\n1\n0\n7\n"), WeightFileError);

    // hidden z = 2x + 0.5, output 3*relu(z) - 1, input scaled by (x - 0) / 2
    auto hand = load_weights("ANNv1\n1 1 1\n2\n0.5\n3\n-1\n0 2\n");
    CHECK(forward(hand, {2.0}) == doctest::Approx(6.5));
    CHECK(forward(hand, {-2.0}) == doctest::Approx(-1.0));
    CHECK(forward(hand, {1.0}) == doctest::Approx(3 * 1.5 - 1));
}

TEST_CASE("dataset csv") {
    auto d = read_dataset_csv("a,b,value\n1,2,3\n4,5,6.5\n");
    CHECK(d.size() == 2);
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(d.a_lo == 3);
    CHECK(d.a_hi == 6.5);
    CHECK_THROWS(read_dataset_csv("a,b\n1,2\n"));
    CHECK_THROWS(read_dataset_csv("a,value\n1,2,3\n"));
}
