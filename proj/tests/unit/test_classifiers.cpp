#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flowguard/classifiers.hpp"
#include "flowguard/preprocess.hpp"
#include "oracles.hpp"

using namespace flowguard;

namespace {

Dataset blobs(std::size_t n, std::size_t d, double sep, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(n, d);
    std::vector<int> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = static_cast<int>(r % 2);
        for (std::size_t c = 0; c < d; ++c) X(r, c) = y[r] * sep + rng.normal();
    }
    return oracle::wrap(X, y);
}

double accuracy(const PredictionSet& p, const std::vector<int>& y) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += p.labels[i] == y[i];
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

std::vector<ModelSpec> quick_specs() {
    return {make_spec(ModelKind::RF, {{"n_trees", 15}}, 3), make_spec(ModelKind::SVC, {}, 3),
            make_spec(ModelKind::KNN, {}, 3), make_spec(ModelKind::MLP, {{"epochs", 10}}, 3),
            make_spec(ModelKind::GBT, {{"rounds", 20}}, 3)};
}

}  // namespace

TEST_CASE("kind names and aliases") {
    CHECK(kind_name(ModelKind::GBT) == "GBT");
    CHECK(parse_kind("xgb") == ModelKind::GBT);
    CHECK(parse_kind("rf") == ModelKind::RF);
    CHECK_THROWS_AS(parse_kind("NB"), Error);
}

TEST_CASE("hyperparameters are validated per kind") {
    CHECK(make_spec(ModelKind::KNN).params.at("k") == 5);
    CHECK(make_spec(ModelKind::GBT).params.at("lambda") == 1.0);
    CHECK(make_spec(ModelKind::MLP).params.at("hidden1") == 64);
    CHECK_THROWS_AS(make_spec(ModelKind::KNN, {{"k", 0}}), Error);
    CHECK_THROWS_AS(make_spec(ModelKind::KNN, {{"k", 2.5}}), Error);
    CHECK_THROWS_AS(make_spec(ModelKind::RF, {{"depth", 3}}), Error);
    CHECK_THROWS_AS(make_spec(ModelKind::SVC, {{"lambda", -1}}), Error);
    ModelSpec partial{ModelKind::RF, {{"n_trees", 10}}, 0};
    CHECK_THROWS_AS(validate_spec(partial), Error);
}

TEST_CASE("a single unpruned tree memorises distinct rows") {
    const auto ds = blobs(200, 3, 0.3, 1);
    const auto m = train(make_spec(ModelKind::RF, {{"n_trees", 1}, {"bootstrap", 0}}), ds);
    CHECK(accuracy(m.predict(ds), ds.y) == 1.0);
}

TEST_CASE("KNN with k=1 reproduces its training labels") {
    const auto ds = blobs(150, 4, 0.2, 2);
    const auto m = train(make_spec(ModelKind::KNN, {{"k", 1}}), ds);
    CHECK(m.predict(ds).labels == ds.y);
}

TEST_CASE("labels are probabilities thresholded at one half") {
    const auto ds = blobs(120, 3, 1.0, 3);
    for (const auto& spec : quick_specs()) {
        const auto p = train(spec, ds).predict(ds);
        for (std::size_t i = 0; i < ds.rows(); ++i) {
            CHECK(p.probabilities[i] >= 0.0);
            CHECK(p.probabilities[i] <= 1.0);
            CHECK(p.labels[i] == (p.probabilities[i] >= 0.5 ? 1 : 0));
        }
    }
}

TEST_CASE("every model separates well-separated blobs") {
    const auto ds = blobs(300, 4, 4.0, 4);
    const auto test = blobs(200, 4, 4.0, 5);
    for (const auto& spec : quick_specs()) {
        INFO(kind_name(spec.kind));
        CHECK(accuracy(train(spec, ds).predict(test), test.y) >= 0.97);
    }
}

TEST_CASE("MLP learns XOR") {
    const auto ds = oracle::make_dataset({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
    const auto spec = make_spec(ModelKind::MLP, {{"learning_rate", 0.05}, {"batch_size", 4}, {"epochs", 2000}}, 0);
    const auto m = train(spec, ds);
    CHECK(accuracy(m.predict(ds), ds.y) == 1.0);
    const auto& net = std::get<MlpNetwork>(m.state());
    CHECK(net.loss(ds.X, ds.y) < 0.05);
}

TEST_CASE("MLP gradient agrees with finite differences") {
    Rng rng(0);
    Matrix X(5, 3);
    for (auto r = 0u; r < 5; ++r)
        for (auto c = 0u; c < 3; ++c) X(r, c) = rng.normal();
    const auto ds = oracle::wrap(X, {0, 1, 1, 0, 1});
    const auto spec = make_spec(ModelKind::MLP, {{"hidden1", 4}, {"hidden2", 3}}, 0);
    const double e5 = gradient_check(spec, ds, 1e-5);
    const double e6 = gradient_check(spec, ds, 1e-6);
    CHECK(e5 < 1e-4);
    CHECK(e6 < 1e-4);
    // Both step sizes should give the same order of magnitude.
    CHECK(std::abs(std::log10(std::max(e5, 1e-16)) - std::log10(std::max(e6, 1e-16))) <= 1.0);

    MlpNetwork net({3, 4, 3, 1}, 0);
    const auto analytic = net.gradient(ds.X, ds.y);
    auto& p = net.parameters();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + 1e-6;
        const double up = net.loss(ds.X, ds.y);
        p[i] = keep - 1e-6;
        const double down = net.loss(ds.X, ds.y);
        p[i] = keep;
        const double numeric = (up - down) / 2e-6;
        CHECK(std::abs(numeric - analytic[i]) <= 1e-4 * std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8}));
    }

    CHECK_THROWS_AS(gradient_check(make_spec(ModelKind::KNN), ds), Error);
    CHECK_THROWS_AS(gradient_check(spec, blobs(11, 2, 1.0, 0)), Error);
}

TEST_CASE("zero network: output bias gradient equals its finite difference") {
    auto net = MlpNetwork::zeros({2, 3, 1});
    const Matrix X(4, 2, 0.0);
    const std::vector<int> y{1, 0, 1, 1};
    const auto grad = net.gradient(X, y);
    auto& p = net.parameters();
    const std::size_t bias = p.size() - 1;
    const double h = 1e-5;
    p[bias] = h;
    const double up = net.loss(X, y);
    p[bias] = -h;
    const double down = net.loss(X, y);
    p[bias] = 0;
    CHECK(std::abs((up - down) / (2 * h) - grad[bias]) < 1e-9);
    // sigmoid(0) - mean(y)
    CHECK(grad[bias] == doctest::Approx(0.5 - 0.75).epsilon(1e-12));
}

TEST_CASE("boosting loss never rises") {
    const auto ds = blobs(300, 3, 1.0, 6);
    const auto m = train(make_spec(ModelKind::GBT, {{"rounds", 60}, {"learning_rate", 0.3}}), ds);
    const auto& model = std::get<BoostedModel>(m.state());
    REQUIRE(model.loss_history.size() == 61);
    for (std::size_t i = 1; i < model.loss_history.size(); ++i)
        CHECK(model.loss_history[i] <= model.loss_history[i - 1] + 1e-12);
    CHECK(model.loss_history.back() < model.loss_history.front());
}

TEST_CASE("forest probability is the exact share of trees voting positive") {
    const auto ds = blobs(150, 3, 0.8, 7);
    const auto m = train(make_spec(ModelKind::RF, {{"n_trees", 7}}), ds);
    const auto& forest = std::get<ForestModel>(m.state());
    REQUIRE(forest.trees.size() == 7);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        int votes = 0;
        for (const auto& t : forest.trees) votes += t.evaluate(ds.X.row(r)) >= 0.5;
        CHECK(m.probability(ds.X.row(r)) == static_cast<double>(votes) / 7.0);
    }
}

TEST_CASE("KNN agrees with a brute-force neighbour search") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 20 + rng.index(480), k = 1 + rng.index(9);
        Matrix X(n, 3);
        std::vector<int> y(n);
        for (auto r = 0u; r < n; ++r) {
            y[r] = static_cast<int>(rng.index(2));
            for (auto c = 0u; c < 3; ++c) X(r, c) = std::round(rng.normal() * 2);
        }
        const auto m = train(make_spec(ModelKind::KNN, {{"k", static_cast<double>(k)}}), oracle::wrap(X, y));
        const auto& knn = std::get<KnnModel>(m.state());
        for (int q = 0; q < 30; ++q) {
            std::vector<double> x{std::round(rng.normal() * 2), std::round(rng.normal() * 2), rng.normal()};
            const auto want = oracle::knn(X, x, k);
            CHECK(knn.neighbors(x) == want);
            int pos = 0;
            for (auto i : want) pos += y[i];
            const int label = 2 * pos == static_cast<int>(k) ? y[want[0]] : (2 * pos > static_cast<int>(k));
            CHECK((m.probability(x) >= 0.5) == (label == 1));
            if (2 * pos != static_cast<int>(k)) CHECK(m.probability(x) == static_cast<double>(pos) / k);
        }
    }
}

TEST_CASE("KNN vote ties follow the nearest neighbour") {
    const auto ds = oracle::make_dataset({{0.0}, {1.0}, {-2.0}, {3.0}}, {1, 0, 0, 1});
    const auto m = train(make_spec(ModelKind::KNN, {{"k", 2}}), ds);
    const std::vector<double> near_pos{0.1}, near_neg{0.9};
    CHECK(m.predict(Matrix(1, 1, 0.1)).labels[0] == 1);
    CHECK(m.predict(Matrix(1, 1, 0.9)).labels[0] == 0);
    CHECK(m.probability(near_pos) == doctest::Approx(0.5));
    CHECK(m.probability(near_neg) == doctest::Approx(0.5));
}

TEST_CASE("single-class training data") {
    const auto ds = oracle::make_dataset({{0}, {1}, {2}}, {1, 1, 1});
    for (auto kind : {ModelKind::RF, ModelKind::KNN}) {
        const auto m = train(make_spec(kind), ds);
        CHECK(std::holds_alternative<ConstantModel>(m.state()));
        CHECK(m.predict(ds).labels == std::vector<int>{1, 1, 1});
    }
    for (auto kind : {ModelKind::GBT, ModelKind::SVC, ModelKind::MLP}) CHECK_THROWS_AS(train(make_spec(kind), ds), Error);
    CHECK_THROWS_AS(train(make_spec(ModelKind::RF), oracle::wrap(Matrix(0, 1), {})), Error);
}

TEST_CASE("prediction rejects the wrong feature count") {
    const auto ds = blobs(40, 3, 2.0, 1);
    const auto m = train(make_spec(ModelKind::KNN), ds);
    CHECK_THROWS_AS(m.predict(Matrix(2, 4)), Error);
}

TEST_CASE("retraining is identical regardless of thread count") {
    const auto ds = blobs(400, 5, 1.0, 10);
    const auto before = thread_count();
    for (const auto& spec : quick_specs()) {
        set_thread_count(1);
        const auto a = train(spec, ds).predict(ds);
        set_thread_count(4);
        const auto b = train(spec, ds).predict(ds);
        CHECK(a.probabilities == b.probabilities);
        CHECK(a.labels == b.labels);
    }
    set_thread_count(before);
}

TEST_CASE("saved models load back with identical predictions") {
    const auto ds = blobs(120, 3, 1.0, 11);
    auto specs = quick_specs();
    for (const auto& spec : specs) {
        const auto m = train(spec, ds);
        std::stringstream buf;
        save_model(m, buf);
        const auto back = load_model(buf);
        CHECK(back.spec().kind == spec.kind);
        CHECK(back.spec().params == spec.params);
        CHECK(back.arity() == 3);
        CHECK(back.predict(ds).probabilities == m.predict(ds).probabilities);
    }
    const auto constant = train(make_spec(ModelKind::RF), oracle::make_dataset({{0}, {1}}, {0, 0}));
    std::stringstream buf;
    save_model(constant, buf);
    CHECK(load_model(buf).predict(Matrix(1, 1)).probabilities[0] == 0.0);

    std::stringstream bad("{\"format\":\"other\"}");
    CHECK_THROWS_AS(load_model(bad), Error);
    std::stringstream junk("not json");
    CHECK_THROWS_AS(load_model(junk), Error);
}

TEST_CASE("Platt scaling is monotone in the decision value") {
    std::vector<double> f;
    std::vector<int> y;
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        y.push_back(i % 2);
        f.push_back((i % 2 ? 1.0 : -1.0) + rng.normal());
    }
    const auto s = fit_platt(f, y);
    CHECK(s.a < 0);
    CHECK(s(2.0) > s(0.0));
    CHECK(s(0.0) > s(-2.0));
    CHECK(s(0.0) == doctest::Approx(0.5).epsilon(0.1));
}
