#include <doctest.h>

#include <cmath>
#include <limits>

#include "flowguard/preprocess.hpp"
#include "oracles.hpp"

using namespace flowguard;

namespace {

Dataset grid_with(std::vector<std::vector<double>> extra) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) rows.push_back({static_cast<double>(i), static_cast<double>(j)});
    for (auto& e : extra) rows.push_back(e);
    std::vector<int> y(rows.size(), 0);
    for (std::size_t i = 0; i < rows.size(); i += 2) y[i] = 1;
    return oracle::make_dataset(rows, y);
}

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d, std::size_t minority) {
    Matrix X(n, d);
    for (auto r = 0u; r < n; ++r)
        for (auto c = 0u; c < d; ++c) X(r, c) = rng.normal();
    std::vector<int> y(n, 0);
    for (std::size_t i = 0; i < minority; ++i) y[i] = 1;
    rng.shuffle(y);
    return oracle::wrap(X, y);
}

}  // namespace

TEST_CASE("scaler uses the population standard deviation") {
    const auto ds = oracle::make_dataset({{2, 5}, {4, 5}, {6, 5}}, {0, 1, 0});
    const auto s = fit_scaler(ds);
    CHECK(s.mean[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(s.scale[0] == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
    CHECK_FALSE(s.constant[0]);
    CHECK(s.mean[1] == 5.0);
    CHECK(s.scale[1] == 1.0);
    CHECK(s.constant[1]);

    const auto t = apply_scaler(s, ds);
    CHECK(t.X(0, 0) == doctest::Approx(-1.22474).epsilon(1e-5));
    CHECK(t.X(1, 0) == doctest::Approx(0.0));
    CHECK(t.X(2, 0) == doctest::Approx(1.22474).epsilon(1e-5));
    for (int r = 0; r < 3; ++r) CHECK(t.X(r, 1) == 0.0);
}

TEST_CASE("standardized training data has zero mean and unit spread") {
    Rng rng(4);
    auto ds = random_dataset(rng, 97, 4, 30);
    for (auto r = 0u; r < ds.rows(); ++r) ds.X(r, 2) = 1e6 + 300 * ds.X(r, 2);
    const auto t = apply_scaler(fit_scaler(ds), ds);
    for (std::size_t c = 0; c < 4; ++c) {
        double m = 0, v = 0;
        for (auto r = 0u; r < t.rows(); ++r) m += t.X(r, c);
        m /= static_cast<double>(t.rows());
        for (auto r = 0u; r < t.rows(); ++r) v += (t.X(r, c) - m) * (t.X(r, c) - m);
        v /= static_cast<double>(t.rows());
        CHECK(std::abs(m) < 1e-9);
        CHECK(std::abs(std::sqrt(v) - 1.0) < 1e-9);
    }
    const auto again = fit_scaler(t);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(std::abs(again.mean[c]) < 1e-9);
        CHECK(std::abs(again.scale[c] - 1.0) < 1e-9);
    }
}

TEST_CASE("scaler JSON round trip and arity checks") {
    const auto ds = oracle::make_dataset({{1, 2}, {3, 2}}, {0, 1});
    const auto s = fit_scaler(ds);
    const auto back = scaler_from_json(scaler_to_json(s));
    CHECK(back.mean == s.mean);
    CHECK(back.scale == s.scale);
    CHECK(back.constant == s.constant);
    CHECK_THROWS_AS(apply_scaler(s, oracle::make_dataset({{1, 2, 3}}, {0})), Error);
    CHECK_THROWS_AS(fit_scaler(oracle::wrap(Matrix(0, 2), {})), Error);
}

TEST_CASE("SMOTE on two minority points interpolates along their segment") {
    const auto ds = oracle::make_dataset({{0, 0}, {1, 1}, {5, 5}, {6, 5}, {5, 6}}, {1, 1, 0, 0, 0});
    const auto out = smote_oversample(ds, {1, 1.0, 7});
    REQUIRE(out.added() == 1);
    REQUIRE(out.dataset.rows() == 6);
    const double a = out.dataset.X(5, 0), b = out.dataset.X(5, 1);
    CHECK(a == doctest::Approx(b));
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(out.dataset.y[5] == 1);
}

TEST_CASE("SMOTE raises the minority to the majority count") {
    Rng rng(2);
    const auto ds = random_dataset(rng, 8, 3, 2);
    const auto out = smote_oversample(ds, {1, 1.0, 0});
    CHECK(label_distribution(out.dataset).benign_count == 6);
    CHECK(label_distribution(out.dataset).ddos_count == 6);
    CHECK(out.minority_label == 1);
}

TEST_CASE("SMOTE at the published training counts adds exactly the gap") {
    // Two-dimensional rows keep this fast; only the counts matter here.
    Rng rng(1);
    const std::size_t benign = 50848, ddos = 32627;
    const auto ds = random_dataset(rng, benign + ddos, 2, ddos);
    const auto out = smote_oversample(ds, {5, 1.0, 0});
    CHECK(out.added() == benign - ddos);
    CHECK(label_distribution(out.dataset).ddos_count == benign);
}

TEST_CASE("SMOTE keeps originals as a prefix and every point on its segment") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ds = random_dataset(rng, 40 + rng.index(40), 1 + rng.index(5), 8 + rng.index(8));
        const SmoteConfig cfg{1 + rng.index(6), 0.5 + 0.5 * rng.uniform(), rng.next_u64()};
        const auto out = smote_oversample(ds, cfg);
        for (std::size_t r = 0; r < ds.rows(); ++r) {
            CHECK(out.dataset.y[r] == ds.y[r]);
            for (std::size_t c = 0; c < ds.features(); ++c) CHECK(out.dataset.X(r, c) == ds.X(r, c));
        }
        std::vector<std::size_t> minority;
        for (std::size_t r = 0; r < ds.rows(); ++r)
            if (ds.y[r] == out.minority_label) minority.push_back(r);
        for (std::size_t s = 0; s < out.added(); ++s) {
            const auto& o = out.origins[s];
            const auto nn = nearest_neighbors(ds.X, o.parent, minority, cfg.k_neighbors);
            CHECK(std::find(nn.begin(), nn.end(), o.neighbor) != nn.end());
            CHECK(o.u >= 0.0);
            CHECK(o.u < 1.0);
            for (std::size_t c = 0; c < ds.features(); ++c) {
                const double want = ds.X(o.parent, c) + o.u * (ds.X(o.neighbor, c) - ds.X(o.parent, c));
                CHECK(out.dataset.X(ds.rows() + s, c) == doctest::Approx(want).epsilon(1e-12));
            }
        }
        const auto counts = label_distribution(out.dataset);
        const auto majority = std::max(counts.benign_count, counts.ddos_count);
        const auto before = label_distribution(ds);
        const auto target = static_cast<std::size_t>(
            std::llround(cfg.target_ratio * static_cast<double>(std::max(before.benign_count, before.ddos_count))));
        const auto have = out.minority_label == 1 ? counts.ddos_count : counts.benign_count;
        CHECK(have == std::max(target, std::min(before.benign_count, before.ddos_count)));
        CHECK(majority == std::max(before.benign_count, before.ddos_count));
    }
}

TEST_CASE("SMOTE is byte-identical under a fixed seed") {
    Rng rng(3);
    const auto ds = random_dataset(rng, 60, 3, 15);
    const auto a = smote_oversample(ds, {5, 1.0, 42});
    const auto b = smote_oversample(ds, {5, 1.0, 42});
    const auto c = smote_oversample(ds, {5, 1.0, 43});
    CHECK(a.dataset.X == b.dataset.X);
    CHECK_FALSE(a.dataset.X == c.dataset.X);
}

TEST_CASE("SMOTE rejects too few minority rows for k") {
    const auto ds = oracle::make_dataset({{0}, {1}, {2}, {3}, {4}}, {1, 1, 0, 0, 0});
    CHECK_THROWS_AS(smote_oversample(ds, {2, 1.0, 0}), Error);
    CHECK_THROWS_AS(smote_oversample(ds, {0, 1.0, 0}), Error);
}

TEST_CASE("nearest neighbours break distance ties by row index") {
    const auto ds = oracle::make_dataset({{0}, {1}, {-1}, {1}, {2}}, {1, 1, 1, 1, 1});
    const std::vector<std::size_t> all{0, 1, 2, 3, 4};
    CHECK(nearest_neighbors(ds.X, 0, all, 3) == std::vector<std::size_t>{1, 2, 3});
    CHECK(nearest_neighbors(ds.X, 0, all, 1) == std::vector<std::size_t>{1});
}

TEST_CASE("LOF on a regular grid stays near one") {
    const auto ds = grid_with({});
    const auto scores = lof_scores(ds, 3);
    const auto want = oracle::lof(ds.X, 3);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(scores[i] >= 0.8);
        CHECK(scores[i] <= 1.2);
        CHECK(std::abs(scores[i] - want[i]) < 1e-9);
    }
}

TEST_CASE("LOF flags a far point and removes only it") {
    const auto base = lof_scores(grid_with({}), 3);
    const auto ds = grid_with({{100, 100}});
    const auto scores = lof_scores(ds, 3);
    CHECK(scores[25] > 1.5);
    for (std::size_t i = 0; i < 25; ++i) CHECK(std::abs(scores[i] - base[i]) < 0.05);

    const auto out = remove_outliers(ds, {3, 1.5});
    CHECK(out.removed == std::vector<std::size_t>{25});
    CHECK(out.dataset.rows() == 25);
}

TEST_CASE("LOF removes two symmetric far points") {
    const auto ds = grid_with({{100, 100}, {-96, -96}});
    const auto out = remove_outliers(ds, {3, 1.5});
    CHECK(out.removed == std::vector<std::size_t>{25, 26});
}

TEST_CASE("LOF of identical points is one") {
    const auto ds = oracle::make_dataset({{1, 1}, {1, 1}, {1, 1}, {1, 1}}, {0, 1, 0, 1});
    for (double s : lof_scores(ds, 2)) CHECK(s == 1.0);
}

TEST_CASE("infinite threshold keeps everything") {
    const auto ds = grid_with({{100, 100}});
    const auto out = remove_outliers(ds, {3, std::numeric_limits<double>::infinity()});
    CHECK(out.removed.empty());
    CHECK(out.dataset.X == ds.X);
}

TEST_CASE("LOF matches the brute-force oracle on random data with duplicates") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 5 + rng.index(80), d = 1 + rng.index(4);
        Matrix X(n, d);
        for (auto r = 0u; r < n; ++r)
            for (auto c = 0u; c < d; ++c) X(r, c) = std::round(rng.normal() * 3);
        const std::size_t k = 1 + rng.index(std::min<std::size_t>(n - 1, 25));
        const auto got = lof_scores(X, k);
        const auto want = oracle::lof(X, k);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-9 * std::max(1.0, std::abs(want[i])));
    }
}

TEST_CASE("LOF and outlier removal validate their inputs") {
    const auto ds = grid_with({});
    CHECK_THROWS_AS(lof_scores(ds, 0), Error);
    CHECK_THROWS_AS(lof_scores(ds, 25), Error);
    CHECK_THROWS_AS(remove_outliers(ds, {3, 1.0}), Error);
    const auto lonely = oracle::make_dataset({{0}, {0.1}, {0.2}, {0.3}, {50}}, {0, 0, 0, 0, 1});
    CHECK_THROWS_AS(remove_outliers(lonely, {2, 1.5}), Error);
}
