#include <doctest.h>

#include <random>

#include "hedlm/knn.hpp"
#include "test_util.hpp"

using namespace hedlm;
using doctest::Approx;

namespace {

features::FeatureVector fv_with(std::uint64_t row, std::array<double, 3> head,
                                Label label = Label::Fatigue) {
    features::FeatureVector fv;
    fv.user_id = "u";
    fv.row_index = row;
    fv.label = label;
    fv.values.fill(0.0);
    fv.values[0] = head[0];
    fv.values[1] = head[1];
    fv.values[2] = head[2];
    return fv;
}

}  // namespace

TEST_SUITE("knn") {

TEST_CASE("euclidean basics") {
    const auto a = fv_with(0, {0, 3, 0});
    const auto b = fv_with(1, {4, 0, 0});
    CHECK(knn::euclidean(a, a) == Approx(0.0));
    CHECK(knn::euclidean(a, b) == Approx(5.0));

    auto c = a;
    c.values[7] += 1.0;
    CHECK(knn::euclidean(a, c) == Approx(1.0));

    const std::vector<double> short_vec(29, 0.0), full_vec(30, 0.0);
    CHECK_THROWS_AS(knn::euclidean(std::span<const double>(short_vec), std::span<const double>(full_vec)),
                    Error);
}

TEST_CASE("euclidean symmetry and triangle inequality on random triples") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int trial = 0; trial < 500; ++trial) {
        features::FeatureVector a, b, c;
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            a.values[i] = dist(rng);
            b.values[i] = dist(rng);
            c.values[i] = dist(rng);
        }
        const double ab = knn::euclidean(a, b);
        const double ba = knn::euclidean(b, a);
        const double ac = knn::euclidean(a, c);
        const double cb = knn::euclidean(c, b);
        CHECK(ab == Approx(ba).epsilon(1e-12));
        CHECK(ab <= ac + cb + 1e-9);
    }
}

TEST_CASE("nearest_candidates orders by distance and truncates") {
    const auto target = fv_with(99, {0, 0, 0});
    std::vector<features::FeatureVector> pool = {
        fv_with(0, {3, 0, 0}),
        fv_with(1, {1, 0, 0}),
        fv_with(2, {2, 0, 0}),
    };

    const auto top2 = knn::nearest_candidates(target, pool, 2);
    REQUIRE(top2.size() == 2);
    CHECK(top2[0].features.row_index == 1);
    CHECK(top2[1].features.row_index == 2);
    CHECK(top2[0].distance == Approx(1.0));

    // k larger than the pool truncates silently.
    const auto all = knn::nearest_candidates(target, pool, 10);
    CHECK(all.size() == 3);

    CHECK_THROWS_AS(knn::nearest_candidates(target, std::vector<features::FeatureVector>{}, 2), Error);
    CHECK_THROWS_AS(knn::nearest_candidates(target, pool, 0), Error);
}

TEST_CASE("equal distances break ties by ascending row index") {
    const auto target = fv_with(99, {0, 0, 0});
    // Constructed tie pool: three entries at distance 2, one nearer.
    std::vector<features::FeatureVector> pool = {
        fv_with(7, {2, 0, 0}),
        fv_with(3, {0, 2, 0}),
        fv_with(5, {0, 0, 2}),
        fv_with(9, {1, 0, 0}),
    };
    const auto got = knn::nearest_candidates(target, pool, 4);
    REQUIRE(got.size() == 4);
    CHECK(got[0].features.row_index == 9);
    CHECK(got[1].features.row_index == 3);
    CHECK(got[2].features.row_index == 5);
    CHECK(got[3].features.row_index == 7);
}

TEST_CASE("output is a subset of the pool with non-decreasing distances") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    features::FeatureVector target;
    for (auto& v : target.values) v = dist(rng);

    std::vector<features::FeatureVector> pool;
    for (std::uint64_t i = 0; i < 40; ++i) {
        features::FeatureVector fv;
        fv.row_index = i;
        fv.label = Label::NonFatigue;
        for (auto& v : fv.values) v = dist(rng);
        pool.push_back(fv);
    }
    const auto got = knn::nearest_candidates(target, pool, 10);
    REQUIRE(got.size() == 10);
    for (std::size_t i = 0; i + 1 < got.size(); ++i) {
        CHECK(got[i].distance <= got[i + 1].distance);
    }
    for (const auto& c : got) {
        CHECK(c.features.row_index < 40);
        CHECK(c.distance == Approx(knn::euclidean(target, pool[c.features.row_index])));
    }
}

TEST_CASE("unlabeled pool entries are rejected") {
    const auto target = fv_with(99, {0, 0, 0});
    auto unlabeled = fv_with(0, {1, 0, 0});
    unlabeled.label.reset();
    CHECK_THROWS_AS(knn::nearest_candidates(target, std::vector{unlabeled}, 1), Error);
}

}  // TEST_SUITE
