#include "doctest.h"

#include <random>
#include <sstream>

#include "bpghunt/cluster.hpp"
#include "oracles.hpp"

using namespace bpghunt;

namespace {

DenseMatrix to_dense(const std::vector<std::vector<double>>& d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j) m(i, j) = d[i][j];
    return m;
}

DenseMatrix line(const std::vector<double>& xs) {
    DenseMatrix m(xs.size(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j) m(i, j) = std::abs(xs[i] - xs[j]);
    return m;
}

ClusterAssignment run(const DenseMatrix& d, std::size_t min_samples = 1, std::size_t mcs = 2) {
    return hdbscan(mutual_reachability(d, min_samples), mcs);
}

}  // namespace

TEST_CASE("kernel to distance") {
    KernelMatrix k{2, {4, 1, 1, 9}, 0};
    auto d = kernel_to_distance(k);
    CHECK(d.distance(0, 1) == doctest::Approx(std::sqrt(11.0)));
    CHECK(d.distance(1, 0) == d.distance(0, 1));
    CHECK(d.distance(0, 0) == 0);
    CHECK(d.clamped == 0);

    KernelMatrix same{2, {3, 3, 3, 3}, 0};
    CHECK(kernel_to_distance(same).distance(0, 1) == 0);

    KernelMatrix bad{2, {1, 5, 5, 1}, 0};
    auto c = kernel_to_distance(bad);
    CHECK(c.distance(0, 1) == 0);
    CHECK(c.clamped == 1);
    CHECK(kernel_to_distance_serial(bad).distance == c.distance);
}

TEST_CASE("mutual reachability") {
    auto d = line({0, 1, 2, 10, 11});
    auto mrd = mutual_reachability(d, 1);
    CHECK(mrd(2, 3) == 8);
    CHECK(mrd(0, 1) == 1);
    auto core = core_distances(d, 1);
    CHECK(core == std::vector<double>{1, 1, 1, 1, 1});
    CHECK(core_distances(d, 2) == core_distances_serial(d, 2));

    auto dup = line({0, 0, 5});
    CHECK(core_distances(dup, 1)[0] == 0);
    CHECK(mutual_reachability(dup, 1)(0, 1) == 0);

    CHECK_THROWS_AS(mutual_reachability(line({0, 1}), 2), TooFewPoints);
    CHECK_THROWS_AS(mutual_reachability(line({0}), 1), TooFewPoints);
}

TEST_CASE("two tight groups far apart give two clusters and no noise") {
    auto a = run(line({0, 0.1, 0.2, 0.3, 0.4, 50, 50.1, 50.2, 50.3, 50.4}));
    CHECK(a.clusters.size() == 2);
    CHECK(std::count(a.labels.begin(), a.labels.end(), kNoise) == 0);
    CHECK(a.labels == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
}

TEST_CASE("a far outlier is noise") {
    auto a = run(line({0, 1, 2, 3, 4, 1000}));
    CHECK(a.labels[5] == kNoise);
    for (int i = 0; i < 5; ++i) CHECK(a.labels[i] != kNoise);
}

TEST_CASE("identical points form one cluster") {
    auto a = run(line({3, 3, 3, 3}));
    CHECK(a.clusters.size() == 1);
    CHECK(a.labels == std::vector<int>{0, 0, 0, 0});
    CHECK(a.clusters[0].size == 4);
}

TEST_CASE("MST ties resolve to the lower index pair") {
    auto e = minimum_spanning_tree(line({0, 1, 2}));
    REQUIRE(e.size() == 2);
    CHECK(e[0].a == 0);
    CHECK(e[0].b == 1);
    CHECK(e[1].a == 1);
    CHECK(e[1].b == 2);
    DenseMatrix eq(3, 3, 1.0);
    auto t = minimum_spanning_tree(eq);
    CHECK(t[0].a == 0);
    CHECK(t[0].b == 1);
    CHECK(t[1].a == 0);
    CHECK(t[1].b == 2);
}

TEST_CASE("cluster sizes respect min_cluster_size") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        auto d = to_dense(oracle::random_metric(rng, 6 + rng() % 20));
        std::size_t mcs = 2 + rng() % 3;
        auto a = run(d, 1, mcs);
        for (const auto& c : a.clusters) CHECK(c.size >= std::min<std::size_t>(mcs, d.rows));
    }
}

TEST_CASE("hdbscan matches the level-based reference") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 3 + rng() % 10;
        auto raw = oracle::random_metric(rng, n);
        std::size_t ms = 1 + rng() % 2;
        std::size_t mcs = 2 + rng() % 2;
        auto want = oracle::hdbscan(raw, ms, mcs);
        auto got = run(to_dense(raw), ms, mcs);
        CHECK(got.labels == want);
    }
}

TEST_CASE("permutation equivariance and scale invariance") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 4 + rng() % 15;
        auto raw = oracle::random_metric(rng, n);
        auto base = run(to_dense(raw));

        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), 0);
        std::shuffle(p.begin(), p.end(), rng);
        DenseMatrix perm(n, n), scaled(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                perm(p[i], p[j]) = raw[i][j];
                scaled(i, j) = raw[i][j] * 8.0;
            }
        auto pa = run(perm);
        // same partition up to renaming
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                bool together = base.labels[i] != kNoise && base.labels[i] == base.labels[j];
                bool together_p = pa.labels[p[i]] != kNoise && pa.labels[p[i]] == pa.labels[p[j]];
                CHECK(together == together_p);
            }
        CHECK(run(scaled).labels == base.labels);
    }
}

TEST_CASE("classical MDS recovers planar distances") {
    std::vector<std::array<double, 2>> pts = {{0, 0}, {3, 0}, {0, 4}, {1, 1}, {5, 2}};
    DenseMatrix d(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) d(i, j) = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
    auto x = classical_mds(d, 2);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(std::hypot(x[i][0] - x[j][0], x[i][1] - x[j][1]) == doctest::Approx(d(i, j)).epsilon(1e-9));
}

TEST_CASE("assignment export") {
    auto a = run(line({0, 0.1, 0.2, 100}));
    std::ostringstream out;
    write_assignment(out, a);
    CHECK(out.str().find("3\tnoise\t1\t0\n") != std::string::npos);
}
