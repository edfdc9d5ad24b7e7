#include "doctest.h"

#include <random>
#include <sstream>

#include "bpghunt/kernel.hpp"
#include "bpghunt/partition.hpp"
#include "bpghunt/text.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bpghunt;

namespace {

constexpr std::uint32_t Read = 0, Write = 1, Connect = 2;

KernelGraph to_kernel(const oracle::Graph& g, std::uint64_t dict = 0) {
    std::vector<EntityKind> kinds;
    std::vector<std::uint32_t> labels;
    for (std::size_t i = 0; i < g.kind.size(); ++i) {
        kinds.push_back(static_cast<EntityKind>(g.kind[i]));
        labels.push_back(static_cast<std::uint32_t>(g.label[i]));
    }
    std::vector<KernelEdge> edges;
    for (const auto& e : g.edges)
        edges.push_back({static_cast<std::uint32_t>(e[0]), static_cast<std::uint32_t>(e[1]), static_cast<std::uint32_t>(e[2])});
    return KernelGraph(kinds, labels, edges, dict);
}

// a -Read-> b, both processes labelled 10 and 11.
KernelGraph path() {
    return KernelGraph({EntityKind::Process, EntityKind::File}, {10, 11}, {{0, 1, Read}});
}

}  // namespace

TEST_CASE("base kernel counts the multiset intersection") {
    // v1: label 3, Read->5, Write->7; v2: label 3, Read->5, Connect->9
    KernelGraph g1({EntityKind::Process, EntityKind::File, EntityKind::File}, {3, 5, 7}, {{0, 1, Read}, {0, 2, Write}});
    KernelGraph g2({EntityKind::Process, EntityKind::File, EntityKind::IP}, {3, 5, 9}, {{0, 1, Read}, {0, 2, Connect}});
    CHECK(base_kernel(g1, 0, g2, 0) == 2);
    CHECK(base_kernel(g1, 0, g1, 0) == 3);
    KernelGraph g3({EntityKind::Process}, {4}, {});
    CHECK(base_kernel(g1, 0, g3, 0) == 0);
}

TEST_CASE("own label and neighbour pairs never cross-match") {
    // own label 0 must not match a pair whose labels happen to contain 0
    KernelGraph g1({EntityKind::Process, EntityKind::Process}, {0, 0}, {{0, 1, 0}});
    KernelGraph g2({EntityKind::Process}, {0}, {});
    CHECK(base_kernel(g1, 0, g2, 0) == 1);
}

TEST_CASE("duplicate neighbours stay in the multiset") {
    KernelGraph g1({EntityKind::Process, EntityKind::File, EntityKind::File}, {1, 5, 5}, {{0, 1, Read}, {0, 2, Read}});
    KernelGraph g2({EntityKind::Process, EntityKind::File}, {1, 5}, {{0, 1, Read}});
    CHECK(base_kernel(g1, 0, g1, 0) == 3);
    CHECK(base_kernel(g1, 0, g2, 0) == 2);
    // a repeated identical edge collapses
    KernelGraph g4({EntityKind::Process, EntityKind::File}, {1, 5}, {{0, 1, Read}, {0, 1, Read}});
    CHECK(g4.edges().size() == 1);
}

TEST_CASE("edge kernel") {
    CHECK(edge_kernel(Read, Read) == 1);
    CHECK(edge_kernel(Read, Write) == 0);
}

TEST_CASE("hand recursion on the two-node path") {
    KernelParams p;
    p.iterations = 2;
    auto g = path();
    DenseMatrix k1 = base_table(g, g);
    CHECK(k1(0, 0) == 2);
    CHECK(k1(1, 1) == 1);
    DenseMatrix k2 = node_kernel_table(g, g, p);
    CHECK(k2(0, 0) == 2.5);
    CHECK(k2(1, 1) == 1);
    CHECK(graph_kernel(g, g, p) == 3.5);
}

TEST_CASE("beta zero is pure decay, leaves decay as alpha^(t-1)") {
    auto g = path();
    KernelParams p{0.5, 0.0, 4};
    DenseMatrix k1 = base_table(g, g);
    DenseMatrix kt = node_kernel_table(g, g, p);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(kt(i, j) == doctest::Approx(k1(i, j) * 0.125));
    KernelParams q{0.7, 0.3, 6};
    KernelGraph leaf({EntityKind::File}, {4}, {});
    CHECK(node_kernel_table(leaf, leaf, q)(0, 0) == doctest::Approx(std::pow(0.7, 5)));
}

TEST_CASE("assignment is restricted to same-kind nodes") {
    // A file and a process with identical labels never pair up.
    KernelGraph g1({EntityKind::File}, {9}, {});
    KernelGraph g2({EntityKind::Process}, {9}, {});
    CHECK(graph_kernel(g1, g2, KernelParams{}) == 0);
}

TEST_CASE("graph kernel is symmetric and rejects mixed dictionaries") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        auto a = to_kernel(oracle::random_graph(rng, 7, 4, 3));
        auto b = to_kernel(oracle::random_graph(rng, 7, 4, 3));
        KernelParams p{0.9, 0.37, 4};
        CHECK(graph_kernel(a, b, p) == graph_kernel(b, a, p));
    }
    auto g = path();
    KernelGraph other({EntityKind::Process}, {1}, {}, 42);
    CHECK_THROWS_AS(graph_kernel(g, other, KernelParams{}), DictionaryMismatch);
}

TEST_CASE("production kernel agrees with the brute-force reference") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        auto a = oracle::random_graph(rng, 6, 3, 3);
        auto b = oracle::random_graph(rng, 6, 3, 3);
        KernelParams p;
        double want = oracle::graph_kernel(a, b, p.alpha, p.beta, p.iterations);
        double got = graph_kernel(to_kernel(a), to_kernel(b), p);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("isomorphic copies give identical kernels") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        auto g = oracle::random_graph(rng, 10, 4, 3);
        auto h = oracle::permuted(g, rng);
        KernelParams p;
        CHECK(graph_kernel(to_kernel(g), to_kernel(h), p) == graph_kernel(to_kernel(g), to_kernel(g), p));
    }
}

TEST_CASE("self-kernel base value equals multiset size") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        auto g = to_kernel(oracle::random_graph(rng, 8, 4, 3));
        for (std::size_t v = 0; v < g.size(); ++v) CHECK(base_kernel(g, v, g, v) == 1 + g.multiset(v).size());
    }
}

TEST_CASE("node kernels only see T hops") {
    // chain 0 -> 1 -> ... -> 8, all Read
    std::vector<EntityKind> kinds(9, EntityKind::Process);
    std::vector<std::uint32_t> labels(9, 20);
    std::vector<KernelEdge> edges;
    for (std::uint32_t i = 0; i + 1 < 9; ++i) edges.push_back({i, i + 1, Read});
    KernelGraph base(kinds, labels, edges);
    auto far = labels;
    far[6] = 21;  // 6 hops from node 0
    KernelGraph edited(kinds, far, edges);
    auto near = labels;
    near[4] = 21;
    KernelGraph touched(kinds, near, edges);
    KernelParams p;  // T = 5
    auto k_base = node_kernel_table(base, base, p);
    auto k_far = node_kernel_table(edited, base, p);
    auto k_near = node_kernel_table(touched, base, p);
    for (std::size_t j = 0; j < 9; ++j) CHECK(k_far(0, j) == k_base(0, j));
    bool changed = false;
    for (std::size_t j = 0; j < 9; ++j) changed |= k_near(0, j) != k_base(0, j);
    CHECK(changed);
}

TEST_CASE("values are non-negative") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        auto a = to_kernel(oracle::random_graph(rng, 8, 4, 3));
        auto b = to_kernel(oracle::random_graph(rng, 8, 4, 3));
        auto k = node_kernel_table(a, b, KernelParams{0.3, 2.0, 6});
        for (double v : k.data) CHECK(v >= 0.0);
    }
}

TEST_CASE("mail chain and attack chain are less similar than either to itself") {
    auto f = fx::mail_fixture();
    auto g = build_graph(f.records);
    auto corpus = extract_bpgs(g, partition_processes(g, identify_long_running(g, LongRunPolicy{})));
    attach_labels(corpus, FileTypeTaxonomy::defaults());
    auto dict = intern_labels(corpus);
    REQUIRE(corpus.size() == 3);
    std::vector<KernelGraph> kg;
    for (const auto& b : corpus) kg.push_back(make_kernel_graph(b, dict.hash()));
    KernelParams p;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            CHECK(graph_kernel(kg[i], kg[j], p) < std::min(graph_kernel(kg[i], kg[i], p), graph_kernel(kg[j], kg[j], p)));
        }
}

TEST_CASE("kernel matrix: symmetric, schedule independent, persisted") {
    std::mt19937_64 rng(37);
    std::vector<KernelGraph> corpus;
    std::vector<oracle::Graph> raw;
    for (int i = 0; i < 10; ++i) {
        raw.push_back(oracle::random_graph(rng, 6, 3, 3));
        corpus.push_back(to_kernel(raw.back()));
    }
    corpus.push_back(corpus[3]);
    raw.push_back(raw[3]);
    KernelParams p;
    auto k = kernel_matrix(corpus, p);
    auto ks = kernel_matrix_serial(corpus, p);
    CHECK(k == ks);
    for (std::size_t i = 0; i < k.n; ++i) {
        for (std::size_t j = 0; j < k.n; ++j) {
            CHECK(k(i, j) == k(j, i));
            CHECK(k(i, j) == doctest::Approx(oracle::graph_kernel(raw[i], raw[j], p.alpha, p.beta, p.iterations)).epsilon(1e-9));
            CHECK(k(3, j) == k(10, j));
        }
        CHECK(k(i, i) > 0);
    }

    auto one = kernel_matrix(std::span(corpus).first(1), p);
    CHECK(one.n == 1);
    CHECK(one(0, 0) == graph_kernel(corpus[0], corpus[0], p));

    k.manifest_hash = 0xdeadbeef;
    std::stringstream bin;
    write_kernel_matrix(bin, k);
    CHECK(read_kernel_matrix(bin) == k);
    std::stringstream junk("BPGKMAT2");
    CHECK_THROWS(read_kernel_matrix(junk));
    std::ostringstream csv;
    write_kernel_csv(csv, one);
    CHECK(csv.str() == text::format_double(one(0, 0)) + "\n");
}

TEST_CASE("kernel params validation") {
    CHECK_THROWS(KernelParams{-1, 0.5, 5}.validate());
    CHECK_THROWS(KernelParams{1, 0.5, 0}.validate());
    CHECK_NOTHROW(KernelParams{}.validate());
}
