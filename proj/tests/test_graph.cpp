#include "doctest.h"

#include <numeric>
#include <set>
#include <sstream>

#include "bpghunt/graph.hpp"
#include "fixtures.hpp"

using namespace bpghunt;

namespace {

std::size_t weak_components(const ProvenanceGraph& g) {
    std::vector<NodeId> parent(g.node_count());
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](NodeId x) {
        while (parent[x] != x) x = parent[x];
        return x;
    };
    for (const Event& e : g.events()) parent[find(e.src)] = find(e.dst);
    std::set<NodeId> roots;
    for (NodeId i = 0; i < g.node_count(); ++i) roots.insert(find(i));
    return roots.size();
}

}  // namespace

TEST_CASE("mail fixture forms one weakly connected graph") {
    auto f = fx::mail_fixture();
    auto g = build_graph(f.records);
    CHECK(g.event_count() == f.records.size());
    CHECK(weak_components(g) == 1);
    std::set<std::string> paths;
    for (const Node& n : g.nodes()) paths.insert(n.entity.attr_or("path", n.entity.attr_or("address", "")));
    for (const char* want : {"C:\\Program Files\\Mail\\mailmaster.exe", "D:\\download\\invoice.zip",
                             "D:\\download\\report.doc", "C:\\Users\\u\\AppData\\Local\\Temp\\t2.tmp",
                             "C:\\Windows\\explorer.exe", "HKLM\\SAM\\SAM\\Domains\\Account", "203.0.113.66"})
        CHECK(paths.count(want) == 1);
}

TEST_CASE("empty input gives an empty graph") {
    auto g = build_graph({});
    CHECK(g.node_count() == 0);
    CHECK(g.event_count() == 0);
}

TEST_CASE("two records sharing a process give 3 nodes and 2 events") {
    std::vector<LogRecord> recs = {
        fx::rec(1, fx::proc("7", "/bin/cat"), RelationKind::Read, fx::file("/etc/hosts")),
        fx::rec(2, fx::proc("7", "/bin/cat"), RelationKind::Write, fx::file("/tmp/out")),
    };
    auto g = build_graph(recs);
    CHECK(g.node_count() == 3);
    CHECK(g.event_count() == 2);
}

TEST_CASE("process identity separates pid reuse and hosts, IPs are shared") {
    auto a = fx::proc("7", "/bin/a");
    auto a_later = a;
    a_later.attributes["start"] = "99";
    std::vector<LogRecord> recs = {
        fx::rec(1, a, RelationKind::Connect, fx::ip("1.2.3.4", "80"), "h1"),
        fx::rec(2, a_later, RelationKind::Connect, fx::ip("1.2.3.4", "80"), "h1"),
        fx::rec(3, a, RelationKind::Connect, fx::ip("1.2.3.4", "80"), "h2"),
    };
    auto g = build_graph(recs);
    CHECK(g.node_count() == 4);
}

TEST_CASE("events are time ordered with input order on ties, adjacency consistent") {
    std::vector<LogRecord> recs = {
        fx::rec(30, fx::proc("1", "/p"), RelationKind::Read, fx::file("/a")),
        fx::rec(10, fx::proc("1", "/p"), RelationKind::Read, fx::file("/b")),
        fx::rec(10, fx::proc("1", "/p"), RelationKind::Write, fx::file("/c")),
    };
    auto g = build_graph(recs);
    REQUIRE(g.event_count() == 3);
    CHECK(g.event(0).seq == 1);
    CHECK(g.event(1).seq == 2);
    CHECK(g.event(2).seq == 0);
    std::size_t out = 0, in = 0;
    for (NodeId n = 0; n < g.node_count(); ++n) {
        out += g.out_events(n).size();
        in += g.in_events(n).size();
        for (EventId e : g.out_events(n)) CHECK(g.event(e).src == n);
        for (EventId e : g.in_events(n)) CHECK(g.event(e).dst == n);
    }
    CHECK(out == 3);
    CHECK(in == 3);
}

TEST_CASE("re-ingesting the same records reproduces the graph") {
    auto f = fx::mail_fixture();
    CHECK(build_graph(f.records) == build_graph(f.records));
}

TEST_CASE("long-running detection") {
    LongRunPolicy policy;
    std::vector<LogRecord> recs;
    // mail client: 500 events over 7 days
    const std::int64_t week = 7LL * 24 * 3600 * 1'000'000;
    for (int i = 0; i < 500; ++i)
        recs.push_back(fx::rec(i * (week / 499), fx::proc("1", "/mail"), RelationKind::Connect, fx::ip("10.0.0.1", "993")));
    // one-shot: 3 events in 2 s
    for (int i = 0; i < 3; ++i)
        recs.push_back(fx::rec(i * 1'000'000, fx::proc("2", "/bin/ls"), RelationKind::Read, fx::file("/x" + std::to_string(i))));
    // busy: 25 events in 10 s
    for (int i = 0; i < 25; ++i)
        recs.push_back(fx::rec(i * 400'000, fx::proc("3", "/bin/find"), RelationKind::Read, fx::file("/y" + std::to_string(i))));
    auto g = build_graph(recs);
    auto lr = identify_long_running(g, policy);
    REQUIRE(lr.size() == 2);
    CHECK(g.node(lr[0]).entity.attr_or("id", "") == "1");
    CHECK(g.node(lr[1]).entity.attr_or("id", "") == "3");
}

TEST_CASE("graph save/load round trip and version check") {
    auto f = fx::mail_fixture();
    auto g = build_graph(f.records);
    std::stringstream ss;
    save_graph(ss, g);
    CHECK(load_graph(ss) == g);
    std::stringstream bad("bpghunt-graph\t99\n");
    CHECK_THROWS(load_graph(bad));
}
