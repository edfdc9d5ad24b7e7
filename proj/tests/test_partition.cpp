#include "doctest.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "bpghunt/partition.hpp"
#include "fixtures.hpp"

using namespace bpghunt;

namespace {

DependencyTimeline timeline_of(std::vector<std::int64_t> ts) {
    DependencyTimeline t;
    t.timestamps = std::move(ts);
    for (std::size_t i = 0; i < t.timestamps.size(); ++i) t.events.push_back(static_cast<EventId>(i));
    return t;
}

std::vector<std::vector<std::int64_t>> unit_members(const DependencyTimeline& t) {
    std::vector<std::vector<std::int64_t>> out;
    for (const auto& u : partition_timeline(t, compute_density(t.timestamps)))
        out.emplace_back(t.timestamps.begin() + u.begin, t.timestamps.begin() + u.end);
    return out;
}

std::set<std::uint64_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

std::vector<BehaviorGraph> extract(const std::vector<LogRecord>& recs, const ProvenanceGraph& g) {
    auto lr = identify_long_running(g, LongRunPolicy{});
    return extract_bpgs(g, partition_processes(g, lr));
}

}  // namespace

TEST_CASE("densities follow the interval formula with doubled boundary intervals") {
    auto d = compute_density(std::vector<std::int64_t>{0, 10, 20, 100, 110, 120});
    REQUIRE(d.size() == 6);
    CHECK(d[0] == doctest::Approx(6.0));
    CHECK(d[1] == doctest::Approx(120.0 / 20));
    CHECK(d[2] == doctest::Approx(120.0 / 90));
    CHECK(d[3] == doctest::Approx(120.0 / 90));
    CHECK(d[4] == doctest::Approx(120.0 / 20));
    CHECK(d[5] == doctest::Approx(6.0));
}

TEST_CASE("degenerate timelines") {
    auto single = compute_density(std::vector<std::int64_t>{42});
    REQUIRE(single.size() == 1);
    CHECK(single[0] == kDensityInfinity);
    CHECK(unit_members(timeline_of({42})) == std::vector<std::vector<std::int64_t>>{{42}});

    auto same = compute_density(std::vector<std::int64_t>{5, 5});
    REQUIRE(same.size() == 2);
    CHECK(std::isfinite(same[0]));
    CHECK(unit_members(timeline_of({5, 5})).size() == 1);

    CHECK(compute_density(std::vector<std::int64_t>{}).empty());
}

TEST_CASE("two bursts split into two units") {
    auto units = unit_members(timeline_of({0, 10, 20, 100, 110, 120}));
    REQUIRE(units.size() == 2);
    CHECK(units[0] == std::vector<std::int64_t>{0, 10, 20});
    CHECK(units[1] == std::vector<std::int64_t>{100, 110, 120});
}

TEST_CASE("uniform spacing stays one unit") {
    std::vector<std::int64_t> ts;
    for (int i = 0; i < 30; ++i) ts.push_back(i * 1000);
    CHECK(unit_members(timeline_of(ts)).size() == 1);
}

TEST_CASE("a lone event far from any burst is its own unit") {
    auto units = unit_members(timeline_of({0, 1, 2, 500, 1000, 1001, 1002}));
    REQUIRE(units.size() == 3);
    CHECK(units[1] == std::vector<std::int64_t>{500});
}

TEST_CASE("pair_units uses the earliest admissible out-unit") {
    auto unit = [](std::int64_t first, std::int64_t last) {
        ExecutionUnit u;
        u.first_ts = first;
        u.last_ts = last;
        return u;
    };
    std::vector<ExecutionUnit> in1 = {unit(0, 50)};
    std::vector<ExecutionUnit> outs = {unit(60, 70), unit(200, 210)};
    CHECK(pair_units(in1, outs) == std::vector<UnitPair>{{0, 0}});

    std::vector<ExecutionUnit> early_out = {unit(40, 45)};
    CHECK(pair_units(in1, early_out).empty());

    std::vector<ExecutionUnit> in2 = {unit(0, 10), unit(20, 30)};
    std::vector<ExecutionUnit> one_out = {unit(40, 41)};
    CHECK(pair_units(in2, one_out) == std::vector<UnitPair>{{0, 0}, {1, 0}});

    // equal timestamps are not "before"
    std::vector<ExecutionUnit> touching = {unit(50, 60)};
    CHECK(pair_units(in1, touching).empty());
}

TEST_CASE("partition property: units are disjoint, contiguous and cover the timeline") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::int64_t> ts(1 + rng() % 40);
        std::int64_t t = 0;
        for (auto& x : ts) {
            t += (rng() % 4 == 0) ? static_cast<std::int64_t>(rng() % 100000) : static_cast<std::int64_t>(rng() % 50);
            x = t;
        }
        auto tl = timeline_of(ts);
        auto units = partition_timeline(tl, compute_density(ts));
        REQUIRE(!units.empty());
        CHECK(units.front().begin == 0);
        CHECK(units.back().end == ts.size());
        for (std::size_t i = 0; i < units.size(); ++i) {
            CHECK(units[i].begin < units[i].end);
            CHECK(units[i].first_ts == ts[units[i].begin]);
            CHECK(units[i].last_ts == ts[units[i].end - 1]);
            if (i > 0) {
                CHECK(units[i].begin == units[i - 1].end);
                CHECK(units[i].first_ts >= units[i - 1].last_ts);
            }
        }
        CHECK(partition_timeline(tl, compute_density(ts)) == units);
    }
}

TEST_CASE("mail fixture: attack chain and mail bursts become separate BPGs") {
    auto f = fx::mail_fixture();
    auto g = build_graph(f.records);
    auto bpgs = extract(f.records, g);
    std::vector<std::set<std::uint64_t>> sets;
    for (const auto& b : bpgs) {
        std::set<std::uint64_t> s;
        for (const auto& e : b.edges) s.insert(e.seq);
        sets.push_back(s);
    }
    CHECK(bpgs.size() == 3);
    CHECK(std::count(sets.begin(), sets.end(), as_set(f.attack)) == 1);
    CHECK(std::count(sets.begin(), sets.end(), as_set(f.mail1)) == 1);
    CHECK(std::count(sets.begin(), sets.end(), as_set(f.mail2)) == 1);
}

TEST_CASE("without partitioning the mail client merges everything") {
    auto f = fx::mail_fixture();
    auto g = build_graph(f.records);
    auto bpgs = extract_bpgs(g, {});
    CHECK(bpgs.size() == 1);
}

TEST_CASE("one process reading one file gives one BPG with two nodes and one edge") {
    std::vector<LogRecord> recs = {fx::rec(1, fx::proc("1", "/bin/cat"), RelationKind::Read, fx::file("/etc/motd"))};
    auto g = build_graph(recs);
    auto bpgs = extract(recs, g);
    REQUIRE(bpgs.size() == 1);
    CHECK(bpgs[0].nodes.size() == 2);
    CHECK(bpgs[0].edges.size() == 1);
    CHECK(bpgs[0].seeds.size() == 1);
}

TEST_CASE("browser fixture: downloads and an install are split apart") {
    using R = RelationKind;
    constexpr std::int64_t s = 1'000'000;
    auto chrome = fx::proc("300", "C:\\Program Files\\Google\\chrome.exe");
    std::vector<LogRecord> recs;
    std::vector<std::size_t> pdf, csv, install;
    auto add = [&](std::vector<std::size_t>& into, LogRecord r) {
        into.push_back(recs.size());
        recs.push_back(std::move(r));
    };
    add(pdf, fx::rec(10 * s, chrome, R::Connect, fx::ip("198.51.100.7", "443")));
    add(pdf, fx::rec(10 * s + 500, chrome, R::Write, fx::file("C:\\Users\\u\\Downloads\\report.pdf")));
    add(pdf, fx::rec(10 * s + 900, chrome, R::Write, fx::file("C:\\Users\\u\\Downloads\\report2.pdf")));
    add(csv, fx::rec(1800 * s, chrome, R::Connect, fx::ip("198.51.100.8", "443")));
    add(csv, fx::rec(1800 * s + 400, chrome, R::Write, fx::file("C:\\Users\\u\\Downloads\\data.csv")));
    add(csv, fx::rec(1800 * s + 800, chrome, R::Write, fx::file("C:\\Users\\u\\Downloads\\data2.csv")));
    add(install, fx::rec(4000 * s, chrome, R::Connect, fx::ip("151.101.0.223", "443")));
    add(install, fx::rec(4000 * s + 700, chrome, R::Write, fx::file("C:\\Users\\u\\Downloads\\python-3.12.exe")));
    add(install, fx::rec(4000 * s + 900, chrome, R::Create, fx::proc("301", "C:\\Users\\u\\Downloads\\python-3.12.exe")));
    add(install, fx::rec(4005 * s, fx::proc("301", "C:\\Users\\u\\Downloads\\python-3.12.exe"), R::Write,
                         fx::file("C:\\Python312\\python.exe")));
    auto g = build_graph(recs);
    auto bpgs = extract(recs, g);
    std::vector<std::set<std::uint64_t>> sets;
    for (const auto& b : bpgs) {
        std::set<std::uint64_t> st;
        for (const auto& e : b.edges) st.insert(e.seq);
        sets.push_back(st);
    }
    CHECK(sets.size() == 3);
    CHECK(std::count(sets.begin(), sets.end(), as_set(pdf)) == 1);
    CHECK(std::count(sets.begin(), sets.end(), as_set(csv)) == 1);
    CHECK(std::count(sets.begin(), sets.end(), as_set(install)) == 1);
}

namespace {

// Random workload: a few long-running processes with bursty activity and
// short-lived helpers exchanging files.
std::vector<LogRecord> random_workload(std::mt19937_64& rng) {
    std::vector<LogRecord> recs;
    std::int64_t t = 0;
    int files = 0;
    for (int burst = 0; burst < 30; ++burst) {
        t += 1'000'000 + static_cast<std::int64_t>(rng() % 100'000'000);
        auto lr = fx::proc(std::to_string(1 + rng() % 3), "/usr/bin/daemon");
        int n = 2 + static_cast<int>(rng() % 4);
        for (int k = 0; k < n; ++k) {
            t += 1 + static_cast<std::int64_t>(rng() % 500);
            switch (rng() % 4) {
                case 0: recs.push_back(fx::rec(t, lr, RelationKind::Write, fx::file("/f" + std::to_string(rng() % (files + 1))))); ++files; break;
                case 1: recs.push_back(fx::rec(t, lr, RelationKind::Read, fx::file("/f" + std::to_string(rng() % (files + 1))))); break;
                case 2: recs.push_back(fx::rec(t, lr, RelationKind::Connect, fx::ip("10.0.0." + std::to_string(rng() % 4), "80"))); break;
                default: {
                    auto child = fx::proc(std::to_string(1000 + burst), "/bin/helper");
                    recs.push_back(fx::rec(t, lr, RelationKind::Create, child));
                    recs.push_back(fx::rec(t + 5, child, RelationKind::Read, fx::file("/f" + std::to_string(rng() % (files + 1)))));
                }
            }
        }
    }
    return recs;
}

}  // namespace

TEST_CASE("extraction properties on random workloads") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        auto recs = random_workload(rng);
        auto g = build_graph(recs);
        LongRunPolicy policy;
        policy.min_degree = 8;
        auto lr = identify_long_running(g, policy);
        auto part = partition_processes(g, lr);
        auto bpgs = extract_bpgs(g, part);

        // conservation: every event exactly once
        std::vector<int> seen(g.event_count(), 0);
        for (const auto& b : bpgs)
            for (const auto& e : b.edges) ++seen[e.event];
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

        // time order at partitioned process nodes: inflow precedes outflow
        std::set<NodeId> partitioned(lr.begin(), lr.end());
        for (const auto& b : bpgs) {
            for (std::uint32_t v = 0; v < b.nodes.size(); ++v) {
                if (!partitioned.count(b.nodes[v].graph_node)) continue;
                std::int64_t last_in = -1, first_out = INT64_MAX;
                for (const auto& e : b.edges) {
                    if (e.dst == v && e.src != v) last_in = std::max(last_in, e.timestamp_us);
                    if (e.src == v && e.dst != v) first_out = std::min(first_out, e.timestamp_us);
                }
                if (last_in >= 0 && first_out != INT64_MAX) CHECK(last_in < first_out);
            }
        }

        // determinism and serial/parallel agreement
        auto serial = partition_processes_serial(g, lr);
        CHECK(extract_bpgs(g, serial) == bpgs);
        CHECK(extract_bpgs(build_graph(recs), partition_processes(build_graph(recs), lr)) == bpgs);
    }
}
