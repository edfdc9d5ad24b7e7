#include "bpghunt/partition.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace bpghunt {

DependencyTimeline make_timeline(const ProvenanceGraph& graph, NodeId process, Direction direction) {
    DependencyTimeline t;
    t.process = process;
    t.direction = direction;
    auto ids = direction == Direction::Incoming ? graph.in_events(process) : graph.out_events(process);
    t.events.assign(ids.begin(), ids.end());
    t.timestamps.reserve(ids.size());
    for (EventId e : ids) t.timestamps.push_back(graph.event(e).timestamp_us);
    return t;
}

std::vector<std::int64_t> intervals(std::span<const std::int64_t> timestamps) {
    std::vector<std::int64_t> out;
    if (timestamps.size() < 2) return out;
    out.reserve(timestamps.size() - 1);
    for (std::size_t i = 0; i + 1 < timestamps.size(); ++i) {
        if (timestamps[i + 1] < timestamps[i]) throw std::invalid_argument("timestamps must be ascending");
        out.push_back(timestamps[i + 1] - timestamps[i]);
    }
    return out;
}

std::vector<double> compute_density(std::span<const std::int64_t> timestamps) {
    if (timestamps.empty()) return {};
    if (timestamps.size() == 1) return {kDensityInfinity};
    auto t = intervals(timestamps);
    const double span = static_cast<double>(timestamps.back() - timestamps.front());
    const std::size_t n = timestamps.size();
    std::vector<double> d(n);
    auto dens = [&](std::int64_t denom) { return span / static_cast<double>(std::max<std::int64_t>(denom, 1)); };
    d[0] = dens(2 * t[0]);
    d[n - 1] = dens(2 * t[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = dens(t[i - 1] + t[i]);
    return d;
}

std::vector<ExecutionUnit> partition_timeline(const DependencyTimeline& timeline, std::span<const double> densities) {
    const auto& ts = timeline.timestamps;
    const std::size_t n = ts.size();
    if (densities.size() != n) throw std::invalid_argument("one density per timestamp required");
    std::vector<ExecutionUnit> units;
    if (n == 0) return units;

    // bound[i] joins point i and point i+1.
    std::vector<bool> bound(n > 0 ? n - 1 : 0, false);
    if (n > 1) {
        const double mean = std::accumulate(densities.begin(), densities.end(), 0.0) / static_cast<double>(n);
        const double core_floor = mean - 1e-12 * std::abs(mean);
        auto t = intervals(ts);
        const double mean_interval = static_cast<double>(ts.back() - ts.front()) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const bool has_left = i > 0;
            const bool has_right = i + 1 < n;
            if (densities[i] >= core_floor) {
                if (has_left) bound[i - 1] = true;
                if (has_right) bound[i] = true;
                continue;
            }
            bool go_left = has_left && (!has_right || t[i - 1] <= t[i]);
            std::int64_t gap = go_left ? t[i - 1] : t[i];
            if (static_cast<double>(gap) > mean_interval) continue;
            bound[go_left ? i - 1 : i] = true;
        }
    }

    std::size_t begin = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 == n || !bound[i]) {
            units.push_back({timeline.process, timeline.direction, begin, i + 1, ts[begin], ts[i]});
            begin = i + 1;
        }
    }
    return units;
}

std::vector<UnitPair> pair_units(std::span<const ExecutionUnit> in_units, std::span<const ExecutionUnit> out_units) {
    std::vector<UnitPair> pairs;
    for (std::size_t i = 0; i < in_units.size(); ++i) {
        auto it = std::upper_bound(out_units.begin(), out_units.end(), in_units[i].last_ts,
                                   [](std::int64_t v, const ExecutionUnit& u) { return v < u.first_ts; });
        if (it != out_units.end()) pairs.push_back({i, static_cast<std::size_t>(it - out_units.begin())});
    }
    return pairs;
}

namespace {

ProcessPartition partition_one(const ProvenanceGraph& graph, NodeId p) {
    ProcessPartition part;
    part.process = p;
    part.in_timeline = make_timeline(graph, p, Direction::Incoming);
    part.out_timeline = make_timeline(graph, p, Direction::Outgoing);
    part.in_units = partition_timeline(part.in_timeline, compute_density(part.in_timeline.timestamps));
    part.out_units = partition_timeline(part.out_timeline, compute_density(part.out_timeline.timestamps));
    part.pairs = pair_units(part.in_units, part.out_units);
    return part;
}

struct UnionFind {
    std::vector<std::uint32_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

// Information entering a passive entity, keyed by the relation.
bool flows_into_object(RelationKind r) {
    return r == RelationKind::Write || r == RelationKind::Connect || r == RelationKind::Logon;
}

}  // namespace

Partitioning partition_processes(const ProvenanceGraph& graph, std::span<const NodeId> long_running) {
    Partitioning out(long_running.size());
    const auto n = static_cast<std::ptrdiff_t>(long_running.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = partition_one(graph, long_running[i]);
    return out;
}

Partitioning partition_processes_serial(const ProvenanceGraph& graph, std::span<const NodeId> long_running) {
    Partitioning out;
    out.reserve(long_running.size());
    for (NodeId p : long_running) out.push_back(partition_one(graph, p));
    return out;
}

std::vector<BehaviorGraph> extract_bpgs(const ProvenanceGraph& graph, const Partitioning& partitioning) {
    const std::size_t m = graph.event_count();
    // Unit group of each event endpoint at a partitioned process; -1 elsewhere.
    std::vector<std::int32_t> src_group(m, -1), dst_group(m, -1);
    for (const ProcessPartition& part : partitioning) {
        for (std::size_t j = 0; j < part.out_units.size(); ++j)
            for (std::size_t k = part.out_units[j].begin; k < part.out_units[j].end; ++k)
                src_group[part.out_timeline.events[k]] = static_cast<std::int32_t>(j);
        std::vector<std::int32_t> group(part.in_units.size(), -1);
        for (const UnitPair& pr : part.pairs) group[pr.in_unit] = static_cast<std::int32_t>(pr.out_unit);
        auto next = static_cast<std::int32_t>(part.out_units.size());
        for (auto& g : group)
            if (g < 0) g = next++;
        for (std::size_t j = 0; j < part.in_units.size(); ++j)
            for (std::size_t k = part.in_units[j].begin; k < part.in_units[j].end; ++k)
                dst_group[part.in_timeline.events[k]] = group[j];
    }

    UnionFind uf(m);

    // Every event touching the same process node (or unit of one) is one behavior.
    std::map<std::pair<NodeId, std::int32_t>, EventId> first_at;
    for (EventId e = 0; e < m; ++e) {
        const Event& ev = graph.event(e);
        if (graph.node(ev.src).entity.kind == EntityKind::Process) {
            auto [it, fresh] = first_at.try_emplace({ev.src, src_group[e]}, e);
            if (!fresh) uf.unite(it->second, e);
        }
        if (graph.node(ev.dst).entity.kind == EntityKind::Process) {
            auto [it, fresh] = first_at.try_emplace({ev.dst, dst_group[e]}, e);
            if (!fresh) uf.unite(it->second, e);
        }
    }

    // Passive entities: a flow out of the entity continues the most recent
    // flow into it at or before that time. Flows out that precede every
    // write are left unlinked, so shared read-only resources never merge
    // unrelated behaviors.
    for (NodeId x = 0; x < graph.node_count(); ++x) {
        if (graph.node(x).entity.kind == EntityKind::Process) continue;
        std::vector<EventId> inflow, outflow;
        for (EventId e : graph.in_events(x))
            (flows_into_object(graph.event(e).relation) ? inflow : outflow).push_back(e);
        for (EventId e : graph.out_events(x)) outflow.push_back(e);
        std::sort(outflow.begin(), outflow.end());
        std::size_t k = 0;
        for (EventId o : outflow) {
            const std::int64_t t = graph.event(o).timestamp_us;
            while (k < inflow.size() && graph.event(inflow[k]).timestamp_us <= t) ++k;
            if (k > 0) uf.unite(inflow[k - 1], o);
        }
    }

    // Group events by component root (roots are the lowest event id).
    std::map<std::uint32_t, std::vector<EventId>> components;
    for (EventId e = 0; e < m; ++e) components[uf.find(e)].push_back(e);

    struct Pending {
        std::vector<EventId> events;
        std::vector<NodeId> seeds;
    };
    std::vector<Pending> pending;
    pending.reserve(components.size());
    for (auto& [root, events] : components) {
        Pending p{std::move(events), {}};
        for (EventId e : p.events)
            for (NodeId n : {graph.event(e).src, graph.event(e).dst})
                if (graph.node(n).entity.kind == EntityKind::File) p.seeds.push_back(n);
        std::sort(p.seeds.begin(), p.seeds.end());
        p.seeds.erase(std::unique(p.seeds.begin(), p.seeds.end()), p.seeds.end());
        pending.push_back(std::move(p));
    }
    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
        if (a.seeds.empty() != b.seeds.empty()) return b.seeds.empty();
        if (!a.seeds.empty() && a.seeds.front() != b.seeds.front()) return a.seeds.front() < b.seeds.front();
        return a.events.front() < b.events.front();
    });

    std::vector<BehaviorGraph> out;
    out.reserve(pending.size());
    for (auto& p : pending) {
        BehaviorGraph g;
        g.id = static_cast<std::uint32_t>(out.size());
        g.seeds = std::move(p.seeds);
        std::map<std::pair<NodeId, std::int32_t>, std::uint32_t> local;
        auto node_index = [&](NodeId n, std::int32_t unit) {
            auto [it, fresh] = local.try_emplace({n, unit}, static_cast<std::uint32_t>(g.nodes.size()));
            if (fresh) g.nodes.push_back({n, unit, graph.node(n).entity, graph.node(n).host, {}, kNoLabel});
            return it->second;
        };
        for (EventId e : p.events) {
            const Event& ev = graph.event(e);
            std::uint32_t s = node_index(ev.src, src_group[e]);
            std::uint32_t d = node_index(ev.dst, dst_group[e]);
            g.edges.push_back({s, d, ev.relation, ev.timestamp_us, e, ev.seq, {}, kNoLabel});
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace bpghunt
