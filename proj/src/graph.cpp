#include "bpghunt/graph.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "bpghunt/text.hpp"

namespace bpghunt {

ProvenanceGraph::ProvenanceGraph(std::vector<Node> nodes, std::vector<Event> events)
    : nodes_(std::move(nodes)), events_(std::move(events)), out_(nodes_.size()), in_(nodes_.size()) {
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.timestamp_us < b.timestamp_us; });
    for (EventId i = 0; i < events_.size(); ++i) {
        const Event& e = events_[i];
        if (e.src >= nodes_.size() || e.dst >= nodes_.size())
            throw std::invalid_argument("event references unknown node");
        out_[e.src].push_back(i);
        in_[e.dst].push_back(i);
    }
}

ProvenanceGraph build_graph(std::span<const LogRecord> records) {
    std::vector<Node> nodes;
    std::vector<Event> events;
    std::unordered_map<std::string, NodeId> ids;
    events.reserve(records.size());

    auto intern = [&](const std::string& host, const EntityRef& entity) {
        auto [it, inserted] = ids.try_emplace(entity_identity(host, entity), static_cast<NodeId>(nodes.size()));
        if (inserted) nodes.push_back({entity, host});
        return it->second;
    };

    for (std::size_t i = 0; i < records.size(); ++i) {
        const LogRecord& r = records[i];
        NodeId src = intern(r.host, r.subject);
        NodeId dst = intern(r.host, r.object);
        events.push_back({src, dst, r.relation, r.timestamp_us, i});
    }
    return ProvenanceGraph(std::move(nodes), std::move(events));
}

std::vector<NodeId> identify_long_running(const ProvenanceGraph& graph, const LongRunPolicy& policy) {
    std::vector<NodeId> result;
    for (NodeId id = 0; id < graph.node_count(); ++id) {
        if (graph.node(id).entity.kind != EntityKind::Process) continue;
        auto out = graph.out_events(id);
        auto in = graph.in_events(id);
        std::size_t degree = out.size() + in.size();
        if (degree == 0) continue;
        // Event ids are time ordered, so first/last come from the list ends.
        EventId first = std::min(out.empty() ? in.front() : out.front(), in.empty() ? out.front() : in.front());
        EventId last = std::max(out.empty() ? in.back() : out.back(), in.empty() ? out.back() : in.back());
        std::int64_t lifetime = graph.event(last).timestamp_us - graph.event(first).timestamp_us;
        if (lifetime >= policy.min_lifetime_us || degree >= policy.min_degree) result.push_back(id);
    }
    return result;
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw std::runtime_error("graph file: " + what); }

std::string next_line(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) bad("unexpected end of file");
    return line;
}

std::size_t header_count(const std::string& line, std::string_view tag) {
    auto parts = text::split(line, '\t');
    if (parts.size() != 2 || parts[0] != tag) bad("expected '" + std::string(tag) + "' header");
    auto n = text::parse_canonical_uint(parts[1]);
    if (!n) bad("bad count");
    return static_cast<std::size_t>(*n);
}

}  // namespace

void save_graph(std::ostream& out, const ProvenanceGraph& graph) {
    out << "bpghunt-graph\t" << kGraphFormatVersion << '\n';
    out << "nodes\t" << graph.node_count() << '\n';
    for (NodeId i = 0; i < graph.node_count(); ++i) {
        const Node& n = graph.node(i);
        out << i << "\thost=" << text::escape(n.host) << '\t' << serialize_entity_fields(n.entity) << '\n';
    }
    out << "events\t" << graph.event_count() << '\n';
    for (const Event& e : graph.events())
        out << e.src << '\t' << e.dst << '\t' << to_string(e.relation) << '\t' << e.timestamp_us << '\t' << e.seq << '\n';
}

ProvenanceGraph load_graph(std::istream& in) {
    std::string line = next_line(in);
    if (line != "bpghunt-graph\t" + std::to_string(kGraphFormatVersion)) bad("unsupported header '" + line + "'");
    std::size_t n_nodes = header_count(next_line(in), "nodes");
    std::vector<Node> nodes;
    nodes.reserve(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        line = next_line(in);
        auto parts = text::split(line, '\t');
        if (parts.size() < 3 || parts[0] != std::to_string(i) || !parts[1].starts_with("host=")) bad("bad node row");
        auto host = text::unescape(parts[1].substr(5));
        if (!host) bad("bad host escape");
        nodes.push_back({parse_entity_fields(std::span(parts).subspan(2)), *host});
    }
    std::size_t n_events = header_count(next_line(in), "events");
    std::vector<Event> events;
    events.reserve(n_events);
    for (std::size_t i = 0; i < n_events; ++i) {
        line = next_line(in);
        auto parts = text::split(line, '\t');
        if (parts.size() != 5) bad("bad event row");
        auto src = text::parse_canonical_uint(parts[0]);
        auto dst = text::parse_canonical_uint(parts[1]);
        auto rel = parse_relation_kind(parts[2]);
        auto ts = text::parse_canonical_uint(parts[3]);
        auto seq = text::parse_canonical_uint(parts[4]);
        if (!src || !dst || !rel || !ts || !seq) bad("bad event field");
        events.push_back({static_cast<NodeId>(*src), static_cast<NodeId>(*dst), *rel,
                          static_cast<std::int64_t>(*ts), *seq});
    }
    return ProvenanceGraph(std::move(nodes), std::move(events));
}

}  // namespace bpghunt
