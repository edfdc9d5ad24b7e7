#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bpghunt/audit.hpp"

namespace bpghunt {

using NodeId = std::uint32_t;
using EventId = std::uint32_t;

struct Node {
    EntityRef entity;
    std::string host;  // host of first appearance

    friend bool operator==(const Node&, const Node&) = default;
};

struct Event {
    NodeId src = 0;
    NodeId dst = 0;
    RelationKind relation = RelationKind::Read;
    std::int64_t timestamp_us = 0;
    std::uint64_t seq = 0;  // index of the originating record in the input stream

    friend bool operator==(const Event&, const Event&) = default;
};

/// Whole-system provenance graph. Immutable once built; events are ordered
/// by timestamp with ties kept in input order.
class ProvenanceGraph {
public:
    ProvenanceGraph() = default;
    ProvenanceGraph(std::vector<Node> nodes, std::vector<Event> events);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t event_count() const { return events_.size(); }

    const Node& node(NodeId id) const { return nodes_[id]; }
    const Event& event(EventId id) const { return events_[id]; }
    std::span<const Node> nodes() const { return nodes_; }
    std::span<const Event> events() const { return events_; }

    // Event ids ascending (hence in time order).
    std::span<const EventId> out_events(NodeId id) const { return out_[id]; }
    std::span<const EventId> in_events(NodeId id) const { return in_[id]; }

    friend bool operator==(const ProvenanceGraph& a, const ProvenanceGraph& b) {
        return a.nodes_ == b.nodes_ && a.events_ == b.events_;
    }

private:
    std::vector<Node> nodes_;
    std::vector<Event> events_;
    std::vector<std::vector<EventId>> out_;
    std::vector<std::vector<EventId>> in_;
};

/// NodeIds are assigned in order of first reference (subject before object),
/// so re-ingesting the same records reproduces the same mapping.
ProvenanceGraph build_graph(std::span<const LogRecord> records);

struct LongRunPolicy {
    std::int64_t min_lifetime_us = 3'600'000'000;  // 1 h
    std::size_t min_degree = 20;
};

/// Process nodes whose observed lifetime (first to last incident event) is at
/// least min_lifetime, or whose in+out event degree is at least min_degree.
/// Returned ascending.
std::vector<NodeId> identify_long_running(const ProvenanceGraph& graph, const LongRunPolicy& policy);

inline constexpr int kGraphFormatVersion = 1;

void save_graph(std::ostream& out, const ProvenanceGraph& graph);
/// Throws std::runtime_error on malformed or version-mismatched input.
ProvenanceGraph load_graph(std::istream& in);

}  // namespace bpghunt
