#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bpghunt/bpg.hpp"
#include "bpghunt/graph.hpp"

namespace bpghunt {

enum class Direction : std::uint8_t { Incoming, Outgoing };

/// Dependency events of one process in one direction, in time order.
struct DependencyTimeline {
    NodeId process = 0;
    Direction direction = Direction::Incoming;
    std::vector<std::int64_t> timestamps;
    std::vector<EventId> events;  // parallel to timestamps

    std::int64_t time_start() const { return timestamps.front(); }
    std::int64_t time_end() const { return timestamps.back(); }
};

DependencyTimeline make_timeline(const ProvenanceGraph& graph, NodeId process, Direction direction);

/// T_i = ts_{i+1} - ts_i.
std::vector<std::int64_t> intervals(std::span<const std::int64_t> timestamps);

inline constexpr double kDensityInfinity = std::numeric_limits<double>::infinity();

/// Interior point i: span / (T_{i-1} + T_i). First and last points have a
/// single neighbouring interval and use span / (2 T). Denominators are
/// clamped to at least 1 us. A single point yields {kDensityInfinity}.
std::vector<double> compute_density(std::span<const std::int64_t> timestamps);

/// Half-open index range [begin, end) into a timeline.
struct ExecutionUnit {
    NodeId process = 0;
    Direction direction = Direction::Incoming;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::int64_t first_ts = 0;
    std::int64_t last_ts = 0;

    std::size_t size() const { return end - begin; }
    friend bool operator==(const ExecutionUnit&, const ExecutionUnit&) = default;
};

/// Splits a timeline into contiguous units.
///
/// A point whose density is at least the mean is a core point and binds to
/// both neighbours. Any other point binds only towards its smaller adjacent
/// interval (the left one on ties), and only when that interval does not
/// exceed the timeline's mean interval; otherwise it stays on its own.
/// Units are the maximal bound runs.
std::vector<ExecutionUnit> partition_timeline(const DependencyTimeline& timeline, std::span<const double> densities);

struct UnitPair {
    std::size_t in_unit = 0;
    std::size_t out_unit = 0;
    friend bool operator==(const UnitPair&, const UnitPair&) = default;
};

/// Each in-unit pairs with the earliest out-unit whose first timestamp is
/// strictly after the in-unit's last one. Unpaired in-units are omitted.
std::vector<UnitPair> pair_units(std::span<const ExecutionUnit> in_units, std::span<const ExecutionUnit> out_units);

struct ProcessPartition {
    NodeId process = 0;
    DependencyTimeline in_timeline;
    DependencyTimeline out_timeline;
    std::vector<ExecutionUnit> in_units;
    std::vector<ExecutionUnit> out_units;
    std::vector<UnitPair> pairs;
};

using Partitioning = std::vector<ProcessPartition>;

/// Partitions every listed process. Processes are independent, so this runs
/// in parallel; output order follows `long_running`.
Partitioning partition_processes(const ProvenanceGraph& graph, std::span<const NodeId> long_running);
Partitioning partition_processes_serial(const ProvenanceGraph& graph, std::span<const NodeId> long_running);

/// Splits the graph into behavior instances. Every event lands in exactly
/// one BPG. BPGs come out ordered by their lowest File seed node, then by
/// lowest event id for instances without a File node. Labels are not set.
std::vector<BehaviorGraph> extract_bpgs(const ProvenanceGraph& graph, const Partitioning& partitioning);

}  // namespace bpghunt
