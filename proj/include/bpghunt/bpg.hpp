#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "bpghunt/audit.hpp"
#include "bpghunt/graph.hpp"
#include "bpghunt/labeling.hpp"

namespace bpghunt {

inline constexpr std::uint32_t kNoLabel = std::numeric_limits<std::uint32_t>::max();

/// A node of a behavior graph. For a partitioned (long-running) process each
/// execution-unit group is its own node, so the same graph node may appear in
/// several BPGs; `unit` is -1 for whole entities.
struct BpgNode {
    NodeId graph_node = 0;
    std::int32_t unit = -1;
    EntityRef entity;
    std::string host;
    std::string label;
    std::uint32_t label_id = kNoLabel;

    friend bool operator==(const BpgNode&, const BpgNode&) = default;
};

struct BpgEdge {
    std::uint32_t src = 0;  // index into BehaviorGraph::nodes
    std::uint32_t dst = 0;
    RelationKind relation = RelationKind::Read;
    std::int64_t timestamp_us = 0;
    EventId event = 0;
    std::uint64_t seq = 0;
    std::string label;
    std::uint32_t label_id = kNoLabel;

    friend bool operator==(const BpgEdge&, const BpgEdge&) = default;
};

/// One behavior instance. Edges are in event (time) order; nodes in order of
/// first appearance along the edges.
struct BehaviorGraph {
    std::uint32_t id = 0;
    std::vector<BpgNode> nodes;
    std::vector<BpgEdge> edges;
    std::vector<NodeId> seeds;  // File nodes that rooted this instance

    friend bool operator==(const BehaviorGraph&, const BehaviorGraph&) = default;
};

/// Assigns node_label/edge_label text to every node and edge.
void attach_labels(std::vector<BehaviorGraph>& corpus, const FileTypeTaxonomy& taxonomy, LabelStats* stats = nullptr);

/// Builds the corpus-wide dictionary from every node and edge label and
/// writes the numeric ids back in place.
LabelDictionary intern_labels(std::vector<BehaviorGraph>& corpus);

/// Assigns ids from an existing dictionary; throws std::out_of_range when a
/// label is missing from it.
void apply_dictionary(std::vector<BehaviorGraph>& corpus, const LabelDictionary& dict);

// Persistence. A store directory holds:
//   manifest.tsv       header, dictionary hash, one row per BPG with its content hash
//   labels.tsv         the label dictionary
//   bpg/<id>.bpg       node and edge tables
// See docs/FORMATS.md.
inline constexpr int kBpgFormatVersion = 1;

void write_bpg(std::ostream& out, const BehaviorGraph& bpg);
BehaviorGraph read_bpg(std::istream& in);  // throws std::runtime_error
std::uint64_t bpg_hash(const BehaviorGraph& bpg);

struct BpgStore {
    std::vector<BehaviorGraph> corpus;
    LabelDictionary dictionary;
    std::uint64_t manifest_hash = 0;  // covers dictionary and every BPG hash
};

std::uint64_t compute_manifest_hash(const BpgStore& store);

void save_store(const std::filesystem::path& dir, BpgStore& store);
/// Throws std::runtime_error if any file is missing, malformed, or its hash
/// disagrees with the manifest.
BpgStore load_store(const std::filesystem::path& dir);

/// Graphviz rendering; nodes carry their label, edges relation and timestamp.
void write_dot(std::ostream& out, const BehaviorGraph& bpg);

}  // namespace bpghunt
