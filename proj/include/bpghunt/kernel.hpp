#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bpghunt/audit.hpp"
#include "bpghunt/bpg.hpp"
#include "bpghunt/matrix.hpp"

namespace bpghunt {

struct KernelParams {
    double alpha = 1.0;  // weight of the previous node kernel
    double beta = 0.5;   // weight of the neighbourhood sum
    int iterations = 5;  // T; the base kernel counts as iteration 1

    void validate() const;  // throws std::invalid_argument
};

class DictionaryMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KernelEdge {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    std::uint32_t label = 0;
};

/// Kernel view of a labeled graph. Parallel edges that repeat the same
/// (src, dst, label) collapse to one; everything else is kept.
class KernelGraph {
public:
    KernelGraph() = default;
    KernelGraph(std::vector<EntityKind> kinds, std::vector<std::uint32_t> labels, std::vector<KernelEdge> edges,
                std::uint64_t dictionary_hash = 0);

    std::size_t size() const { return kinds_.size(); }
    EntityKind kind(std::size_t v) const { return kinds_[v]; }
    std::uint32_t label(std::size_t v) const { return labels_[v]; }
    /// Out-neighbours as (edge label, neighbour), sorted.
    std::span<const std::pair<std::uint32_t, std::uint32_t>> out(std::size_t v) const { return adj_[v]; }
    /// (edge label, neighbour label) pairs of v, sorted; the own label is kept apart.
    std::span<const std::pair<std::uint32_t, std::uint32_t>> multiset(std::size_t v) const { return pairs_[v]; }
    const std::vector<KernelEdge>& edges() const { return edges_; }
    std::uint64_t dictionary_hash() const { return dict_hash_; }

    /// Total order on graph content used to fix argument order.
    friend int compare(const KernelGraph& a, const KernelGraph& b);

private:
    std::vector<EntityKind> kinds_;
    std::vector<std::uint32_t> labels_;
    std::vector<KernelEdge> edges_;  // deduplicated, sorted
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> adj_;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> pairs_;
    std::uint64_t dict_hash_ = 0;
};

/// Requires interned labels (label_id set on every node and edge).
KernelGraph make_kernel_graph(const BehaviorGraph& bpg, std::uint64_t dictionary_hash);

/// |M(v1) ∩ M(v2)|: own-label match plus multiset intersection of pairs.
std::uint32_t base_kernel(const KernelGraph& g1, std::size_t v1, const KernelGraph& g2, std::size_t v2);

inline int edge_kernel(std::uint32_t label1, std::uint32_t label2) { return label1 == label2 ? 1 : 0; }

/// Node kernel table at iteration 1 (rows: g1 nodes, cols: g2 nodes).
DenseMatrix base_table(const KernelGraph& g1, const KernelGraph& g2);

/// One refinement step: next = alpha*k + beta * sum over label-matched out-edge pairs of k(u1,u2).
DenseMatrix refine(const KernelGraph& g1, const KernelGraph& g2, const DenseMatrix& k, const KernelParams& params);

/// k_v^T for every node pair.
DenseMatrix node_kernel_table(const KernelGraph& g1, const KernelGraph& g2, const KernelParams& params);

struct GraphKernelDetail {
    double value = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> matched;  // (node in g1, node in g2)
};

/// Per entity kind, maximum-weight matching from the smaller node set into
/// the larger; the result is the sum of matched k_v^T values in ascending
/// order. Arguments are internally put in canonical order, so
/// graph_kernel(a, b) == graph_kernel(b, a) bit for bit.
double graph_kernel(const KernelGraph& g1, const KernelGraph& g2, const KernelParams& params);
GraphKernelDetail graph_kernel_detail(const KernelGraph& g1, const KernelGraph& g2, const KernelParams& params);

struct KernelMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // row-major n*n
    std::uint64_t manifest_hash = 0;

    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    friend bool operator==(const KernelMatrix&, const KernelMatrix&) = default;
};

/// Every unordered pair (and the diagonal) is computed once and mirrored.
/// Parallel over pairs; output does not depend on the schedule.
KernelMatrix kernel_matrix(std::span<const KernelGraph> corpus, const KernelParams& params);
KernelMatrix kernel_matrix_serial(std::span<const KernelGraph> corpus, const KernelParams& params);

// Binary layout: "BPGKMAT1", u32 version, u64 n, u64 manifest hash, n*n f64,
// all little-endian.
void write_kernel_matrix(std::ostream& out, const KernelMatrix& k);
KernelMatrix read_kernel_matrix(std::istream& in);  // throws std::runtime_error
void write_kernel_csv(std::ostream& out, const KernelMatrix& k);

}  // namespace bpghunt
