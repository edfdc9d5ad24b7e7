#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "bpghunt/kernel.hpp"
#include "bpghunt/matrix.hpp"

namespace bpghunt {

struct DistanceResult {
    DenseMatrix distance;
    std::size_t clamped = 0;  // pairs where K_ii + K_jj - 2 K_ij < 0
};

/// D_ij = sqrt(max(0, K_ii + K_jj - 2 K_ij)).
DistanceResult kernel_to_distance(const KernelMatrix& k);
DistanceResult kernel_to_distance_serial(const KernelMatrix& k);

class TooFewPoints : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Distance from each point to its min_samples-th nearest other point.
std::vector<double> core_distances(const DenseMatrix& d, std::size_t min_samples);
std::vector<double> core_distances_serial(const DenseMatrix& d, std::size_t min_samples);

/// MRD(a,b) = max(core(a), core(b), D(a,b)); zero diagonal. Throws
/// TooFewPoints when N <= min_samples.
DenseMatrix mutual_reachability(const DenseMatrix& d, std::size_t min_samples);

struct ClusterParams {
    std::size_t min_cluster_size = 2;
    std::size_t min_samples = 1;
};

inline constexpr int kNoise = -1;

struct ClusterInfo {
    std::size_t size = 0;
    double stability = 0.0;
};

struct ClusterAssignment {
    std::vector<int> labels;  // per point: dense cluster id or kNoise
    std::vector<ClusterInfo> clusters;

    std::size_t cluster_size_of(std::size_t point) const {
        return labels[point] == kNoise ? 1 : clusters[labels[point]].size;
    }
};

struct MstEdge {
    std::size_t a = 0;  // a < b
    std::size_t b = 0;
    double weight = 0.0;
};

/// Prim's algorithm on a dense matrix. Edges come back sorted by (weight,
/// a, b); equal-weight candidates resolve to the lower index pair.
std::vector<MstEdge> minimum_spanning_tree(const DenseMatrix& w);

/// Hierarchical density clustering over a mutual-reachability matrix.
///
/// The single-linkage hierarchy is condensed top-down: at each merge height
/// the components below it that have at least min_cluster_size points
/// become child clusters when two or more exist, a single one continues
/// its parent, and smaller components drop out as noise at that density.
/// Merges at equal heights are treated as one multi-way split. Density is
/// lambda = 1/d; zero distances use a finite lambda twice the largest
/// finite one, keeping every stability finite. Clusters are chosen by
/// excess of mass with ties going to the parent. The root is only
/// selectable when it has no child clusters.
ClusterAssignment hdbscan(const DenseMatrix& mrd, std::size_t min_cluster_size);

/// kernel_to_distance -> mutual_reachability -> hdbscan.
ClusterAssignment cluster_kernel(const KernelMatrix& k, const ClusterParams& params, std::size_t* clamped = nullptr);

/// Classical multidimensional scaling of D into `dims` coordinates per point.
std::vector<std::vector<double>> classical_mds(const DenseMatrix& d, int dims = 2);

void write_assignment(std::ostream& out, const ClusterAssignment& a);

}  // namespace bpghunt
