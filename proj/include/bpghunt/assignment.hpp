#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "bpghunt/matrix.hpp"

namespace bpghunt {

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending by row
    double value = 0.0;                                      // sum of matched weights
};

/// Maximum-weight matching that covers every row of `w` (requires
/// rows <= cols). Weights must be finite.
Assignment hungarian_max(const DenseMatrix& w);

/// Repeatedly takes the heaviest remaining (row, col) pair; ties go to the
/// lexicographically smaller pair. Requires rows <= cols.
Assignment greedy_max(const DenseMatrix& w);

inline constexpr std::size_t kExactAssignmentLimit = 256;

/// Exact when the larger side has at most kExactAssignmentLimit entries,
/// greedy otherwise. Either side may be the smaller one; pairs are always
/// reported as (row, col) of the original matrix.
Assignment max_weight_assignment(const DenseMatrix& w, std::size_t exact_limit = kExactAssignmentLimit);

}  // namespace bpghunt
