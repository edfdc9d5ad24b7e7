#include "bpghunt/assignment.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace bpghunt {

namespace {

DenseMatrix transpose(const DenseMatrix& w) {
    DenseMatrix t(w.cols, w.rows);
    for (std::size_t i = 0; i < w.rows; ++i)
        for (std::size_t j = 0; j < w.cols; ++j) t(j, i) = w(i, j);
    return t;
}

double sum_sorted(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

}  // namespace

// Potentials-based Hungarian method on costs -w, 1-indexed internally.
Assignment hungarian_max(const DenseMatrix& w) {
    const std::size_t n = w.rows, m = w.cols;
    if (n > m) throw std::invalid_argument("hungarian_max: more rows than columns");
    Assignment result;
    if (n == 0) return result;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            std::size_t i0 = p[j0], j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                double cur = -w(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<double> values;
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j]) result.pairs.emplace_back(p[j] - 1, j - 1);
    std::sort(result.pairs.begin(), result.pairs.end());
    for (auto [i, j] : result.pairs) values.push_back(w(i, j));
    result.value = sum_sorted(std::move(values));
    return result;
}

Assignment greedy_max(const DenseMatrix& w) {
    if (w.rows > w.cols) throw std::invalid_argument("greedy_max: more rows than columns");
    std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
    cand.reserve(w.rows * w.cols);
    for (std::size_t i = 0; i < w.rows; ++i)
        for (std::size_t j = 0; j < w.cols; ++j) cand.emplace_back(w(i, j), i, j);
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
    });
    std::vector<char> row_used(w.rows, 0), col_used(w.cols, 0);
    Assignment result;
    std::vector<double> values;
    for (const auto& [val, i, j] : cand) {
        if (row_used[i] || col_used[j]) continue;
        row_used[i] = col_used[j] = 1;
        result.pairs.emplace_back(i, j);
        values.push_back(val);
        if (result.pairs.size() == w.rows) break;
    }
    std::sort(result.pairs.begin(), result.pairs.end());
    result.value = sum_sorted(std::move(values));
    return result;
}

Assignment max_weight_assignment(const DenseMatrix& w, std::size_t exact_limit) {
    const bool flip = w.rows > w.cols;
    DenseMatrix oriented = flip ? transpose(w) : w;
    Assignment a = std::max(oriented.rows, oriented.cols) <= exact_limit ? hungarian_max(oriented) : greedy_max(oriented);
    if (flip) {
        for (auto& [i, j] : a.pairs) std::swap(i, j);
        std::sort(a.pairs.begin(), a.pairs.end());
    }
    return a;
}

}  // namespace bpghunt
