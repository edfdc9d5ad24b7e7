#include "bpghunt/cluster.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "bpghunt/text.hpp"

namespace bpghunt {

namespace {

double distance_entry(const KernelMatrix& k, std::size_t i, std::size_t j, bool& clamped) {
    double sq = k(i, i) + k(j, j) - 2.0 * k(i, j);
    clamped = sq < 0.0;
    return clamped ? 0.0 : std::sqrt(sq);
}

double kth_smallest_other(const DenseMatrix& d, std::size_t i, std::size_t k, std::vector<double>& scratch) {
    scratch.clear();
    for (std::size_t j = 0; j < d.cols; ++j)
        if (j != i) scratch.push_back(d(i, j));
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
    return scratch[k - 1];
}

void check_core_args(const DenseMatrix& d, std::size_t min_samples) {
    if (min_samples == 0) throw std::invalid_argument("min_samples must be positive");
    if (d.rows <= min_samples)
        throw TooFewPoints("need more than min_samples=" + std::to_string(min_samples) + " points, got " +
                           std::to_string(d.rows));
}

}  // namespace

DistanceResult kernel_to_distance(const KernelMatrix& k) {
    DistanceResult r{DenseMatrix(k.n, k.n), 0};
    const auto n = static_cast<std::ptrdiff_t>(k.n);
    std::size_t clamped = 0;
#pragma omp parallel for schedule(static) reduction(+ : clamped)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k.n; ++j) {
            if (static_cast<std::size_t>(i) == j) continue;
            bool c = false;
            r.distance(i, j) = distance_entry(k, i, j, c);
            if (c && static_cast<std::size_t>(i) < j) ++clamped;
        }
    }
    r.clamped = clamped;
    return r;
}

DistanceResult kernel_to_distance_serial(const KernelMatrix& k) {
    DistanceResult r{DenseMatrix(k.n, k.n), 0};
    for (std::size_t i = 0; i < k.n; ++i)
        for (std::size_t j = 0; j < k.n; ++j) {
            if (i == j) continue;
            bool c = false;
            r.distance(i, j) = distance_entry(k, i, j, c);
            if (c && i < j) ++r.clamped;
        }
    return r;
}

std::vector<double> core_distances(const DenseMatrix& d, std::size_t min_samples) {
    check_core_args(d, min_samples);
    std::vector<double> core(d.rows);
    const auto n = static_cast<std::ptrdiff_t>(d.rows);
#pragma omp parallel
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) core[i] = kth_smallest_other(d, i, min_samples, scratch);
    }
    return core;
}

std::vector<double> core_distances_serial(const DenseMatrix& d, std::size_t min_samples) {
    check_core_args(d, min_samples);
    std::vector<double> core(d.rows), scratch;
    for (std::size_t i = 0; i < d.rows; ++i) core[i] = kth_smallest_other(d, i, min_samples, scratch);
    return core;
}

DenseMatrix mutual_reachability(const DenseMatrix& d, std::size_t min_samples) {
    auto core = core_distances(d, min_samples);
    DenseMatrix m(d.rows, d.cols);
    for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j)
            m(i, j) = i == j ? 0.0 : std::max({core[i], core[j], d(i, j)});
    return m;
}

std::vector<MstEdge> minimum_spanning_tree(const DenseMatrix& w) {
    const std::size_t n = w.rows;
    std::vector<MstEdge> edges;
    if (n < 2) return edges;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<char> in_tree(n, 0);
    std::vector<double> best(n, inf);
    std::vector<std::size_t> from(n, 0);
    auto better = [&](double wt, std::size_t a, std::size_t b, std::size_t j) {
        // candidate edge (a,b) for vertex j versus its current best
        if (wt != best[j]) return wt < best[j];
        auto cur = std::minmax(from[j], j);
        return std::minmax(a, b) < cur;
    };
    in_tree[0] = 1;
    for (std::size_t j = 1; j < n; ++j) {
        best[j] = w(0, j);
        from[j] = 0;
    }
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t next = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            if (next == n || best[j] < best[next] ||
                (best[j] == best[next] && std::minmax(from[j], j) < std::minmax(from[next], next)))
                next = j;
        }
        in_tree[next] = 1;
        auto [a, b] = std::minmax(from[next], next);
        edges.push_back({a, b, best[next]});
        for (std::size_t j = 0; j < n; ++j)
            if (!in_tree[j] && better(w(next, j), next, j, j)) {
                best[j] = w(next, j);
                from[j] = next;
            }
    }
    std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
        return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
    });
    return edges;
}

namespace {

struct LinkNode {
    std::size_t left = 0, right = 0;
    double dist = 0.0;
    std::size_t size = 1;
};

struct CondensedCluster {
    std::size_t parent = 0;
    double birth = 0.0;
    double stability = 0.0;
    std::vector<std::size_t> children;
};

}  // namespace

ClusterAssignment hdbscan(const DenseMatrix& mrd, std::size_t min_cluster_size) {
    if (min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be at least 2");
    const std::size_t n = mrd.rows;
    ClusterAssignment out;
    out.labels.assign(n, kNoise);
    if (n < 2) return out;

    // Single linkage from the MST.
    auto mst = minimum_spanning_tree(mrd);
    std::vector<LinkNode> tree(n);
    std::vector<std::size_t> uf(2 * n - 1), top(n);
    std::iota(uf.begin(), uf.end(), 0);
    std::iota(top.begin(), top.end(), 0);
    auto find = [&](std::size_t x) {
        while (uf[x] != x) x = uf[x] = uf[uf[x]];
        return x;
    };
    for (const MstEdge& e : mst) {
        std::size_t ra = find(e.a), rb = find(e.b);
        std::size_t ta = top[ra], tb = top[rb];
        std::size_t id = tree.size();
        tree.push_back({std::min(ta, tb), std::max(ta, tb), e.weight, tree[ta].size + tree[tb].size});
        uf[rb] = ra;
        top[ra] = id;
    }
    const std::size_t root = tree.size() - 1;

    double min_positive = std::numeric_limits<double>::infinity();
    for (const MstEdge& e : mst)
        if (e.weight > 0.0) min_positive = std::min(min_positive, e.weight);
    const double zero_lambda = std::isfinite(min_positive) ? 2.0 / min_positive : 1.0;
    auto lambda_of = [&](double d) { return d > 0.0 ? 1.0 / d : zero_lambda; };

    // Subtrees hanging directly below the merge height of `node`.
    auto split_at = [&](std::size_t node) {
        std::vector<std::size_t> comps, stack{node};
        const double d = tree[node].dist;
        while (!stack.empty()) {
            std::size_t x = stack.back();
            stack.pop_back();
            if (x >= n && (x == node || tree[x].dist == d)) {
                stack.push_back(tree[x].right);
                stack.push_back(tree[x].left);
            } else {
                comps.push_back(x);
            }
        }
        return comps;
    };
    auto leaves_of = [&](std::size_t node, std::vector<std::size_t>& into) {
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            std::size_t x = stack.back();
            stack.pop_back();
            if (x < n) into.push_back(x);
            else {
                stack.push_back(tree[x].right);
                stack.push_back(tree[x].left);
            }
        }
    };

    std::vector<CondensedCluster> clusters{{0, 0.0, 0.0, {}}};
    std::vector<std::size_t> fell_from(n, 0);
    std::vector<double> fell_at(n, 0.0);

    std::vector<std::pair<std::size_t, std::size_t>> work{{root, 0}};
    while (!work.empty()) {
        auto [node, c] = work.back();
        work.pop_back();
        const double lam = lambda_of(tree[node].dist);
        auto comps = split_at(node);
        std::vector<std::size_t> big;
        for (std::size_t x : comps)
            if (tree[x].size >= min_cluster_size) big.push_back(x);
        std::vector<std::size_t> dropped;
        for (std::size_t x : comps)
            if (tree[x].size < min_cluster_size) leaves_of(x, dropped);
        for (std::size_t p : dropped) {
            fell_from[p] = c;
            fell_at[p] = lam;
            clusters[c].stability += lam - clusters[c].birth;
        }
        if (big.size() == 1) {
            work.emplace_back(big[0], c);
        } else {
            // Reverse push keeps creation order left to right.
            std::vector<std::pair<std::size_t, std::size_t>> created;
            for (std::size_t x : big) {
                std::size_t id = clusters.size();
                clusters.push_back({c, lam, 0.0, {}});
                clusters[c].children.push_back(id);
                clusters[c].stability += (lam - clusters[c].birth) * static_cast<double>(tree[x].size);
                created.emplace_back(x, id);
            }
            for (auto it = created.rbegin(); it != created.rend(); ++it) work.push_back(*it);
        }
    }

    // Excess of mass, bottom-up (children always have larger ids).
    std::vector<double> best(clusters.size(), 0.0);
    std::vector<char> selected(clusters.size(), 0);
    std::vector<std::vector<std::size_t>> chosen(clusters.size());
    for (std::size_t c = clusters.size(); c-- > 0;) {
        const auto& cl = clusters[c];
        if (cl.children.empty()) {
            best[c] = cl.stability;
            chosen[c] = {c};
            continue;
        }
        double sum = 0.0;
        std::vector<std::size_t> below;
        for (std::size_t ch : cl.children) {
            sum += best[ch];
            below.insert(below.end(), chosen[ch].begin(), chosen[ch].end());
        }
        const double tol = 1e-12 * std::max(std::abs(sum), std::abs(cl.stability));
        if (c == 0 || sum > cl.stability + tol) {
            best[c] = sum;
            chosen[c] = std::move(below);
        } else {
            best[c] = cl.stability;
            chosen[c] = {c};
        }
    }
    for (std::size_t c : chosen[0]) selected[c] = 1;

    // Each point belongs to the nearest selected ancestor of the cluster it left.
    std::vector<long> owner(clusters.size(), -1);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        if (selected[c]) owner[c] = static_cast<long>(c);
        else if (c != 0) owner[c] = owner[clusters[c].parent];
    }
    double root_max = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        if (fell_from[p] == 0) root_max = std::max(root_max, fell_at[p]);

    std::vector<long> raw(n, -1);
    for (std::size_t p = 0; p < n; ++p) {
        long o = owner[fell_from[p]];
        if (o == 0 && fell_at[p] < root_max) o = -1;
        raw[p] = o;
    }

    // Dense ids ordered by smallest member index.
    std::vector<int> dense(clusters.size(), kNoise);
    for (std::size_t p = 0; p < n; ++p) {
        if (raw[p] < 0) continue;
        int& id = dense[raw[p]];
        if (id == kNoise) {
            id = static_cast<int>(out.clusters.size());
            out.clusters.push_back({0, clusters[raw[p]].stability});
        }
        out.labels[p] = id;
        ++out.clusters[id].size;
    }
    return out;
}

ClusterAssignment cluster_kernel(const KernelMatrix& k, const ClusterParams& params, std::size_t* clamped) {
    auto d = kernel_to_distance(k);
    if (clamped) *clamped = d.clamped;
    return hdbscan(mutual_reachability(d.distance, params.min_samples), params.min_cluster_size);
}

std::vector<std::vector<double>> classical_mds(const DenseMatrix& d, int dims) {
    const auto n = static_cast<Eigen::Index>(d.rows);
    std::vector<std::vector<double>> coords(d.rows, std::vector<double>(dims, 0.0));
    if (n == 0) return coords;
    Eigen::MatrixXd sq(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) sq(i, j) = d(i, j) * d(i, j);
    Eigen::MatrixXd centering = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::MatrixXd b = -0.5 * centering * sq * centering;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    // Eigenvalues ascend; take the largest `dims`.
    for (int k = 0; k < dims && k < n; ++k) {
        Eigen::Index col = n - 1 - k;
        double lam = std::max(0.0, eig.eigenvalues()(col));
        Eigen::VectorXd v = eig.eigenvectors().col(col);
        // Fix the sign so the largest-magnitude entry is positive.
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        for (Eigen::Index i = 0; i < n; ++i) coords[i][k] = v(i) * std::sqrt(lam);
    }
    return coords;
}

void write_assignment(std::ostream& out, const ClusterAssignment& a) {
    out << "# bpg\tcluster\tsize\tstability\n";
    for (std::size_t p = 0; p < a.labels.size(); ++p) {
        out << p << '\t';
        if (a.labels[p] == kNoise) out << "noise\t1\t0\n";
        else
            out << a.labels[p] << '\t' << a.clusters[a.labels[p]].size << '\t'
                << text::format_double(a.clusters[a.labels[p]].stability) << '\n';
    }
}

}  // namespace bpghunt
