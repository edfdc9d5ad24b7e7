#include "bpghunt/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <tuple>
#include <type_traits>

#include "bpghunt/assignment.hpp"
#include "bpghunt/text.hpp"

namespace bpghunt {

void KernelParams::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("kernel alpha and beta must be non-negative");
    if (iterations < 1) throw std::invalid_argument("kernel iterations must be at least 1");
}

KernelGraph::KernelGraph(std::vector<EntityKind> kinds, std::vector<std::uint32_t> labels,
                         std::vector<KernelEdge> edges, std::uint64_t dictionary_hash)
    : kinds_(std::move(kinds)), labels_(std::move(labels)), edges_(std::move(edges)), dict_hash_(dictionary_hash) {
    if (kinds_.size() != labels_.size()) throw std::invalid_argument("kinds and labels differ in length");
    auto key = [](const KernelEdge& e) { return std::tie(e.src, e.dst, e.label); };
    std::sort(edges_.begin(), edges_.end(), [&](const KernelEdge& a, const KernelEdge& b) { return key(a) < key(b); });
    edges_.erase(std::unique(edges_.begin(), edges_.end(), [&](const KernelEdge& a, const KernelEdge& b) { return key(a) == key(b); }),
                 edges_.end());
    adj_.resize(kinds_.size());
    pairs_.resize(kinds_.size());
    for (const KernelEdge& e : edges_) {
        if (e.src >= kinds_.size() || e.dst >= kinds_.size()) throw std::invalid_argument("edge endpoint out of range");
        adj_[e.src].emplace_back(e.label, e.dst);
        pairs_[e.src].emplace_back(e.label, labels_[e.dst]);
    }
    for (auto& a : adj_) std::sort(a.begin(), a.end());
    for (auto& p : pairs_) std::sort(p.begin(), p.end());
}

int compare(const KernelGraph& a, const KernelGraph& b) {
    auto three_way = [](const auto& x, const auto& y) { return x < y ? -1 : (y < x ? 1 : 0); };
    if (int c = three_way(a.size(), b.size())) return c;
    if (int c = three_way(a.kinds_, b.kinds_)) return c;
    if (int c = three_way(a.labels_, b.labels_)) return c;
    if (int c = three_way(a.edges_.size(), b.edges_.size())) return c;
    for (std::size_t i = 0; i < a.edges_.size(); ++i) {
        const auto& x = a.edges_[i];
        const auto& y = b.edges_[i];
        if (int c = three_way(std::tie(x.src, x.dst, x.label), std::tie(y.src, y.dst, y.label))) return c;
    }
    return 0;
}

KernelGraph make_kernel_graph(const BehaviorGraph& bpg, std::uint64_t dictionary_hash) {
    std::vector<EntityKind> kinds;
    std::vector<std::uint32_t> labels;
    for (const auto& n : bpg.nodes) {
        if (n.label_id == kNoLabel) throw std::invalid_argument("BPG node without interned label");
        kinds.push_back(n.entity.kind);
        labels.push_back(n.label_id);
    }
    std::vector<KernelEdge> edges;
    for (const auto& e : bpg.edges) {
        if (e.label_id == kNoLabel) throw std::invalid_argument("BPG edge without interned label");
        edges.push_back({e.src, e.dst, e.label_id});
    }
    return KernelGraph(std::move(kinds), std::move(labels), std::move(edges), dictionary_hash);
}

std::uint32_t base_kernel(const KernelGraph& g1, std::size_t v1, const KernelGraph& g2, std::size_t v2) {
    std::uint32_t count = g1.label(v1) == g2.label(v2) ? 1 : 0;
    auto a = g1.multiset(v1);
    auto b = g2.multiset(v2);
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

DenseMatrix base_table(const KernelGraph& g1, const KernelGraph& g2) {
    DenseMatrix k(g1.size(), g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i)
        for (std::size_t j = 0; j < g2.size(); ++j) k(i, j) = base_kernel(g1, i, g2, j);
    return k;
}

DenseMatrix refine(const KernelGraph& g1, const KernelGraph& g2, const DenseMatrix& k, const KernelParams& params) {
    DenseMatrix next(g1.size(), g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i) {
        auto a = g1.out(i);
        for (std::size_t j = 0; j < g2.size(); ++j) {
            auto b = g2.out(j);
            // Both lists are sorted by edge label; walk matching label groups.
            double sum = 0.0;
            std::size_t x = 0, y = 0;
            while (x < a.size() && y < b.size()) {
                if (a[x].first < b[y].first) {
                    ++x;
                } else if (b[y].first < a[x].first) {
                    ++y;
                } else {
                    const std::uint32_t label = a[x].first;
                    std::size_t x_end = x, y_end = y;
                    while (x_end < a.size() && a[x_end].first == label) ++x_end;
                    while (y_end < b.size() && b[y_end].first == label) ++y_end;
                    for (std::size_t p = x; p < x_end; ++p)
                        for (std::size_t q = y; q < y_end; ++q) sum += k(a[p].second, b[q].second);
                    x = x_end;
                    y = y_end;
                }
            }
            next(i, j) = params.alpha * k(i, j) + params.beta * sum;
        }
    }
    return next;
}

DenseMatrix node_kernel_table(const KernelGraph& g1, const KernelGraph& g2, const KernelParams& params) {
    DenseMatrix k = base_table(g1, g2);
    for (int t = 1; t < params.iterations; ++t) k = refine(g1, g2, k, params);
    return k;
}

namespace {

GraphKernelDetail ordered_detail(const KernelGraph& g1, const KernelGraph& g2, const KernelParams& params) {
    DenseMatrix k = node_kernel_table(g1, g2, params);
    GraphKernelDetail out;
    std::vector<double> values;
    for (int kind = 0; kind < kEntityKindCount; ++kind) {
        std::vector<std::size_t> rows, cols;
        for (std::size_t i = 0; i < g1.size(); ++i)
            if (static_cast<int>(g1.kind(i)) == kind) rows.push_back(i);
        for (std::size_t j = 0; j < g2.size(); ++j)
            if (static_cast<int>(g2.kind(j)) == kind) cols.push_back(j);
        if (rows.empty() || cols.empty()) continue;
        DenseMatrix w(rows.size(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) w(i, j) = k(rows[i], cols[j]);
        Assignment a = max_weight_assignment(w);
        for (auto [i, j] : a.pairs) {
            out.matched.emplace_back(rows[i], cols[j]);
            values.push_back(w(i, j));
        }
    }
    std::sort(values.begin(), values.end());
    for (double v : values) out.value += v;
    std::sort(out.matched.begin(), out.matched.end());
    return out;
}

}  // namespace

GraphKernelDetail graph_kernel_detail(const KernelGraph& g1, const KernelGraph& g2, const KernelParams& params) {
    if (g1.dictionary_hash() != g2.dictionary_hash())
        throw DictionaryMismatch("graphs were labeled under different dictionaries (" + text::hex64(g1.dictionary_hash()) +
                                 " vs " + text::hex64(g2.dictionary_hash()) + ")");
    if (compare(g1, g2) <= 0) return ordered_detail(g1, g2, params);
    GraphKernelDetail d = ordered_detail(g2, g1, params);
    for (auto& [a, b] : d.matched) std::swap(a, b);
    std::sort(d.matched.begin(), d.matched.end());
    return d;
}

double graph_kernel(const KernelGraph& g1, const KernelGraph& g2, const KernelParams& params) {
    return graph_kernel_detail(g1, g2, params).value;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
    return pairs;
}

void check_corpus(std::span<const KernelGraph> corpus, const KernelParams& params) {
    params.validate();
    for (const auto& g : corpus)
        if (g.dictionary_hash() != corpus.front().dictionary_hash())
            throw DictionaryMismatch("corpus mixes label dictionaries");
}

}  // namespace

KernelMatrix kernel_matrix(std::span<const KernelGraph> corpus, const KernelParams& params) {
    KernelMatrix k;
    k.n = corpus.size();
    k.values.assign(k.n * k.n, 0.0);
    if (corpus.empty()) return k;
    check_corpus(corpus, params);
    auto pairs = upper_pairs(k.n);
    const auto count = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
        auto [i, j] = pairs[p];
        double v = graph_kernel(corpus[i], corpus[j], params);
        k.values[i * k.n + j] = v;
        k.values[j * k.n + i] = v;
    }
    return k;
}

KernelMatrix kernel_matrix_serial(std::span<const KernelGraph> corpus, const KernelParams& params) {
    KernelMatrix k;
    k.n = corpus.size();
    k.values.assign(k.n * k.n, 0.0);
    if (corpus.empty()) return k;
    check_corpus(corpus, params);
    for (auto [i, j] : upper_pairs(k.n)) {
        double v = graph_kernel(corpus[i], corpus[j], params);
        k.values[i * k.n + j] = v;
        k.values[j * k.n + i] = v;
    }
    return k;
}

namespace {

constexpr char kMagic[8] = {'B', 'P', 'G', 'K', 'M', 'A', 'T', '1'};
constexpr std::uint32_t kMatrixVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) bits = std::bit_cast<std::uint64_t>(value);
    else bits = static_cast<std::uint64_t>(value);
    char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw std::runtime_error("kernel matrix: truncated file");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    if constexpr (std::is_same_v<T, double>) return std::bit_cast<double>(bits);
    else return static_cast<T>(bits);
}

}  // namespace

void write_kernel_matrix(std::ostream& out, const KernelMatrix& k) {
    out.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kMatrixVersion);
    put_le<std::uint64_t>(out, k.n);
    put_le<std::uint64_t>(out, k.manifest_hash);
    for (double v : k.values) put_le<double>(out, v);
}

KernelMatrix read_kernel_matrix(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw std::runtime_error("kernel matrix: bad magic");
    if (get_le<std::uint32_t>(in) != kMatrixVersion) throw std::runtime_error("kernel matrix: unsupported version");
    KernelMatrix k;
    k.n = get_le<std::uint64_t>(in);
    k.manifest_hash = get_le<std::uint64_t>(in);
    if (k.n > (1u << 20)) throw std::runtime_error("kernel matrix: implausible size");
    k.values.resize(k.n * k.n);
    for (double& v : k.values) v = get_le<double>(in);
    if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("kernel matrix: trailing bytes");
    return k;
}

void write_kernel_csv(std::ostream& out, const KernelMatrix& k) {
    for (std::size_t i = 0; i < k.n; ++i) {
        for (std::size_t j = 0; j < k.n; ++j) {
            if (j) out << ',';
            out << text::format_double(k(i, j));
        }
        out << '\n';
    }
}

}  // namespace bpghunt
