#include "bpghunt/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "bpghunt/graph.hpp"
#include "bpghunt/partition.hpp"

namespace bpghunt {

void StageClock::start(std::string stage) {
    if (running_) stop();
    timings_.push_back({std::move(stage), 0.0});
    began_ = std::chrono::steady_clock::now();
    running_ = true;
}

void StageClock::stop() {
    if (!running_) return;
    timings_.back().seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - began_).count();
    running_ = false;
}

void write_timings(std::ostream& out, std::span<const StageTiming> timings) {
    double total = 0;
    for (const auto& t : timings) {
        out << "  " << std::left << std::setw(22) << t.stage << std::right << std::fixed << std::setprecision(3)
            << t.seconds << " s\n";
        total += t.seconds;
    }
    out << "  " << std::left << std::setw(22) << "total" << std::right << total << " s\n";
    out.unsetf(std::ios::floatfield);
}

BuildResult build_corpus(std::span<const LogRecord> records, const FileTypeTaxonomy& taxonomy, const LongRunPolicy& policy) {
    BuildResult r;
    StageClock clock;
    r.records = records.size();

    clock.start("provenance graph");
    ProvenanceGraph graph = build_graph(records);
    r.graph_nodes = graph.node_count();

    clock.start("partitioning");
    auto long_running = identify_long_running(graph, policy);
    r.long_running = long_running.size();
    auto parts = partition_processes(graph, long_running);

    clock.start("BPG extraction");
    r.store.corpus = extract_bpgs(graph, parts);

    clock.start("labeling");
    attach_labels(r.store.corpus, taxonomy, &r.label_stats);
    r.store.dictionary = intern_labels(r.store.corpus);
    r.store.manifest_hash = compute_manifest_hash(r.store);
    clock.stop();
    r.timings = clock.timings();
    return r;
}

std::vector<KernelGraph> kernel_graphs(const BpgStore& store) {
    std::vector<KernelGraph> out;
    out.reserve(store.corpus.size());
    for (const auto& g : store.corpus) out.push_back(make_kernel_graph(g, store.dictionary.hash()));
    return out;
}

ClusterAssignment all_noise(std::size_t n) {
    ClusterAssignment a;
    a.labels.assign(n, kNoise);
    return a;
}

HuntResult hunt_corpus(const BpgStore& store, const ReputationDB& reputation, const SensitivityConfig& sensitivity,
                       const PipelineConfig& config) {
    HuntResult r;
    StageClock clock;

    clock.start("kernel matrix");
    auto graphs = kernel_graphs(store);
    r.kernel = kernel_matrix(graphs, config.kernel);
    r.kernel.manifest_hash = store.manifest_hash;

    clock.start("clustering");
    try {
        r.assignment = cluster_kernel(r.kernel, config.cluster, &r.clamped);
    } catch (const TooFewPoints&) {
        r.assignment = all_noise(store.corpus.size());
        r.too_few_points = true;
    }

    clock.start("threat assessment");
    ReputationDB rep = reputation;
    rep.count_frequencies(store.corpus);
    r.report = assess(store.corpus, r.assignment, rep, sensitivity, config.scoring);
    r.report.corpus_hash = store.manifest_hash;
    clock.stop();
    r.timings = clock.timings();
    return r;
}

FileTypeTaxonomy load_taxonomy(const std::filesystem::path& path) {
    if (path.empty()) return FileTypeTaxonomy::defaults();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open taxonomy " + path.string());
    try {
        return FileTypeTaxonomy::parse(in);
    } catch (const std::runtime_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

SensitivityConfig load_sensitivity(const std::filesystem::path& path) {
    if (path.empty()) return SensitivityConfig::defaults();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sensitivity config " + path.string());
    try {
        return SensitivityConfig::parse(in);
    } catch (const std::runtime_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace bpghunt
