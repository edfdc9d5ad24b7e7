#pragma once

#include <chrono>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bpghunt/bpg.hpp"
#include "bpghunt/cluster.hpp"
#include "bpghunt/config.hpp"
#include "bpghunt/kernel.hpp"
#include "bpghunt/threat.hpp"

namespace bpghunt {

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

class StageClock {
public:
    void start(std::string stage);
    void stop();
    const std::vector<StageTiming>& timings() const { return timings_; }

private:
    std::vector<StageTiming> timings_;
    std::chrono::steady_clock::time_point began_;
    bool running_ = false;
};

void write_timings(std::ostream& out, std::span<const StageTiming> timings);

struct BuildResult {
    BpgStore store;
    std::size_t records = 0;
    std::size_t graph_nodes = 0;
    std::size_t long_running = 0;
    LabelStats label_stats;
    std::vector<StageTiming> timings;
};

/// Records to labeled behavior graphs: provenance graph, long-running
/// process partitioning, BPG extraction, labeling.
BuildResult build_corpus(std::span<const LogRecord> records, const FileTypeTaxonomy& taxonomy, const LongRunPolicy& policy);

struct HuntResult {
    KernelMatrix kernel;
    ClusterAssignment assignment;
    ThreatReport report;
    std::size_t clamped = 0;     // negative squared distances clamped to zero
    bool too_few_points = false;  // corpus too small to cluster: everything is noise
    std::vector<StageTiming> timings;
};

std::vector<KernelGraph> kernel_graphs(const BpgStore& store);

/// Kernel matrix, clustering and threat assessment of a stored corpus.
HuntResult hunt_corpus(const BpgStore& store, const ReputationDB& reputation, const SensitivityConfig& sensitivity,
                       const PipelineConfig& config);

/// Assignment used when the corpus is too small to cluster.
ClusterAssignment all_noise(std::size_t n);

FileTypeTaxonomy load_taxonomy(const std::filesystem::path& path);        // empty path: defaults
SensitivityConfig load_sensitivity(const std::filesystem::path& path);    // empty path: defaults

}  // namespace bpghunt
