#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "bpghunt/cluster.hpp"
#include "bpghunt/graph.hpp"
#include "bpghunt/kernel.hpp"
#include "bpghunt/scenario.hpp"
#include "bpghunt/threat.hpp"

namespace bpghunt {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything a pipeline run depends on. Serialized as `key = value` lines;
/// see docs/FORMATS.md for the key list.
struct PipelineConfig {
    // artifacts
    std::filesystem::path log_file = "bpghunt-work/audit.log";
    std::filesystem::path truth_file = "bpghunt-work/truth.tsv";
    std::filesystem::path store_dir = "bpghunt-work/store";
    std::filesystem::path hunt_dir = "bpghunt-work/hunt";
    std::filesystem::path report_dir = "bpghunt-work/report";

    // inputs; empty taxonomy/sensitivity paths select the built-in tables
    std::filesystem::path templates;
    std::filesystem::path taxonomy;
    std::filesystem::path sensitivity;
    std::filesystem::path deny_list;
    std::filesystem::path allow_list;

    std::uint64_t seed = 42;
    InterleavePolicy interleave;
    LongRunPolicy long_run;
    KernelParams kernel;
    ClusterParams cluster;
    ScoringConfig scoring;
    int threads = 0;  // 0: OpenMP default

    /// Defaults with the shipped data directory filled in.
    static PipelineConfig with_data_dir(const std::filesystem::path& data_dir);

    void set(const std::string& key, const std::string& value);  // throws ConfigError
    void validate() const;                                       // throws ConfigError
    friend bool operator==(const PipelineConfig&, const PipelineConfig&);
};

PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
void write_config(std::ostream& out, const PipelineConfig& config);

}  // namespace bpghunt
