#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bpghunt/bpg.hpp"
#include "bpghunt/cluster.hpp"

namespace bpghunt {

struct ScoringConfig {
    double weight_ip = 1.0;
    double weight_user = 1.0;
    double weight_sens = 1.0;
    std::size_t threshold_graphs = 3;
    double threshold_score = 3600.0;
    double malicious_ip_score = 2000.0;
    double rare_ip_max = 500.0;
    double privilege_escalation_score = 1500.0;
    std::map<std::string, double> sensitive_class_scores = {
        {"credentials", 1200.0}, {"database", 1000.0}, {"labeled_file", 1000.0}};
    std::set<std::string> privileged_users = {"root", "admin", "administrator", "system"};

    void validate() const;  // throws std::invalid_argument
    std::uint64_t hash() const;
};

class MissingReputationDB : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Offline IP reputation. Entries are "address", "address:port" or a domain
/// name; '#' starts a comment. Frequencies count, per address, how many BPGs
/// of the corpus contact it.
class ReputationDB {
public:
    ReputationDB() = default;

    /// Throws std::invalid_argument when an entry is on both lists.
    ReputationDB(std::set<std::string> deny, std::set<std::string> allow);

    /// Throws MissingReputationDB if the deny-list cannot be opened. An empty
    /// allow path means no allow-list.
    static ReputationDB load(const std::filesystem::path& deny, const std::filesystem::path& allow);
    static std::set<std::string> parse_list(std::istream& in);

    bool is_malicious(const EntityRef& ip) const;
    bool is_allowed(const EntityRef& ip) const;

    void count_frequencies(std::span<const BehaviorGraph> corpus);
    std::size_t frequency(const std::string& address) const;
    std::size_t max_frequency() const { return max_freq_; }

    const std::set<std::string>& deny() const { return deny_; }
    const std::set<std::string>& allow() const { return allow_; }

private:
    bool listed(const std::set<std::string>& list, const EntityRef& ip) const;

    std::set<std::string> deny_;
    std::set<std::string> allow_;
    std::map<std::string, std::size_t> freq_;
    std::size_t max_freq_ = 0;
};

/// Ordered (glob over lowercased file path -> sensitivity class); first match wins.
class SensitivityConfig {
public:
    SensitivityConfig() = default;
    explicit SensitivityConfig(std::vector<std::pair<std::string, std::string>> rules) : rules_(std::move(rules)) {}
    static SensitivityConfig defaults();
    static SensitivityConfig parse(std::istream& in);  // same syntax as the taxonomy file

    /// Empty when the path carries no mark.
    std::string classify(const std::string& path) const;
    const std::vector<std::pair<std::string, std::string>>& rules() const { return rules_; }

private:
    std::vector<std::pair<std::string, std::string>> rules_;
};

/// Every BPG in a cluster of at most threshold_graphs members, plus every
/// noise BPG. Returned ascending.
std::vector<std::uint32_t> flag_abnormal(const ClusterAssignment& assignment, const ScoringConfig& config);

struct EventScore {
    std::size_t edge = 0;  // index into BehaviorGraph::edges
    double f_ip = 0.0;
    double f_user = 0.0;
    double f_sens = 0.0;
};

/// One entry per scoring-relevant event (any component non-zero), in edge order.
std::vector<EventScore> score_components(const BehaviorGraph& bpg, const ReputationDB& reputation,
                                         const SensitivityConfig& sensitivity, const ScoringConfig& config);

struct ThreatBreakdown {
    double score = 0.0;
    double f_ip = 0.0;  // unweighted component sums
    double f_user = 0.0;
    double f_sens = 0.0;
    std::size_t relevant_events = 0;
};

ThreatBreakdown threat_score(std::span<const EventScore> components, const ScoringConfig& config);

struct ThreatEntry {
    std::uint32_t bpg = 0;
    ThreatBreakdown breakdown;
    int cluster = kNoise;
    std::size_t cluster_size = 1;
    bool alarm = false;
};

struct ThreatReport {
    std::vector<ThreatEntry> entries;  // descending score, ties by bpg id
    std::uint64_t corpus_hash = 0;
    std::uint64_t config_hash = 0;
    double threshold_score = 0.0;
    std::size_t threshold_graphs = 0;

    std::size_t alarm_count() const;
};

ThreatReport rank_and_alarm(std::vector<ThreatEntry> entries, const ScoringConfig& config);

/// Scores every flagged BPG in parallel, then ranks.
ThreatReport assess(std::span<const BehaviorGraph> corpus, const ClusterAssignment& assignment,
                    const ReputationDB& reputation, const SensitivityConfig& sensitivity, const ScoringConfig& config);

inline constexpr int kReportFormatVersion = 1;

void write_report(std::ostream& out, const ThreatReport& report);
ThreatReport read_report(std::istream& in);  // throws std::runtime_error
void write_summary(std::ostream& out, const ThreatReport& report, std::size_t corpus_size);

}  // namespace bpghunt
