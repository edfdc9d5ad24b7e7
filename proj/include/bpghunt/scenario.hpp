#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpghunt/audit.hpp"

namespace bpghunt {

class InvalidTemplate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TruthTag : std::uint8_t { Benign, Attack };
std::string_view to_string(TruthTag tag);

/// Attribute values may contain placeholders: {i} is unique per instance,
/// {n} is unique per materialization, {name} picks the instance's value of
/// template variable `name`. A process without an "id" gets a fresh pid and
/// one without a "name" takes the basename of its path.
struct EntitySpec {
    EntityKind kind = EntityKind::File;
    std::map<std::string, std::string> attributes;
    std::string shared;    // refers to TemplateSet::shared; attributes unused then
    bool per_use = false;  // re-materialized on every step that names it
};

struct StepSpec {
    std::string subject;
    RelationKind relation = RelationKind::Read;
    std::string object;
    std::int64_t delay_min_us = 0;  // after the previous step (or the instance start)
    std::int64_t delay_max_us = 0;
    std::uint32_t repeat_min = 1;
    std::uint32_t repeat_max = 1;
};

struct ScenarioTemplate {
    std::string name;
    TruthTag tag = TruthTag::Benign;
    std::size_t count = 1;
    std::string host;
    std::map<std::string, std::vector<std::string>> vars;
    std::map<std::string, EntitySpec> entities;
    std::vector<StepSpec> steps;
};

struct SharedEntity {
    std::string host;
    EntitySpec entity;
};

struct TemplateSet {
    std::map<std::string, SharedEntity> shared;
    std::vector<ScenarioTemplate> templates;

    ScenarioTemplate& find(const std::string& name);  // throws std::out_of_range
};

/// JSON template format, see docs/FORMATS.md. Throws InvalidTemplate.
TemplateSet parse_templates(std::istream& in);
TemplateSet load_templates(const std::filesystem::path& path);
void validate_templates(const TemplateSet& set);

struct InterleavePolicy {
    std::int64_t start_us = 1'700'000'000'000'000;
    std::int64_t gap_min_us = 20'000'000;  // between consecutive instance starts
    std::int64_t gap_max_us = 60'000'000;
    bool shuffle = true;
};

struct TruthRow {
    std::size_t instance = 0;
    std::string template_name;
    TruthTag tag = TruthTag::Benign;
};

struct GeneratedLog {
    std::vector<LogRecord> records;  // time ordered
    std::vector<TruthRow> truth;     // parallel to records
    std::size_t instances = 0;
};

/// Deterministic in (templates, seed, policy). Instances are laid out one
/// after another with random gaps; their events interleave where chains
/// overlap, and shared processes serve every instance that names them.
GeneratedLog generate(const TemplateSet& templates, std::uint64_t seed, const InterleavePolicy& policy = {});

void write_log(std::ostream& out, const GeneratedLog& log);
void write_truth(std::ostream& out, const GeneratedLog& log);
std::vector<TruthRow> read_truth(std::istream& in);  // throws std::runtime_error

}  // namespace bpghunt
