#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bpghunt {

enum class EntityKind : std::uint8_t { Process, File, IP, User };
inline constexpr int kEntityKindCount = 4;

// ExecuteFile (Process -> File) and ExecuteProcess (User -> Process) are kept
// apart so every edge label is unambiguous.
enum class RelationKind : std::uint8_t { Read, Write, ExecuteFile, Connect, Create, Logon, ExecuteProcess };
inline constexpr int kRelationKindCount = 7;

std::string_view to_string(EntityKind kind);
std::string_view to_string(RelationKind rel);
std::optional<EntityKind> parse_entity_kind(std::string_view s);
std::optional<RelationKind> parse_relation_kind(std::string_view s);

/// The legal (subject, object, relation) triples:
///   Process -> File    : Read, Write, ExecuteFile
///   Process -> IP      : Connect
///   Process -> Process : Create
///   IP      -> User    : Logon
///   User    -> Process : ExecuteProcess
bool is_legal(EntityKind subject, EntityKind object, RelationKind rel);

/// Object kind implied by a relation (every relation has exactly one).
EntityKind object_kind_of(RelationKind rel);
EntityKind subject_kind_of(RelationKind rel);

using Attributes = std::map<std::string, std::string>;

/// A system entity as it appears in an audit record.
///
/// Attribute keys in use: Process{id, name, path, start, elevated},
/// File{path}, IP{address, port, domain}, User{name, privilege}. Unknown
/// keys are carried through unchanged.
struct EntityRef {
    EntityKind kind = EntityKind::File;
    Attributes attributes;

    const std::string* attr(std::string_view key) const;
    std::string attr_or(std::string_view key, std::string_view fallback) const;

    friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

struct LogRecord {
    std::int64_t timestamp_us = 0;
    std::string host;
    EntityRef subject;
    EntityRef object;
    RelationKind relation = RelationKind::Read;

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

enum class IngestErrorCode { MalformedRecord, SchemaViolation, BadTimestamp, IoFailure };
std::string_view to_string(IngestErrorCode code);

class IngestError : public std::runtime_error {
public:
    IngestError(IngestErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    IngestErrorCode code() const { return code_; }

private:
    IngestErrorCode code_;
};

/// Checks kind-required attributes, key syntax and address syntax.
/// Throws IngestError(SchemaViolation).
void validate_entity(const EntityRef& entity);

/// Throws IngestError on invalid records; the message names the problem.
void validate_record(const LogRecord& record);

LogRecord parse_record(std::string_view line);
std::string serialize_record(const LogRecord& record);

struct Reject {
    std::size_t line_number = 0;  // 1-based
    IngestErrorCode code = IngestErrorCode::MalformedRecord;
    std::string message;
};

struct LoadResult {
    std::vector<LogRecord> records;
    std::vector<Reject> rejects;
};

/// Reads every line; accepted records keep file order, every other line is
/// reported in `rejects`. Throws IngestError(IoFailure) on stream errors.
LoadResult load_stream(std::istream& in);

void write_reject_report(std::ostream& out, const std::vector<Reject>& rejects);

/// Stable identity key used to merge references to the same entity. Process
/// identity includes host, pid, image path and start time so PID reuse does
/// not merge distinct processes.
std::string entity_identity(const std::string& host, const EntityRef& entity);

/// Table-row form used by persisted artifacts: "kind=K<TAB>key=value...".
std::string serialize_entity_fields(const EntityRef& entity);
/// Inverse of serialize_entity_fields over pre-split fields; throws
/// std::runtime_error on malformed input.
EntityRef parse_entity_fields(std::span<const std::string_view> fields);

}  // namespace bpghunt
