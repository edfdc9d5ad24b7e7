#include "bpghunt/audit.hpp"

#include <arpa/inet.h>

#include <array>
#include <istream>
#include <ostream>

#include "bpghunt/text.hpp"

namespace bpghunt {

namespace {

constexpr std::array<std::string_view, kEntityKindCount> kKindNames = {"Process", "File", "IP", "User"};
constexpr std::array<std::string_view, kRelationKindCount> kRelNames = {
    "Read", "Write", "ExecuteFile", "Connect", "Create", "Logon", "ExecuteProcess"};

bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    for (char c : key) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

[[noreturn]] void fail(IngestErrorCode code, const std::string& msg) { throw IngestError(code, msg); }

bool valid_address(const std::string& address) {
    unsigned char buf[16];
    return inet_pton(AF_INET, address.c_str(), buf) == 1 || inet_pton(AF_INET6, address.c_str(), buf) == 1;
}

struct Field {
    std::string_view key;
    std::string value;
};

}  // namespace

std::string_view to_string(EntityKind kind) { return kKindNames[static_cast<int>(kind)]; }
std::string_view to_string(RelationKind rel) { return kRelNames[static_cast<int>(rel)]; }

std::optional<EntityKind> parse_entity_kind(std::string_view s) {
    for (int i = 0; i < kEntityKindCount; ++i)
        if (kKindNames[i] == s) return static_cast<EntityKind>(i);
    return std::nullopt;
}

std::optional<RelationKind> parse_relation_kind(std::string_view s) {
    for (int i = 0; i < kRelationKindCount; ++i)
        if (kRelNames[i] == s) return static_cast<RelationKind>(i);
    return std::nullopt;
}

EntityKind subject_kind_of(RelationKind rel) {
    switch (rel) {
        case RelationKind::Logon: return EntityKind::IP;
        case RelationKind::ExecuteProcess: return EntityKind::User;
        default: return EntityKind::Process;
    }
}

EntityKind object_kind_of(RelationKind rel) {
    switch (rel) {
        case RelationKind::Read:
        case RelationKind::Write:
        case RelationKind::ExecuteFile: return EntityKind::File;
        case RelationKind::Connect: return EntityKind::IP;
        case RelationKind::Logon: return EntityKind::User;
        case RelationKind::Create:
        case RelationKind::ExecuteProcess: return EntityKind::Process;
    }
    return EntityKind::File;
}

bool is_legal(EntityKind subject, EntityKind object, RelationKind rel) {
    return subject == subject_kind_of(rel) && object == object_kind_of(rel);
}

const std::string* EntityRef::attr(std::string_view key) const {
    auto it = attributes.find(std::string(key));
    return it == attributes.end() ? nullptr : &it->second;
}

std::string EntityRef::attr_or(std::string_view key, std::string_view fallback) const {
    const std::string* v = attr(key);
    return v ? *v : std::string(fallback);
}

std::string_view to_string(IngestErrorCode code) {
    switch (code) {
        case IngestErrorCode::MalformedRecord: return "MalformedRecord";
        case IngestErrorCode::SchemaViolation: return "SchemaViolation";
        case IngestErrorCode::BadTimestamp: return "BadTimestamp";
        case IngestErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

void validate_entity(const EntityRef& entity) {
    for (const auto& [key, value] : entity.attributes) {
        if (!valid_key(key)) fail(IngestErrorCode::SchemaViolation, "invalid attribute key '" + key + "'");
    }
    auto require = [&](std::string_view key) {
        const std::string* v = entity.attr(key);
        if (!v || v->empty())
            fail(IngestErrorCode::SchemaViolation,
                 std::string(to_string(entity.kind)) + " entity requires attribute '" + std::string(key) + "'");
    };
    switch (entity.kind) {
        case EntityKind::Process:
            require("id");
            require("name");
            break;
        case EntityKind::File: require("path"); break;
        case EntityKind::IP: {
            require("address");
            if (!valid_address(*entity.attr("address")))
                fail(IngestErrorCode::SchemaViolation, "address '" + *entity.attr("address") + "' is not IPv4/IPv6");
            if (const std::string* port = entity.attr("port")) {
                auto p = text::parse_canonical_uint(*port);
                if (!p || *p > 65535) fail(IngestErrorCode::SchemaViolation, "port '" + *port + "' out of range");
            }
            break;
        }
        case EntityKind::User: require("name"); break;
    }
}

void validate_record(const LogRecord& record) {
    if (record.timestamp_us < 0) fail(IngestErrorCode::BadTimestamp, "negative timestamp");
    if (record.host.empty()) fail(IngestErrorCode::MalformedRecord, "empty host");
    if (!is_legal(record.subject.kind, record.object.kind, record.relation))
        fail(IngestErrorCode::SchemaViolation, std::string(to_string(record.subject.kind)) + " -" +
                                                   std::string(to_string(record.relation)) + "-> " +
                                                   std::string(to_string(record.object.kind)) + " is not a legal triple");
    validate_entity(record.subject);
    validate_entity(record.object);
}

LogRecord parse_record(std::string_view line) {
    if (line.empty()) fail(IngestErrorCode::MalformedRecord, "empty line");

    std::vector<Field> fields;
    for (std::string_view part : text::split(line, '\t')) {
        auto eq = part.find('=');
        if (eq == std::string_view::npos) fail(IngestErrorCode::MalformedRecord, "field without '='");
        std::string_view key = part.substr(0, eq);
        if (!valid_key(key)) fail(IngestErrorCode::MalformedRecord, "invalid field key '" + std::string(key) + "'");
        auto value = text::unescape(part.substr(eq + 1));
        if (!value) fail(IngestErrorCode::MalformedRecord, "non-canonical escape in field '" + std::string(key) + "'");
        fields.push_back({key, std::move(*value)});
    }

    std::size_t pos = 0;
    auto expect = [&](std::string_view key) -> const std::string& {
        if (pos >= fields.size() || fields[pos].key != key)
            fail(IngestErrorCode::MalformedRecord, "expected field '" + std::string(key) + "'");
        return fields[pos++].value;
    };

    LogRecord rec;
    const std::string& ts = expect("ts");
    auto ts_value = text::parse_canonical_uint(ts);
    if (!ts_value || *ts_value > static_cast<std::uint64_t>(INT64_MAX))
        fail(IngestErrorCode::BadTimestamp, "timestamp '" + ts + "' is not a non-negative integer");
    rec.timestamp_us = static_cast<std::int64_t>(*ts_value);

    rec.host = expect("host");
    if (rec.host.empty()) fail(IngestErrorCode::MalformedRecord, "empty host");

    auto read_entity = [&](std::string_view prefix, EntityRef& entity) {
        const std::string& kind = expect(std::string(prefix) + "kind");
        auto parsed = parse_entity_kind(kind);
        if (!parsed) fail(IngestErrorCode::MalformedRecord, "unknown entity kind '" + kind + "'");
        entity.kind = *parsed;
        std::string last;
        while (pos < fields.size() && fields[pos].key.starts_with(prefix)) {
            std::string attr(fields[pos].key.substr(prefix.size()));
            if (attr.empty() || attr == "kind") fail(IngestErrorCode::MalformedRecord, "invalid attribute name");
            if (!last.empty() && attr <= last)
                fail(IngestErrorCode::MalformedRecord, "attributes must be strictly ascending");
            entity.attributes.emplace(attr, fields[pos].value);
            last = std::move(attr);
            ++pos;
        }
    };
    read_entity("subj_", rec.subject);
    read_entity("obj_", rec.object);

    const std::string& rel = expect("rel");
    auto parsed_rel = parse_relation_kind(rel);
    if (!parsed_rel) fail(IngestErrorCode::MalformedRecord, "unknown relation '" + rel + "'");
    rec.relation = *parsed_rel;
    if (pos != fields.size()) fail(IngestErrorCode::MalformedRecord, "trailing fields after 'rel'");

    validate_record(rec);
    return rec;
}

std::string serialize_record(const LogRecord& record) {
    std::string out;
    out += "ts=" + std::to_string(record.timestamp_us);
    out += "\thost=" + text::escape(record.host);
    auto write_entity = [&](std::string_view prefix, const EntityRef& entity) {
        out += '\t';
        out += prefix;
        out += "kind=";
        out += to_string(entity.kind);
        for (const auto& [key, value] : entity.attributes) {
            out += '\t';
            out += prefix;
            out += key + "=" + text::escape(value);
        }
    };
    write_entity("subj_", record.subject);
    write_entity("obj_", record.object);
    out += "\trel=";
    out += to_string(record.relation);
    return out;
}

LoadResult load_stream(std::istream& in) {
    if (!in) throw IngestError(IngestErrorCode::IoFailure, "input stream not readable");
    LoadResult result;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        try {
            result.records.push_back(parse_record(line));
        } catch (const IngestError& e) {
            result.rejects.push_back({line_number, e.code(), e.what()});
        }
    }
    if (in.bad()) throw IngestError(IngestErrorCode::IoFailure, "read error after line " + std::to_string(line_number));
    return result;
}

void write_reject_report(std::ostream& out, const std::vector<Reject>& rejects) {
    out << "# line\tcode\tmessage\n";
    for (const auto& r : rejects) out << r.line_number << '\t' << to_string(r.code) << '\t' << text::escape(r.message) << '\n';
}

std::string entity_identity(const std::string& host, const EntityRef& entity) {
    std::string key(to_string(entity.kind));
    key += '|';
    switch (entity.kind) {
        case EntityKind::Process:
            key += host + '|' + entity.attr_or("id", "") + '|' + entity.attr_or("path", "") + '|' +
                   entity.attr_or("start", "");
            break;
        case EntityKind::File: key += host + '|' + entity.attr_or("path", ""); break;
        // IP nodes are shared across hosts; that is the only cross-host stitching.
        case EntityKind::IP: key += entity.attr_or("address", "") + '|' + entity.attr_or("port", ""); break;
        case EntityKind::User: key += host + '|' + entity.attr_or("name", ""); break;
    }
    return key;
}

std::string serialize_entity_fields(const EntityRef& entity) {
    std::string out = "kind=";
    out += to_string(entity.kind);
    for (const auto& [k, v] : entity.attributes) out += '\t' + k + '=' + text::escape(v);
    return out;
}

EntityRef parse_entity_fields(std::span<const std::string_view> fields) {
    EntityRef entity;
    if (fields.empty() || !fields[0].starts_with("kind=")) throw std::runtime_error("entity row: missing kind");
    auto kind = parse_entity_kind(fields[0].substr(5));
    if (!kind) throw std::runtime_error("entity row: unknown kind");
    entity.kind = *kind;
    for (std::size_t i = 1; i < fields.size(); ++i) {
        auto eq = fields[i].find('=');
        if (eq == std::string_view::npos) throw std::runtime_error("entity row: attribute without '='");
        auto v = text::unescape(fields[i].substr(eq + 1));
        if (!v) throw std::runtime_error("entity row: bad escape");
        entity.attributes.emplace(std::string(fields[i].substr(0, eq)), std::move(*v));
    }
    return entity;
}

}  // namespace bpghunt
