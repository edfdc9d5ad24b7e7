#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bpghunt/audit.hpp"

namespace bpghunt {

/// Ordered (glob pattern -> class) rules applied to the lowercased file path.
/// First match wins; anything unmatched falls back to "file_other".
class FileTypeTaxonomy {
public:
    static constexpr std::string_view kFallback = "file_other";

    FileTypeTaxonomy() = default;
    explicit FileTypeTaxonomy(std::vector<std::pair<std::string, std::string>> rules) : rules_(std::move(rules)) {}

    static FileTypeTaxonomy defaults();

    /// One rule per line: "<pattern> <class>"; '#' starts a comment. Rules are
    /// tried in file order. Throws std::runtime_error on malformed lines.
    static FileTypeTaxonomy parse(std::istream& in);

    /// Returns the class, or nullptr-equivalent empty view when unmatched.
    std::string_view match(std::string_view path) const;

    const std::vector<std::pair<std::string, std::string>>& rules() const { return rules_; }

private:
    std::vector<std::pair<std::string, std::string>> rules_;
};

struct LabelStats {
    std::size_t fallback_files = 0;
};

/// Process: lowercased image basename. File: taxonomy class (path ignored).
/// IP: "address:port" (":0" when no port). User: user name.
std::string node_label(const EntityRef& entity, const FileTypeTaxonomy& taxonomy, LabelStats* stats = nullptr);

std::string_view edge_label(RelationKind relation);

/// Bijection between label text and dense ids. Ids follow lexicographic order
/// of the distinct label set, so the mapping depends only on which labels
/// occur, never on encounter order.
class LabelDictionary {
public:
    LabelDictionary() = default;
    explicit LabelDictionary(std::vector<std::string> sorted_unique);

    std::size_t size() const { return texts_.size(); }
    bool empty() const { return texts_.empty(); }
    std::uint32_t id(std::string_view text) const;  // throws std::out_of_range
    bool contains(std::string_view text) const;
    const std::string& text(std::uint32_t id) const { return texts_.at(id); }
    const std::vector<std::string>& texts() const { return texts_; }
    std::uint64_t hash() const { return hash_; }

    void save(std::ostream& out) const;
    static LabelDictionary load(std::istream& in);

    friend bool operator==(const LabelDictionary& a, const LabelDictionary& b) { return a.texts_ == b.texts_; }

private:
    std::vector<std::string> texts_;
    std::unordered_map<std::string, std::uint32_t> ids_;
    std::uint64_t hash_ = 0;
};

}  // namespace bpghunt
