#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bpghunt::text {

// Percent-escapes exactly the bytes that would break a tab-separated line:
// '%', TAB, LF and CR. Everything else passes through untouched.
std::string escape(std::string_view raw);

// Inverse of escape(). Returns nullopt on any escape escape() would not have
// produced (so accepted input is always in canonical form).
std::optional<std::string> unescape(std::string_view escaped);

std::vector<std::string_view> split(std::string_view s, char sep);

std::string lower(std::string_view s);

// Case-sensitive glob with '*' (any run) and '?' (one byte).
bool glob_match(std::string_view pattern, std::string_view s);

// Shortest representation that parses back to the same double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);

// Strict unsigned decimal: digits only, no sign, no leading zeros.
std::optional<std::uint64_t> parse_canonical_uint(std::string_view s);

std::string_view trim(std::string_view s);

/// 64-bit FNV-1a, used for content hashes embedded in persisted artifacts.
class Fnv1a {
public:
    void update(std::string_view bytes);
    void update_u64(std::uint64_t v);
    std::uint64_t digest() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

}  // namespace bpghunt::text
