#include "doctest.h"

#include "bpghunt/text.hpp"

using namespace bpghunt::text;

TEST_CASE("escape covers only the separator bytes and percent") {
    CHECK(escape("a%b\tc\nd\re f") == "a%25b%09c%0Ad%0De f");
    CHECK(*unescape("a%25b%09c%0Ad%0De f") == "a%b\tc\nd\re f");
    CHECK(*unescape(escape("x%09y")) == "x%09y");
}

TEST_CASE("unescape rejects non-canonical forms") {
    CHECK_FALSE(unescape("%0a").has_value());
    CHECK_FALSE(unescape("%41").has_value());
    CHECK_FALSE(unescape("%2").has_value());
    CHECK_FALSE(unescape("%").has_value());
    CHECK(unescape("plain") == std::optional<std::string>("plain"));
}

TEST_CASE("glob matching") {
    CHECK(glob_match("*.doc", "d:\\download\\report.doc"));
    CHECK_FALSE(glob_match("*.doc", "report.docx"));
    CHECK(glob_match("hklm\\*", "hklm\\sam\\sam"));
    CHECK(glob_match("a?c", "abc"));
    CHECK(glob_match("*", ""));
    CHECK_FALSE(glob_match("?", ""));
}

TEST_CASE("canonical unsigned integers") {
    CHECK(parse_canonical_uint("0") == std::optional<std::uint64_t>(0));
    CHECK(parse_canonical_uint("120") == std::optional<std::uint64_t>(120));
    CHECK_FALSE(parse_canonical_uint("012").has_value());
    CHECK_FALSE(parse_canonical_uint("-5").has_value());
    CHECK_FALSE(parse_canonical_uint("").has_value());
    CHECK_FALSE(parse_canonical_uint("99999999999999999999999").has_value());
}

TEST_CASE("doubles round-trip through the shortest form") {
    for (double v : {0.0, 1.0 / 3.0, 1e-300, 6.0, 3600.5}) CHECK(parse_double(format_double(v)) == v);
}
