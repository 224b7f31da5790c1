#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factgraph/digest.hpp"
#include "factgraph/text.hpp"

using namespace factgraph;

TEST_CASE("tokenize lowercases and splits on non-alphanumeric runs") {
    CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
    CHECK(tokenize("BM25-scored (k1=0.9)") ==
          std::vector<std::string>{"bm25", "scored", "k1", "0", "9"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("   \t\n ") == std::vector<std::string>{});
    CHECK(tokenize("one") == std::vector<std::string>{"one"});
}

TEST_CASE("tokenize treats every non-alnum byte as a separator") {
    CHECK(tokenize("don't stop") == std::vector<std::string>{"don", "t", "stop"});
    CHECK(tokenize("a_b") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("case mapping helpers") {
    CHECK(to_lower("MiXeD 123") == "mixed 123");
    CHECK(to_upper("MiXeD 123") == "MIXED 123");
    CHECK(trim("  padded \n") == "padded");
    CHECK(trim("") == "");
    CHECK(trim(" \t ") == "");
}

TEST_CASE("normalize_ws collapses runs and lowercases") {
    CHECK(normalize_ws("  The \t quick\n\nfox ") == "the quick fox");
    CHECK(normalize_ws("") == "");
    CHECK(normalize_ws("one") == "one");
}

TEST_CASE("clean_line_output strips one pair of symmetric quotes") {
    CHECK(clean_line_output("\"quoted query\"") == "quoted query");
    CHECK(clean_line_output("'single'") == "single");
    CHECK(clean_line_output("  \" padded \"  ") == "padded");
    CHECK(clean_line_output("\"mismatched'") == "\"mismatched'");
    CHECK(clean_line_output("plain") == "plain");
    CHECK(clean_line_output("\"\"") == "");
}

TEST_CASE("extract_first_json finds the first balanced value that parses") {
    SUBCASE("object inside prose") {
        auto got = extract_first_json("Sure! Here you go: {\"a\": 1} hope it helps", '{');
        REQUIRE(got);
        CHECK(*got == "{\"a\": 1}");
    }
    SUBCASE("array inside a code fence") {
        auto got = extract_first_json("```json\n[1, 2, 3]\n```", '[');
        REQUIRE(got);
        CHECK(*got == "[1, 2, 3]");
    }
    SUBCASE("skips candidates that do not parse") {
        auto got = extract_first_json("{not json} then {\"ok\": true}", '{');
        REQUIRE(got);
        CHECK(*got == "{\"ok\": true}");
    }
    SUBCASE("brackets inside string literals do not confuse matching") {
        auto got = extract_first_json(R"(noise [ {"s": "a ] b \" ["} ] tail)", '[');
        REQUIRE(got);
        CHECK(*got == R"([ {"s": "a ] b \" ["} ])");
    }
    SUBCASE("unbalanced input yields nothing") {
        CHECK_FALSE(extract_first_json("{\"a\": ", '{'));
        CHECK_FALSE(extract_first_json("no json here", '['));
        CHECK_FALSE(extract_first_json("", '{'));
    }
    SUBCASE("nested value of the other bracket kind") {
        auto got = extract_first_json("{\"items\": [1, 2]}", '[');
        REQUIRE(got);
        CHECK(*got == "[1, 2]");
    }
}

TEST_CASE("sha256_hex matches published test vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abc") == sha256_hex("abc"));
    CHECK(sha256_hex("abd") != sha256_hex("abc"));
}
