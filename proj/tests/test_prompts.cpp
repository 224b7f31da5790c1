#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factgraph/prompts.hpp"
#include "support/builders.hpp"

#include <algorithm>

using namespace factgraph;

TEST_CASE("render_template substitutes known keys and keeps the rest") {
    CHECK(render_template("verify {claim} now", {{"claim", "X"}}) == "verify X now");
    CHECK(render_template("{a}{b}{a}", {{"a", "1"}, {"b", "2"}}) == "121");
    // unknown keys and JSON braces pass through untouched
    CHECK(render_template("respond with {\"label\": \"SUPPORTS\"}", {}) ==
          "respond with {\"label\": \"SUPPORTS\"}");
    CHECK(render_template("{missing} and {present}", {{"present", "p"}}) == "{missing} and p");
    CHECK(render_template("unbalanced { brace", {{"x", "y"}}) == "unbalanced { brace");
    CHECK(render_template("", {{"x", "y"}}).empty());
    // replacement values are inserted verbatim, not re-expanded
    CHECK(render_template("{a}", {{"a", "{b}"}, {"b", "2"}}) == "{b}");
}

TEST_CASE("builtin store carries every prompt role") {
    TemplateStore store = TemplateStore::builtin();
    const std::vector<std::string> expected = {"judge",        "judge_forced", "plan_initial",
                                               "plan_subtree", "refine",       "search_query",
                                               "think"};
    CHECK(store.names() == expected);
    for (const auto& name : expected) {
        CHECK_FALSE(store.raw(name).empty());
    }
    CHECK_THROWS_AS(store.raw("nonexistent"), Error);
}

TEST_CASE("builtin templates match the files shipped under templates/") {
    const std::string root = factgraph::testing::require_env("FACTGRAPH_SOURCE_DIR");
    TemplateStore store = TemplateStore::builtin();
    for (const auto& name : store.names()) {
        const std::string on_disk =
            factgraph::testing::read_file(root + "/templates/" + name + ".txt");
        CHECK_MESSAGE(store.raw(name) == on_disk, name);
    }
}

TEST_CASE("from_dir overrides builtins and adds new names") {
    factgraph::testing::TempDir dir;
    factgraph::testing::write_file(dir.path() / "think.txt", "custom think {rendered_input}");
    factgraph::testing::write_file(dir.path() / "extra.txt", "extra body");
    factgraph::testing::write_file(dir.path() / "notes.md", "ignored, wrong extension");

    TemplateStore store = TemplateStore::from_dir(dir.str());
    CHECK(store.raw("think") == "custom think {rendered_input}");
    CHECK(store.raw("extra") == "extra body");
    // untouched builtins survive
    CHECK(store.raw("judge") == TemplateStore::builtin().raw("judge"));
    auto names = store.names();
    CHECK(std::find(names.begin(), names.end(), "notes") == names.end());

    CHECK_THROWS_AS(TemplateStore::from_dir((dir.path() / "missing").string()), Error);
}

TEST_CASE("render pipes the store through render_template") {
    factgraph::testing::TempDir dir;
    factgraph::testing::write_file(dir.path() / "greet.txt", "hello {name}");
    TemplateStore store = TemplateStore::from_dir(dir.str());
    CHECK(store.render("greet", {{"name", "world"}}) == "hello world");
}
