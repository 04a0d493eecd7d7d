#include <doctest.h>

#include "facetforge/error.hpp"
#include "facetforge/text.hpp"
#include "test_support.hpp"

using namespace facetforge;

TEST_SUITE("text") {

TEST_CASE("lowercase and trim") {
  CHECK(to_lower("Elephant EATS") == "elephant eats");
  CHECK(to_lower("Caf\xc3\x89") == "caf\xc3\x89");
  CHECK(trim("  a b \t\n") == "a b");
  CHECK(trim("   ").empty());
}

TEST_CASE("split and join") {
  CHECK(split("a\tb\t\tc", '\t') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_whitespace("  big  grey\telephant ") ==
        std::vector<std::string>{"big", "grey", "elephant"});
  CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(join({}, " ").empty());
}

TEST_CASE("word tokens drop punctuation") {
  CHECK(word_tokens("Elephants eat roots, grasses.") ==
        std::vector<std::string>{"elephants", "eat", "roots", "grasses"});
  CHECK(word_tokens("[MASK].") == std::vector<std::string>{"mask"});
  CHECK(word_tokens("...").empty());
}

TEST_CASE("alpha words") {
  CHECK(is_alpha_word("elephant"));
  CHECK(is_alpha_word("na\xc3\xafve"));
  CHECK_FALSE(is_alpha_word("x1"));
  CHECK_FALSE(is_alpha_word(","));
  CHECK_FALSE(is_alpha_word(""));
}

TEST_CASE("plural folding") {
  CHECK(fold_plural("grasses") == "grass");
  CHECK(fold_plural("berries") == "berry");
  CHECK(fold_plural("trunks") == "trunk");
  CHECK(fold_plural("grass") == "grass");
  CHECK(fold_plural("bus") == "bus");
  CHECK(fold_plural("analysis") == "analysis");
  CHECK(fold_plural("zebras") == "zebra");
  CHECK(fold_plural("bar") == "bar");
}

TEST_CASE("fnv1a reference values") {
  // published FNV-1a 64 test vectors
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("stoplist file") {
  auto stop = Stoplist::load(testing::data_dir() / "stoplist.txt");
  CHECK(stop.size() > 50);
  CHECK(stop.contains("the"));
  CHECK(stop.contains("what"));
  CHECK_FALSE(stop.contains("elephant"));
  CHECK_FALSE(stop.contains("eat"));
  CHECK_THROWS_AS(Stoplist::load("/nonexistent/stop.txt"), Error);
}

}
