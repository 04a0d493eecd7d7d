#include <doctest.h>

#include <cmath>

#include "facetforge/error.hpp"
#include "facetforge/retrieval.hpp"
#include "test_support.hpp"

using namespace facetforge;

namespace {

struct Fixture {
  Stoplist stoplist = Stoplist::load(testing::data_dir() / "stoplist.txt");
  Pluralizer plurals = Pluralizer::load(testing::data_dir() / "plurals.txt");
  KnowledgeBase kb = import_jsonl(testing::fixture("kb/fixture_kb.jsonl"));
  RetrievalIndex index{kb, stoplist, plurals};
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

Assertion make(std::string s, std::string p, std::string o,
               std::vector<FacetValue> facets = {}) {
  Assertion a;
  a.subject = std::move(s);
  a.predicate = std::move(p);
  a.object = std::move(o);
  a.facets = std::move(facets);
  a.frequency = 1;
  return a;
}

// Scores every assertion directly from its verbalization.
std::vector<std::string> brute_force(const std::string& question, std::size_t k, RetrievalMethod m) {
  const auto& f = fx();
  auto content = [&](std::string text) {
    for (std::size_t p; (p = text.find("[MASK]")) != std::string::npos;) text.replace(p, 6, " ");
    std::vector<std::string> out;
    for (const auto& w : word_tokens(text)) {
      std::string folded = fold_plural(w);
      if (!f.stoplist.contains(w) && !f.stoplist.contains(folded)) out.push_back(folded);
    }
    return out;
  };
  std::vector<std::map<std::string, int>> tf;
  std::map<std::string, int> df;
  for (const auto& a : f.kb.assertions()) {
    std::map<std::string, int> counts;
    for (const auto& t : content(verbalize(a, f.plurals))) ++counts[t];
    for (const auto& [t, n] : counts) ++df[t];
    tf.push_back(counts);
  }
  auto q = content(question);
  std::set<std::string> unique(q.begin(), q.end());
  const double n = static_cast<double>(tf.size());
  std::vector<std::pair<double, const Assertion*>> scored;
  for (std::size_t i = 0; i < tf.size(); ++i) {
    double s = 0;
    for (const auto& t : unique) {
      auto it = tf[i].find(t);
      if (it == tf[i].end()) continue;
      s += m == RetrievalMethod::overlap ? 1.0 : it->second * std::log(1.0 + n / df[t]);
    }
    if (s > 0) scored.push_back({s, &f.kb.assertions()[i]});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    if (x.second->frequency != y.second->frequency) return x.second->frequency > y.second->frequency;
    return x.second->id < y.second->id;
  });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) ids.push_back(scored[i].second->id);
  return ids;
}

std::vector<std::string> ids_of(const ContextSnippet& s) { return s.assertion_ids; }

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("pluralizer") {
  const auto& p = fx().plurals;
  CHECK(p.pluralize("bartender") == "bartenders");
  CHECK(p.pluralize("person") == "people");
  CHECK(p.pluralize("sheep") == "sheep");
  CHECK(p.size() > 20);
}

TEST_CASE("verbalization templates") {
  const auto& p = fx().plurals;
  CHECK(verbalize(make("bartender", "work in", "bar"), p) == "Bartenders work in bar.");
  CHECK(verbalize(make("elephant", "use", "their trunks",
                       {{FacetLabel::purpose, "to suck up water", 3, {}}}),
                  p) == "Elephants use their trunks to suck up water.");
  CHECK(verbalize(make("lion", "roar", ""), p) == "Lions roar.");
  CHECK(verbalize(make("asian elephant", "be", "smaller"), p) == "Asian elephants are smaller.");
  CHECK(verbalize(make("elephant", "bathe", "",
                       {{FacetLabel::purpose, "to cool down", 1, {}},
                        {FacetLabel::temporal, "during evening", 1, {}},
                        {FacetLabel::location, "in rivers", 1, {}}}),
                  p) == "Elephants bathe in rivers during evening to cool down.");
  CHECK(verbalize(make("bartender", "serve", "drinks",
                       {{FacetLabel::temporal, "at night", 2, {}},
                        {FacetLabel::transitive_object, "customers", 1, {}}}),
                  p) == "Bartenders serve customers drinks at night.");
}

TEST_CASE("method names") {
  CHECK(parse_retrieval_method("tfidf") == RetrievalMethod::tfidf);
  CHECK(parse_retrieval_method(to_string(RetrievalMethod::overlap)) == RetrievalMethod::overlap);
  CHECK_FALSE(parse_retrieval_method("bm25").has_value());
}

TEST_CASE("tokens drop the mask, stopwords and plural endings") {
  CHECK(fx().index.tokens("What do elephants eat [MASK]?") == std::vector<std::string>{"elephant", "eat"});
  CHECK(fx().index.size() == fx().kb.size());
  CHECK_FALSE(fx().index.postings("zebra").empty());
  CHECK(fx().index.postings("unicorn").empty());
}

TEST_CASE("elephant question ranks an eating assertion first") {
  auto hits = fx().index.search("What do elephants eat?", 5, RetrievalMethod::tfidf);
  REQUIRE_FALSE(hits.empty());
  CHECK(hits[0].assertion->subject == "elephant");
  CHECK(hits[0].assertion->predicate == "eat");
}

TEST_CASE("scores match a brute-force ranking") {
  const std::vector<std::string> questions = {
      "What do elephants eat?", "Bartenders work in [MASK].", "Where do lions live?",
      "Lions eat zebras at night", "grass", "What do people drink in bars?",
      "Elephants have tusks and trunks", "courts clients lawyers"};
  for (auto m : {RetrievalMethod::overlap, RetrievalMethod::tfidf}) {
    for (const auto& q : questions) {
      for (std::size_t k : {1, 3, 100}) {
        CHECK_MESSAGE(ids_of(retrieve(q, fx().index, k, m)) == brute_force(q, k, m), q);
      }
    }
  }
}

TEST_CASE("snippet shape") {
  auto s = retrieve("Bartenders work in [MASK].", fx().index, 2, RetrievalMethod::tfidf, "fixture");
  CHECK(s.source_kb == "fixture");
  REQUIRE(s.sentences.size() == 2);
  CHECK(s.sentences.size() == s.assertion_ids.size());
  CHECK(s.text().starts_with("Bartenders work in bar."));
  CHECK(s.text() == s.sentences[0] + " " + s.sentences[1]);
}

TEST_CASE("no overlap, no results") {
  for (auto m : {RetrievalMethod::overlap, RetrievalMethod::tfidf}) {
    CHECK(retrieve("quantum chromodynamics", fx().index, 5, m).empty());
    CHECK(retrieve("what is the", fx().index, 5, m).empty());
  }
  CHECK_THROWS_AS(fx().index.search("lion", 0, RetrievalMethod::tfidf), InvalidArgument);
}

TEST_CASE("k beyond the matches returns only matches") {
  auto s = retrieve("zebra", fx().index, 100, RetrievalMethod::overlap);
  CHECK(s.sentences.size() == 2);
}

TEST_CASE("every assertion retrieves itself first") {
  for (auto m : {RetrievalMethod::overlap, RetrievalMethod::tfidf}) {
    for (const auto& a : fx().kb.assertions()) {
      auto s = retrieve(verbalize(a, fx().plurals), fx().index, 1, m);
      REQUIRE(s.assertion_ids.size() == 1);
      CHECK_MESSAGE(s.assertion_ids[0] == a.id, verbalize(a, fx().plurals));
    }
  }
}

}
