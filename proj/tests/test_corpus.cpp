#include <doctest.h>

#include <cmath>
#include <sstream>

#include "facetforge/corpus.hpp"
#include "facetforge/error.hpp"
#include "test_support.hpp"

using namespace facetforge;

namespace {

const char* kTwoTokens =
    "# sent_id = s1\n"
    "# text = Elephants eat\n"
    "1\tElephants\telephant\tNOUN\t_\t_\t2\tnsubj\t_\t_\n"
    "2\teat\teat\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n";

ParsedDocument lemma_doc(const std::vector<std::string>& lemmas) {
  ParsedDocument d;
  ParsedSentence s;
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    ParsedToken t;
    t.index = static_cast<int>(i + 1);
    t.surface = t.lemma = lemmas[i];
    t.head = i == 0 ? 0 : 1;
    s.tokens.push_back(t);
  }
  d.sentences.push_back(s);
  return d;
}

BagOfWords bag(std::initializer_list<std::pair<const std::string, int>> counts) {
  BagOfWords b;
  b.counts = counts;
  return b;
}

double cosine_oracle(const BagOfWords& a, const BagOfWords& b) {
  double dot = 0, na = 0, nb = 0;
  for (auto& [w, c] : a.counts) {
    na += c * c;
    auto it = b.counts.find(w);
    if (it != b.counts.end()) dot += c * it->second;
  }
  for (auto& [w, c] : b.counts) nb += c * c;
  return (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("parse a two-token sentence") {
  auto doc = parse_conllu(std::string_view(kTwoTokens), "d", "http://x");
  REQUIRE(doc.sentences.size() == 1);
  const auto& s = doc.sentences[0];
  REQUIRE(s.root() != nullptr);
  CHECK(s.root()->surface == "eat");
  CHECK(s.token(1).span() == CharSpan{0, 9});
  CHECK(s.slice(s.token(2).span()) == "eat");
  CHECK(s.children(2) == std::vector<int>{1});
}

TEST_CASE("empty stream gives an empty document") {
  auto doc = parse_conllu(std::string_view(""), "d", "");
  CHECK(doc.sentences.empty());
}

TEST_CASE("malformed rows name their line") {
  std::string nine = "# text = Elephants\n1\tElephants\telephant\tNOUN\t_\t_\t0\troot\t_\n\n";
  try {
    parse_conllu(std::string_view(nine), "d", "");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::string two_roots =
      "# text = a b\n1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n\n";
  CHECK_THROWS_AS(parse_conllu(std::string_view(two_roots), "d", ""), ParseError);
  std::string bad_surface = "# text = a b\n1\tzz\tz\tX\t_\t_\t0\troot\t_\t_\n\n";
  CHECK_THROWS_AS(parse_conllu(std::string_view(bad_surface), "d", ""), SpanError);
}

TEST_CASE("multiword ranges and empty nodes are skipped") {
  std::string text =
      "# text = Lions don't sleep\n"
      "1\tLions\tlion\tNOUN\t_\t_\t4\tnsubj\t_\t_\n"
      "2-3\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "2\tdo\tdo\tAUX\t_\t_\t4\taux\t_\t_\n"
      "3\tn't\tnot\tPART\t_\t_\t4\tadvmod\t_\t_\n"
      "3.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n"
      "4\tsleep\tsleep\tVERB\t_\t_\t0\troot\t_\t_\n\n";
  auto doc = parse_conllu(std::string_view(text), "d", "");
  REQUIRE(doc.sentences.size() == 1);
  CHECK(doc.sentences[0].tokens.size() == 4);
  CHECK(doc.sentences[0].root()->lemma == "sleep");
}

TEST_CASE("serialization is a fixed point on every fixture file") {
  for (const char* name : {"corpus/elephant/web1.conllu", "corpus/lion/web2.conllu",
                           "corpus/bartender/reference.conllu", "extraction/golden.conllu"}) {
    auto doc = load_conllu_file(testing::fixture(name));
    auto again = parse_conllu(std::string_view(to_conllu(doc)), doc.doc_id, doc.url);
    CHECK(again == doc);
  }
}

TEST_CASE("fixture invariants hold") {
  for (const char* subject : {"elephant", "lion", "bartender"}) {
    for (const auto& entry : std::filesystem::directory_iterator(testing::fixture("corpus") / subject)) {
      if (entry.path().extension() != ".conllu") continue;
      auto doc = load_conllu_file(entry.path());
      std::set<std::string> ids;
      for (const auto& s : doc.sentences) {
        CHECK(ids.insert(s.sent_id).second);
        int roots = 0;
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
          const auto& t = s.tokens[i];
          CHECK(t.index == static_cast<int>(i + 1));
          CHECK(t.head >= 0);
          CHECK(t.head <= static_cast<int>(s.tokens.size()));
          CHECK(t.char_start < t.char_end);
          CHECK(t.char_end <= s.text.size());
          roots += t.head == 0;
        }
        CHECK(roots == 1);
      }
    }
  }
}

TEST_CASE("bag of words") {
  Stoplist stop({"the", "a"});
  CHECK(bag_of_words(lemma_doc({"elephant", "eat", "elephant"}), stop) ==
        bag({{"elephant", 2}, {"eat", 1}}));
  CHECK(bag_of_words(lemma_doc({"the", "a"}), stop).empty());
  CHECK(bag_of_words(lemma_doc({",", ".", "elephant"}), stop) == bag({{"elephant", 1}}));
  for (auto& [w, c] : bag_of_words(load_conllu_file(testing::fixture("corpus/lion/web1.conllu")), stop).counts) {
    CHECK(c > 0);
  }
}

TEST_CASE("relevance score") {
  auto ab = bag({{"a", 1}, {"b", 1}});
  CHECK(relevance_score(ab, ab) == doctest::Approx(1.0));
  CHECK(relevance_score(ab, bag({{"x", 3}})) == 0.0);
  CHECK(relevance_score(ab, bag({{"a", 1}, {"c", 1}})) == doctest::Approx(0.5));
  CHECK(relevance_score(ab, BagOfWords{}) == 0.0);

  std::mt19937 rng(7);
  std::uniform_int_distribution<int> n(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    BagOfWords x, y;
    for (const char* w : {"a", "b", "c", "d", "e"}) {
      if (int c = n(rng)) x.counts[w] = c;
      if (int c = n(rng)) y.counts[w] = c;
    }
    double s = relevance_score(x, y);
    CHECK(s == doctest::Approx(cosine_oracle(x, y)));
    CHECK(s == doctest::Approx(relevance_score(y, x)));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0 + 1e-12);
  }
}

TEST_CASE("document filter policy") {
  Stoplist stop;
  auto reference = bag({{"a", 1}});
  std::vector<ParsedDocument> docs = {lemma_doc({"a", "b"}), lemma_doc({"a"}), lemma_doc({"c"})};
  docs[0].doc_id = "two";
  docs[1].doc_id = "one";
  docs[2].doc_id = "none";
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double expect = cosine_oracle(bag_of_words(docs[i], stop), reference);
    CHECK(expect == doctest::Approx(std::vector<double>{std::sqrt(0.5), 1.0, 0.0}[i]));
  }

  auto all = filter_documents(docs, reference, stop, {0.0, 100});
  REQUIRE(all.size() == 3);
  CHECK(all[0].doc.doc_id == "one");
  CHECK(all[1].doc.doc_id == "two");
  CHECK(all[2].doc.doc_id == "none");
  CHECK(filter_documents(docs, reference, stop, {1.01, 100}).empty());
  auto kept = filter_documents(docs, reference, stop, {0.3, 100});
  CHECK(kept.size() == 2);
  CHECK(filter_documents(docs, reference, stop, {0.0, 1}).size() == 1);
}

TEST_CASE("query templates") {
  auto templates = load_query_templates(testing::data_dir() / "query_templates.tsv");
  CHECK(templates.size() >= 30);
  auto animal = build_search_queries("elephant", "animal.n.01", templates);
  CHECK(std::find(animal.begin(), animal.end(), "elephant animal facts") != animal.end());
  auto job = build_search_queries("lawyer", "professional.n.01", templates);
  CHECK(std::find(job.begin(), job.end(), "lawyer job descriptions") != job.end());
  CHECK(build_search_queries("quark", "unknown.n.99", templates) ==
        std::vector<std::string>{"quark facts"});
  CHECK_THROWS_AS(QueryTemplate("x.n.01", "no slot"), InvalidArgument);
  CHECK_THROWS_AS(QueryTemplate("x.n.01", "{subject} and {subject}"), InvalidArgument);
  CHECK(QueryTemplate("x.n.01", "{subject} habitat").render("zebra") == "zebra habitat");
}

TEST_CASE("subject directory ingest") {
  auto stop = Stoplist::load(testing::data_dir() / "stoplist.txt");
  auto templates = load_query_templates(testing::data_dir() / "query_templates.tsv");
  auto r = ingest_subject_dir(testing::fixture("corpus/elephant"), stop, templates, {});
  CHECK(r.meta.subject == "elephant");
  CHECK(r.documents_seen == 4);
  CHECK_FALSE(r.reference.empty());
  // the off-topic page is filtered out
  CHECK(r.retained.size() == 3);
  for (const auto& d : r.retained) {
    CHECK(d.doc.doc_id != "web9");
    CHECK(d.score >= FilterPolicy{}.min_score);
  }
  for (std::size_t i = 1; i < r.retained.size(); ++i) {
    CHECK(r.retained[i - 1].score >= r.retained[i].score);
  }
}

}
