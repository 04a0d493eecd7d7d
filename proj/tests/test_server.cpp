#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "facetforge/server.hpp"
#include "test_support.hpp"

using namespace facetforge;

namespace {

struct Fixture {
  Stoplist stoplist = Stoplist::load(testing::data_dir() / "stoplist.txt");
  Pluralizer plurals = Pluralizer::load(testing::data_dir() / "plurals.txt");
  KbRegistry registry{stoplist, plurals};
  MockModelClient mock{stoplist};
  ApiService api{registry, mock};
  Fixture() {
    registry.add("fixture", import_jsonl(testing::fixture("kb/fixture_kb.jsonl")));
    KnowledgeBase small;
    Assertion a;
    a.subject = "work capital";
    a.predicate = "have";
    a.object = "firm";
    a.frequency = 1;
    small.add_assertion(a);
    registry.add("other", std::move(small));
  }
};

Fixture& fx() {
  static Fixture f;
  return f;
}

void check_error(const ApiResponse& r, int status) {
  CHECK(r.status == status);
  CHECK(r.body["status"] == status);
  CHECK(r.body["code"].is_string());
  CHECK(r.body["message"].is_string());
}

}  // namespace

TEST_SUITE("server") {

TEST_CASE("concept page") {
  auto r = fx().api.concept_page("Elephant");
  REQUIRE(r.status == 200);
  CHECK(r.body["name"] == "elephant");
  CHECK(r.body["subgroups"].is_array());
  CHECK(r.body["subgroups"].size() == 2);
  CHECK(r.body["aspects"].size() == 3);
  CHECK(r.body["stats"]["websites_retained"] == 435);
  CHECK_FALSE(r.body.contains("type"));
  const auto& groups = r.body["predicate_groups"];
  REQUIRE(groups.size() == 4);
  CHECK(groups[0]["predicate"] == "eat");
  CHECK(groups[0]["assertions"][0]["object"] == "grasses");
  CHECK(groups[0]["assertions"][0]["cluster_size"] == 1);
  CHECK(groups[0]["assertions"][0]["sources"] == 2);
  check_error(fx().api.concept_page("unicorn"), 404);
  check_error(fx().api.concept_page("elephant", "nosuchkb"), 404);
  CHECK(fx().api.concept_page("work capital", "other").status == 200);
}

TEST_CASE("assertion detail") {
  auto r = fx().api.assertion("3b9d10bb50c55381");
  REQUIRE(r.status == 200);
  CHECK(r.body["cluster_members"].size() == 5);
  int sum = 0;
  for (const auto& m : r.body["cluster_members"]) sum += m["frequency"].get<int>();
  CHECK(sum == 14);
  CHECK(r.body["frequency"] == 14);
  CHECK(r.body["verbalization"] == "Lions eat zebra mostly.");
  for (const auto& p : r.body["provenance"]) {
    const std::string sentence = p["sentence"];
    for (const auto& s : p["spans"]) CHECK(s["end"].get<std::size_t>() <= sentence.size());
  }
  auto plain = fx().api.assertion("a12897cc9d2022ef");
  REQUIRE(plain.status == 200);
  CHECK(plain.body["facets"].empty());
  check_error(fx().api.assertion("nope"), 404);
}

TEST_CASE("search") {
  auto r = fx().api.search({"", "eat", "grass"});
  REQUIRE(r.status == 200);
  CHECK(r.body["count"].get<int>() >= 3);
  std::set<std::string> subjects;
  for (const auto& a : r.body["results"]) subjects.insert(a["subject"].get<std::string>());
  CHECK(subjects.count("capybara"));
  CHECK(subjects.count("kangaroo"));
  auto none = fx().api.search({"unicorn", "", ""});
  CHECK(none.status == 200);
  CHECK(none.body["results"].empty());
  check_error(fx().api.search({}), 400);
}

TEST_CASE("autocomplete") {
  auto r = fx().api.autocomplete("ele");
  REQUIRE(r.status == 200);
  REQUIRE(r.body.is_array());
  CHECK(r.body[0] == "elephant");
  CHECK(fx().api.autocomplete("zzz").body.empty());
  CHECK(fx().api.autocomplete("a").body.size() <= 10);
  check_error(fx().api.autocomplete(" "), 400);
  auto all = fx().api.autocomplete("l");
  REQUIRE(all.body.size() == 2);
  CHECK(all.body[0] == "lion");
}

TEST_CASE("qa endpoint") {
  auto ok = fx().api.qa(
      R"({"setup":"masked_prediction","question":"Bartenders work in [MASK].","sources":["no_context","kb:fixture","kb:other"]})");
  REQUIRE(ok.status == 200);
  REQUIRE(ok.body["rows"].size() == 3);
  CHECK(ok.body["rows"][1]["answers"][0]["text"] == "bar");
  CHECK(ok.body["rows"][1]["answers"][0].contains("confidence"));
  check_error(fx().api.qa("{nope"), 400);
  check_error(fx().api.qa(R"({"setup":"span_prediction","question":"What?","sources":["no_context"]})"), 422);
  auto unknown = fx().api.qa(R"({"setup":"free_generation","question":"What?","sources":["kb:nosuchkb"]})");
  check_error(unknown, 422);
  CHECK(unknown.body["message"].get<std::string>().find("nosuchkb") != std::string::npos);
}

TEST_CASE("kb listing") {
  auto r = fx().api.kbs();
  CHECK(r.body["default"] == "fixture");
  CHECK(r.body["kbs"].size() == 2);
  CHECK(r.body["kbs"][0]["assertions"] == 17);
}

TEST_CASE("live HTTP round trip") {
  HttpServer server(fx().api, "http://localhost:5173");
  const int port = server.bind_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen_after_bind(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);

  auto concept_res = client.Get("/api/concepts/elephant");
  REQUIRE(concept_res);
  CHECK(concept_res->status == 200);
  CHECK(concept_res->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
  CHECK(nlohmann::json::parse(concept_res->body)["name"] == "elephant");

  auto spaced = client.Get("/api/search?s=lion&p=live%20in");
  REQUIRE(spaced);
  CHECK(nlohmann::json::parse(spaced->body)["count"] == 1);

  auto missing = client.Get("/api/concepts/unicorn");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(nlohmann::json::parse(missing->body)["code"] == "not_found");

  auto nowhere = client.Get("/api/nowhere");
  REQUIRE(nowhere);
  CHECK(nowhere->status == 404);
  CHECK(nlohmann::json::parse(nowhere->body)["status"] == 404);

  auto qa = client.Post("/api/qa",
                        R"({"setup":"MP","question":"Bartenders work in [MASK].","sources":["kb:fixture"]})",
                        "application/json");
  REQUIRE(qa);
  CHECK(qa->status == 200);
  CHECK(nlohmann::json::parse(qa->body)["rows"][0]["answers"][0]["text"] == "bar");

  auto bad = client.Post("/api/qa", "[1,2", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto preflight = client.Options("/api/qa");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);

  server.stop();
  loop.join();
  CHECK_FALSE(server.running());
}

}
