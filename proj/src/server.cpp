#include "facetforge/server.hpp"

#include <algorithm>

#include <httplib.h>

#include "facetforge/error.hpp"

namespace facetforge {

ApiResponse api_error(int status, std::string code, std::string message) {
  return {status, {{"status", status}, {"code", std::move(code)}, {"message", std::move(message)}}};
}

ojson assertion_summary(const Assertion& a) {
  ojson j = to_json(a);
  j.erase("cluster_members");
  j.erase("provenance");
  j["cluster_size"] = a.cluster_members.size();
  j["sources"] = a.provenance.size();
  return j;
}

const KnowledgeBase* ApiService::pick(std::string_view kb) const {
  if (registry_.names().empty()) return nullptr;
  return kb.empty() ? &registry_.default_kb() : registry_.find(kb);
}

ApiResponse ApiService::concept_page(std::string_view name, std::string_view kb_name) const {
  const KnowledgeBase* kb = pick(kb_name);
  if (kb == nullptr) return api_error(404, "unknown_kb", "unknown KB '" + std::string(kb_name) + "'");
  const std::string key = to_lower(trim(name));
  if (key.empty() || !kb->has_subject(key)) {
    return api_error(404, "not_found", "unknown concept '" + std::string(name) + "'");
  }
  ojson body;
  if (const ConceptProfile* c = kb->find_concept(key)) {
    body = to_json(*c);
    body.erase("type");
  } else {
    ConceptProfile bare;
    bare.name = key;
    body = to_json(bare);
    body.erase("type");
    body["stats"]["consolidated_assertions"] = kb->stats(key).consolidated_assertions;
  }
  ojson groups = ojson::array();
  for (const auto& g : kb->list_assertions(key)) {
    ojson items = ojson::array();
    for (const Assertion* a : g.assertions) items.push_back(assertion_summary(*a));
    groups.push_back({{"predicate", g.predicate}, {"frequency", g.frequency}, {"assertions", items}});
  }
  body["predicate_groups"] = std::move(groups);
  return {200, std::move(body)};
}

ApiResponse ApiService::assertion(std::string_view id, std::string_view kb_name) const {
  const KnowledgeBase* kb = pick(kb_name);
  if (kb == nullptr) return api_error(404, "unknown_kb", "unknown KB '" + std::string(kb_name) + "'");
  const Assertion* a = kb->find_assertion(id);
  if (a == nullptr) return api_error(404, "not_found", "unknown assertion '" + std::string(id) + "'");
  ojson body = to_json(*a);
  body["verbalization"] = verbalize(*a, registry_.plurals());
  return {200, std::move(body)};
}

ApiResponse ApiService::search(const SearchQuery& query, std::string_view kb_name) const {
  if (query.empty()) return api_error(400, "bad_request", "give at least one of s, p, o");
  const KnowledgeBase* kb = pick(kb_name);
  if (kb == nullptr) return api_error(404, "unknown_kb", "unknown KB '" + std::string(kb_name) + "'");
  ojson results = ojson::array();
  for (const Assertion* a : kb->search_assertions(query)) results.push_back(assertion_summary(*a));
  ojson body = {{"query", {{"s", query.subject}, {"p", query.predicate}, {"o", query.object}}},
                {"count", results.size()},
                {"results", std::move(results)}};
  return {200, std::move(body)};
}

ApiResponse ApiService::qa(std::string_view body) const {
  QARequest request;
  try {
    request = parse_qa_request(nlohmann::json::parse(body));
  } catch (const nlohmann::json::exception& e) {
    return api_error(400, "bad_request", std::string("invalid JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    return api_error(422, "invalid_request", e.what());
  }
  try {
    return {200, to_json(answer(request, registry_, client_))};
  } catch (const InvalidArgument& e) {
    return api_error(422, "invalid_request", e.what());
  }
}

ApiResponse ApiService::autocomplete(std::string_view prefix, std::string_view kb_name) const {
  const std::string p = to_lower(trim(prefix));
  if (p.empty()) return api_error(400, "bad_request", "q must be non-empty");
  const KnowledgeBase* kb = pick(kb_name);
  if (kb == nullptr) return api_error(404, "unknown_kb", "unknown KB '" + std::string(kb_name) + "'");
  ojson names = ojson::array();
  for (const auto& [name, freq] : kb->subject_frequencies()) {
    if (!name.starts_with(p)) continue;
    names.push_back(name);
    if (names.size() == 10) break;
  }
  return {200, std::move(names)};
}

ApiResponse ApiService::kbs() const {
  ojson items = ojson::array();
  for (const auto& name : registry_.names()) {
    const KnowledgeBase* kb = registry_.find(name);
    items.push_back({{"name", name}, {"concepts", kb->concepts().size()}, {"assertions", kb->size()}});
  }
  return {200, {{"default", registry_.names().empty() ? "" : registry_.default_name()}, {"kbs", items}}};
}

HttpServer::HttpServer(const ApiService& api, std::string cors_origin)
    : server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json; charset=utf-8");
  };
  s.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get(R"(/api/concepts/([^/]+))", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.concept_page(req.matches[1].str(), req.get_param_value("kb")));
  });
  s.Get(R"(/api/assertions/([^/]+))", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.assertion(req.matches[1].str(), req.get_param_value("kb")));
  });
  s.Get("/api/search", [&api, send](const httplib::Request& req, httplib::Response& res) {
    SearchQuery q{req.get_param_value("s"), req.get_param_value("p"), req.get_param_value("o")};
    send(res, api.search(q, req.get_param_value("kb")));
  });
  s.Get("/api/autocomplete", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.autocomplete(req.get_param_value("q"), req.get_param_value("kb")));
  });
  s.Get("/api/kbs", [&api, send](const httplib::Request&, httplib::Response& res) { send(res, api.kbs()); });
  s.Post("/api/qa", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.qa(req.body));
  });
  s.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const NotFoundError& e) {
      send(res, api_error(404, "not_found", e.what()));
    } catch (const InvalidArgument& e) {
      send(res, api_error(400, "bad_request", e.what()));
    } catch (const std::exception& e) {
      send(res, api_error(500, "internal", e.what()));
    }
  });
  s.set_error_handler([send](const httplib::Request&, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) send(res, api_error(404, "not_found", "no such endpoint"));
  });
}

HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

bool HttpServer::running() const { return server_->is_running(); }

}  // namespace facetforge
