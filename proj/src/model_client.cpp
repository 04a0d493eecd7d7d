#include "facetforge/model_client.hpp"

#include <charconv>

#include <httplib.h>

#include "facetforge/error.hpp"

namespace facetforge {

using json = nlohmann::json;

Endpoint parse_endpoint(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (!url.starts_with(scheme)) throw InvalidArgument("model endpoint must be an http:// URL");
  url.remove_prefix(scheme.size());
  Endpoint e;
  auto slash = url.find('/');
  std::string_view authority = url.substr(0, slash);
  if (slash != std::string_view::npos) e.path = std::string(url.substr(slash));
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    auto port = authority.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), e.port);
    if (ec != std::errc() || ptr != port.data() + port.size() || e.port <= 0 || e.port > 65535) {
      throw InvalidArgument("bad port in endpoint '" + std::string(port) + "'");
    }
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw InvalidArgument("endpoint has no host");
  e.host = std::string(authority);
  return e;
}

JsonEndpoint::JsonEndpoint(std::string_view url, std::chrono::milliseconds timeout)
    : url_(url), endpoint_(parse_endpoint(url)), timeout_(timeout) {}

json JsonEndpoint::post(const json& body) const {
  httplib::Client client(endpoint_.host, endpoint_.port);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  auto res = client.Post(endpoint_.path, body.dump(), "application/json");
  if (!res) throw ModelError("model endpoint " + url_ + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw ModelError("model endpoint " + url_ + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw ModelError("model endpoint " + url_ + " sent invalid JSON: " + e.what());
  }
}

json model_request(const Prompt& prompt, int num_answers) {
  json body = {{"setup", to_string(prompt.setup)}, {"num_answers", num_answers}};
  if (prompt.setup == QASetup::span_prediction) {
    body["prompt"] = {{"question", prompt.question}, {"context", prompt.context}};
  } else {
    body["prompt"] = prompt.text;
  }
  return body;
}

std::vector<ModelAnswer> parse_model_reply(const json& reply) {
  if (!reply.is_object() || !reply.contains("answers") || !reply["answers"].is_array()) {
    throw ModelError("model reply lacks an 'answers' array");
  }
  std::vector<ModelAnswer> out;
  for (const auto& a : reply["answers"]) {
    if (!a.is_object() || !a.contains("text") || !a["text"].is_string()) {
      throw ModelError("model answer lacks 'text'");
    }
    ModelAnswer m;
    m.text = a["text"].get<std::string>();
    if (a.contains("confidence") && a["confidence"].is_number()) {
      m.confidence = a["confidence"].get<double>();
    }
    if (a.contains("start") && a.contains("end") && a["start"].is_number_unsigned() &&
        a["end"].is_number_unsigned()) {
      m.span = CharSpan{a["start"].get<std::size_t>(), a["end"].get<std::size_t>()};
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ModelAnswer> HttpModelClient::complete(const Prompt& prompt, int num_answers) const {
  return parse_model_reply(endpoint_.post(model_request(prompt, num_answers)));
}

double HttpPairScorer::score(const Triple& a, const Triple& b) const {
  auto triple = [](const Triple& t) { return json{{"s", t.subject}, {"p", t.predicate}, {"o", t.object}}; };
  json reply = endpoint_.post({{"task", "triple_similarity"}, {"a", triple(a)}, {"b", triple(b)}});
  if (!reply.contains("score") || !reply["score"].is_number()) {
    throw ModelError("similarity reply lacks a numeric 'score'");
  }
  return reply["score"].get<double>();
}

FacetLabel HttpFacetClassifier::classify(std::string_view connective, std::string_view value,
                                         std::string_view verb_lemma) const {
  json reply = endpoint_.post(
      {{"task", "facet_label"}, {"connective", connective}, {"value", value}, {"verb", verb_lemma}});
  if (!reply.contains("label") || !reply["label"].is_string()) {
    throw ModelError("facet reply lacks 'label'");
  }
  auto label = parse_facet_label(reply["label"].get<std::string>());
  if (!label) throw ModelError("facet reply has unknown label");
  return *label;
}

}  // namespace facetforge
