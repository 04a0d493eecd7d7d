#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "facetforge/consolidation.hpp"
#include "facetforge/extraction.hpp"
#include "facetforge/qa.hpp"

namespace facetforge {

struct Endpoint {
  std::string host;
  int port = 80;
  std::string path = "/";
};

// "http://host[:port][/path]". Throws InvalidArgument otherwise.
Endpoint parse_endpoint(std::string_view url);

// POSTs JSON to an inference server. Transport failures, non-2xx replies
// and malformed bodies raise ModelError.
class JsonEndpoint {
 public:
  explicit JsonEndpoint(std::string_view url,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30));
  nlohmann::json post(const nlohmann::json& body) const;
  const std::string& url() const { return url_; }

 private:
  std::string url_;
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

// Request: {"setup", "prompt" | {"question","context"}, "num_answers"}.
// Reply: {"answers": [{"text", "confidence"?, "start"?, "end"?}]}.
nlohmann::json model_request(const Prompt& prompt, int num_answers);
std::vector<ModelAnswer> parse_model_reply(const nlohmann::json& reply);

class HttpModelClient : public ModelClient {
 public:
  explicit HttpModelClient(std::string_view url,
                           std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : endpoint_(url, timeout) {}
  std::vector<ModelAnswer> complete(const Prompt& prompt, int num_answers) const override;

 private:
  JsonEndpoint endpoint_;
};

// {"task": "triple_similarity", "a": {s,p,o}, "b": {s,p,o}} -> {"score": x}
class HttpPairScorer : public PairScorer {
 public:
  explicit HttpPairScorer(std::string_view url) : endpoint_(url) {}
  double score(const Triple& a, const Triple& b) const override;

 private:
  JsonEndpoint endpoint_;
};

// {"task": "facet_label", "connective", "value", "verb"} -> {"label": name}
class HttpFacetClassifier : public FacetClassifier {
 public:
  explicit HttpFacetClassifier(std::string_view url) : endpoint_(url) {}
  FacetLabel classify(std::string_view connective, std::string_view value,
                      std::string_view verb_lemma) const override;

 private:
  JsonEndpoint endpoint_;
};

}  // namespace facetforge
