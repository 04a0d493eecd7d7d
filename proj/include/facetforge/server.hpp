#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "facetforge/kbstore.hpp"
#include "facetforge/qa.hpp"

namespace httplib {
class Server;
}

namespace facetforge {

struct ApiResponse {
  int status = 200;
  ojson body;
};

// Error bodies are {"status", "code", "message"}.
ApiResponse api_error(int status, std::string code, std::string message);

// Transport-free request handlers. Browsing endpoints read the named KB or
// the registry default.
class ApiService {
 public:
  ApiService(const KbRegistry& registry, const ModelClient& client)
      : registry_(registry), client_(client) {}

  ApiResponse concept_page(std::string_view name, std::string_view kb = {}) const;
  ApiResponse assertion(std::string_view id, std::string_view kb = {}) const;
  ApiResponse search(const SearchQuery& query, std::string_view kb = {}) const;
  ApiResponse qa(std::string_view body) const;
  ApiResponse autocomplete(std::string_view prefix, std::string_view kb = {}) const;
  ApiResponse kbs() const;

 private:
  const KnowledgeBase* pick(std::string_view kb) const;

  const KbRegistry& registry_;
  const ModelClient& client_;
};

ojson assertion_summary(const Assertion& a);

class HttpServer {
 public:
  explicit HttpServer(const ApiService& api, std::string cors_origin = "*");
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Blocks until stop(). Returns false if the socket cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (-1 on failure); then call
  // listen_after_bind() to serve.
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace facetforge
