#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "facetforge/kbstore.hpp"
#include "facetforge/retrieval.hpp"

namespace facetforge {

inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kSepToken = "[SEP]";

enum class QASetup { masked_prediction, free_generation, guided_generation, span_prediction };

// Wire names are the enumerator names; "MP", "FG", "GG", "SP" are accepted too.
std::string_view to_string(QASetup setup);
std::optional<QASetup> parse_qa_setup(std::string_view name);

struct Prompt {
  QASetup setup = QASetup::masked_prediction;
  std::string text;  // empty for span prediction
  std::string question;
  std::string context;
};

// Masked: "<q> [SEP] <ctx>". Generation: "C: <ctx>\nQ: <q>\nA:" (guided
// appends " <prefix>"). With no context the masked prompt is the bare
// question and generation prompts drop the "C:" line. Span prediction keeps
// question and context apart. Throws InvalidArgument for a masked question
// without exactly one mask or a guided prompt without a prefix.
Prompt build_prompt(QASetup setup, std::string_view question, std::string_view context,
                    const std::optional<std::string>& answer_prefix = std::nullopt);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

struct ModelAnswer {
  std::string text;
  std::optional<double> confidence;
  std::optional<CharSpan> span;

  bool operator==(const ModelAnswer&) const = default;
};

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::vector<ModelAnswer> complete(const Prompt& prompt, int num_answers) const = 0;
};

struct SpanAnswer {
  bool found = false;
  std::string answer;
  std::size_t start = 0;
  std::size_t end = 0;
  double confidence = 0.0;
};

// Deterministic stand-in for a span model. Candidates are the objects of KB
// assertions whose verbalization appears verbatim in the context, and comma
// lists following the question's main verb. The candidate whose sentence
// shares most content tokens with the question wins (ties: earliest start,
// KB candidates first). context[start, end) == answer.
SpanAnswer lexical_span_baseline(std::string_view question, std::string_view context,
                                 const Stoplist& stoplist, const KnowledgeBase* kb = nullptr,
                                 const Pluralizer* plurals = nullptr);

// Test double used when no model endpoint is configured.
class MockModelClient : public ModelClient {
 public:
  explicit MockModelClient(const Stoplist& stoplist) : stoplist_(stoplist) {}
  std::vector<ModelAnswer> complete(const Prompt& prompt, int num_answers) const override;

 private:
  const Stoplist& stoplist_;
};

enum class SourceKind { no_context, kb, custom };

struct ContextSource {
  SourceKind kind = SourceKind::no_context;
  std::string value;  // KB name or custom text

  // "no_context", "kb:<name>", "custom:<text>"
  std::string label() const;
  bool operator==(const ContextSource&) const = default;
};

// Accepts the string forms above or {"type": ..., "name"|"text": ...}.
ContextSource parse_context_source(const nlohmann::json& j);

struct QARequest {
  QASetup setup = QASetup::masked_prediction;
  std::string question;
  std::optional<std::string> answer_prefix;
  std::size_t k = 5;
  RetrievalMethod method = RetrievalMethod::tfidf;
  std::vector<ContextSource> sources;
  int num_answers = 1;
};

// Throws InvalidArgument on malformed or missing fields.
QARequest parse_qa_request(const nlohmann::json& j);

// Named KBs with their retrieval indexes. The first KB added is the default.
class KbRegistry {
 public:
  KbRegistry(const Stoplist& stoplist, const Pluralizer& plurals)
      : stoplist_(stoplist), plurals_(plurals) {}

  // Throws InvalidArgument on a duplicate or empty name.
  void add(std::string name, KnowledgeBase kb);
  const KnowledgeBase* find(std::string_view name) const;
  const RetrievalIndex* index(std::string_view name) const;
  const std::vector<std::string>& names() const { return order_; }
  // Throws NotFoundError when the registry is empty.
  const KnowledgeBase& default_kb() const;
  const std::string& default_name() const;

  const Stoplist& stoplist() const { return stoplist_; }
  const Pluralizer& plurals() const { return plurals_; }

 private:
  struct Entry {
    std::unique_ptr<KnowledgeBase> kb;
    std::unique_ptr<RetrievalIndex> index;
  };
  const Stoplist& stoplist_;
  const Pluralizer& plurals_;
  std::map<std::string, Entry, std::less<>> entries_;
  std::vector<std::string> order_;
};

// Throws InvalidArgument when the request cannot be served: empty question,
// bad mask count, guided without prefix, span prediction with no_context,
// unknown KB, no sources, k < 1 or num_answers < 1.
void validate_request(const QARequest& request, const KbRegistry& registry);

struct RowError {
  int status = 502;
  std::string code;
  std::string message;
};

struct QARow {
  std::string source;
  std::string context;
  std::vector<std::string> assertion_ids;
  std::vector<ModelAnswer> answers;
  std::optional<CharSpan> span;
  std::optional<RowError> error;
};

struct QAResult {
  QASetup setup = QASetup::masked_prediction;
  std::string question;
  std::vector<QARow> rows;
};

// One row per source, in request order. Rows run concurrently; a model
// failure becomes that row's error.
QAResult answer(const QARequest& request, const KbRegistry& registry, const ModelClient& client);

ojson to_json(const QAResult& result);

}  // namespace facetforge
