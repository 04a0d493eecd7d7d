#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "facetforge/kbstore.hpp"
#include "facetforge/text.hpp"

namespace facetforge {

// Irregular plurals from a dictionary, "+s" for everything else.
class Pluralizer {
 public:
  Pluralizer() = default;
  explicit Pluralizer(std::map<std::string, std::string, std::less<>> irregular)
      : irregular_(std::move(irregular)) {}

  // "singular plural" per line, '#' comments allowed.
  static Pluralizer load(const std::filesystem::path& path);

  std::string pluralize(std::string_view word) const;
  std::size_t size() const { return irregular_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> irregular_;
};

// "Bartenders work in bar." Subject pluralized on its last word and
// capitalized; facets follow the object as location, temporal, purpose,
// then the rest in stored order.
std::string verbalize(const Assertion& a, const Pluralizer& plurals);

enum class RetrievalMethod { overlap, tfidf };

std::string_view to_string(RetrievalMethod m);
std::optional<RetrievalMethod> parse_retrieval_method(std::string_view name);

struct ContextSnippet {
  std::string source_kb;
  std::vector<std::string> sentences;
  std::vector<std::string> assertion_ids;

  // Sentences joined by single spaces.
  std::string text() const;
  bool empty() const { return sentences.empty(); }
};

struct ScoredAssertion {
  const Assertion* assertion = nullptr;
  std::string sentence;
  double score = 0.0;
};

// Inverted index over verbalized assertions. Holds pointers into the KB,
// which must outlive it.
class RetrievalIndex {
 public:
  RetrievalIndex(const KnowledgeBase& kb, const Stoplist& stoplist, const Pluralizer& plurals);

  // Lowercased, plural-folded content tokens; "[MASK]" is dropped.
  std::vector<std::string> tokens(std::string_view text) const;

  // Assertion positions containing `token`, ascending. Empty if none.
  const std::vector<std::size_t>& postings(std::string_view token) const;
  std::size_t vocabulary_size() const { return postings_.size(); }
  std::size_t size() const { return docs_.size(); }
  const std::string& sentence(std::size_t i) const { return docs_[i].sentence; }

  // Top-k by score desc, then frequency desc, then id asc. Zero scores are
  // never returned. Throws InvalidArgument for k < 1.
  std::vector<ScoredAssertion> search(std::string_view question, std::size_t k,
                                      RetrievalMethod method) const;

 private:
  struct Doc {
    const Assertion* assertion;
    std::string sentence;
    std::unordered_map<std::string, int> tf;
  };

  const Stoplist& stoplist_;
  std::vector<Doc> docs_;
  std::unordered_map<std::string, std::vector<std::size_t>> postings_;
};

ContextSnippet retrieve(std::string_view question, const RetrievalIndex& index, std::size_t k,
                        RetrievalMethod method, std::string source_kb = {});

}  // namespace facetforge
