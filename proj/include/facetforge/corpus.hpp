#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facetforge/text.hpp"

namespace facetforge {

// Byte offsets into a sentence, end exclusive.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool operator==(const CharSpan&) const = default;
};

struct ParsedToken {
  int index = 0;  // 1-based
  std::string surface;
  std::string lemma;
  std::string upos;
  int head = 0;  // 0 = root
  std::string deprel;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  CharSpan span() const { return {char_start, char_end}; }
  bool operator==(const ParsedToken&) const = default;
};

struct ParsedSentence {
  std::string text;
  std::vector<ParsedToken> tokens;
  std::string doc_id;
  std::string sent_id;

  const ParsedToken& token(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }
  const ParsedToken* root() const;
  // Indices of tokens governed by `index`, in sentence order.
  std::vector<int> children(int index) const;
  std::string_view slice(CharSpan span) const;

  bool operator==(const ParsedSentence&) const = default;
};

struct ParsedDocument {
  std::string doc_id;
  std::string url;
  std::vector<ParsedSentence> sentences;

  bool operator==(const ParsedDocument&) const = default;
};

// Reads CoNLL-U. Multiword-token ranges ("2-3") and empty nodes ("2.1") are
// skipped. A `# url = ...` comment before the first sentence fills in the
// url when none is given. Throws ParseError (with line number) on malformed
// rows and SpanError when a token surface cannot be found in `# text`.
ParsedDocument parse_conllu(std::istream& in, std::string doc_id, std::string url);
ParsedDocument parse_conllu(std::string_view text, std::string doc_id, std::string url);

// doc_id is the file stem.
ParsedDocument load_conllu_file(const std::filesystem::path& path);

std::string to_conllu(const ParsedDocument& doc);

struct BagOfWords {
  std::map<std::string, int> counts;

  bool empty() const { return counts.empty(); }
  bool operator==(const BagOfWords&) const = default;
};

// Lowercased lemmas of alphabetic tokens, minus stopwords.
BagOfWords bag_of_words(const ParsedDocument& doc, const Stoplist& stoplist);

// Cosine of the two count vectors; 0 when either bag is empty.
double relevance_score(const BagOfWords& a, const BagOfWords& b);

struct FilterPolicy {
  double min_score = 0.15;
  std::size_t max_keep = 500;
};

struct RankedDocument {
  ParsedDocument doc;
  double score = 0.0;
};

// Keeps documents scoring >= min_score, ranked by score desc then doc_id asc,
// truncated to max_keep.
std::vector<RankedDocument> filter_documents(std::vector<ParsedDocument> docs,
                                             const BagOfWords& reference,
                                             const Stoplist& stoplist,
                                             const FilterPolicy& policy);

inline constexpr std::string_view kSubjectSlot = "{subject}";

class QueryTemplate {
 public:
  // Throws InvalidArgument unless `text` contains the subject slot exactly once.
  QueryTemplate(std::string hypernym_id, std::string text);

  const std::string& hypernym_id() const { return hypernym_id_; }
  const std::string& text() const { return text_; }
  std::string render(std::string_view subject) const;

 private:
  std::string hypernym_id_;
  std::string text_;
};

// Tab-separated "hypernym_id<TAB>template" lines; '#' comments allowed.
std::vector<QueryTemplate> load_query_templates(const std::filesystem::path& path);

std::vector<std::string> build_search_queries(std::string_view subject,
                                              std::string_view hypernym_id,
                                              std::span<const QueryTemplate> templates);

struct SubjectMeta {
  std::string subject;
  std::string synset_id;
  std::string hypernym_id;
  std::string wikipedia_title;
  std::vector<std::string> alternative_lemmas;
  std::string image_url;
};

SubjectMeta load_subject_meta(const std::filesystem::path& path);

struct IngestResult {
  SubjectMeta meta;
  std::vector<std::string> queries;
  BagOfWords reference;
  std::size_t documents_seen = 0;
  std::vector<RankedDocument> retained;
};

// Reads <dir>/meta.json, <dir>/reference.conllu and every other *.conllu,
// then ranks and filters the documents against the reference article.
// Files are parsed in parallel.
IngestResult ingest_subject_dir(const std::filesystem::path& dir, const Stoplist& stoplist,
                                std::span<const QueryTemplate> templates,
                                const FilterPolicy& policy);

}  // namespace facetforge
