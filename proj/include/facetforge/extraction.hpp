#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "facetforge/corpus.hpp"
#include "facetforge/hac.hpp"

namespace facetforge {

class EmbeddingTable;

enum class FacetLabel {
  cause,
  manner,
  purpose,
  transitive_object,
  degree,
  location,
  temporal,
  other_quality,
};

inline constexpr std::array<FacetLabel, 8> kAllFacetLabels = {
    FacetLabel::cause,  FacetLabel::manner,   FacetLabel::purpose,  FacetLabel::transitive_object,
    FacetLabel::degree, FacetLabel::location, FacetLabel::temporal, FacetLabel::other_quality,
};

// Wire names: "cause", ..., "transitive-object", ..., "other-quality".
std::string_view to_string(FacetLabel label);
std::optional<FacetLabel> parse_facet_label(std::string_view name);

// A phrase lifted from a sentence. `spans` cover maximal runs of adjacent
// tokens; joining their substrings with single spaces yields `text`.
struct Phrase {
  std::string text;
  std::vector<CharSpan> spans;
  std::string normalized;    // lowercase grouping form
  std::string head_lemma;    // lowercased lemma of the syntactic head
  std::string head_surface;  // lowercased surface of the syntactic head

  bool empty() const { return text.empty(); }
  bool operator==(const Phrase&) const = default;
};

struct RawFacet {
  std::string connective;  // preposition, subordinator or empty
  std::string value;
  FacetLabel label = FacetLabel::other_quality;
  std::string head_lemma;
  std::vector<CharSpan> spans;             // of `value`
  std::vector<CharSpan> connective_spans;  // of `connective`

  // Connective and value as they read together, e.g. "in the evening".
  std::string phrase() const;
  bool operator==(const RawFacet&) const = default;
};

struct RawAssertion {
  Phrase subject;
  Phrase predicate;
  Phrase object;  // empty for intransitives
  std::vector<RawFacet> facets;
  std::string doc_id;
  std::string sent_id;

  bool operator==(const RawAssertion&) const = default;
};

// Pluggable facet typing. The lexicon classifier is the in-repo baseline;
// an HTTP-backed implementation lives in model_client.hpp.
class FacetClassifier {
 public:
  virtual ~FacetClassifier() = default;
  virtual FacetLabel classify(std::string_view connective, std::string_view value,
                              std::string_view verb_lemma) const = 0;
};

// Word lists driving the baseline classifier. Word entries are matched after
// lowercasing and plural folding.
struct FacetLexicon {
  std::map<std::string, FacetLabel, std::less<>> connectives;
  std::set<std::string, std::less<>> spatial_connectives;  // always location unless temporal
  std::set<std::string, std::less<>> contextual_connectives;  // place -> location, time -> temporal
  std::set<std::string, std::less<>> place_words;
  std::set<std::string, std::less<>> time_words;
  std::set<std::string, std::less<>> degree_adverbs;
  std::set<std::string, std::less<>> manner_adverbs;
  std::set<std::string, std::less<>> place_adverbs;
  std::set<std::string, std::less<>> determiners;
  std::set<std::string, std::less<>> ignored_adverbs;  // discourse adverbs dropped at extraction

  static FacetLexicon from_json(const nlohmann::json& j);
  static FacetLexicon load(const std::filesystem::path& path);
};

FacetLabel classify_facet(std::string_view connective, std::string_view value,
                          std::string_view verb_lemma, const FacetLexicon& lexicon);

class LexiconFacetClassifier : public FacetClassifier {
 public:
  explicit LexiconFacetClassifier(FacetLexicon lexicon) : lexicon_(std::move(lexicon)) {}

  FacetLabel classify(std::string_view connective, std::string_view value,
                      std::string_view verb_lemma) const override {
    return classify_facet(connective, value, verb_lemma, lexicon_);
  }
  const FacetLexicon& lexicon() const { return lexicon_; }

 private:
  FacetLexicon lexicon_;
};

// Dependency-rule extraction over one sentence. See docs/extraction_rules.md
// for the rule set. Pure; identical input gives identical output.
std::vector<RawAssertion> extract_assertions(const ParsedSentence& sentence,
                                             const FacetClassifier& classifier,
                                             const std::set<std::string, std::less<>>& ignored_adverbs = {});

struct Subgroup {
  std::string name;
  std::vector<std::string> member_phrases;
  int frequency = 0;

  bool operator==(const Subgroup&) const = default;
};

struct SubgroupCandidate {
  std::string phrase;
  int count = 0;
};

// Lowercased multi-word noun phrases ("asian elephant") whose head lemma is
// `subject_lemma`, with mention counts, sorted by phrase.
std::vector<SubgroupCandidate> subgroup_candidates(std::string_view subject_lemma,
                                                   std::span<const ParsedDocument> docs);

using PhraseSimilarity = std::function<double(const std::string&, const std::string&)>;

struct SubgroupConfig {
  Linkage linkage = Linkage::average;
  double theta_cut = 0.35;
};

// HAC over candidates with distance 1 - similarity. Subgroups are named by
// their most frequent member (ties: lexicographically smallest) and sorted
// by frequency desc, then name.
std::vector<Subgroup> cluster_subgroups(std::span<const SubgroupCandidate> candidates,
                                        const PhraseSimilarity& similarity,
                                        const SubgroupConfig& config);

std::vector<Subgroup> mine_subgroups(std::string_view subject_lemma,
                                     std::span<const ParsedDocument> docs,
                                     const EmbeddingTable& embeddings,
                                     const SubgroupConfig& config);

enum class AspectSource { possessive, has_triple };

std::string_view to_string(AspectSource source);
std::optional<AspectSource> parse_aspect_source(std::string_view name);

struct Aspect {
  std::string name;
  int frequency = 0;
  AspectSource source = AspectSource::possessive;

  bool operator==(const Aspect&) const = default;
};

// Aspects from possessives ("the elephant's trunk") and from raw assertions
// about the subject whose predicate is have / contain / be assembled of /
// be composed of. Aggregated by head lemma, sorted by frequency desc.
std::vector<Aspect> mine_aspects(std::string_view subject_lemma,
                                 std::span<const ParsedDocument> docs,
                                 std::span<const RawAssertion> raw_assertions);

}  // namespace facetforge
