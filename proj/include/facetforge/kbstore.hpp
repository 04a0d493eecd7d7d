#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "facetforge/consolidation.hpp"
#include "facetforge/extraction.hpp"

namespace facetforge {

using ojson = nlohmann::ordered_json;

struct ClusteredFacet {
  std::string value;
  int frequency = 0;

  bool operator==(const ClusteredFacet&) const = default;
};

struct FacetValue {
  FacetLabel label = FacetLabel::other_quality;
  std::string value;
  int frequency = 0;
  std::vector<ClusteredFacet> members;

  bool operator==(const FacetValue&) const = default;
};

enum class ElementKind { subject, predicate, object, facet };

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> parse_element_kind(std::string_view name);

struct ElementSpan {
  ElementKind kind = ElementKind::subject;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const ElementSpan&) const = default;
};

struct Provenance {
  std::string doc_id;
  std::string url;
  std::string sent_id;
  std::string sentence;
  std::vector<ElementSpan> spans;

  bool operator==(const Provenance&) const = default;
};

struct Assertion {
  std::string id;
  std::string subject;
  std::string predicate;
  std::string object;
  std::vector<FacetValue> facets;
  int frequency = 0;
  std::vector<WeightedTriple> cluster_members;
  std::vector<Provenance> provenance;

  Triple triple() const { return {subject, predicate, object}; }
  bool operator==(const Assertion&) const = default;
};

// Stable id of a normalized triple: hash of "subject|predicate|object".
std::string assertion_id(std::string_view subject, std::string_view predicate,
                         std::string_view object);

struct KBStats {
  int websites_retained = 0;
  int sentences = 0;
  int raw_assertions = 0;
  int consolidated_assertions = 0;

  bool operator==(const KBStats&) const = default;
};

struct ConceptProfile {
  std::string name;
  std::string wordnet_synset_id;
  std::string wikipedia_title;
  std::string image_url;
  std::vector<std::string> alternative_lemmas;
  std::vector<std::string> search_queries;
  std::vector<Subgroup> subgroups;
  std::vector<Aspect> aspects;
  KBStats stats;

  bool operator==(const ConceptProfile&) const = default;
};

struct PredicateGroup {
  std::string predicate;
  int frequency = 0;  // sum over the group
  std::vector<const Assertion*> assertions;
};

struct SearchQuery {
  std::string subject;
  std::string predicate;
  std::string object;

  bool empty() const { return subject.empty() && predicate.empty() && object.empty(); }
};

// In-memory KB: concept profiles plus consolidated assertions, with lookup
// indexes maintained on insert. Single writer; const access is thread-safe.
class KnowledgeBase {
 public:
  // Upsert by lowercased name. Throws InvalidArgument on an empty name.
  void put_concept(ConceptProfile profile);
  // Throws NotFoundError.
  const ConceptProfile& get_concept(std::string_view name) const;
  const ConceptProfile* find_concept(std::string_view name) const;

  // Fills in a missing id; throws InvalidArgument if the id is already taken.
  void add_assertion(Assertion assertion);
  const Assertion* find_assertion(std::string_view id) const;
  // Throws NotFoundError.
  const Assertion& get_assertion(std::string_view id) const;

  bool has_subject(std::string_view subject) const;

  // Predicate groups ordered by group frequency desc (ties: predicate asc);
  // within a group, frequency desc then object asc. Throws NotFoundError for
  // a subject with neither a profile nor assertions.
  std::vector<PredicateGroup> list_assertions(std::string_view subject) const;

  // Case-insensitive, token-wise containment on each given field (plural
  // folded), conjunctive. Sorted by frequency desc, then triple. Throws
  // InvalidArgument when every field is empty.
  std::vector<const Assertion*> search_assertions(const SearchQuery& query) const;

  // Throws NotFoundError.
  KBStats stats(std::string_view subject) const;

  // Subjects ordered by total assertion frequency desc, then name.
  std::vector<std::pair<std::string, int>> subject_frequencies() const;

  const std::map<std::string, ConceptProfile>& concepts() const { return concepts_; }
  const std::vector<Assertion>& assertions() const { return assertions_; }
  std::size_t size() const { return assertions_.size(); }

  bool operator==(const KnowledgeBase& other) const {
    return concepts_ == other.concepts_ && assertions_ == other.assertions_;
  }

 private:
  std::map<std::string, ConceptProfile> concepts_;
  std::vector<Assertion> assertions_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_subject_;
};

ojson to_json(const Assertion& a);
ojson to_json(const ConceptProfile& c);
ojson to_json(const Provenance& p);

// Record decoders used by the dump reader. Throw InvalidArgument on schema
// violations.
Assertion assertion_from_json(const nlohmann::json& j);
ConceptProfile concept_from_json(const nlohmann::json& j);

// One JSON object per line, UTF-8, LF. Concept records carry
// "type": "concept"; every other line is an assertion record.
void export_jsonl(const KnowledgeBase& kb, std::ostream& out);
void export_jsonl(const KnowledgeBase& kb, const std::filesystem::path& path);

// Throws ParseError naming the offending line on any schema violation.
KnowledgeBase import_jsonl(std::istream& in);
KnowledgeBase import_jsonl(const std::filesystem::path& path);

}  // namespace facetforge
