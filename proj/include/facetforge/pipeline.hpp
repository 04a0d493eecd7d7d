#pragma once

#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facetforge/consolidation.hpp"
#include "facetforge/corpus.hpp"
#include "facetforge/embeddings.hpp"
#include "facetforge/extraction.hpp"
#include "facetforge/kbstore.hpp"
#include "facetforge/retrieval.hpp"

namespace facetforge {

// Shared data files: stoplist.txt, facet_lexicon.json, plurals.txt,
// query_templates.tsv.
struct Resources {
  Stoplist stoplist;
  FacetLexicon lexicon;
  Pluralizer plurals;
  std::vector<QueryTemplate> templates;

  static Resources load(const std::filesystem::path& data_dir);
};

// $FACETFORGE_DATA_DIR, else the directory baked in at build time.
std::filesystem::path default_data_dir();

struct PipelineConfig {
  FilterPolicy filter;
  SubgroupConfig subgroups;
  ConsolidationConfig consolidation;
  bool prefilter = true;
  std::string embeddings_path;
  std::string model_endpoint;
  std::size_t retrieval_k = 5;
  RetrievalMethod retrieval_method = RetrievalMethod::tfidf;

  // Missing keys keep their defaults. Throws InvalidArgument on bad values.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
};

// A raw assertion with the source context needed for provenance.
struct RawRecord {
  RawAssertion raw;
  std::string url;
  std::string sentence;

  bool operator==(const RawRecord&) const = default;
};

struct SubjectExtraction {
  ConceptProfile profile;  // stats filled except consolidated_assertions
  std::vector<RawRecord> records;

  bool operator==(const SubjectExtraction&) const = default;
};

// Extracts from every retained document (in parallel), mines subgroups and
// aspects, and keeps assertions about the subject, its alternative lemmas
// or one of its subgroups.
SubjectExtraction extract_subject(const IngestResult& ingest, const Resources& resources,
                                  const FacetClassifier& classifier, const EmbeddingTable& embeddings,
                                  const SubgroupConfig& config);

// Subject key for a retained raw assertion: the subgroup name when the
// normalized subject is a subgroup member, the concept name for the subject
// or an alternative lemma, otherwise nullopt.
std::optional<std::string> subject_key(const RawAssertion& raw, const ConceptProfile& profile);

// Clusters the records per subject key and builds assertions with merged
// facets and provenance. Sets profile.stats.consolidated_assertions.
std::vector<Assertion> consolidate_subject(ConceptProfile& profile,
                                           std::span<const RawRecord> records,
                                           const PairScorer& scorer, const Resources& resources,
                                           const ConsolidationConfig& config,
                                           const EmbeddingTable* prefilter);

// Consolidates every subject into one KB with its concept profiles.
KnowledgeBase build_kb(std::vector<SubjectExtraction> subjects, const PairScorer& scorer,
                       const Resources& resources, const ConsolidationConfig& config,
                       const EmbeddingTable* prefilter);

// Subdirectories of `root` holding a meta.json, sorted by name.
std::vector<std::filesystem::path> subject_dirs(const std::filesystem::path& root);

// raw.jsonl: a concept record ("type": "concept") followed by its raw
// records ("type": "raw"); several subjects may follow one another.
void write_raw_jsonl(std::span<const SubjectExtraction> subjects, std::ostream& out);
std::vector<SubjectExtraction> read_raw_jsonl(std::istream& in);

ojson to_json(const RawRecord& r);
RawRecord raw_record_from_json(const nlohmann::json& j);

}  // namespace facetforge
