#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facetforge/extraction.hpp"
#include "facetforge/hac.hpp"

namespace facetforge {

class EmbeddingTable;

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  // "subject predicate object" with empty parts skipped.
  std::string joined() const;
  auto operator<=>(const Triple&) const = default;
};

struct WeightedTriple {
  Triple triple;
  int frequency = 0;

  bool operator==(const WeightedTriple&) const = default;
};

struct ConsolidationConfig {
  double tau_fast = 0.8;
  double theta_cut = 0.35;
  Linkage linkage = Linkage::average;

  // Throws InvalidArgument when tau_fast is outside [0,1] or theta_cut < 0.
  void validate() const;
};

// Similarity of two triples in [0,1]; symmetric with score(x,x) = 1.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double score(const Triple& a, const Triple& b) const = 0;
};

// Baseline: cosine of the mean embeddings of "predicate object", clamped to
// [0,1]. Subjects are equal within a clustering run. A triple with an object
// and one without score 0.
class EmbeddingPairScorer : public PairScorer {
 public:
  explicit EmbeddingPairScorer(const EmbeddingTable& table) : table_(table) {}
  double score(const Triple& a, const Triple& b) const override;

 private:
  const EmbeddingTable& table_;
};

class FunctionPairScorer : public PairScorer {
 public:
  explicit FunctionPairScorer(std::function<double(const Triple&, const Triple&)> fn)
      : fn_(std::move(fn)) {}
  double score(const Triple& a, const Triple& b) const override { return fn_(a, b); }

 private:
  std::function<double(const Triple&, const Triple&)> fn_;
};

// Unordered index pairs (i < j) whose whole-triple phrase vectors have cosine
// >= tau_fast, in lexicographic order.
std::vector<std::pair<std::size_t, std::size_t>> candidate_pairs(std::span<const Triple> triples,
                                                                 const EmbeddingTable& table,
                                                                 double tau_fast);

struct TripleCluster {
  Triple representative;
  std::vector<WeightedTriple> members;  // frequency desc, then triple asc
  int frequency = 0;

  bool operator==(const TripleCluster&) const = default;
};

// Clusters triples by HAC on distance 1 - scorer.score. When `prefilter` is
// given only candidate_pairs are scored and every other pair is at infinite
// distance; otherwise all pairs are scored. Duplicate input triples are
// merged first. Clusters come back by frequency desc, then representative.
std::vector<TripleCluster> cluster_triples(std::span<const WeightedTriple> triples,
                                           const PairScorer& scorer,
                                           const ConsolidationConfig& config,
                                           const EmbeddingTable* prefilter = nullptr);

struct FacetMember {
  std::string phrase;
  FacetLabel label = FacetLabel::other_quality;
  int frequency = 0;
};

struct FacetGroup {
  std::string head;
  std::string value;  // most frequent member phrase
  FacetLabel label = FacetLabel::other_quality;
  int frequency = 0;
  std::vector<FacetMember> members;
};

// Groups facet phrases sharing a head word. The head is the facet's parsed
// head lemma when present, else the last non-stopword token, plural folded. Labels are
// decided by frequency-weighted majority; ties go to the label of the most
// frequent member.
std::vector<FacetGroup> group_facets(std::span<const std::pair<RawFacet, int>> facets,
                                     const Stoplist& stoplist);

}  // namespace facetforge
