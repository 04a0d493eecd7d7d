#include "facetforge/consolidation.hpp"

#include <algorithm>
#include <map>

#include "facetforge/embeddings.hpp"
#include "facetforge/error.hpp"

namespace facetforge {

std::string Triple::joined() const {
  std::vector<std::string> parts;
  for (const std::string* p : {&subject, &predicate, &object}) {
    if (!p->empty()) parts.push_back(*p);
  }
  return join(parts, " ");
}

void ConsolidationConfig::validate() const {
  if (!(tau_fast >= 0.0 && tau_fast <= 1.0)) {
    throw InvalidArgument("tau_fast must lie in [0,1]");
  }
  if (!(theta_cut >= 0.0)) throw InvalidArgument("theta_cut must be non-negative");
}

double EmbeddingPairScorer::score(const Triple& a, const Triple& b) const {
  if (a == b) return 1.0;
  // an intransitive use never merges with a transitive one
  if (a.object.empty() != b.object.empty()) return 0.0;
  auto va = phrase_vector(a.predicate + " " + a.object, table_);
  auto vb = phrase_vector(b.predicate + " " + b.object, table_);
  return std::clamp(cosine(va.vector, vb.vector), 0.0, 1.0);
}

std::vector<std::pair<std::size_t, std::size_t>> candidate_pairs(std::span<const Triple> triples,
                                                                 const EmbeddingTable& table,
                                                                 double tau_fast) {
  std::vector<Vector> vecs;
  vecs.reserve(triples.size());
  for (const auto& t : triples) vecs.push_back(phrase_vector(t.joined(), table).vector);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    for (std::size_t j = i + 1; j < triples.size(); ++j) {
      if (cosine(vecs[i], vecs[j]) >= tau_fast) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<TripleCluster> cluster_triples(std::span<const WeightedTriple> triples,
                                           const PairScorer& scorer,
                                           const ConsolidationConfig& config,
                                           const EmbeddingTable* prefilter) {
  config.validate();
  std::map<Triple, int> merged;
  for (const auto& wt : triples) merged[wt.triple] += wt.frequency;
  std::vector<WeightedTriple> items;
  items.reserve(merged.size());
  for (auto& [t, f] : merged) items.push_back({t, f});

  const std::size_t n = items.size();
  DistanceMatrix d(n);
  auto score_pair = [&](std::size_t i, std::size_t j) {
    double s = std::clamp(scorer.score(items[i].triple, items[j].triple), 0.0, 1.0);
    d.set(i, j, 1.0 - s);
  };
  if (prefilter != nullptr) {
    std::vector<Triple> plain;
    plain.reserve(n);
    for (const auto& it : items) plain.push_back(it.triple);
    for (auto [i, j] : candidate_pairs(plain, *prefilter, config.tau_fast)) score_pair(i, j);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) score_pair(i, j);
    }
  }

  std::vector<TripleCluster> out;
  for (const auto& cluster : hac(d, config.linkage, config.theta_cut)) {
    TripleCluster c;
    for (std::size_t i : cluster) {
      c.members.push_back(items[i]);
      c.frequency += items[i].frequency;
    }
    std::sort(c.members.begin(), c.members.end(),
              [](const WeightedTriple& a, const WeightedTriple& b) {
                if (a.frequency != b.frequency) return a.frequency > b.frequency;
                return a.triple < b.triple;
              });
    c.representative = c.members.front().triple;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const TripleCluster& a, const TripleCluster& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.representative < b.representative;
  });
  return out;
}

namespace {

std::string facet_head(const RawFacet& f, const Stoplist& stoplist) {
  if (!f.head_lemma.empty()) return to_lower(f.head_lemma);
  auto words = word_tokens(f.value);
  for (auto it = words.rbegin(); it != words.rend(); ++it) {
    if (!stoplist.contains(*it)) return fold_plural(*it);
  }
  return words.empty() ? to_lower(f.value) : fold_plural(words.back());
}

}  // namespace

std::vector<FacetGroup> group_facets(std::span<const std::pair<RawFacet, int>> facets,
                                     const Stoplist& stoplist) {
  struct Acc {
    std::map<std::string, std::pair<FacetLabel, int>> phrases;  // phrase -> (label, freq)
    std::map<FacetLabel, int> labels;
    int total = 0;
  };
  std::map<std::string, Acc> groups;
  for (const auto& [facet, freq] : facets) {
    auto& acc = groups[facet_head(facet, stoplist)];
    auto& slot = acc.phrases[to_lower(facet.phrase())];
    slot.first = facet.label;
    slot.second += freq;
    acc.labels[facet.label] += freq;
    acc.total += freq;
  }

  std::vector<FacetGroup> out;
  for (auto& [head, acc] : groups) {
    FacetGroup g;
    g.head = head;
    g.frequency = acc.total;
    for (const auto& [phrase, lf] : acc.phrases) {
      g.members.push_back({phrase, lf.first, lf.second});
    }
    std::sort(g.members.begin(), g.members.end(), [](const FacetMember& a, const FacetMember& b) {
      if (a.frequency != b.frequency) return a.frequency > b.frequency;
      return a.phrase < b.phrase;
    });
    g.value = g.members.front().phrase;

    int best = 0;
    for (const auto& [label, n] : acc.labels) best = std::max(best, n);
    for (const auto& m : g.members) {
      if (acc.labels[m.label] == best) {
        g.label = m.label;
        break;
      }
    }
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const FacetGroup& a, const FacetGroup& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.value < b.value;
  });
  return out;
}

}  // namespace facetforge
