#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "facetforge/hac.hpp"
#include "facetforge/kbstore.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(FIXTURE_DIR) / rel;
}

inline std::filesystem::path data_dir() { return std::filesystem::path(DATA_DIR); }

// Straightforward agglomerative simulation: recompute every cluster-pair
// linkage from item distances at each step.
inline std::vector<std::vector<std::size_t>> brute_force_hac(
    const std::vector<std::vector<double>>& d, facetforge::Linkage linkage, double cut) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < d.size(); ++i) clusters.push_back({i});

  auto link = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double lo = inf;
    double hi = 0.0;
    double sum = 0.0;
    for (std::size_t x : a) {
      for (std::size_t y : b) {
        lo = std::min(lo, d[x][y]);
        hi = std::max(hi, d[x][y]);
      }
    }
    switch (linkage) {
      case facetforge::Linkage::single: return lo;
      case facetforge::Linkage::complete: return hi;
      case facetforge::Linkage::average: break;
    }
    for (std::size_t x : a) {
      for (std::size_t y : b) sum += d[x][y];
    }
    return sum / static_cast<double>(a.size() * b.size());
  };

  while (clusters.size() > 1) {
    double best = inf;
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double v = link(clusters[i], clusters[j]);
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    if (!std::isfinite(best) || best > cut) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& x, const auto& y) { return x.front() < y.front(); });
  }
  return clusters;
}

// Random symmetric matrix on a 1/16 grid (sums stay exact), with some
// pairs left infinite.
inline std::vector<std::vector<double>> random_distances(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<int> step(0, 16);
  std::bernoulli_distribution missing(0.15);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i][j] = d[j][i] = missing(rng) ? inf : step(rng) / 16.0;
    }
  }
  return d;
}

inline facetforge::DistanceMatrix to_matrix(const std::vector<std::vector<double>>& d) {
  facetforge::DistanceMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      if (std::isfinite(d[i][j])) m.set(i, j, d[i][j]);
    }
  }
  return m;
}

inline std::string random_word(std::mt19937& rng, std::size_t min_len = 2, std::size_t max_len = 8) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::string w(len(rng), 'a');
  for (char& c : w) c = letters[pick(rng)];
  return w;
}

inline std::string random_phrase(std::mt19937& rng, int max_words) {
  std::uniform_int_distribution<int> n(1, max_words);
  std::string out;
  for (int i = n(rng); i > 0; --i) {
    if (!out.empty()) out += ' ';
    out += random_word(rng);
  }
  return out;
}

// Random KB exercising every dump field: empty and non-empty facet lists,
// objectless assertions, several provenance entries, non-ASCII text.
inline facetforge::KnowledgeBase random_kb(std::mt19937& rng) {
  using namespace facetforge;
  std::uniform_int_distribution<int> small(0, 3);
  std::uniform_int_distribution<int> freq(1, 50);
  std::bernoulli_distribution coin(0.5);
  KnowledgeBase kb;

  const int concepts = small(rng);
  for (int c = 0; c < concepts; ++c) {
    ConceptProfile p;
    p.name = random_phrase(rng, 2);
    p.wordnet_synset_id = p.name + ".n.01";
    p.wikipedia_title = coin(rng) ? "Caf\xc3\xa9 " + p.name : "";
    p.image_url = coin(rng) ? "https://img.example/" + random_word(rng) + ".jpg" : "";
    for (int i = small(rng); i > 0; --i) p.alternative_lemmas.push_back(random_word(rng));
    for (int i = small(rng); i > 0; --i) p.search_queries.push_back(p.name + " " + random_phrase(rng, 2));
    for (int i = small(rng); i > 0; --i) {
      Subgroup g;
      g.name = random_word(rng) + " " + p.name;
      g.member_phrases = {g.name};
      if (coin(rng)) g.member_phrases.push_back(random_word(rng) + " " + p.name);
      g.frequency = freq(rng);
      p.subgroups.push_back(g);
    }
    for (int i = small(rng); i > 0; --i) {
      p.aspects.push_back({random_word(rng), freq(rng),
                           coin(rng) ? AspectSource::possessive : AspectSource::has_triple});
    }
    p.stats = {freq(rng), freq(rng) * 3, freq(rng) * 10, freq(rng)};
    kb.put_concept(std::move(p));
  }

  std::uniform_int_distribution<int> count(0, 12);
  std::uniform_int_distribution<std::size_t> label(0, kAllFacetLabels.size() - 1);
  const int assertions = count(rng);
  for (int k = 0; k < assertions; ++k) {
    Assertion a;
    a.subject = random_phrase(rng, 2);
    a.predicate = random_phrase(rng, 2);
    a.object = coin(rng) ? random_phrase(rng, 3) : "";
    a.id = assertion_id(a.subject, a.predicate, a.object);
    if (kb.find_assertion(a.id) != nullptr) continue;
    a.frequency = freq(rng);
    for (int i = small(rng); i > 0; --i) {
      FacetValue f;
      f.label = kAllFacetLabels[label(rng)];
      f.value = random_phrase(rng, 3);
      f.frequency = freq(rng);
      if (coin(rng)) f.members.push_back({f.value, f.frequency});
      a.facets.push_back(f);
    }
    a.cluster_members.push_back({a.triple(), a.frequency});
    for (int i = small(rng); i > 0; --i) {
      a.cluster_members.push_back({{a.subject, random_phrase(rng, 2), a.object}, freq(rng)});
    }
    for (int i = small(rng); i > 0; --i) {
      Provenance p;
      p.doc_id = random_word(rng);
      p.url = "https://example.org/" + p.doc_id;
      p.sent_id = "s" + std::to_string(i);
      p.sentence = a.subject + " " + a.predicate + " " + a.object + " na\xc3\xafve " + random_phrase(rng, 4) + ".";
      p.spans.push_back({ElementKind::subject, 0, a.subject.size()});
      p.spans.push_back({ElementKind::predicate, a.subject.size() + 1,
                         a.subject.size() + 1 + a.predicate.size()});
      if (coin(rng)) p.spans.push_back({ElementKind::facet, 0, p.sentence.size()});
      a.provenance.push_back(p);
    }
    kb.add_assertion(std::move(a));
  }
  return kb;
}

}  // namespace testing
