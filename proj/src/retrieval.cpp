#include "facetforge/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "facetforge/error.hpp"

namespace facetforge {

Pluralizer Pluralizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::map<std::string, std::string, std::less<>> words;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto parts = split_whitespace(line);
    if (parts.empty()) continue;
    if (parts.size() != 2) throw ParseError("expected 'singular plural'", line_no);
    words.emplace(to_lower(parts[0]), to_lower(parts[1]));
  }
  return Pluralizer(std::move(words));
}

std::string Pluralizer::pluralize(std::string_view word) const {
  auto it = irregular_.find(to_lower(word));
  if (it != irregular_.end()) return it->second;
  return std::string(word) + "s";
}

namespace {

int facet_rank(FacetLabel label) {
  switch (label) {
    case FacetLabel::location: return 0;
    case FacetLabel::temporal: return 1;
    case FacetLabel::purpose: return 2;
    default: return 3;
  }
}

}  // namespace

std::string verbalize(const Assertion& a, const Pluralizer& plurals) {
  auto subject = split_whitespace(a.subject);
  if (!subject.empty()) subject.back() = plurals.pluralize(subject.back());
  std::vector<std::string> parts;
  std::string s = join(subject, " ");
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  parts.push_back(std::move(s));

  auto predicate = split_whitespace(a.predicate);
  if (!predicate.empty() && predicate.front() == "be") predicate.front() = "are";
  if (!predicate.empty()) parts.push_back(join(predicate, " "));

  // a bare indirect object reads before the direct one: "serve customers drinks"
  std::vector<const FacetValue*> facets;
  for (const auto& f : a.facets) {
    const bool bare_iobj = f.label == FacetLabel::transitive_object && !a.object.empty() &&
                           split_whitespace(f.value).size() == 1;
    if (bare_iobj) {
      parts.push_back(f.value);
    } else {
      facets.push_back(&f);
    }
  }
  if (!a.object.empty()) parts.push_back(a.object);
  std::stable_sort(facets.begin(), facets.end(), [](const FacetValue* x, const FacetValue* y) {
    return facet_rank(x->label) < facet_rank(y->label);
  });
  for (const FacetValue* f : facets) {
    if (!f->value.empty()) parts.push_back(f->value);
  }
  return join(parts, " ") + ".";
}

std::string_view to_string(RetrievalMethod m) {
  return m == RetrievalMethod::overlap ? "overlap" : "tfidf";
}

std::optional<RetrievalMethod> parse_retrieval_method(std::string_view name) {
  if (name == "overlap") return RetrievalMethod::overlap;
  if (name == "tfidf") return RetrievalMethod::tfidf;
  return std::nullopt;
}

std::string ContextSnippet::text() const { return join(sentences, " "); }

RetrievalIndex::RetrievalIndex(const KnowledgeBase& kb, const Stoplist& stoplist,
                               const Pluralizer& plurals)
    : stoplist_(stoplist) {
  docs_.reserve(kb.size());
  for (const auto& a : kb.assertions()) {
    Doc d{&a, verbalize(a, plurals), {}};
    for (auto& t : tokens(d.sentence)) ++d.tf[t];
    const std::size_t pos = docs_.size();
    for (const auto& [t, n] : d.tf) postings_[t].push_back(pos);
    docs_.push_back(std::move(d));
  }
}

std::vector<std::string> RetrievalIndex::tokens(std::string_view text) const {
  std::string cleaned(text);
  for (std::size_t p; (p = cleaned.find("[MASK]")) != std::string::npos;) cleaned.replace(p, 6, " ");
  std::vector<std::string> out;
  for (auto& w : word_tokens(cleaned)) {
    if (stoplist_.contains(w)) continue;
    std::string folded = fold_plural(w);
    if (stoplist_.contains(folded)) continue;
    out.push_back(std::move(folded));
  }
  return out;
}

const std::vector<std::size_t>& RetrievalIndex::postings(std::string_view token) const {
  static const std::vector<std::size_t> kNone;
  auto it = postings_.find(std::string(token));
  return it == postings_.end() ? kNone : it->second;
}

std::vector<ScoredAssertion> RetrievalIndex::search(std::string_view question, std::size_t k,
                                                    RetrievalMethod method) const {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  auto q = tokens(question);
  std::set<std::string> unique(q.begin(), q.end());

  std::unordered_map<std::size_t, double> scores;
  const double n = static_cast<double>(docs_.size());
  for (const auto& t : unique) {
    const auto& post = postings(t);
    if (post.empty()) continue;
    const double idf = std::log(1.0 + n / static_cast<double>(post.size()));
    for (std::size_t i : post) {
      if (method == RetrievalMethod::overlap) {
        scores[i] += 1.0;
      } else {
        scores[i] += docs_[i].tf.at(t) * idf;
      }
    }
  }

  std::vector<ScoredAssertion> out;
  for (const auto& [i, s] : scores) {
    if (s > 0.0) out.push_back({docs_[i].assertion, docs_[i].sentence, s});
  }
  std::sort(out.begin(), out.end(), [](const ScoredAssertion& a, const ScoredAssertion& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.assertion->frequency != b.assertion->frequency) {
      return a.assertion->frequency > b.assertion->frequency;
    }
    return a.assertion->id < b.assertion->id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

ContextSnippet retrieve(std::string_view question, const RetrievalIndex& index, std::size_t k,
                        RetrievalMethod method, std::string source_kb) {
  ContextSnippet snippet;
  snippet.source_kb = std::move(source_kb);
  for (auto& hit : index.search(question, k, method)) {
    snippet.sentences.push_back(std::move(hit.sentence));
    snippet.assertion_ids.push_back(hit.assertion->id);
  }
  return snippet;
}

}  // namespace facetforge
