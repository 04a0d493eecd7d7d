#include "facetforge/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <set>

#include "facetforge/error.hpp"

#ifndef FACETFORGE_DATA_DIR
#define FACETFORGE_DATA_DIR "data"
#endif

namespace facetforge {

namespace {

using json = nlohmann::json;

double number(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw InvalidArgument(std::string("config key '") + key + "' must be a number");
  return it->get<double>();
}

Linkage linkage_of(const json& j, Linkage fallback) {
  auto it = j.find("linkage");
  if (it == j.end()) return fallback;
  auto l = it->is_string() ? parse_linkage(it->get<std::string>()) : std::nullopt;
  if (!l) throw InvalidArgument("linkage must be single, complete or average");
  return *l;
}

ojson spans_json(const std::vector<CharSpan>& spans) {
  ojson out = ojson::array();
  for (const auto& s : spans) out.push_back({s.start, s.end});
  return out;
}

std::vector<CharSpan> spans_from(const json& j) {
  std::vector<CharSpan> out;
  for (const auto& s : j) {
    if (!s.is_array() || s.size() != 2) throw InvalidArgument("span must be [start, end]");
    out.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
  }
  return out;
}

ojson phrase_json(const Phrase& p) {
  return {{"text", p.text},
          {"normalized", p.normalized},
          {"head_lemma", p.head_lemma},
          {"head_surface", p.head_surface},
          {"spans", spans_json(p.spans)}};
}

Phrase phrase_from(const json& j) {
  Phrase p;
  p.text = j.at("text").get<std::string>();
  p.normalized = j.value("normalized", std::string());
  p.head_lemma = j.value("head_lemma", std::string());
  p.head_surface = j.value("head_surface", std::string());
  p.spans = spans_from(j.value("spans", json::array()));
  return p;
}

void add_spans(std::vector<ElementSpan>& out, ElementKind kind, const std::vector<CharSpan>& spans) {
  for (const auto& s : spans) out.push_back({kind, s.start, s.end});
}

}  // namespace

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("FACETFORGE_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return FACETFORGE_DATA_DIR;
}

Resources Resources::load(const std::filesystem::path& data_dir) {
  Resources r;
  r.stoplist = Stoplist::load(data_dir / "stoplist.txt");
  r.lexicon = FacetLexicon::load(data_dir / "facet_lexicon.json");
  r.plurals = Pluralizer::load(data_dir / "plurals.txt");
  r.templates = load_query_templates(data_dir / "query_templates.tsv");
  return r;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  if (auto e = j.find("embeddings"); e != j.end()) c.embeddings_path = e->value("path", std::string());
  if (auto m = j.find("model"); m != j.end()) c.model_endpoint = m->value("endpoint", std::string());
  if (auto f = j.find("filter"); f != j.end()) {
    c.filter.min_score = number(*f, "min_score", c.filter.min_score);
    double keep = number(*f, "max_keep", static_cast<double>(c.filter.max_keep));
    if (keep < 0) throw InvalidArgument("filter.max_keep must be >= 0");
    c.filter.max_keep = static_cast<std::size_t>(keep);
  }
  if (auto s = j.find("subgroups"); s != j.end()) {
    c.subgroups.theta_cut = number(*s, "theta_cut", c.subgroups.theta_cut);
    c.subgroups.linkage = linkage_of(*s, c.subgroups.linkage);
  }
  if (auto s = j.find("consolidation"); s != j.end()) {
    c.consolidation.tau_fast = number(*s, "tau_fast", c.consolidation.tau_fast);
    c.consolidation.theta_cut = number(*s, "theta_cut", c.consolidation.theta_cut);
    c.consolidation.linkage = linkage_of(*s, c.consolidation.linkage);
    c.prefilter = s->value("prefilter", c.prefilter);
  }
  if (auto r = j.find("retrieval"); r != j.end()) {
    double k = number(*r, "k", static_cast<double>(c.retrieval_k));
    if (k < 1) throw InvalidArgument("retrieval.k must be >= 1");
    c.retrieval_k = static_cast<std::size_t>(k);
    if (r->contains("method")) {
      auto m = parse_retrieval_method(r->at("method").get<std::string>());
      if (!m) throw InvalidArgument("retrieval.method must be overlap or tfidf");
      c.retrieval_method = *m;
    }
  }
  c.consolidation.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

SubjectExtraction extract_subject(const IngestResult& ingest, const Resources& resources,
                                  const FacetClassifier& classifier, const EmbeddingTable& embeddings,
                                  const SubgroupConfig& config) {
  const std::string subject = to_lower(ingest.meta.subject);
  std::vector<ParsedDocument> docs;
  docs.reserve(ingest.retained.size());
  for (const auto& r : ingest.retained) docs.push_back(r.doc);

  std::vector<std::future<std::vector<RawRecord>>> jobs;
  for (const auto& doc : docs) {
    jobs.push_back(std::async(std::launch::async, [&doc, &classifier, &resources] {
      std::vector<RawRecord> out;
      for (const auto& s : doc.sentences) {
        for (auto& raw : extract_assertions(s, classifier, resources.lexicon.ignored_adverbs)) {
          out.push_back({std::move(raw), doc.url, s.text});
        }
      }
      return out;
    }));
  }
  std::vector<RawRecord> all;
  for (auto& j : jobs) {
    for (auto& r : j.get()) all.push_back(std::move(r));
  }

  SubjectExtraction out;
  ConceptProfile& p = out.profile;
  p.name = subject;
  p.wordnet_synset_id = ingest.meta.synset_id;
  p.wikipedia_title = ingest.meta.wikipedia_title;
  p.image_url = ingest.meta.image_url;
  p.alternative_lemmas = ingest.meta.alternative_lemmas;
  p.search_queries = ingest.queries;
  p.subgroups = mine_subgroups(subject, docs, embeddings, config);

  std::vector<RawAssertion> raws;
  raws.reserve(all.size());
  for (const auto& r : all) raws.push_back(r.raw);
  p.aspects = mine_aspects(subject, docs, raws);

  for (auto& r : all) {
    if (subject_key(r.raw, p)) out.records.push_back(std::move(r));
  }
  p.stats.websites_retained = static_cast<int>(docs.size());
  for (const auto& d : docs) p.stats.sentences += static_cast<int>(d.sentences.size());
  p.stats.raw_assertions = static_cast<int>(out.records.size());
  return out;
}

std::optional<std::string> subject_key(const RawAssertion& raw, const ConceptProfile& profile) {
  const std::string& norm = raw.subject.normalized;
  for (const auto& g : profile.subgroups) {
    if (norm == g.name ||
        std::find(g.member_phrases.begin(), g.member_phrases.end(), norm) != g.member_phrases.end()) {
      return g.name;
    }
  }
  const std::string head = to_lower(raw.subject.head_lemma);
  if (head == profile.name) return profile.name;
  for (const auto& alt : profile.alternative_lemmas) {
    if (head == to_lower(alt) || norm == to_lower(alt)) return profile.name;
  }
  return std::nullopt;
}

std::vector<Assertion> consolidate_subject(ConceptProfile& profile, std::span<const RawRecord> records,
                                           const PairScorer& scorer, const Resources& resources,
                                           const ConsolidationConfig& config,
                                           const EmbeddingTable* prefilter) {
  std::map<std::string, std::map<Triple, std::vector<const RawRecord*>>> by_subject;
  for (const auto& r : records) {
    auto key = subject_key(r.raw, profile);
    if (!key) continue;
    Triple t{*key, r.raw.predicate.normalized, r.raw.object.normalized};
    by_subject[*key][t].push_back(&r);
  }

  std::vector<Assertion> out;
  for (const auto& [subject, triples] : by_subject) {
    std::vector<WeightedTriple> weighted;
    for (const auto& [t, rs] : triples) weighted.push_back({t, static_cast<int>(rs.size())});
    for (const auto& cluster : cluster_triples(weighted, scorer, config, prefilter)) {
      Assertion a;
      a.subject = cluster.representative.subject;
      a.predicate = cluster.representative.predicate;
      a.object = cluster.representative.object;
      a.id = assertion_id(a.subject, a.predicate, a.object);
      a.frequency = cluster.frequency;
      a.cluster_members = cluster.members;

      std::vector<std::pair<RawFacet, int>> facets;
      for (const auto& m : cluster.members) {
        for (const RawRecord* r : triples.at(m.triple)) {
          for (const auto& f : r->raw.facets) facets.emplace_back(f, 1);
          Provenance prov{r->raw.doc_id, r->url, r->raw.sent_id, r->sentence, {}};
          add_spans(prov.spans, ElementKind::subject, r->raw.subject.spans);
          add_spans(prov.spans, ElementKind::predicate, r->raw.predicate.spans);
          add_spans(prov.spans, ElementKind::object, r->raw.object.spans);
          for (const auto& f : r->raw.facets) {
            add_spans(prov.spans, ElementKind::facet, f.connective_spans);
            add_spans(prov.spans, ElementKind::facet, f.spans);
          }
          a.provenance.push_back(std::move(prov));
        }
      }
      for (auto& g : group_facets(facets, resources.stoplist)) {
        FacetValue fv{g.label, g.value, g.frequency, {}};
        for (const auto& m : g.members) fv.members.push_back({m.phrase, m.frequency});
        a.facets.push_back(std::move(fv));
      }
      out.push_back(std::move(a));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Assertion& a, const Assertion& b) {
    return a.frequency > b.frequency;
  });
  profile.stats.consolidated_assertions = static_cast<int>(out.size());
  return out;
}

KnowledgeBase build_kb(std::vector<SubjectExtraction> subjects, const PairScorer& scorer,
                       const Resources& resources, const ConsolidationConfig& config,
                       const EmbeddingTable* prefilter) {
  KnowledgeBase kb;
  for (auto& s : subjects) {
    auto assertions = consolidate_subject(s.profile, s.records, scorer, resources, config, prefilter);
    kb.put_concept(s.profile);
    for (auto& a : assertions) kb.add_assertion(std::move(a));
  }
  return kb;
}

std::vector<std::filesystem::path> subject_dirs(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "meta.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ojson to_json(const RawRecord& r) {
  ojson facets = ojson::array();
  for (const auto& f : r.raw.facets) {
    facets.push_back({{"connective", f.connective},
                      {"value", f.value},
                      {"label", to_string(f.label)},
                      {"head_lemma", f.head_lemma},
                      {"spans", spans_json(f.spans)},
                      {"connective_spans", spans_json(f.connective_spans)}});
  }
  return {{"type", "raw"},
          {"doc_id", r.raw.doc_id},
          {"url", r.url},
          {"sent_id", r.raw.sent_id},
          {"sentence", r.sentence},
          {"subject", phrase_json(r.raw.subject)},
          {"predicate", phrase_json(r.raw.predicate)},
          {"object", phrase_json(r.raw.object)},
          {"facets", facets}};
}

RawRecord raw_record_from_json(const json& j) {
  try {
    RawRecord r;
    r.raw.doc_id = j.at("doc_id").get<std::string>();
    r.url = j.value("url", std::string());
    r.raw.sent_id = j.at("sent_id").get<std::string>();
    r.sentence = j.at("sentence").get<std::string>();
    r.raw.subject = phrase_from(j.at("subject"));
    r.raw.predicate = phrase_from(j.at("predicate"));
    r.raw.object = phrase_from(j.at("object"));
    for (const auto& f : j.value("facets", json::array())) {
      RawFacet rf;
      rf.connective = f.at("connective").get<std::string>();
      rf.value = f.at("value").get<std::string>();
      auto label = parse_facet_label(f.at("label").get<std::string>());
      if (!label) throw InvalidArgument("unknown facet label");
      rf.label = *label;
      rf.head_lemma = f.value("head_lemma", std::string());
      rf.spans = spans_from(f.value("spans", json::array()));
      rf.connective_spans = spans_from(f.value("connective_spans", json::array()));
      r.raw.facets.push_back(std::move(rf));
    }
    if (r.raw.subject.text.empty() || r.raw.predicate.text.empty()) {
      throw InvalidArgument("subject and predicate must be non-empty");
    }
    return r;
  } catch (const json::exception& e) {
    throw InvalidArgument(e.what());
  }
}

void write_raw_jsonl(std::span<const SubjectExtraction> subjects, std::ostream& out) {
  for (const auto& s : subjects) {
    out << to_json(s.profile).dump() << '\n';
    for (const auto& r : s.records) out << to_json(r).dump() << '\n';
  }
}

std::vector<SubjectExtraction> read_raw_jsonl(std::istream& in) {
  std::vector<SubjectExtraction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      const std::string type = j.value("type", std::string());
      if (type == "concept") {
        out.push_back({concept_from_json(j), {}});
      } else if (type == "raw") {
        if (out.empty()) throw InvalidArgument("raw record before any concept record");
        out.back().records.push_back(raw_record_from_json(j));
      } else {
        throw InvalidArgument("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

}  // namespace facetforge
