#include "facetforge/kbstore.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "facetforge/error.hpp"
#include "facetforge/text.hpp"

namespace facetforge {

namespace {

using json = nlohmann::json;

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw InvalidArgument(std::string("missing field '") + key + "'");
  return *it;
}

std::string str_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw InvalidArgument(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string opt_str(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw InvalidArgument(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

int int_field(const json& j, const char* key, int min_value) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) {
    throw InvalidArgument(std::string("field '") + key + "' must be an integer");
  }
  auto n = v.get<long long>();
  if (n < min_value || n > std::numeric_limits<int>::max()) {
    throw InvalidArgument(std::string("field '") + key + "' out of range");
  }
  return static_cast<int>(n);
}

const json& array_field(const json& j, const char* key, bool required) {
  static const json kEmpty = json::array();
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw InvalidArgument(std::string("missing field '") + key + "'");
    return kEmpty;
  }
  if (!it->is_array()) throw InvalidArgument(std::string("field '") + key + "' must be an array");
  return *it;
}

std::vector<std::string> str_array(const json& j, const char* key) {
  std::vector<std::string> out;
  for (const auto& v : array_field(j, key, false)) {
    if (!v.is_string()) throw InvalidArgument(std::string("'") + key + "' entries must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::vector<std::string> field_tokens(std::string_view s) {
  auto words = word_tokens(s);
  for (auto& w : words) w = fold_plural(w);
  return words;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty()) return true;
  if (needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool frequency_order(const Assertion* a, const Assertion* b) {
  if (a->frequency != b->frequency) return a->frequency > b->frequency;
  return a->triple() < b->triple();
}

}  // namespace

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::subject: return "subject";
    case ElementKind::predicate: return "predicate";
    case ElementKind::object: return "object";
    case ElementKind::facet: return "facet";
  }
  return "facet";
}

std::optional<ElementKind> parse_element_kind(std::string_view name) {
  if (name == "subject") return ElementKind::subject;
  if (name == "predicate") return ElementKind::predicate;
  if (name == "object") return ElementKind::object;
  if (name == "facet") return ElementKind::facet;
  return std::nullopt;
}

std::string assertion_id(std::string_view subject, std::string_view predicate,
                         std::string_view object) {
  std::string key;
  key.append(subject).append("|").append(predicate).append("|").append(object);
  return fnv1a_hex(key);
}

void KnowledgeBase::put_concept(ConceptProfile profile) {
  profile.name = to_lower(trim(profile.name));
  if (profile.name.empty()) throw InvalidArgument("concept name must be non-empty");
  std::string key = profile.name;
  concepts_[key] = std::move(profile);
}

const ConceptProfile* KnowledgeBase::find_concept(std::string_view name) const {
  auto it = concepts_.find(to_lower(trim(name)));
  return it == concepts_.end() ? nullptr : &it->second;
}

const ConceptProfile& KnowledgeBase::get_concept(std::string_view name) const {
  const ConceptProfile* c = find_concept(name);
  if (c == nullptr) throw NotFoundError("unknown concept '" + std::string(name) + "'");
  return *c;
}

void KnowledgeBase::add_assertion(Assertion assertion) {
  if (assertion.id.empty()) {
    assertion.id = assertion_id(assertion.subject, assertion.predicate, assertion.object);
  }
  if (by_id_.contains(assertion.id)) {
    throw InvalidArgument("duplicate assertion id " + assertion.id + " for (" +
                          assertion.subject + ", " + assertion.predicate + ", " +
                          assertion.object + ")");
  }
  const std::size_t index = assertions_.size();
  by_id_.emplace(assertion.id, index);
  by_subject_[to_lower(assertion.subject)].push_back(index);
  assertions_.push_back(std::move(assertion));
}

const Assertion* KnowledgeBase::find_assertion(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &assertions_[it->second];
}

const Assertion& KnowledgeBase::get_assertion(std::string_view id) const {
  const Assertion* a = find_assertion(id);
  if (a == nullptr) throw NotFoundError("unknown assertion '" + std::string(id) + "'");
  return *a;
}

bool KnowledgeBase::has_subject(std::string_view subject) const {
  std::string key = to_lower(trim(subject));
  return concepts_.contains(key) || by_subject_.contains(key);
}

std::vector<PredicateGroup> KnowledgeBase::list_assertions(std::string_view subject) const {
  std::string key = to_lower(trim(subject));
  if (!has_subject(key)) throw NotFoundError("unknown subject '" + std::string(subject) + "'");

  std::map<std::string, PredicateGroup> groups;
  if (auto it = by_subject_.find(key); it != by_subject_.end()) {
    for (std::size_t i : it->second) {
      const Assertion& a = assertions_[i];
      auto& g = groups[a.predicate];
      g.predicate = a.predicate;
      g.frequency += a.frequency;
      g.assertions.push_back(&a);
    }
  }
  std::vector<PredicateGroup> out;
  for (auto& [p, g] : groups) {
    std::sort(g.assertions.begin(), g.assertions.end(), [](const Assertion* a, const Assertion* b) {
      if (a->frequency != b->frequency) return a->frequency > b->frequency;
      return a->object < b->object;
    });
    out.push_back(std::move(g));
  }
  std::stable_sort(out.begin(), out.end(), [](const PredicateGroup& a, const PredicateGroup& b) {
    return a.frequency > b.frequency;
  });
  return out;
}

std::vector<const Assertion*> KnowledgeBase::search_assertions(const SearchQuery& query) const {
  if (query.empty()) throw InvalidArgument("search needs at least one of subject, predicate, object");
  const auto s = field_tokens(query.subject);
  const auto p = field_tokens(query.predicate);
  const auto o = field_tokens(query.object);
  std::vector<const Assertion*> out;
  for (const auto& a : assertions_) {
    if (!contains_run(field_tokens(a.subject), s)) continue;
    if (!contains_run(field_tokens(a.predicate), p)) continue;
    if (!contains_run(field_tokens(a.object), o)) continue;
    out.push_back(&a);
  }
  std::sort(out.begin(), out.end(), frequency_order);
  return out;
}

KBStats KnowledgeBase::stats(std::string_view subject) const {
  if (const ConceptProfile* c = find_concept(subject)) return c->stats;
  if (has_subject(subject)) {
    KBStats s;
    s.consolidated_assertions = static_cast<int>(by_subject_.at(to_lower(trim(subject))).size());
    return s;
  }
  throw NotFoundError("unknown subject '" + std::string(subject) + "'");
}

std::vector<std::pair<std::string, int>> KnowledgeBase::subject_frequencies() const {
  std::map<std::string, int> totals;
  for (const auto& [name, c] : concepts_) totals[name] += 0;
  for (const auto& a : assertions_) totals[to_lower(a.subject)] += a.frequency;
  std::vector<std::pair<std::string, int>> out(totals.begin(), totals.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

ojson to_json(const Provenance& p) {
  ojson spans = ojson::array();
  for (const auto& s : p.spans) {
    spans.push_back({{"kind", to_string(s.kind)}, {"start", s.start}, {"end", s.end}});
  }
  return {{"doc_id", p.doc_id},
          {"url", p.url},
          {"sent_id", p.sent_id},
          {"sentence", p.sentence},
          {"spans", spans}};
}

ojson to_json(const Assertion& a) {
  ojson facets = ojson::array();
  for (const auto& f : a.facets) {
    ojson members = ojson::array();
    for (const auto& m : f.members) members.push_back({{"value", m.value}, {"frequency", m.frequency}});
    facets.push_back({{"label", to_string(f.label)},
                      {"value", f.value},
                      {"frequency", f.frequency},
                      {"members", members}});
  }
  ojson members = ojson::array();
  for (const auto& m : a.cluster_members) {
    members.push_back({{"s", m.triple.subject},
                       {"p", m.triple.predicate},
                       {"o", m.triple.object},
                       {"frequency", m.frequency}});
  }
  ojson prov = ojson::array();
  for (const auto& p : a.provenance) prov.push_back(to_json(p));
  return {{"id", a.id},
          {"subject", a.subject},
          {"predicate", a.predicate},
          {"object", a.object},
          {"facets", facets},
          {"frequency", a.frequency},
          {"cluster_members", members},
          {"provenance", prov}};
}

ojson to_json(const ConceptProfile& c) {
  ojson subgroups = ojson::array();
  for (const auto& g : c.subgroups) {
    subgroups.push_back({{"name", g.name}, {"members", g.member_phrases}, {"frequency", g.frequency}});
  }
  ojson aspects = ojson::array();
  for (const auto& a : c.aspects) {
    aspects.push_back({{"name", a.name}, {"frequency", a.frequency}, {"source", to_string(a.source)}});
  }
  return {{"type", "concept"},
          {"name", c.name},
          {"wordnet_synset_id", c.wordnet_synset_id},
          {"wikipedia_title", c.wikipedia_title},
          {"image_url", c.image_url},
          {"alternative_lemmas", c.alternative_lemmas},
          {"search_queries", c.search_queries},
          {"subgroups", subgroups},
          {"aspects", aspects},
          {"stats",
           {{"websites_retained", c.stats.websites_retained},
            {"sentences", c.stats.sentences},
            {"raw_assertions", c.stats.raw_assertions},
            {"consolidated_assertions", c.stats.consolidated_assertions}}}};
}

Assertion assertion_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("record must be a JSON object");
  Assertion a;
  a.subject = str_field(j, "subject");
  a.predicate = str_field(j, "predicate");
  a.object = opt_str(j, "object");
  if (a.subject.empty() || a.predicate.empty()) {
    throw InvalidArgument("subject and predicate must be non-empty");
  }
  a.id = opt_str(j, "id");
  const std::string expected = assertion_id(a.subject, a.predicate, a.object);
  if (a.id.empty()) a.id = expected;
  if (a.id != expected) throw InvalidArgument("id " + a.id + " does not match the triple");
  a.frequency = j.contains("frequency") ? int_field(j, "frequency", 1) : 1;

  for (const auto& f : array_field(j, "facets", false)) {
    FacetValue fv;
    std::string label = str_field(f, "label");
    auto parsed = parse_facet_label(label);
    if (!parsed) throw InvalidArgument("unknown facet label '" + label + "'");
    fv.label = *parsed;
    fv.value = str_field(f, "value");
    if (fv.value.empty()) throw InvalidArgument("facet value must be non-empty");
    fv.frequency = int_field(f, "frequency", 1);
    for (const auto& m : array_field(f, "members", false)) {
      fv.members.push_back({str_field(m, "value"), int_field(m, "frequency", 1)});
    }
    a.facets.push_back(std::move(fv));
  }
  for (const auto& m : array_field(j, "cluster_members", false)) {
    WeightedTriple wt;
    wt.triple = {str_field(m, "s"), str_field(m, "p"), opt_str(m, "o")};
    wt.frequency = int_field(m, "frequency", 1);
    a.cluster_members.push_back(std::move(wt));
  }
  for (const auto& p : array_field(j, "provenance", false)) {
    Provenance prov;
    prov.doc_id = opt_str(p, "doc_id");
    prov.url = opt_str(p, "url");
    prov.sent_id = opt_str(p, "sent_id");
    prov.sentence = str_field(p, "sentence");
    for (const auto& s : array_field(p, "spans", false)) {
      ElementSpan span;
      std::string kind = str_field(s, "kind");
      auto parsed = parse_element_kind(kind);
      if (!parsed) throw InvalidArgument("unknown span kind '" + kind + "'");
      span.kind = *parsed;
      span.start = static_cast<std::size_t>(int_field(s, "start", 0));
      span.end = static_cast<std::size_t>(int_field(s, "end", 0));
      if (span.start > span.end || span.end > prov.sentence.size()) {
        throw InvalidArgument("span [" + std::to_string(span.start) + "," +
                              std::to_string(span.end) + ") outside the sentence");
      }
      prov.spans.push_back(span);
    }
    a.provenance.push_back(std::move(prov));
  }
  return a;
}

ConceptProfile concept_from_json(const json& j) {
  ConceptProfile c;
  c.name = str_field(j, "name");
  c.wordnet_synset_id = opt_str(j, "wordnet_synset_id");
  c.wikipedia_title = opt_str(j, "wikipedia_title");
  c.image_url = opt_str(j, "image_url");
  c.alternative_lemmas = str_array(j, "alternative_lemmas");
  c.search_queries = str_array(j, "search_queries");
  for (const auto& g : array_field(j, "subgroups", false)) {
    Subgroup s;
    s.name = str_field(g, "name");
    s.member_phrases = str_array(g, "members");
    s.frequency = int_field(g, "frequency", 0);
    c.subgroups.push_back(std::move(s));
  }
  for (const auto& a : array_field(j, "aspects", false)) {
    Aspect asp;
    asp.name = str_field(a, "name");
    asp.frequency = int_field(a, "frequency", 1);
    std::string source = str_field(a, "source");
    auto parsed = parse_aspect_source(source);
    if (!parsed) throw InvalidArgument("unknown aspect source '" + source + "'");
    asp.source = *parsed;
    c.aspects.push_back(std::move(asp));
  }
  if (j.contains("stats")) {
    const json& s = j.at("stats");
    c.stats.websites_retained = int_field(s, "websites_retained", 0);
    c.stats.sentences = int_field(s, "sentences", 0);
    c.stats.raw_assertions = int_field(s, "raw_assertions", 0);
    c.stats.consolidated_assertions = int_field(s, "consolidated_assertions", 0);
  }
  return c;
}

void export_jsonl(const KnowledgeBase& kb, std::ostream& out) {
  for (const auto& [name, c] : kb.concepts()) out << to_json(c).dump() << '\n';
  for (const auto& a : kb.assertions()) out << to_json(a).dump() << '\n';
}

void export_jsonl(const KnowledgeBase& kb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  export_jsonl(kb, out);
}

KnowledgeBase import_jsonl(std::istream& in) {
  KnowledgeBase kb;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      if (j.is_object() && j.value("type", "") == "concept") {
        kb.put_concept(concept_from_json(j));
      } else {
        kb.add_assertion(assertion_from_json(j));
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return kb;
}

KnowledgeBase import_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return import_jsonl(in);
}

}  // namespace facetforge
