#include "facetforge/extraction.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "facetforge/embeddings.hpp"
#include "facetforge/error.hpp"

namespace facetforge {

namespace {

std::string_view base_rel(std::string_view deprel) {
  return deprel.substr(0, deprel.find(':'));
}

bool is_subject_rel(std::string_view deprel) {
  return deprel == "nsubj" || deprel == "nsubj:pass";
}

bool is_negation(const ParsedToken& t) {
  std::string lemma = to_lower(t.lemma);
  return (t.deprel == "advmod" || base_rel(t.deprel) == "neg") &&
         (lemma == "not" || lemma == "never" || lemma == "n't");
}

// Children pruned from noun-phrase subtrees.
bool cuts_phrase(const ParsedToken& t) {
  auto base = base_rel(t.deprel);
  return base == "punct" || base == "conj" || base == "cc" || base == "parataxis" ||
         base == "appos" || base == "dep" || t.deprel == "acl:relcl";
}

const std::set<std::string, std::less<>> kAspectPredicates = {
    "have", "contain", "be assemble of", "be compose of", "be assembled of", "be composed of",
};

class Rules {
 public:
  Rules(const ParsedSentence& s, const FacetClassifier& classifier,
        const std::set<std::string, std::less<>>& ignored_adverbs)
      : s_(s), classifier_(classifier), ignored_(ignored_adverbs), kids_(s.tokens.size() + 1) {
    for (const auto& t : s.tokens) kids_[t.head].push_back(t.index);
  }

  std::vector<RawAssertion> run() {
    std::vector<RawAssertion> out;
    if (s_.root() == nullptr) return out;
    for (const auto& t : s_.tokens) {
      int subj = subject_of(t.index);
      if (subj == 0) continue;
      extract_clause(t.index, subj, out);
    }
    return out;
  }

 private:
  const ParsedToken& tok(int i) const { return s_.token(i); }
  const std::vector<int>& kids(int i) const { return kids_[i]; }

  int child_with(int head, auto&& pred) const {
    for (int c : kids(head)) {
      if (pred(tok(c))) return c;
    }
    return 0;
  }

  // Subject token of a clause headed by `i`; conjoined verbs without their
  // own subject share their head's.
  int subject_of(int i) const {
    int subj = child_with(i, [](const ParsedToken& c) { return is_subject_rel(c.deprel); });
    if (subj != 0) return subj;
    const auto& t = tok(i);
    if (t.deprel == "conj" && (t.upos == "VERB" || t.upos == "AUX") && t.head != 0) {
      return child_with(t.head, [](const ParsedToken& c) { return is_subject_rel(c.deprel); });
    }
    return 0;
  }

  void collect(int i, std::vector<int>& acc, auto&& prune) const {
    acc.push_back(i);
    for (int c : kids(i)) {
      if (!prune(tok(c))) collect(c, acc, prune);
    }
  }

  std::vector<int> np_subtree(int i) const {
    std::vector<int> acc;
    collect(i, acc, cuts_phrase);
    return acc;
  }

  Phrase make_phrase(std::vector<int> idx, int head) const {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    auto strip = [&](int i) {
      auto base = base_rel(tok(i).deprel);
      return tok(i).upos == "PUNCT" || base == "punct" || base == "cc";
    };
    while (!idx.empty() && strip(idx.front())) idx.erase(idx.begin());
    while (!idx.empty() && strip(idx.back())) idx.pop_back();

    Phrase p;
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && idx[j + 1] == idx[j] + 1) ++j;
      CharSpan span{tok(idx[i]).char_start, tok(idx[j]).char_end};
      p.spans.push_back(span);
      parts.emplace_back(s_.slice(span));
      i = j + 1;
    }
    p.text = join(parts, " ");
    p.normalized = to_lower(p.text);
    if (head != 0) {
      p.head_lemma = to_lower(tok(head).lemma);
      p.head_surface = to_lower(tok(head).surface);
    }
    return p;
  }

  // "Asian elephants" -> "asian elephant": prenominal modifiers plus the
  // head lemma, determiners and possessors dropped.
  std::string subject_key(int head) const {
    std::vector<std::string> words;
    for (int c : kids(head)) {
      if (c > head) continue;
      auto rel = tok(c).deprel;
      if (rel == "amod" || base_rel(rel) == "compound" || base_rel(rel) == "flat" ||
          rel == "nummod") {
        words.push_back(to_lower(tok(c).surface));
      }
    }
    words.push_back(to_lower(tok(head).lemma));
    return join(words, " ");
  }

  std::vector<int> case_tokens(int i) const {
    std::vector<int> out;
    for (int c : kids(i)) {
      auto rel = tok(c).deprel;
      if (rel == "case" || rel == "mark") {
        out.push_back(c);
        for (int f : kids(c)) {
          if (tok(f).deprel == "fixed") out.push_back(f);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<int> subtree_without(int root, const std::vector<int>& excluded) const {
    std::vector<int> acc;
    collect(root, acc, [&](const ParsedToken& c) {
      return base_rel(c.deprel) == "punct" ||
             std::find(excluded.begin(), excluded.end(), c.index) != excluded.end();
    });
    return acc;
  }

  std::optional<RawFacet> make_facet(int child, std::string_view verb_lemma) const {
    const auto& c = tok(child);
    auto base = base_rel(c.deprel);
    std::vector<int> connective;
    std::vector<int> value_idx;
    if (base == "obl" || base == "advcl" || base == "nmod") {
      connective = case_tokens(child);
      value_idx = subtree_without(child, connective);
    } else if (base == "advmod" || c.deprel == "iobj") {
      if (is_negation(c) || ignored_.contains(to_lower(c.lemma))) return std::nullopt;
      value_idx = subtree_without(child, {});
    } else {
      return std::nullopt;
    }
    Phrase value = make_phrase(value_idx, child);
    if (value.empty()) return std::nullopt;
    Phrase conn = make_phrase(connective, 0);

    RawFacet f;
    f.connective = conn.normalized;
    f.connective_spans = conn.spans;
    f.value = value.text;
    f.spans = value.spans;
    f.head_lemma = value.head_lemma;
    f.label = c.deprel == "iobj" ? FacetLabel::transitive_object
                                 : classifier_.classify(f.connective, f.value, verb_lemma);
    return f;
  }

  bool is_facet_rel(const ParsedToken& c) const {
    auto base = base_rel(c.deprel);
    return base == "obl" || base == "advcl" || base == "advmod";
  }

  void extract_clause(int head, int subj, std::vector<RawAssertion>& out) const {
    const auto& h = tok(head);
    const bool copular =
        child_with(head, [](const ParsedToken& c) { return c.deprel == "cop"; }) != 0;
    const std::string verb_lemma = to_lower(h.lemma);

    std::vector<int> pred_idx;
    std::vector<int> facet_heads;  // clause heads whose children yield facets
    int object = 0;
    std::vector<int> object_exclude;
    int promoted = 0;

    for (int c : kids(head)) {
      const auto& t = tok(c);
      if (t.deprel == "aux" || t.deprel == "aux:pass" || t.deprel == "cop" ||
          t.deprel == "compound:prt" || is_negation(t)) {
        pred_idx.push_back(c);
      }
    }
    facet_heads.push_back(head);

    if (copular) {
      // "Elephants are big animals": the complement is the object.
      object = head;
      for (int c : kids(head)) {
        const auto& t = tok(c);
        auto base = base_rel(t.deprel);
        if (is_subject_rel(t.deprel) || base == "cop" || base == "aux" || is_facet_rel(t) ||
            base == "mark" || base == "csubj" || base == "expl" || is_negation(t)) {
          object_exclude.push_back(c);
        }
      }
    } else {
      pred_idx.push_back(head);
      object = child_with(head, [](const ParsedToken& c) { return c.deprel == "obj"; });
      int iobj = child_with(head, [](const ParsedToken& c) { return c.deprel == "iobj"; });
      if (object == 0 && iobj != 0) object = iobj;

      int xcomp = child_with(head, [](const ParsedToken& c) { return c.deprel == "xcomp"; });
      if (object == 0 && xcomp != 0) {
        const auto& x = tok(xcomp);
        if (x.upos == "VERB") {
          // "Elephants like to bathe in mud": predicate chains through the
          // infinitive.
          bool has_own_subject = child_with(xcomp, [](const ParsedToken& c) {
                                   return is_subject_rel(c.deprel);
                                 }) != 0;
          if (!has_own_subject) {
            pred_idx.push_back(xcomp);
            for (int c : kids(xcomp)) {
              const auto& t = tok(c);
              if (t.deprel == "mark" || t.deprel == "aux" || t.deprel == "compound:prt" ||
                  is_negation(t)) {
                pred_idx.push_back(c);
              }
            }
            object = child_with(xcomp, [](const ParsedToken& c) { return c.deprel == "obj"; });
            facet_heads.push_back(xcomp);
          }
        } else {
          object = xcomp;
        }
      }

      if (object == 0) {
        // Intransitive with a prepositional argument: "live in herds" keeps
        // the preposition in the predicate unless the phrase is temporal or
        // causal.
        int verb = facet_heads.back();
        for (int c : kids(verb)) {
          const auto& t = tok(c);
          if (c < verb || base_rel(t.deprel) != "obl") continue;
          auto cases = case_tokens(c);
          if (cases.empty()) continue;
          auto f = make_facet(c, verb_lemma);
          if (!f || f->label == FacetLabel::temporal || f->label == FacetLabel::cause) continue;
          promoted = c;
          pred_idx.insert(pred_idx.end(), cases.begin(), cases.end());
          object = c;
          object_exclude = cases;
          break;
        }
      }
    }

    std::vector<RawFacet> facets;
    for (int fh : facet_heads) {
      for (int c : kids(fh)) {
        const auto& t = tok(c);
        if (c == promoted || c == object) continue;
        if (t.deprel == "iobj" && object != 0) {
          if (auto f = make_facet(c, verb_lemma)) facets.push_back(std::move(*f));
          continue;
        }
        if (!is_facet_rel(t)) continue;
        if (auto f = make_facet(c, verb_lemma)) facets.push_back(std::move(*f));
      }
    }
    std::stable_sort(facets.begin(), facets.end(), [](const RawFacet& a, const RawFacet& b) {
      std::size_t sa = a.connective_spans.empty() ? a.spans.front().start
                                                  : a.connective_spans.front().start;
      std::size_t sb = b.connective_spans.empty() ? b.spans.front().start
                                                  : b.connective_spans.front().start;
      return sa < sb;
    });

    const int cop = child_with(head, [](const ParsedToken& c) { return c.deprel == "cop"; });
    Phrase predicate = make_phrase(pred_idx, copular ? cop : head);
    {
      std::vector<int> sorted = pred_idx;
      std::sort(sorted.begin(), sorted.end());
      std::vector<std::string> lemmas;
      for (int i : sorted) lemmas.push_back(to_lower(tok(i).lemma));
      predicate.normalized = join(lemmas, " ");
    }

    // Conjoined subjects and objects each yield their own assertion.
    std::vector<int> subjects = {subj};
    for (int c : kids(subj)) {
      if (tok(c).deprel == "conj") subjects.push_back(c);
    }
    std::vector<int> objects;
    if (object != 0) {
      objects.push_back(object);
      if (!copular) {
        for (int c : kids(object)) {
          if (tok(c).deprel == "conj" && tok(c).upos != "VERB") objects.push_back(c);
        }
      }
    }

    for (int s : subjects) {
      Phrase subject = make_phrase(np_subtree(s), s);
      subject.normalized = subject_key(s);
      if (subject.empty()) continue;
      auto emit = [&](Phrase obj) {
        RawAssertion a;
        a.subject = subject;
        a.predicate = predicate;
        a.object = std::move(obj);
        a.facets = facets;
        a.doc_id = s_.doc_id;
        a.sent_id = s_.sent_id;
        out.push_back(std::move(a));
      };
      if (objects.empty()) {
        emit(Phrase{});
        continue;
      }
      for (int o : objects) {
        std::vector<int> idx;
        if (o == object && !object_exclude.empty()) {
          std::vector<int> excluded = object_exclude;
          for (int c : kids(o)) {
            if (cuts_phrase(tok(c))) excluded.push_back(c);
          }
          idx = subtree_without(o, excluded);
        } else {
          idx = np_subtree(o);
        }
        emit(make_phrase(std::move(idx), o));
      }
    }
  }

  const ParsedSentence& s_;
  const FacetClassifier& classifier_;
  const std::set<std::string, std::less<>>& ignored_;
  std::vector<std::vector<int>> kids_;
};

template <typename Set>
bool contains_word(const Set& set, std::string_view word) {
  return set.find(word) != set.end();
}

std::set<std::string, std::less<>> word_set(const nlohmann::json& j, const char* key) {
  std::set<std::string, std::less<>> out;
  if (!j.contains(key)) return out;
  for (const auto& w : j.at(key)) out.insert(fold_plural(w.get<std::string>()));
  return out;
}

std::set<std::string, std::less<>> phrase_set(const nlohmann::json& j, const char* key) {
  std::set<std::string, std::less<>> out;
  if (!j.contains(key)) return out;
  for (const auto& w : j.at(key)) out.insert(to_lower(w.get<std::string>()));
  return out;
}

}  // namespace

std::string_view to_string(FacetLabel label) {
  switch (label) {
    case FacetLabel::cause: return "cause";
    case FacetLabel::manner: return "manner";
    case FacetLabel::purpose: return "purpose";
    case FacetLabel::transitive_object: return "transitive-object";
    case FacetLabel::degree: return "degree";
    case FacetLabel::location: return "location";
    case FacetLabel::temporal: return "temporal";
    case FacetLabel::other_quality: return "other-quality";
  }
  return "other-quality";
}

std::optional<FacetLabel> parse_facet_label(std::string_view name) {
  for (FacetLabel l : kAllFacetLabels) {
    if (to_string(l) == name) return l;
  }
  return std::nullopt;
}

std::string RawFacet::phrase() const {
  return connective.empty() ? value : connective + " " + value;
}

FacetLexicon FacetLexicon::from_json(const nlohmann::json& j) {
  FacetLexicon lex;
  if (j.contains("connectives")) {
    for (const auto& [conn, label] : j.at("connectives").items()) {
      auto parsed = parse_facet_label(label.get<std::string>());
      if (!parsed) throw Error("facet lexicon: unknown label '" + label.get<std::string>() + "'");
      lex.connectives.emplace(to_lower(conn), *parsed);
    }
  }
  lex.spatial_connectives = phrase_set(j, "spatial_connectives");
  lex.contextual_connectives = phrase_set(j, "contextual_connectives");
  lex.place_words = word_set(j, "place_words");
  lex.time_words = word_set(j, "time_words");
  lex.degree_adverbs = phrase_set(j, "degree_adverbs");
  lex.manner_adverbs = phrase_set(j, "manner_adverbs");
  lex.place_adverbs = phrase_set(j, "place_adverbs");
  lex.determiners = phrase_set(j, "determiners");
  lex.ignored_adverbs = phrase_set(j, "ignored_adverbs");
  return lex;
}

FacetLexicon FacetLexicon::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

FacetLabel classify_facet(std::string_view connective, std::string_view value,
                          std::string_view /*verb_lemma*/, const FacetLexicon& lex) {
  const std::string conn = to_lower(trim(connective));
  const auto words = word_tokens(value);
  bool has_time = false;
  bool has_place = false;
  for (const auto& w : words) {
    std::string folded = fold_plural(w);
    has_time = has_time || contains_word(lex.time_words, folded) ||
               contains_word(lex.time_words, w);
    has_place = has_place || contains_word(lex.place_words, folded) ||
                contains_word(lex.place_words, w);
  }
  const std::string_view trimmed = trim(value);
  const bool proper = !trimmed.empty() && trimmed.front() >= 'A' && trimmed.front() <= 'Z';
  const std::string first = words.empty() ? std::string() : words.front();

  if (conn.empty()) {
    if (words.size() == 1 && contains_word(lex.degree_adverbs, first)) return FacetLabel::degree;
    if (has_time) return FacetLabel::temporal;
    if (words.size() == 1 && contains_word(lex.place_adverbs, first)) return FacetLabel::location;
    if (words.size() == 1 && (contains_word(lex.manner_adverbs, first) ||
                              (first.size() > 3 && first.ends_with("ly")))) {
      return FacetLabel::manner;
    }
    if (words.empty()) return FacetLabel::other_quality;
    return FacetLabel::transitive_object;
  }

  if (conn == "to") {
    // "to suck up water" vs "to the river": only the first word decides.
    const bool place_first = contains_word(lex.place_words, first) ||
                             contains_word(lex.place_words, fold_plural(first));
    if (contains_word(lex.determiners, first) || place_first || proper) return FacetLabel::location;
    return FacetLabel::purpose;
  }
  if (contains_word(lex.contextual_connectives, conn)) {
    if (has_time) return FacetLabel::temporal;
    if (has_place || proper) return FacetLabel::location;
  }
  if (contains_word(lex.spatial_connectives, conn)) {
    return has_time ? FacetLabel::temporal : FacetLabel::location;
  }
  if (auto it = lex.connectives.find(conn); it != lex.connectives.end()) {
    if (it->second == FacetLabel::purpose && has_time) return FacetLabel::temporal;
    return it->second;
  }
  return FacetLabel::other_quality;
}

std::vector<RawAssertion> extract_assertions(const ParsedSentence& sentence,
                                             const FacetClassifier& classifier,
                                             const std::set<std::string, std::less<>>& ignored_adverbs) {
  return Rules(sentence, classifier, ignored_adverbs).run();
}

std::vector<SubgroupCandidate> subgroup_candidates(std::string_view subject_lemma,
                                                   std::span<const ParsedDocument> docs) {
  const std::string subject = to_lower(subject_lemma);
  std::map<std::string, int> counts;
  for (const auto& d : docs) {
    for (const auto& s : d.sentences) {
      for (const auto& t : s.tokens) {
        if ((t.upos != "NOUN" && t.upos != "PROPN") || to_lower(t.lemma) != subject) continue;
        std::vector<std::string> words;
        for (const auto& c : s.tokens) {
          if (c.head != t.index || c.index > t.index) continue;
          auto rel = base_rel(c.deprel);
          if (c.deprel == "amod" || rel == "compound" || rel == "flat") {
            words.push_back(to_lower(c.surface));
          }
        }
        if (words.empty()) continue;
        words.push_back(subject);
        ++counts[join(words, " ")];
      }
    }
  }
  std::vector<SubgroupCandidate> out;
  for (auto& [phrase, n] : counts) out.push_back({phrase, n});
  return out;
}

std::vector<Subgroup> cluster_subgroups(std::span<const SubgroupCandidate> candidates,
                                        const PhraseSimilarity& similarity,
                                        const SubgroupConfig& config) {
  const std::size_t n = candidates.size();
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sim = std::clamp(similarity(candidates[i].phrase, candidates[j].phrase), 0.0, 1.0);
      d.set(i, j, 1.0 - sim);
    }
  }
  std::vector<Subgroup> out;
  for (const auto& cluster : hac(d, config.linkage, config.theta_cut)) {
    std::vector<const SubgroupCandidate*> members;
    for (std::size_t i : cluster) members.push_back(&candidates[i]);
    std::sort(members.begin(), members.end(), [](auto* a, auto* b) {
      if (a->count != b->count) return a->count > b->count;
      return a->phrase < b->phrase;
    });
    Subgroup g;
    g.name = members.front()->phrase;
    for (auto* m : members) {
      g.member_phrases.push_back(m->phrase);
      g.frequency += m->count;
    }
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const Subgroup& a, const Subgroup& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.name < b.name;
  });
  return out;
}

std::vector<Subgroup> mine_subgroups(std::string_view subject_lemma,
                                     std::span<const ParsedDocument> docs,
                                     const EmbeddingTable& embeddings,
                                     const SubgroupConfig& config) {
  auto candidates = subgroup_candidates(subject_lemma, docs);
  // every candidate ends in the subject head, so only the modifiers discriminate
  auto modifiers = [](const std::string& phrase) {
    auto words = split_whitespace(phrase);
    if (!words.empty()) words.pop_back();
    return join(words, " ");
  };
  PhraseSimilarity sim = [&](const std::string& a, const std::string& b) {
    auto va = phrase_vector(modifiers(a), embeddings);
    auto vb = phrase_vector(modifiers(b), embeddings);
    return cosine(va.vector, vb.vector);
  };
  return cluster_subgroups(candidates, sim, config);
}

std::string_view to_string(AspectSource source) {
  return source == AspectSource::possessive ? "possessive" : "has-triple";
}

std::optional<AspectSource> parse_aspect_source(std::string_view name) {
  if (name == "possessive") return AspectSource::possessive;
  if (name == "has-triple") return AspectSource::has_triple;
  return std::nullopt;
}

std::vector<Aspect> mine_aspects(std::string_view subject_lemma,
                                 std::span<const ParsedDocument> docs,
                                 std::span<const RawAssertion> raw_assertions) {
  const std::string subject = to_lower(subject_lemma);
  struct Tally {
    std::map<std::string, int> surfaces;
    int possessive = 0;
    int has_triple = 0;
  };
  std::map<std::string, Tally> by_head;

  for (const auto& d : docs) {
    for (const auto& s : d.sentences) {
      for (const auto& t : s.tokens) {
        if (t.deprel != "nmod:poss" || to_lower(t.lemma) != subject || t.head == 0) continue;
        const auto& owner = s.token(t.head);
        if (owner.upos != "NOUN") continue;
        auto& tally = by_head[to_lower(owner.lemma)];
        ++tally.surfaces[to_lower(owner.surface)];
        ++tally.possessive;
      }
    }
  }
  for (const auto& a : raw_assertions) {
    if (a.subject.head_lemma != subject || a.object.empty()) continue;
    if (!kAspectPredicates.contains(a.predicate.normalized)) continue;
    auto& tally = by_head[a.object.head_lemma];
    ++tally.surfaces[a.object.head_surface];
    ++tally.has_triple;
  }

  std::vector<Aspect> out;
  for (const auto& [head, tally] : by_head) {
    Aspect a;
    int best = 0;
    for (const auto& [surface, n] : tally.surfaces) {
      if (n > best) {
        best = n;
        a.name = surface;
      }
    }
    a.frequency = tally.possessive + tally.has_triple;
    a.source = tally.has_triple > tally.possessive ? AspectSource::has_triple
                                                   : AspectSource::possessive;
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end(), [](const Aspect& a, const Aspect& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.name < b.name;
  });
  return out;
}

}  // namespace facetforge
